use serde::{Deserialize, Serialize};

/// Adam with the learning rate supplied per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, (beta1, beta2): (f64, f64), eps: f64) -> Self {
        Self { beta1, beta2, eps, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut adam = Adam::new(3, (0.9, 0.999), 1e-8);
        let mut p = vec![0.3, -1.0, 2.5];
        for _ in 0..10 {
            adam.step(&mut p, &[0.0; 3], 0.1);
        }
        assert_eq!(p, vec![0.3, -1.0, 2.5]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // bias-corrected first step is lr · g/|g|
        let mut adam = Adam::new(2, (0.9, 0.999), 0.0);
        let mut p = vec![1.0, 1.0];
        adam.step(&mut p, &[4.0, -0.5], 0.01);
        assert!((p[0] - 0.99).abs() < 1e-12 && (p[1] - 1.01).abs() < 1e-12);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut adam = Adam::new(1, (0.9, 0.999), 1e-8);
        let mut p = vec![5.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.5)];
            adam.step(&mut p, &g, 0.05);
        }
        assert!((p[0] - 1.5).abs() < 1e-3);
    }
}
