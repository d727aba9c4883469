//! Dense statevector simulator.
//!
//! Amplitudes are stored in basis-index order with qubit 0 as the least
//! significant bit of the index, so `|q1 q0⟩ = |10⟩` is index 2. Only the
//! six gate kinds the circuits need are supported, each applied in place by
//! walking amplitude pairs that differ in the target bit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    X,
    Cy,
    Cnot,
}

/// A gate with its operands. Rotations carry an angle in radians; controlled
/// gates carry a control qubit. The constructor-per-kind layout makes it
/// impossible to build, say, a CNOT with an angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rx { target: usize, angle: f64 },
    Ry { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    X { target: usize },
    Cy { control: usize, target: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Rx { .. } => GateKind::Rx,
            Gate::Ry { .. } => GateKind::Ry,
            Gate::Rz { .. } => GateKind::Rz,
            Gate::X { .. } => GateKind::X,
            Gate::Cy { .. } => GateKind::Cy,
            Gate::Cnot { .. } => GateKind::Cnot,
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            Gate::Rx { target, .. }
            | Gate::Ry { target, .. }
            | Gate::Rz { target, .. }
            | Gate::X { target }
            | Gate::Cy { target, .. }
            | Gate::Cnot { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Cy { control, .. } | Gate::Cnot { control, .. } => Some(control),
            _ => None,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx { angle, .. } | Gate::Ry { angle, .. } | Gate::Rz { angle, .. } => Some(angle),
            _ => None,
        }
    }

    /// Same gate with its rotation angle shifted by `delta`; non-rotations are returned unchanged.
    pub fn shifted(&self, delta: f64) -> Gate {
        match *self {
            Gate::Rx { target, angle } => Gate::Rx { target, angle: angle + delta },
            Gate::Ry { target, angle } => Gate::Ry { target, angle: angle + delta },
            Gate::Rz { target, angle } => Gate::Rz { target, angle: angle + delta },
            other => other,
        }
    }

    /// 2x2 matrix `[[a, b], [c, d]]` acting on the target qubit.
    fn matrix(&self) -> [Complex64; 4] {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match *self {
            Gate::Rx { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let ms = Complex64::new(0.0, -s);
                [Complex64::new(c, 0.0), ms, ms, Complex64::new(c, 0.0)]
            }
            Gate::Ry { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                [
                    Complex64::new(c, 0.0),
                    Complex64::new(-s, 0.0),
                    Complex64::new(s, 0.0),
                    Complex64::new(c, 0.0),
                ]
            }
            Gate::Rz { angle, .. } => [
                Complex64::from_polar(1.0, -angle / 2.0),
                zero,
                zero,
                Complex64::from_polar(1.0, angle / 2.0),
            ],
            Gate::X { .. } | Gate::Cnot { .. } => [zero, one, one, zero],
            Gate::Cy { .. } => [zero, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), zero],
        }
    }
}

/// Pure state of an `n_qubits` register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Config(format!(
            "register size {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes. The length must be a power of two; normalization is the caller's job.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(Error::Config(format!("amplitude count {len} is not a power of two")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        let target = gate.target();
        if target >= self.n_qubits {
            return Err(Error::Usage(format!(
                "target qubit {target} out of range for {} qubits",
                self.n_qubits
            )));
        }
        if let Some(control) = gate.control() {
            if control >= self.n_qubits {
                return Err(Error::Usage(format!(
                    "control qubit {control} out of range for {} qubits",
                    self.n_qubits
                )));
            }
            if control == target {
                return Err(Error::Usage(format!("control and target are both qubit {target}")));
            }
        }
        self.apply_unchecked(gate);
        Ok(())
    }

    /// Applies every gate in order.
    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for gate in gates {
            self.apply(gate)?;
        }
        Ok(())
    }

    fn apply_unchecked(&mut self, gate: &Gate) {
        let stride = 1usize << gate.target();
        let control_mask = gate.control().map_or(0, |c| 1usize << c);
        if let Gate::Rz { angle, .. } = *gate {
            // diagonal: no pairing needed
            let lo = Complex64::from_polar(1.0, -angle / 2.0);
            let hi = Complex64::from_polar(1.0, angle / 2.0);
            for (i, a) in self.amps.iter_mut().enumerate() {
                *a *= if i & stride == 0 { lo } else { hi };
            }
            return;
        }
        let [m00, m01, m10, m11] = gate.matrix();
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + stride {
                if i & control_mask != control_mask {
                    continue;
                }
                let j = i + stride;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m00 * a0 + m01 * a1;
                self.amps[j] = m10 * a0 + m11 * a1;
            }
            base += 2 * stride;
        }
    }

    /// Measurement probabilities `|a_i|²` in basis-index order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability of reading each qubit as `|0⟩`, qubit 0 first.
    pub fn zero_marginals(&self) -> Vec<f64> {
        (0..self.n_qubits)
            .map(|q| {
                self.amps
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i & (1 << q) == 0)
                    .map(|(_, a)| a.norm_sqr())
                    .sum()
            })
            .collect()
    }
}

pub fn init_zero(n_qubits: usize) -> Result<StateVector> {
    StateVector::zero(n_qubits)
}

/// Functional form of [`StateVector::apply`].
pub fn apply_gate(mut state: StateVector, gate: &Gate) -> Result<StateVector> {
    state.apply(gate)?;
    Ok(state)
}

pub fn probabilities(state: &StateVector) -> Vec<f64> {
    state.probabilities()
}

/// Haar-random pure state: independent standard complex Gaussian amplitudes,
/// normalized. Deterministic in `seed`.
pub fn haar_random_state(n_qubits: usize, seed: u64) -> Result<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_random_state_from(n_qubits, &mut rng)
}

/// Same as [`haar_random_state`] but drawing from a caller-owned generator.
pub fn haar_random_state_from<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<StateVector> {
    check_qubits(n_qubits)?;
    let mut amps: Vec<Complex64> = (0..1usize << n_qubits)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    Ok(StateVector { n_qubits, amps })
}
