use num_complex::Complex64;
use proptest::prelude::*;
use qcard::sim::{haar_random_state, Gate, GateKind, StateVector};

const TOL: f64 = 1e-10;

fn close(a: &StateVector, b: &StateVector) -> bool {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .all(|(x, y)| (x - y).norm() < TOL)
}

fn applied(state: &StateVector, gates: &[Gate]) -> StateVector {
    let mut s = state.clone();
    s.apply_all(gates).unwrap();
    s
}

fn gate_strategy(n: usize) -> impl Strategy<Value = Gate> {
    let q = 0..n;
    let angle = -10.0..10.0f64;
    prop_oneof![
        (q.clone(), angle.clone()).prop_map(|(target, angle)| Gate::Rx { target, angle }),
        (q.clone(), angle.clone()).prop_map(|(target, angle)| Gate::Ry { target, angle }),
        (q.clone(), angle).prop_map(|(target, angle)| Gate::Rz { target, angle }),
        q.clone().prop_map(|target| Gate::X { target }),
        (q.clone(), 1..n).prop_map(move |(c, off)| Gate::Cy { control: c, target: (c + off) % n }),
        (q, 1..n).prop_map(move |(c, off)| Gate::Cnot { control: c, target: (c + off) % n }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn every_gate_preserves_the_norm(seed in any::<u64>(), gate in gate_strategy(3)) {
        let psi = haar_random_state(3, seed).unwrap();
        let out = applied(&psi, &[gate]);
        prop_assert!((out.norm_sqr() - 1.0).abs() < TOL);
    }

    #[test]
    fn inverses_restore_the_state(seed in any::<u64>(), q in 0..3usize, theta in -10.0..10.0f64) {
        let psi = haar_random_state(3, seed).unwrap();
        let x = Gate::X { target: q };
        prop_assert!(close(&psi, &applied(&psi, &[x, x])));
        for (a, b) in [
            (Gate::Rx { target: q, angle: theta }, Gate::Rx { target: q, angle: -theta }),
            (Gate::Ry { target: q, angle: theta }, Gate::Ry { target: q, angle: -theta }),
            (Gate::Rz { target: q, angle: theta }, Gate::Rz { target: q, angle: -theta }),
        ] {
            prop_assert!(close(&psi, &applied(&psi, &[a, b])));
        }
        let cy = Gate::Cy { control: q, target: (q + 1) % 3 };
        prop_assert!(close(&psi, &applied(&psi, &[cy, cy])));
    }

    #[test]
    fn rotations_compose(seed in any::<u64>(), q in 0..3usize, a in -7.0..7.0f64, b in -7.0..7.0f64) {
        let psi = haar_random_state(3, seed).unwrap();
        for make in [
            |target, angle| Gate::Rx { target, angle },
            |target, angle| Gate::Ry { target, angle },
            |target, angle| Gate::Rz { target, angle },
        ] {
            let two = applied(&psi, &[make(q, a), make(q, b)]);
            let one = applied(&psi, &[make(q, a + b)]);
            prop_assert!(close(&two, &one));
        }
    }

    #[test]
    fn controls_in_zero_do_nothing(seed in any::<u64>(), c in 0..3usize, off in 1..3usize, theta in -3.0..3.0f64) {
        // prepare an arbitrary state on the other qubits, control left in |0>
        let t = (c + off) % 3;
        let mut psi = StateVector::zero(3).unwrap();
        for q in (0..3).filter(|&q| q != c) {
            psi.apply(&Gate::Ry { target: q, angle: theta + q as f64 }).unwrap();
            psi.apply(&Gate::Rz { target: q, angle: (seed % 7) as f64 }).unwrap();
        }
        for g in [Gate::Cy { control: c, target: t }, Gate::Cnot { control: c, target: t }] {
            prop_assert!(close(&psi, &applied(&psi, &[g])));
        }
    }

    #[test]
    fn probabilities_are_a_distribution(seed in any::<u64>(), n in 1..6usize) {
        let p = haar_random_state(n, seed).unwrap().probabilities();
        prop_assert_eq!(p.len(), 1 << n);
        prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < TOL);
    }
}

#[test]
fn not_flips_zero_to_one() {
    let mut psi = StateVector::zero(1).unwrap();
    psi.apply(&Gate::X { target: 0 }).unwrap();
    assert_eq!(psi.amplitudes(), &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
}

#[test]
fn half_turn_rx_gives_even_odds() {
    // RX(π/2)|0> = (cos π/4, -i sin π/4)
    let mut psi = StateVector::zero(1).unwrap();
    psi.apply(&Gate::Rx { target: 0, angle: std::f64::consts::FRAC_PI_2 }).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((psi.amplitudes()[0] - Complex64::new(h, 0.0)).norm() < TOL);
    assert!((psi.amplitudes()[1] - Complex64::new(0.0, -h)).norm() < TOL);
    let p = psi.probabilities();
    assert!((p[0] - 0.5).abs() < TOL && (p[1] - 0.5).abs() < TOL);
}

#[test]
fn probabilities_of_fixed_states() {
    let one = StateVector::from_amplitudes(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
    assert_eq!(one.probabilities(), vec![1.0, 0.0]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = StateVector::from_amplitudes(vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)]).unwrap();
    let p = plus.probabilities();
    assert!((p[0] - 0.5).abs() < TOL && (p[1] - 0.5).abs() < TOL);
}

#[test]
fn cnot_truth_table_uses_low_bit_for_qubit_zero() {
    // |q1 q0> = |01> is index 1; CNOT(0→1) sends it to |11>, index 3
    let mut psi = StateVector::zero(2).unwrap();
    psi.apply(&Gate::X { target: 0 }).unwrap();
    psi.apply(&Gate::Cnot { control: 0, target: 1 }).unwrap();
    assert_eq!(psi.probabilities(), vec![0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn cy_applies_pauli_y_phases() {
    // Y|0> = i|1>
    let mut psi = StateVector::zero(2).unwrap();
    psi.apply(&Gate::X { target: 0 }).unwrap();
    psi.apply(&Gate::Cy { control: 0, target: 1 }).unwrap();
    assert!((psi.amplitudes()[3] - Complex64::new(0.0, 1.0)).norm() < TOL);
}

#[test]
fn haar_sampling_is_seeded_and_unbiased() {
    assert_eq!(haar_random_state(4, 9).unwrap(), haar_random_state(4, 9).unwrap());
    let n = 10_000;
    let mean = (0..n)
        .map(|s| haar_random_state(1, s).unwrap().probabilities()[0])
        .sum::<f64>()
        / n as f64;
    assert!((mean - 0.5).abs() < 0.02, "{mean}");
}

#[test]
fn malformed_gates_are_rejected() {
    let mut psi = StateVector::zero(2).unwrap();
    assert!(psi.apply(&Gate::X { target: 2 }).is_err());
    assert!(psi.apply(&Gate::Cnot { control: 1, target: 1 }).is_err());
    assert_eq!(Gate::Cy { control: 0, target: 1 }.kind(), GateKind::Cy);
}
