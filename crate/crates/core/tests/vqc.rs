use proptest::prelude::*;
use qcard::sim::StateVector;
use qcard::vqc::{
    build_ansatz, encode_query, forward, parameter_shift_grad, AnsatzSpec, EncodingSpec, ParamVector, Slot,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn encoded_state(spec: &EncodingSpec, slots: &[Slot]) -> StateVector {
    let mut s = StateVector::zero(spec.n_qubits).unwrap();
    s.apply_all(&encode_query(spec, slots).unwrap()).unwrap();
    s
}

fn random_params(spec: &AnsatzSpec, rng: &mut ChaCha8Rng) -> ParamVector {
    ParamVector((0..spec.n_params()).map(|_| rng.random_range(-3.2..3.2)).collect())
}

fn random_query(n: usize, tables: u32, rng: &mut ChaCha8Rng) -> Vec<Slot> {
    let k = rng.random_range(0..=n);
    rand::seq::index::sample(rng, tables as usize, k)
        .iter()
        .map(|t| Slot::new(t as u32 + 1, rng.random_range(0.0..=1.0)))
        .collect()
}

#[test]
fn shift_rule_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-4;
    for case in 0..100 {
        let n = rng.random_range(1..=3);
        let spec = AnsatzSpec::new(n, rng.random_range(1..=3)).unwrap();
        let enc_spec = EncodingSpec::new(n, 5).unwrap();
        let enc = encode_query(&enc_spec, &random_query(n, 5, &mut rng)).unwrap();
        let params = random_params(&spec, &mut rng);
        // a loss touching every probability
        let w: Vec<f64> = (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |p: &[f64]| p.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let (_, grad) = parameter_shift_grad(&enc, &spec, &params, |p| (f(p), w.clone())).unwrap();
        for k in 0..params.len() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus.0[k] += h;
            minus.0[k] -= h;
            let fp = f(&forward(n, &enc, &build_ansatz(&spec, &plus).unwrap()).unwrap());
            let fm = f(&forward(n, &enc, &build_ansatz(&spec, &minus).unwrap()).unwrap());
            let fd = (fp - fm) / (2.0 * h);
            assert!((grad[k] - fd).abs() < 1e-5, "case {case} param {k}: {} vs {fd}", grad[k]);
        }
    }
}

#[test]
fn single_ry_gradient_has_closed_form() {
    // p0 = cos²(θ/2), dp0/dθ = -sin(θ)/2
    let spec = AnsatzSpec::new(1, 1).unwrap();
    for theta in [-2.5, -0.3, 0.0, 0.7, 1.9, 3.1] {
        let params = ParamVector(vec![theta, 0.4]);
        let (p0, grad) = parameter_shift_grad(&[], &spec, &params, |p| (p[0], vec![1.0, 0.0])).unwrap();
        assert!((p0 - (theta / 2.0).cos().powi(2)).abs() < 1e-12);
        assert!((grad[0] + theta.sin() / 2.0).abs() < 1e-8);
        assert!(grad[1].abs() < 1e-12);
    }
}

#[test]
fn single_table_grid_encodes_injectively() {
    let spec = EncodingSpec::new(1, 10).unwrap();
    let states: Vec<StateVector> = (1..=10)
        .flat_map(|t| (0..10).map(move |i| (t, i as f64 / 9.0)))
        .map(|(t, s)| encoded_state(&spec, &[Slot::new(t, s)]))
        .collect();
    let mut worst = 0.0f64;
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            worst = worst.max(states[i].fidelity(&states[j]));
        }
    }
    assert!(worst < 1.0 - 1e-8, "max fidelity {worst}");
}

#[test]
fn small_selectivity_changes_are_visible() {
    let spec = EncodingSpec::new(3, 6).unwrap();
    let a = encoded_state(&spec, &[Slot::new(2, 0.3), Slot::new(5, 0.6)]);
    let b = encoded_state(&spec, &[Slot::new(2, 0.3), Slot::new(5, 0.7)]);
    assert!(a.fidelity(&b) < 1.0 - 1e-6);
}

#[test]
fn zero_parameters_leave_ground_state() {
    let spec = AnsatzSpec::new(3, 2).unwrap();
    let p = forward(3, &[], &build_ansatz(&spec, &ParamVector::zeros(&spec)).unwrap()).unwrap();
    assert_eq!(p[0], 1.0);
    assert!(p[1..].iter().all(|&x| x == 0.0));
}

#[test]
fn reference_geometry_has_192_parameters() {
    assert_eq!(AnsatzSpec::new(6, 16).unwrap().n_params(), 192);
}

#[test]
fn parameter_length_mismatch_is_a_config_error() {
    let spec = AnsatzSpec::new(2, 2).unwrap();
    let err = build_ansatz(&spec, &ParamVector(vec![0.0; 3])).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn encoding_rejects_bad_slots() {
    let spec = EncodingSpec::new(2, 3).unwrap();
    assert!(encode_query(&spec, &[Slot::new(4, 0.5)]).is_err());
    assert!(encode_query(&spec, &[Slot::new(1, 0.5), Slot::new(2, 0.5), Slot::new(3, 0.5)]).is_err());
    assert!(encode_query(&spec, &[Slot::new(1, 1.5)]).is_err());
}

// Frozen from this implementation: 3 qubits, 2 layers, θ_k = 0.1·k − 0.5,
// slots (1, 0.25), (3, 0.75) of 4 tables.
const GOLDEN: [f64; 8] = include!("data/golden_forward.txt");

#[test]
fn forward_matches_frozen_vector() {
    let enc = EncodingSpec::new(3, 4).unwrap();
    let spec = AnsatzSpec::new(3, 2).unwrap();
    let params = ParamVector((0..spec.n_params()).map(|k| 0.1 * k as f64 - 0.5).collect());
    let gates = encode_query(&enc, &[Slot::new(3, 0.75), Slot::new(1, 0.25)]).unwrap();
    let p = forward(3, &gates, &build_ansatz(&spec, &params).unwrap()).unwrap();
    for (a, b) in p.iter().zip(GOLDEN) {
        assert!((a - b).abs() < 1e-12, "{p:?}");
    }
}

proptest! {
    #[test]
    fn slot_order_does_not_matter(
        seed in any::<u64>(),
        sels in prop::collection::vec(0.0..=1.0f64, 3),
        perm in Just(vec![0usize, 1, 2]).prop_shuffle(),
    ) {
        let enc = EncodingSpec::new(3, 5).unwrap();
        let spec = AnsatzSpec::new(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ansatz = build_ansatz(&spec, &random_params(&spec, &mut rng)).unwrap();
        let slots: Vec<Slot> = [1u32, 3, 5].iter().zip(&sels).map(|(&t, &s)| Slot::new(t, s)).collect();
        let shuffled: Vec<Slot> = perm.iter().map(|&i| slots[i]).collect();
        let a = forward(3, &encode_query(&enc, &slots).unwrap(), &ansatz).unwrap();
        let b = forward(3, &encode_query(&enc, &shuffled).unwrap(), &ansatz).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn forward_is_a_distribution(seed in any::<u64>(), n in 1..5usize, layers in 1..4usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = AnsatzSpec::new(n, layers).unwrap();
        let enc = encode_query(&EncodingSpec::new(n, 6).unwrap(), &random_query(n, 6, &mut rng)).unwrap();
        let p = forward(n, &enc, &build_ansatz(&spec, &random_params(&spec, &mut rng)).unwrap()).unwrap();
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}
