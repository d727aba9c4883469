//! Query encoding, the trainable ansatz, forward passes and parameter-shift
//! gradients.
//!
//! A query becomes one qubit per joined table: `RX(π·t/(T+1))` writes the
//! table id and `RZ(π·s)` the selectivity, in that order (RZ alone would act trivially
//! on `|0⟩`). Tables are assigned to qubits in ascending id order, and unused
//! qubits stay at `|0⟩`. Each ansatz layer is a CY ring `i → (i+1) mod n`
//! followed by `RY(θ)`, `RZ(θ)` on every qubit.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Gate, StateVector};

/// One table of a query: its schema id (1-based) and the fraction of its rows
/// that pass the query's filters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub table_id: u32,
    pub selectivity: f64,
}

impl Slot {
    pub fn new(table_id: u32, selectivity: f64) -> Self {
        Self { table_id, selectivity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub n_qubits: usize,
    /// Number of tables in the schema.
    pub max_table_id: u32,
}

impl EncodingSpec {
    pub fn new(n_qubits: usize, max_table_id: u32) -> Result<Self> {
        if max_table_id == 0 {
            return Err(Error::Config("schema must have at least one table".into()));
        }
        if n_qubits == 0 || n_qubits > crate::sim::MAX_QUBITS {
            return Err(Error::Config(format!("encoding width {n_qubits} out of range")));
        }
        Ok(Self { n_qubits, max_table_id })
    }

    /// Strictly inside `(0, π)` for ids in `1..=T`. At `π` the qubit would sit
    /// on the `|1⟩` pole, where the selectivity phase is invisible.
    pub fn table_angle(&self, table_id: u32) -> f64 {
        PI * f64::from(table_id) / (f64::from(self.max_table_id) + 1.0)
    }

    pub fn selectivity_angle(&self, selectivity: f64) -> f64 {
        PI * selectivity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub n_layers: usize,
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, n_layers: usize) -> Result<Self> {
        if n_layers == 0 {
            return Err(Error::Config("ansatz needs at least one layer".into()));
        }
        if n_qubits == 0 || n_qubits > crate::sim::MAX_QUBITS {
            return Err(Error::Config(format!("ansatz width {n_qubits} out of range")));
        }
        Ok(Self { n_qubits, n_layers })
    }

    /// One RY and one RZ angle per qubit per layer.
    pub fn n_params(&self) -> usize {
        self.n_layers * self.n_qubits * 2
    }
}

/// Ansatz angles, laid out layer-major: index `(layer·n + qubit)·2` is the
/// RY angle and the next index the RZ angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(spec: &AnsatzSpec) -> Self {
        Self(vec![0.0; spec.n_params()])
    }

    pub fn index(spec: &AnsatzSpec, layer: usize, qubit: usize, rz: bool) -> usize {
        (layer * spec.n_qubits + qubit) * 2 + usize::from(rz)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Sorts slots by table id and checks them against the encoding.
pub fn canonical_slots(spec: &EncodingSpec, slots: &[Slot]) -> Result<Vec<Slot>> {
    if slots.len() > spec.n_qubits {
        return Err(Error::workload(
            None,
            format!("{} tables exceed the {} encoding qubits", slots.len(), spec.n_qubits),
        ));
    }
    let mut sorted = slots.to_vec();
    sorted.sort_by_key(|s| s.table_id);
    for (i, slot) in sorted.iter().enumerate() {
        if slot.table_id == 0 || slot.table_id > spec.max_table_id {
            return Err(Error::workload(
                None,
                format!("table id {} outside 1..={}", slot.table_id, spec.max_table_id),
            ));
        }
        if !(0.0..=1.0).contains(&slot.selectivity) {
            return Err(Error::workload(
                None,
                format!("selectivity {} outside [0, 1]", slot.selectivity),
            ));
        }
        if i > 0 && sorted[i - 1].table_id == slot.table_id {
            return Err(Error::workload(None, format!("table id {} appears twice", slot.table_id)));
        }
    }
    Ok(sorted)
}

/// Encoding circuit for one query.
pub fn encode_query(spec: &EncodingSpec, slots: &[Slot]) -> Result<Vec<Gate>> {
    let slots = canonical_slots(spec, slots)?;
    Ok(slots
        .iter()
        .enumerate()
        .flat_map(|(qubit, slot)| {
            [
                Gate::Rx { target: qubit, angle: spec.table_angle(slot.table_id) },
                Gate::Rz { target: qubit, angle: spec.selectivity_angle(slot.selectivity) },
            ]
        })
        .collect())
}

pub fn build_ansatz(spec: &AnsatzSpec, params: &ParamVector) -> Result<Vec<Gate>> {
    if params.len() != spec.n_params() {
        return Err(Error::Config(format!(
            "ansatz with {} layers on {} qubits takes {} parameters, got {}",
            spec.n_layers,
            spec.n_qubits,
            spec.n_params(),
            params.len()
        )));
    }
    let n = spec.n_qubits;
    let ring = if n > 1 { n } else { 0 };
    let mut gates = Vec::with_capacity(spec.n_layers * (ring + 2 * n));
    for layer in 0..spec.n_layers {
        gates.extend((0..ring).map(|q| Gate::Cy { control: q, target: (q + 1) % n }));
        for q in 0..n {
            let i = ParamVector::index(spec, layer, q, false);
            gates.push(Gate::Ry { target: q, angle: params.0[i] });
            gates.push(Gate::Rz { target: q, angle: params.0[i + 1] });
        }
    }
    Ok(gates)
}

/// Runs encoding then ansatz on `|0…0⟩` and returns the measurement probabilities.
pub fn forward(n_qubits: usize, encoding: &[Gate], ansatz: &[Gate]) -> Result<Vec<f64>> {
    let mut state = StateVector::zero(n_qubits)?;
    state.apply_all(encoding)?;
    state.apply_all(ansatz)?;
    Ok(state.probabilities())
}

/// Probabilities at the current parameters plus `∂p/∂θ_k` for every ansatz
/// parameter, one row per parameter, by the two-term shift rule.
///
/// The state before each parameterized gate is carried forward so both shifted
/// branches only replay the suffix of the circuit.
pub fn probability_jacobian(
    encoding: &[Gate],
    spec: &AnsatzSpec,
    params: &ParamVector,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let ansatz = build_ansatz(spec, params)?;
    let mut prefix = StateVector::zero(spec.n_qubits)?;
    prefix.apply_all(encoding)?;
    let mut rows = Vec::with_capacity(params.len());
    for (pos, gate) in ansatz.iter().enumerate() {
        if gate.angle().is_some() {
            let suffix = &ansatz[pos + 1..];
            let run = |delta: f64| -> Result<Vec<f64>> {
                let mut branch = prefix.clone();
                branch.apply(&gate.shifted(delta))?;
                branch.apply_all(suffix)?;
                Ok(branch.probabilities())
            };
            let plus = run(FRAC_PI_2)?;
            let minus = run(-FRAC_PI_2)?;
            rows.push(plus.iter().zip(&minus).map(|(p, m)| (p - m) / 2.0).collect());
        }
        prefix.apply(gate)?;
    }
    Ok((prefix.probabilities(), rows))
}

/// Gradient of `loss_tail(p(θ))` with respect to the ansatz parameters.
///
/// `loss_tail` maps the probability vector to `(loss, ∂loss/∂p)`; the returned
/// tuple is the loss at the current parameters and its θ-gradient.
pub fn parameter_shift_grad<F>(
    encoding: &[Gate],
    spec: &AnsatzSpec,
    params: &ParamVector,
    loss_tail: F,
) -> Result<(f64, Vec<f64>)>
where
    F: FnOnce(&[f64]) -> (f64, Vec<f64>),
{
    let (probs, jacobian) = probability_jacobian(encoding, spec, params)?;
    let (loss, dloss_dp) = loss_tail(&probs);
    let grad = jacobian
        .iter()
        .map(|row| row.iter().zip(&dloss_dp).map(|(d, g)| d * g).sum())
        .collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::init_zero;

    #[test]
    fn empty_query_encodes_to_nothing() {
        let spec = EncodingSpec::new(3, 5).unwrap();
        assert!(encode_query(&spec, &[]).unwrap().is_empty());
    }

    #[test]
    fn maximal_slot_stays_below_half_turn() {
        let spec = EncodingSpec::new(2, 4).unwrap();
        let gates = encode_query(&spec, &[Slot::new(4, 1.0)]).unwrap();
        assert_eq!(
            gates,
            vec![Gate::Rx { target: 0, angle: PI * 0.8 }, Gate::Rz { target: 0, angle: PI }]
        );
    }

    #[test]
    fn slots_are_sorted_onto_qubits() {
        let spec = EncodingSpec::new(3, 5).unwrap();
        let gates = encode_query(&spec, &[Slot::new(5, 0.2), Slot::new(2, 0.7)]).unwrap();
        assert_eq!(gates[0], Gate::Rx { target: 0, angle: PI * 2.0 / 6.0 });
        assert_eq!(gates[2], Gate::Rx { target: 1, angle: PI * 5.0 / 6.0 });
    }

    #[test]
    fn encoding_rejects_bad_slots() {
        let spec = EncodingSpec::new(2, 3).unwrap();
        let many = [Slot::new(1, 0.5), Slot::new(2, 0.5), Slot::new(3, 0.5)];
        assert!(matches!(encode_query(&spec, &many), Err(Error::Workload { .. })));
        assert!(encode_query(&spec, &[Slot::new(4, 0.5)]).is_err());
        assert!(encode_query(&spec, &[Slot::new(0, 0.5)]).is_err());
        assert!(encode_query(&spec, &[Slot::new(1, 1.5)]).is_err());
        assert!(encode_query(&spec, &[Slot::new(1, 0.5), Slot::new(1, 0.2)]).is_err());
        assert!(EncodingSpec::new(2, 0).is_err());
    }

    #[test]
    fn two_qubit_single_layer_gate_order() {
        let spec = AnsatzSpec::new(2, 1).unwrap();
        let params = ParamVector(vec![0.1, 0.2, 0.3, 0.4]);
        let gates = build_ansatz(&spec, &params).unwrap();
        assert_eq!(
            gates,
            vec![
                Gate::Cy { control: 0, target: 1 },
                Gate::Cy { control: 1, target: 0 },
                Gate::Ry { target: 0, angle: 0.1 },
                Gate::Rz { target: 0, angle: 0.2 },
                Gate::Ry { target: 1, angle: 0.3 },
                Gate::Rz { target: 1, angle: 0.4 },
            ]
        );
    }

    #[test]
    fn six_by_sixteen_ansatz_has_192_parameters() {
        let spec = AnsatzSpec::new(6, 16).unwrap();
        assert_eq!(spec.n_params(), 192);
        let gates = build_ansatz(&spec, &ParamVector::zeros(&spec)).unwrap();
        assert_eq!(gates.iter().filter(|g| g.angle().is_some()).count(), 192);
    }

    #[test]
    fn ansatz_length_mismatch() {
        let spec = AnsatzSpec::new(2, 2).unwrap();
        assert!(matches!(build_ansatz(&spec, &ParamVector(vec![0.0; 3])), Err(Error::Config(_))));
        assert!(AnsatzSpec::new(2, 0).is_err());
    }

    #[test]
    fn zero_parameters_keep_ground_state() {
        let spec = AnsatzSpec::new(3, 4).unwrap();
        let gates = build_ansatz(&spec, &ParamVector::zeros(&spec)).unwrap();
        let p = forward(3, &[], &gates).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!(p[1..].iter().all(|&x| x < 1e-24));
    }

    #[test]
    fn rz_parameters_have_zero_gradient_on_zero_ansatz() {
        let spec = AnsatzSpec::new(2, 2).unwrap();
        let (_, grad) = parameter_shift_grad(&[], &spec, &ParamVector::zeros(&spec), |p| {
            let mut g = vec![0.0; p.len()];
            g[0] = 1.0;
            (p[0], g)
        })
        .unwrap();
        for layer in 0..2 {
            for q in 0..2 {
                assert!(grad[ParamVector::index(&spec, layer, q, true)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_ry_shift_matches_closed_form() {
        // one qubit, one layer: p0 = cos²(θ/2) after RY(θ), RZ is a phase
        let spec = AnsatzSpec::new(1, 1).unwrap();
        for &theta in &[-2.0, -0.3, 0.0, 0.7, 1.9, 3.0] {
            let params = ParamVector(vec![theta, 0.4]);
            let (loss, grad) = parameter_shift_grad(&[], &spec, &params, |p| (p[0], vec![1.0, 0.0])).unwrap();
            assert!((loss - (theta / 2.0).cos().powi(2)).abs() < 1e-12);
            assert!((grad[0] + theta.sin() / 2.0).abs() < 1e-8);
            assert!(grad[1].abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_probabilities_match_forward() {
        let enc_spec = EncodingSpec::new(3, 6).unwrap();
        let enc = encode_query(&enc_spec, &[Slot::new(2, 0.3), Slot::new(5, 0.9)]).unwrap();
        let spec = AnsatzSpec::new(3, 2).unwrap();
        let params = ParamVector((0..spec.n_params()).map(|i| 0.1 * i as f64 - 0.5).collect());
        let (p, rows) = probability_jacobian(&enc, &spec, &params).unwrap();
        let direct = forward(3, &enc, &build_ansatz(&spec, &params).unwrap()).unwrap();
        for (a, b) in p.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-13);
        }
        assert_eq!(rows.len(), spec.n_params());
        // probabilities always sum to one, so each derivative row sums to zero
        for row in rows {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn encoding_distinguishes_selectivity() {
        let spec = EncodingSpec::new(2, 4).unwrap();
        let state = |s: f64| {
            let mut st = init_zero(2).unwrap();
            st.apply_all(&encode_query(&spec, &[Slot::new(1, 0.2), Slot::new(3, s)]).unwrap()).unwrap();
            st
        };
        assert!(state(0.4).fidelity(&state(0.5)) < 1.0 - 1e-6);
    }
}
