//! Hybrid training for direct estimation and for correction of a classical
//! estimator.
//!
//! Everything is learned in natural-log space. In estimation mode the head
//! output `v` is the predicted `ln t(q)`; in correction mode the prediction is
//! `ln f(q) + v`, so the multiplicative correction is `e^v` and `v = 0` leaves
//! the classical estimate untouched. The per-query loss is the squared log
//! error; reports use the mean absolute log error.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{improvement_factor, Improvement};
use crate::error::{Error, Result};
use crate::optim::Adam;
use crate::postproc::{LayerKind, PostLayer};
use crate::vqc::{build_ansatz, encode_query, forward, probability_jacobian, AnsatzSpec, EncodingSpec, ParamVector};
use crate::workload::{QueryFeature, Workload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Estimation,
    Correction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mode: Mode,
    pub encoding: EncodingSpec,
    pub ansatz: AnsatzSpec,
    pub layer: PostLayer,
    pub seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.encoding.n_qubits != self.ansatz.n_qubits {
            return Err(Error::Config(format!(
                "encoding uses {} qubits but the ansatz {}",
                self.encoding.n_qubits, self.ansatz.n_qubits
            )));
        }
        self.layer.validate()?;
        self.layer.check_input(1 << self.ansatz.n_qubits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "train_fraction")]
pub enum Split {
    /// Train and evaluate on every query.
    Full,
    /// Shuffle by seed, train on this fraction and evaluate on the rest.
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub episodes: usize,
    pub lr_initial: f64,
    /// Per-episode multiplicative decay: `lr_t = lr_initial · lr_decay^t`.
    pub lr_decay: f64,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,
    pub split: Split,
}

pub const DEFAULT_EPISODES: usize = 8000;
pub const DEFAULT_LR: f64 = 0.05;

/// Decay that shrinks the rate tenfold over the default episode count.
pub fn default_lr_decay() -> f64 {
    0.1f64.powf(1.0 / DEFAULT_EPISODES as f64)
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: DEFAULT_EPISODES,
            lr_initial: DEFAULT_LR,
            lr_decay: default_lr_decay(),
            adam_betas: (0.9, 0.999),
            adam_eps: 1e-8,
            split: Split::Full,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!("lr_decay must lie in (0, 1], got {}", self.lr_decay)));
        }
        if self.lr_initial.is_nan() || self.lr_initial <= 0.0 {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr_initial)));
        }
        if let Split::Fraction(f) = self.split {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("train fraction must lie in (0, 1), got {f}")));
            }
        }
        Ok(())
    }

    pub fn lr_at(&self, episode: usize) -> f64 {
        self.lr_initial * self.lr_decay.powi(episode as i32)
    }
}

/// A model: configuration, ansatz angles and the trained head.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamVector,
    pub layer: PostLayer,
    /// ChaCha8 word position after initialization, for resuming the stream.
    pub rng_word_pos: u128,
    pub episodes_trained: usize,
}

impl Model {
    /// Angles uniform in `[-π, π)` from the config seed; head scalars start at
    /// the layer's defaults.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = ParamVector(
            (0..config.ansatz.n_params())
                .map(|_| rng.random_range(-PI..PI))
                .collect(),
        );
        let layer = config.layer.clone();
        Ok(Self { config, params, layer, rng_word_pos: rng.get_word_pos(), episodes_trained: 0 })
    }

    /// Linear's scale stays fixed at the value training assigns it.
    fn scalars_trainable(&self) -> bool {
        self.layer.kind != LayerKind::Linear
    }

    pub fn n_trainable(&self) -> usize {
        self.params.len() + if self.scalars_trainable() { self.layer.scalars.len() } else { 0 }
    }

    /// Angles followed by the trainable head scalars.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = self.params.0.clone();
        if self.scalars_trainable() {
            out.extend_from_slice(&self.layer.scalars);
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_trainable());
        let n = self.params.len();
        self.params.0.copy_from_slice(&flat[..n]);
        if self.scalars_trainable() {
            self.layer.scalars.copy_from_slice(&flat[n..]);
        }
    }

    fn head_offset(&self, query: &QueryFeature) -> Result<f64> {
        match self.config.mode {
            Mode::Estimation => Ok(0.0),
            Mode::Correction => query.classical_log_card().ok_or_else(|| {
                Error::workload(query.query_id.clone(), "correction mode needs a classical estimate")
            }),
        }
    }

    /// Probability vector the head sees for `query`.
    pub fn probabilities(&self, query: &QueryFeature) -> Result<Vec<f64>> {
        let enc = encode_query(&self.config.encoding, &query.slots)
            .map_err(|e| with_query(e, &query.query_id))?;
        let ansatz = build_ansatz(&self.config.ansatz, &self.params)?;
        forward(self.config.ansatz.n_qubits, &enc, &ansatz)
    }

    /// Predicted natural-log cardinality.
    pub fn predict(&self, query: &QueryFeature) -> Result<f64> {
        let offset = self.head_offset(query)?;
        Ok(offset + self.layer.eval(&self.probabilities(query)?))
    }

    /// Squared log error of one query and its gradient over [`Model::flat_params`].
    pub fn query_loss_and_grad(&self, query: &QueryFeature) -> Result<(f64, Vec<f64>)> {
        let offset = self.head_offset(query)?;
        let target = query.true_log_card();
        let enc = encode_query(&self.config.encoding, &query.slots)
            .map_err(|e| with_query(e, &query.query_id))?;
        let (probs, jacobian) = probability_jacobian(&enc, &self.config.ansatz, &self.params)?;
        let v = self.layer.eval(&probs);
        let (l, dl_dpred) = loss(offset + v, target)?;
        let head = self.layer.grad(&probs);
        let mut grad: Vec<f64> = jacobian
            .iter()
            .map(|row| dl_dpred * row.iter().zip(&head.dx).map(|(dp, dv)| dp * dv).sum::<f64>())
            .collect();
        if self.scalars_trainable() {
            grad.extend(head.dscalars.iter().map(|g| dl_dpred * g));
        }
        Ok((l, grad))
    }

    /// Summed loss and gradient over `queries`. Per-query work runs in parallel;
    /// the reduction is an ordered sum, so the result does not depend on the
    /// worker count.
    pub fn loss_and_grad(&self, queries: &[QueryFeature]) -> Result<(f64, Vec<f64>)> {
        let parts = queries
            .par_iter()
            .map(|q| self.query_loss_and_grad(q))
            .collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        let mut grad = vec![0.0; self.n_trainable()];
        for (l, g) in parts {
            total += l;
            for (acc, gi) in grad.iter_mut().zip(g) {
                *acc += gi;
            }
        }
        Ok((total, grad))
    }

    pub fn total_loss(&self, queries: &[QueryFeature]) -> Result<f64> {
        let losses = queries
            .par_iter()
            .map(|q| Ok(loss(self.predict(q)?, q.true_log_card())?.0))
            .collect::<Result<Vec<f64>>>()?;
        Ok(losses.iter().sum())
    }

    pub fn save(&self, path: &Path, train: Option<&TrainConfig>) -> Result<()> {
        let text = Checkpoint::from_model(self, train).to_json();
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_json(&text)?.into_model()
    }
}

fn with_query(e: Error, id: &str) -> Error {
    match e {
        Error::Workload { query_id: None, message } => Error::workload(id.to_string(), message),
        other => other,
    }
}

/// Squared error in log space and its derivative with respect to the prediction.
pub fn loss(predicted_log: f64, true_log: f64) -> Result<(f64, f64)> {
    if !predicted_log.is_finite() || !true_log.is_finite() {
        return Err(Error::Numeric {
            episode: 0,
            message: format!("non-finite loss input: predicted {predicted_log}, true {true_log}"),
        });
    }
    let diff = predicted_log - true_log;
    Ok((diff * diff, 2.0 * diff))
}

/// Deterministic train/evaluation partition of query indices.
pub fn split_indices(n: usize, split: Split, seed: u64) -> (Vec<usize>, Vec<usize>) {
    match split {
        Split::Full => ((0..n).collect(), (0..n).collect()),
        Split::Fraction(f) => {
            let mut idx: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SPLIT_STREAM);
            idx.shuffle(&mut rng);
            let n_train = ((n as f64 * f).round() as usize).clamp(1, n.saturating_sub(1).max(1));
            let eval = idx.split_off(n_train);
            (idx, eval)
        }
    }
}

// keeps the split stream independent of the initialization stream
const SPLIT_STREAM: u64 = 0x5EED_5917;

/// Per-query result row.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub query_id: String,
    pub predicted_log_card: f64,
    pub true_log_card: f64,
    pub abs_log_error: f64,
    pub baseline_abs_log_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub rows: Vec<QueryResult>,
    pub mean_abs_log_error: f64,
    pub baseline_mean_abs_log_error: Option<f64>,
    pub improvement: Option<Improvement>,
    /// Summed training loss per episode, measured before that episode's step.
    pub loss_curve: Vec<f64>,
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

/// Scores `model` on `workload`; with `baseline_log_cards` also reports the
/// baseline's error and the improvement factor over it.
pub fn evaluate(model: &Model, workload: &Workload, baseline_log_cards: Option<&[f64]>) -> Result<RunReport> {
    if let Some(b) = baseline_log_cards {
        if b.len() != workload.len() {
            return Err(Error::Usage(format!(
                "baseline has {} entries for {} queries",
                b.len(),
                workload.len()
            )));
        }
    }
    let preds = workload
        .queries
        .par_iter()
        .map(|q| model.predict(q))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<QueryResult> = workload
        .queries
        .iter()
        .zip(&preds)
        .enumerate()
        .map(|(i, (q, &p))| {
            let truth = q.true_log_card();
            QueryResult {
                query_id: q.query_id.clone(),
                predicted_log_card: p,
                true_log_card: truth,
                abs_log_error: (p - truth).abs(),
                baseline_abs_log_error: baseline_log_cards.map(|b| (b[i] - truth).abs()),
            }
        })
        .collect();
    let model_errors: Vec<f64> = rows.iter().map(|r| r.abs_log_error).collect();
    let mean_abs_log_error = mean(model_errors.iter().copied());
    let (baseline_mean_abs_log_error, improvement) = match baseline_log_cards {
        Some(_) => {
            let base: Vec<f64> = rows.iter().filter_map(|r| r.baseline_abs_log_error).collect();
            (Some(mean(base.iter().copied())), Some(improvement_factor(&model_errors, &base)?))
        }
        None => (None, None),
    };
    Ok(RunReport { rows, mean_abs_log_error, baseline_mean_abs_log_error, improvement, loss_curve: Vec::new() })
}

fn subset(workload: &Workload, idx: &[usize]) -> Workload {
    Workload {
        schema_table_count: workload.schema_table_count,
        queries: idx.iter().map(|&i| workload.queries[i].clone()).collect(),
    }
}

/// Trains `model` full-batch for `cfg.episodes` Adam steps and reports on the
/// evaluation queries (all of them unless a split is configured), against the
/// classical estimates when every evaluation query carries one.
pub fn train(mut model: Model, workload: &Workload, cfg: &TrainConfig) -> Result<(Model, RunReport)> {
    cfg.validate()?;
    if workload.is_empty() {
        return Err(Error::Usage("cannot train on an empty workload".into()));
    }
    workload.check_fits(model.config.encoding.n_qubits)?;
    if model.config.mode == Mode::Correction {
        workload.require_classical()?;
    }
    let (train_idx, eval_idx) = split_indices(workload.len(), cfg.split, model.config.seed);
    let train_set = subset(workload, &train_idx);
    let eval_set = subset(workload, &eval_idx);

    if model.layer.kind == LayerKind::Linear && model.episodes_trained == 0 {
        model.layer.scalars[0] = linear_scale(&model, &train_set.queries)?;
    }

    let mut flat = model.flat_params();
    let mut adam = Adam::new(flat.len(), cfg.adam_betas, cfg.adam_eps);
    let mut curve = Vec::with_capacity(cfg.episodes);
    for episode in 0..cfg.episodes {
        let (total, grad) = model.loss_and_grad(&train_set.queries).map_err(|e| at_episode(e, episode))?;
        if !total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric { episode, message: format!("loss became {total}") });
        }
        curve.push(total);
        adam.step(&mut flat, &grad, cfg.lr_at(episode));
        model.set_flat_params(&flat);
        model.layer.project_scalars();
        flat = model.flat_params();
        log::debug!("episode {episode}: loss {total}");
    }
    model.episodes_trained += cfg.episodes;

    let baseline = eval_set.classical_log_cards();
    let mut report = evaluate(&model, &eval_set, baseline.as_deref())?;
    report.loss_curve = curve;
    Ok((model, report))
}

fn at_episode(e: Error, episode: usize) -> Error {
    match e {
        Error::Numeric { message, .. } => Error::Numeric { episode, message },
        other => other,
    }
}

/// Scale for the Linear head: the largest training target magnitude
/// (the maximal log-cardinality in estimation mode).
fn linear_scale(model: &Model, queries: &[QueryFeature]) -> Result<f64> {
    let mut best = 0.0f64;
    for q in queries {
        let target = q.true_log_card() - model.head_offset(q)?;
        best = best.max(target.abs());
    }
    Ok(best)
}

const CHECKPOINT_FORMAT: &str = "qcard-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk model: pretty-printed JSON with a format tag and version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub theta: Vec<f64>,
    pub layer: PostLayer,
    pub rng: RngState,
    pub episodes_trained: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    pub algorithm: String,
    pub seed: u64,
    /// Decimal `u128` word position.
    pub word_pos: String,
}

impl Checkpoint {
    pub fn from_model(model: &Model, train: Option<&TrainConfig>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: model.config.clone(),
            theta: model.params.0.clone(),
            layer: model.layer.clone(),
            rng: RngState {
                algorithm: "chacha8".into(),
                seed: model.config.seed,
                word_pos: model.rng_word_pos.to_string(),
            },
            episodes_trained: model.episodes_trained,
            train: train.cloned(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Usage(format!("unreadable checkpoint: {e}")))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Usage(format!("not a checkpoint (format `{}`)", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Usage(format!(
                "checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        Ok(ck)
    }

    pub fn into_model(self) -> Result<Model> {
        self.config.validate()?;
        self.layer.validate()?;
        if self.layer.kind != self.config.layer.kind || self.layer.width != self.config.layer.width {
            return Err(Error::Usage("checkpoint head does not match its config".into()));
        }
        let params = ParamVector(self.theta);
        if params.len() != self.config.ansatz.n_params() {
            return Err(Error::Config(format!(
                "checkpoint has {} angles, ansatz needs {}",
                params.len(),
                self.config.ansatz.n_params()
            )));
        }
        let rng_word_pos = self
            .rng
            .word_pos
            .parse()
            .map_err(|_| Error::Usage(format!("bad rng word position `{}`", self.rng.word_pos)))?;
        Ok(Model {
            config: self.config,
            params,
            layer: self.layer,
            rng_word_pos,
            episodes_trained: self.episodes_trained,
        })
    }
}
