//! Variational quantum circuits for query cardinality estimation and for
//! correcting a classical estimator's output.
//!
//! A query becomes a list of `(table id, selectivity)` slots, one per qubit.
//! Each slot is angle-encoded, a trainable layered ansatz follows, and a
//! post-processing head maps the measured probabilities to a log-cardinality
//! (estimation) or a log-ratio applied to a classical estimate (correction).
//!
//! * [`sim`] dense statevector simulator
//! * [`vqc`] encoding, ansatz and parameter-shift gradients
//! * [`postproc`] the seven probability-to-value heads
//! * [`workload`] SQL subset parser, CSV tables, selectivities, digested workloads
//! * [`trainer`] log-space loss, Adam training, checkpoints
//! * [`analysis`] value distributions under Haar-random states, metrics and reports
//! * [`cli`] the `qcard` command line
//!
//! ```
//! use qcard::sim::{Gate, StateVector};
//!
//! let mut psi = StateVector::zero(1).unwrap();
//! psi.apply(&Gate::Ry { target: 0, angle: std::f64::consts::FRAC_PI_2 }).unwrap();
//! let p = psi.probabilities();
//! assert!((p[0] - 0.5).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod optim;
pub mod postproc;
pub mod sim;
pub mod trainer;
pub mod vqc;
pub mod workload;

pub use error::{Error, Result};
pub use postproc::{LayerKind, LayerOptions, PostLayer};
pub use trainer::{evaluate, train, Mode, Model, ModelConfig, RunReport, Split, TrainConfig};
pub use vqc::{AnsatzSpec, EncodingSpec, Slot};
pub use workload::{QueryFeature, Workload};
