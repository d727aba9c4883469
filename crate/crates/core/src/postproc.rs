//! Classical heads that turn a measurement probability vector into one scalar.
//!
//! Every head reads the first `width` entries of the basis-state probability
//! vector. The free `eval_*` functions are the bare formulas; [`PostLayer`]
//! bundles a head with its hyperparameters and trainable scalars and supplies
//! analytic gradients for training.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const DEFAULT_BASE: f64 = 2.0;
/// Smallest base the optimizer may move a place-value head to.
pub const MIN_BASE: f64 = 1.0 + 1e-6;

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Subgradient of relu, taking 0 at the kink.
fn relu_step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn eval_linear(x: &[f64], s: f64) -> f64 {
    x[0] * s
}

pub fn eval_rational(x: &[f64], epsilon: f64) -> f64 {
    (x[0] + epsilon) / (x[1] + epsilon)
}

pub fn eval_rational_log(x: &[f64], epsilon: f64) -> f64 {
    ((x[0] + epsilon) / (x[1] + epsilon)).ln()
}

/// `relu(x_i - d) · x_j · s²`, the gated term both threshold heads share.
pub fn threshold_term(gate: f64, value: f64, d: f64, s: f64) -> f64 {
    relu(gate - d) * value * s * s
}

pub fn eval_threshold(x: &[f64], d: f64, s1: f64, s2: f64) -> f64 {
    threshold_term(x[0], x[1], d, s1) - threshold_term(x[2], x[3], d, s2)
}

pub fn eval_threshold_ratio(x: &[f64], d: f64, s1: f64, s2: f64) -> f64 {
    (1.0 + threshold_term(x[0], x[1], d, s1)) / (1.0 + threshold_term(x[2], x[3], d, s2))
}

pub fn eval_place_value(x: &[f64], base: f64, width: usize) -> f64 {
    x[..width]
        .iter()
        .zip(powers(base, width))
        .map(|(xi, p)| xi * p)
        .sum()
}

pub fn eval_place_value_neg(x: &[f64], base: f64, width: usize) -> Result<f64> {
    if !width.is_multiple_of(2) {
        return Err(Error::Config(format!("signed place-value width must be even, got {width}")));
    }
    let half = width / 2;
    Ok(eval_place_value(x, base, half) - eval_place_value(&x[half..], base, half))
}

fn powers(base: f64, n: usize) -> impl Iterator<Item = f64> {
    std::iter::successors(Some(1.0), move |p| Some(p * base)).take(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    Linear,
    Rational,
    RationalLog,
    Threshold,
    ThresholdRatio,
    PlaceValue,
    PlaceValueNeg,
}

impl LayerKind {
    pub const ALL: [LayerKind; 7] = [
        LayerKind::Linear,
        LayerKind::Rational,
        LayerKind::RationalLog,
        LayerKind::Threshold,
        LayerKind::ThresholdRatio,
        LayerKind::PlaceValue,
        LayerKind::PlaceValueNeg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Linear => "linear",
            LayerKind::Rational => "rational",
            LayerKind::RationalLog => "rational-log",
            LayerKind::Threshold => "threshold",
            LayerKind::ThresholdRatio => "threshold-ratio",
            LayerKind::PlaceValue => "place-value",
            LayerKind::PlaceValueNeg => "place-value-neg",
        }
    }

    /// Fixed input width, or `None` for the place-value heads whose width is configurable.
    pub fn fixed_width(self) -> Option<usize> {
        match self {
            LayerKind::Linear => Some(1),
            LayerKind::Rational | LayerKind::RationalLog => Some(2),
            LayerKind::Threshold | LayerKind::ThresholdRatio => Some(4),
            LayerKind::PlaceValue | LayerKind::PlaceValueNeg => None,
        }
    }

    /// Whether every output is non-negative, so a correction can only scale up.
    pub fn non_negative(self) -> bool {
        matches!(self, LayerKind::Linear | LayerKind::Rational | LayerKind::ThresholdRatio | LayerKind::PlaceValue)
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        LayerKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Usage(format!("unknown layer kind `{s}`")))
    }
}

/// A configured head.
///
/// `scalars` holds `[s]` for Linear, nothing for the rational heads, `[s1, s2]`
/// for the threshold heads (just `[s1]` when `tie_threshold_scalars` is set on
/// ThresholdRatio, so the denominator reuses `s1`), and `[b]` for place-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostLayer {
    pub kind: LayerKind,
    pub width: usize,
    pub scalars: Vec<f64>,
    pub d: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub tie_threshold_scalars: bool,
}

/// Partial derivatives of a head's output.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    /// `∂v/∂x_i` for the first `width` probabilities.
    pub dx: Vec<f64>,
    /// `∂v/∂scalar`, aligned with [`PostLayer::scalars`].
    pub dscalars: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct LayerOptions {
    /// Place-value width; ignored by the fixed-width heads.
    pub width: usize,
    pub d: f64,
    pub epsilon: f64,
    pub base: f64,
    pub tie_threshold_scalars: bool,
}

impl Default for LayerOptions {
    fn default() -> Self {
        Self {
            width: 4,
            d: DEFAULT_THRESHOLD,
            epsilon: DEFAULT_EPSILON,
            base: DEFAULT_BASE,
            tie_threshold_scalars: false,
        }
    }
}

impl PostLayer {
    /// A head with its scalars at their starting values: 1 for `s`, `s1`, `s2`
    /// and `opts.base` for place-value.
    pub fn new(kind: LayerKind, opts: LayerOptions) -> Result<Self> {
        let width = kind.fixed_width().unwrap_or(opts.width);
        let scalars = match kind {
            LayerKind::Linear => vec![1.0],
            LayerKind::Rational | LayerKind::RationalLog => vec![],
            LayerKind::Threshold => vec![1.0, 1.0],
            LayerKind::ThresholdRatio if opts.tie_threshold_scalars => vec![1.0],
            LayerKind::ThresholdRatio => vec![1.0, 1.0],
            LayerKind::PlaceValue | LayerKind::PlaceValueNeg => vec![opts.base],
        };
        let layer = Self {
            kind,
            width,
            scalars,
            d: opts.d,
            epsilon: opts.epsilon,
            tie_threshold_scalars: opts.tie_threshold_scalars && kind == LayerKind::ThresholdRatio,
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("{} layer: {msg}", self.kind)));
        match self.kind.fixed_width() {
            Some(w) if w != self.width => return bad(format!("width must be {w}, got {}", self.width)),
            None if self.width != 4 && self.width != 8 => {
                return bad(format!("width must be 4 or 8, got {}", self.width))
            }
            _ => {}
        }
        let expected_scalars = match self.kind {
            LayerKind::Linear | LayerKind::PlaceValue | LayerKind::PlaceValueNeg => 1,
            LayerKind::Rational | LayerKind::RationalLog => 0,
            LayerKind::Threshold => 2,
            LayerKind::ThresholdRatio if self.tie_threshold_scalars => 1,
            LayerKind::ThresholdRatio => 2,
        };
        if self.scalars.len() != expected_scalars {
            return bad(format!("expected {expected_scalars} scalars, got {}", self.scalars.len()));
        }
        if self.tie_threshold_scalars && self.kind != LayerKind::ThresholdRatio {
            return bad("scalar tying only applies to threshold-ratio".into());
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(0.0..=1.0).contains(&self.d) {
            return bad(format!("threshold d must lie in [0, 1], got {}", self.d));
        }
        if matches!(self.kind, LayerKind::PlaceValue | LayerKind::PlaceValueNeg) && (self.scalars[0].is_nan() || self.scalars[0] <= 1.0) {
            return bad(format!("base must exceed 1, got {}", self.scalars[0]));
        }
        Ok(())
    }

    /// Checks that a probability vector of `len` entries is wide enough.
    pub fn check_input(&self, len: usize) -> Result<()> {
        if len < self.width {
            return Err(Error::Config(format!(
                "{} layer reads {} probabilities but the register only yields {len}",
                self.kind, self.width
            )));
        }
        Ok(())
    }

    /// Short label used in file names, e.g. `place_value_neg8`.
    pub fn label(&self) -> String {
        let base = self.kind.name().replace('-', "_");
        match self.kind.fixed_width() {
            Some(_) => base,
            None => format!("{base}{}", self.width),
        }
    }

    fn threshold_scalars(&self) -> (f64, f64) {
        let s1 = self.scalars[0];
        (s1, if self.tie_threshold_scalars { s1 } else { self.scalars[1] })
    }

    /// Head output. `x` must hold at least `width` entries.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert!(x.len() >= self.width, "input narrower than layer width");
        match self.kind {
            LayerKind::Linear => eval_linear(x, self.scalars[0]),
            LayerKind::Rational => eval_rational(x, self.epsilon),
            LayerKind::RationalLog => eval_rational_log(x, self.epsilon),
            LayerKind::Threshold => {
                let (s1, s2) = self.threshold_scalars();
                eval_threshold(x, self.d, s1, s2)
            }
            LayerKind::ThresholdRatio => {
                let (s1, s2) = self.threshold_scalars();
                eval_threshold_ratio(x, self.d, s1, s2)
            }
            LayerKind::PlaceValue => eval_place_value(x, self.scalars[0], self.width),
            LayerKind::PlaceValueNeg => {
                let half = self.width / 2;
                let b = self.scalars[0];
                eval_place_value(x, b, half) - eval_place_value(&x[half..], b, half)
            }
        }
    }

    /// Analytic partials of [`PostLayer::eval`].
    pub fn grad(&self, x: &[f64]) -> LayerGrad {
        assert!(x.len() >= self.width, "input narrower than layer width");
        let mut dx = vec![0.0; self.width];
        let mut dscalars = vec![0.0; self.scalars.len()];
        match self.kind {
            LayerKind::Linear => {
                dx[0] = self.scalars[0];
                dscalars[0] = x[0];
            }
            LayerKind::Rational => {
                let den = x[1] + self.epsilon;
                dx[0] = 1.0 / den;
                dx[1] = -(x[0] + self.epsilon) / (den * den);
            }
            LayerKind::RationalLog => {
                dx[0] = 1.0 / (x[0] + self.epsilon);
                dx[1] = -1.0 / (x[1] + self.epsilon);
            }
            LayerKind::Threshold | LayerKind::ThresholdRatio => {
                let (s1, s2) = self.threshold_scalars();
                let (d, tied) = (self.d, self.tie_threshold_scalars);
                let top = threshold_term(x[0], x[1], d, s1);
                let bottom = threshold_term(x[2], x[3], d, s2);
                // outer derivatives with respect to the two gated terms
                let (d_top, d_bottom) = if self.kind == LayerKind::Threshold {
                    (1.0, -1.0)
                } else {
                    let den = 1.0 + bottom;
                    (1.0 / den, -(1.0 + top) / (den * den))
                };
                dx[0] = d_top * relu_step(x[0] - d) * x[1] * s1 * s1;
                dx[1] = d_top * relu(x[0] - d) * s1 * s1;
                dx[2] = d_bottom * relu_step(x[2] - d) * x[3] * s2 * s2;
                dx[3] = d_bottom * relu(x[2] - d) * s2 * s2;
                let dtop_ds1 = d_top * 2.0 * relu(x[0] - d) * x[1] * s1;
                let dbottom_ds2 = d_bottom * 2.0 * relu(x[2] - d) * x[3] * s2;
                if tied {
                    dscalars[0] = dtop_ds1 + dbottom_ds2;
                } else {
                    dscalars[0] = dtop_ds1;
                    dscalars[1] = dbottom_ds2;
                }
            }
            LayerKind::PlaceValue => {
                let b = self.scalars[0];
                for (i, p) in powers(b, self.width).enumerate() {
                    dx[i] = p;
                }
                dscalars[0] = (1..self.width)
                    .map(|i| i as f64 * x[i] * b.powi(i as i32 - 1))
                    .sum();
            }
            LayerKind::PlaceValueNeg => {
                let b = self.scalars[0];
                let half = self.width / 2;
                for (i, p) in powers(b, half).enumerate() {
                    dx[i] = p;
                    dx[half + i] = -p;
                }
                dscalars[0] = (1..half)
                    .map(|i| i as f64 * (x[i] - x[half + i]) * b.powi(i as i32 - 1))
                    .sum();
            }
        }
        LayerGrad { dx, dscalars }
    }

    /// Keeps trained scalars inside the head's domain after an optimizer step.
    pub fn project_scalars(&mut self) {
        if matches!(self.kind, LayerKind::PlaceValue | LayerKind::PlaceValueNeg) {
            self.scalars[0] = self.scalars[0].max(MIN_BASE);
        }
    }
}
