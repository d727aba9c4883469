//! Output-distribution study of the heads under Haar-random inputs, plus the
//! report files written after training and evaluation.
//!
//! File layouts:
//!
//! * `metrics.csv`: `query_id,predicted_log_card,true_log_card,abs_log_error`
//!   and, when a baseline exists, `baseline_abs_log_error,improvement_factor`.
//!   One row per query, then a final row whose `query_id` is `mean`.
//! * `loss_curve.csv`: `episode,loss`.
//! * `hist_<label>.csv`: `bin_start,bin_end,count`, with a matching
//!   self-contained `hist_<label>.svg` bar chart.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::postproc::{LayerKind, LayerOptions, PostLayer};
use crate::sim::haar_random_state_from;
use crate::trainer::RunReport;

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_BINS: usize = 100;

/// Sampling is split into this many independently seeded streams regardless
/// of the worker count, so results do not depend on parallelism.
const SAMPLE_STREAMS: u64 = 64;

/// Which probability vector a head reads from a sampled state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputView {
    /// Basis-state probabilities in index order.
    #[default]
    Basis,
    /// Per-qubit probability of reading `|0⟩`.
    Marginal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub label: String,
    pub n_qubits: usize,
    /// `counts.len() + 1` strictly increasing edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total_samples: u64,
    pub min_value: f64,
    pub max_value: f64,
}

impl Histogram {
    /// Uniform bins over the observed range. A degenerate range is widened to
    /// `[v - 0.5, v + 0.5]`.
    pub fn from_values(label: impl Into<String>, n_qubits: usize, values: &[f64], bins: usize) -> Result<Self> {
        if values.is_empty() || bins == 0 {
            return Err(Error::Usage("histogram needs at least one value and one bin".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric { episode: 0, message: "non-finite head output".into() });
        }
        let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if max_value > min_value {
            (min_value, max_value)
        } else {
            (min_value - 0.5, min_value + 0.5)
        };
        let width = hi - lo;
        let edges = (0..=bins).map(|i| lo + width * i as f64 / bins as f64).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let idx = (((v - lo) / width) * bins as f64).floor() as usize;
            counts[idx.min(bins - 1)] += 1;
        }
        Ok(Self {
            label: label.into(),
            n_qubits,
            edges,
            counts,
            total_samples: values.len() as u64,
            min_value,
            max_value,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_of(&self, value: f64) -> Option<usize> {
        let (lo, hi) = (self.edges[0], self.edges[self.bins()]);
        if !(lo..=hi).contains(&value) {
            return None;
        }
        let idx = (((value - lo) / (hi - lo)) * self.bins() as f64).floor() as usize;
        Some(idx.min(self.bins() - 1))
    }

    /// Index of the most populated bin (first one on ties).
    pub fn modal_bin(&self) -> usize {
        let max = *self.counts.iter().max().expect("at least one bin");
        self.counts.iter().position(|&c| c == max).expect("max is present")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start,bin_end,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.edges[i], self.edges[i + 1], c);
        }
        out
    }

    /// Standalone SVG bar chart.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 360.0;
        const PAD: f64 = 40.0;
        let plot_w = W - 2.0 * PAD;
        let plot_h = H - 2.0 * PAD;
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let bar_w = plot_w / self.bins() as f64;
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{} ({} qubits, {} samples)</text>"#,
            W / 2.0,
            xml_escape(&self.label),
            self.n_qubits,
            self.total_samples
        );
        for (i, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let h = plot_h * c as f64 / max;
            let _ = writeln!(
                svg,
                r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#3b6ea5"/>"##,
                PAD + i as f64 * bar_w,
                PAD + plot_h - h,
                bar_w.max(0.5),
                h
            );
        }
        let _ = writeln!(
            svg,
            r#"<line x1="{PAD}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
            y = PAD + plot_h,
            x2 = W - PAD
        );
        for (x, anchor, v) in [(PAD, "start", self.edges[0]), (W - PAD, "end", self.edges[self.bins()])] {
            let _ = writeln!(
                svg,
                r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{v:.4}</text>"#,
                H - PAD / 2.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            PAD - 4.0,
            PAD + 4.0,
            max as u64
        );
        svg.push_str("</svg>\n");
        svg
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Head outputs for `samples` Haar-random states of `n_qubits` qubits.
pub fn sample_values(layer: &PostLayer, n_qubits: usize, samples: usize, seed: u64, view: InputView) -> Result<Vec<f64>> {
    let width = match view {
        InputView::Basis => 1usize << n_qubits,
        InputView::Marginal => n_qubits,
    };
    layer.check_input(width)?;
    if samples == 0 {
        return Err(Error::Usage("need at least one sample".into()));
    }
    let per = (samples as u64).div_ceil(SAMPLE_STREAMS);
    let chunks = (0..SAMPLE_STREAMS)
        .into_par_iter()
        .map(|stream| {
            let start = stream * per;
            let end = ((stream + 1) * per).min(samples as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            (start..end)
                .map(|_| {
                    let state = haar_random_state_from(n_qubits, &mut rng)?;
                    let x = match view {
                        InputView::Basis => state.probabilities(),
                        InputView::Marginal => state.zero_marginals(),
                    };
                    Ok(layer.eval(&x))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.concat())
}

/// Histogram of a head's outputs under Haar-random inputs.
pub fn value_distribution(
    layer: &PostLayer,
    n_qubits: usize,
    samples: usize,
    seed: u64,
    bins: usize,
    view: InputView,
) -> Result<Histogram> {
    let values = sample_values(layer, n_qubits, samples, seed, view)?;
    Histogram::from_values(layer.label(), n_qubits, &values, bins)
}

/// The eight distribution panels: Linear, Rational, Threshold, ThresholdRatio
/// and place-value with 4 and 8 inputs, plain and signed. Scalars are 1 and
/// the base is 2. The register holds 4 qubits, or 8 for the 8-wide heads,
/// unless `register_override` pins one size for all.
pub fn default_panels(register_override: Option<usize>) -> Vec<(PostLayer, usize)> {
    let opts = LayerOptions::default();
    let mk = |kind, width| PostLayer::new(kind, LayerOptions { width, ..opts }).expect("default layer is valid");
    [
        (LayerKind::Linear, 4),
        (LayerKind::Rational, 4),
        (LayerKind::Threshold, 4),
        (LayerKind::ThresholdRatio, 4),
        (LayerKind::PlaceValue, 4),
        (LayerKind::PlaceValueNeg, 4),
        (LayerKind::PlaceValue, 8),
        (LayerKind::PlaceValueNeg, 8),
    ]
    .into_iter()
    .map(|(kind, width)| {
        let layer = mk(kind, width);
        let register = register_override.unwrap_or(if width == 8 { 8 } else { 4 });
        (layer, register)
    })
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Improvement {
    Factor(f64),
    /// The model's error is zero while the baseline's is not.
    Exact,
}

impl fmt::Display for Improvement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Improvement::Factor(v) => write!(f, "{v}"),
            Improvement::Exact => f.write_str("exact"),
        }
    }
}

impl Improvement {
    pub fn value(self) -> f64 {
        match self {
            Improvement::Factor(v) => v,
            Improvement::Exact => f64::INFINITY,
        }
    }
}

/// Baseline mean absolute log error divided by the model's.
pub fn improvement_factor(model_errors: &[f64], baseline_errors: &[f64]) -> Result<Improvement> {
    if model_errors.len() != baseline_errors.len() || model_errors.is_empty() {
        return Err(Error::Usage(format!(
            "improvement factor needs equal, non-empty coverage ({} model vs {} baseline errors)",
            model_errors.len(),
            baseline_errors.len()
        )));
    }
    let n = model_errors.len() as f64;
    let model = model_errors.iter().sum::<f64>() / n;
    let base = baseline_errors.iter().sum::<f64>() / n;
    if model == 0.0 {
        return Ok(if base == 0.0 { Improvement::Factor(1.0) } else { Improvement::Exact });
    }
    Ok(Improvement::Factor(base / model))
}

pub fn metrics_csv(report: &RunReport) -> String {
    let with_base = report.baseline_mean_abs_log_error.is_some();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["query_id", "predicted_log_card", "true_log_card", "abs_log_error"];
    if with_base {
        header.extend(["baseline_abs_log_error", "improvement_factor"]);
    }
    w.write_record(&header).expect("in-memory write");
    for r in &report.rows {
        let mut rec = vec![
            r.query_id.clone(),
            r.predicted_log_card.to_string(),
            r.true_log_card.to_string(),
            r.abs_log_error.to_string(),
        ];
        if with_base {
            rec.push(r.baseline_abs_log_error.map(|e| e.to_string()).unwrap_or_default());
            rec.push(String::new());
        }
        w.write_record(&rec).expect("in-memory write");
    }
    let mut footer = vec!["mean".to_string(), String::new(), String::new(), report.mean_abs_log_error.to_string()];
    if let Some(b) = report.baseline_mean_abs_log_error {
        footer.push(b.to_string());
        footer.push(report.improvement.map(|i| i.to_string()).unwrap_or_default());
    }
    w.write_record(&footer).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("flush")).expect("csv is utf-8")
}

pub fn loss_curve_csv(curve: &[f64]) -> String {
    let mut out = String::from("episode,loss\n");
    for (i, l) in curve.iter().enumerate() {
        let _ = writeln!(out, "{i},{l}");
    }
    out
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes `hist_<label>.csv` and `hist_<label>.svg`.
pub fn write_histogram(hist: &Histogram, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    write(out_dir.join(format!("hist_{}.csv", hist.label)), &hist.to_csv(), &mut written)?;
    write(out_dir.join(format!("hist_{}.svg", hist.label)), &hist.to_svg(), &mut written)?;
    Ok(written)
}

/// Writes metrics, loss curve and every histogram into `out_dir`.
pub fn emit_report(report: &RunReport, histograms: &[Histogram], out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    write(out_dir.join("metrics.csv"), &metrics_csv(report), &mut written)?;
    write(out_dir.join("loss_curve.csv"), &loss_curve_csv(&report.loss_curve), &mut written)?;
    for h in histograms {
        written.extend(write_histogram(h, out_dir)?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::QueryResult;

    #[test]
    fn improvement_examples() {
        assert_eq!(improvement_factor(&[0.5, 1.5], &[0.5, 1.5]).unwrap(), Improvement::Factor(1.0));
        assert_eq!(improvement_factor(&[0.5, 1.0], &[1.0, 2.0]).unwrap(), Improvement::Factor(2.0));
        assert_eq!(improvement_factor(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), Improvement::Exact);
        assert_eq!(improvement_factor(&[0.0], &[0.0]).unwrap(), Improvement::Factor(1.0));
        assert!(improvement_factor(&[1.0], &[1.0, 2.0]).is_err());
        // built backwards: baseline errors are 6.37 times the model's
        let model = [0.1, 0.3, 0.2, 0.4];
        let base: Vec<f64> = model.iter().map(|e| e * 6.37).collect();
        let f = improvement_factor(&model, &base).unwrap().value();
        assert!((f - 6.37).abs() < 1e-9);
        assert_eq!(Improvement::Exact.to_string(), "exact");
    }

    #[test]
    fn single_value_histogram() {
        let h = Histogram::from_values("x", 4, &[2.5], 10).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.counts.iter().sum::<u64>(), 1);
        assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(h.bin_of(2.5), Some(h.modal_bin()));
    }

    #[test]
    fn histogram_bins() {
        let h = Histogram::from_values("x", 1, &[0.0, 0.25, 0.5, 1.0, 1.0], 4).unwrap();
        assert_eq!(h.counts, vec![1, 1, 1, 2]);
        assert_eq!(h.bin_of(-1.0), None);
        assert!(Histogram::from_values("x", 1, &[], 4).is_err());
        assert!(Histogram::from_values("x", 1, &[f64::NAN], 4).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let layer = PostLayer::new(LayerKind::Rational, LayerOptions::default()).unwrap();
        let a = sample_values(&layer, 3, 500, 9, InputView::Basis).unwrap();
        let b = sample_values(&layer, 3, 500, 9, InputView::Basis).unwrap();
        assert_eq!(a.len(), 500);
        assert_eq!(a, b);
        assert_ne!(a, sample_values(&layer, 3, 500, 10, InputView::Basis).unwrap());
    }

    #[test]
    fn width_must_fit_register() {
        let pv8 = PostLayer::new(LayerKind::PlaceValue, LayerOptions { width: 8, ..Default::default() }).unwrap();
        assert!(matches!(value_distribution(&pv8, 2, 10, 0, 10, InputView::Basis), Err(Error::Config(_))));
        assert!(value_distribution(&pv8, 3, 10, 0, 10, InputView::Basis).is_ok());
        assert!(value_distribution(&pv8, 8, 10, 0, 10, InputView::Marginal).is_ok());
        assert!(value_distribution(&pv8, 4, 10, 0, 10, InputView::Marginal).is_err());
    }

    #[test]
    fn default_panels_cover_all_eight() {
        let panels = default_panels(None);
        let labels: Vec<String> = panels.iter().map(|(l, _)| l.label()).collect();
        assert_eq!(
            labels,
            [
                "linear",
                "rational",
                "threshold",
                "threshold_ratio",
                "place_value4",
                "place_value_neg4",
                "place_value8",
                "place_value_neg8"
            ]
        );
        assert_eq!(panels[6].1, 8);
        assert!(panels.iter().all(|(l, _)| l.scalars.iter().all(|&s| s == 1.0 || s == 2.0)));
        assert!(default_panels(Some(6)).iter().all(|(_, q)| *q == 6));
    }

    #[test]
    fn metrics_layout() {
        let row = |id: &str, e: f64| QueryResult {
            query_id: id.into(),
            predicted_log_card: 1.0,
            true_log_card: 1.0 + e,
            abs_log_error: e,
            baseline_abs_log_error: None,
        };
        let report = RunReport {
            rows: vec![row("a", 0.5), row("b", 1.5)],
            mean_abs_log_error: 1.0,
            ..Default::default()
        };
        let csv = metrics_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "query_id,predicted_log_card,true_log_card,abs_log_error");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3], "mean,,,1");
    }
}
