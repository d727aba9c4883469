//! The `qcard` command line: `ingest`, `train`, `eval`, `hist` and `fixture`.
//!
//! Any subcommand accepts `--config <file>` holding `key = value` lines (keys
//! are long flag names without dashes, `#` starts a comment, `true` enables a
//! switch). Config entries are applied first, so flags on the command line win.
//!
//! Exit codes: 0 success, 1 usage, 2 data/parse (also partial ingestion),
//! 3 numeric failure. `QCARD_WORKERS` overrides the worker count and
//! `NO_COLOR` disables colored log output.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{default_panels, emit_report, value_distribution, write_histogram, InputView, DEFAULT_BINS, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::fixtures::{synthetic_workload, write_example_sql_dir, ClassicalEstimate, SyntheticSpec};
use crate::postproc::{LayerKind, LayerOptions, PostLayer, DEFAULT_BASE, DEFAULT_EPSILON, DEFAULT_THRESHOLD};
use crate::trainer::{default_lr_decay, evaluate, train, Mode, Model, ModelConfig, RunReport, Split, TrainConfig, DEFAULT_EPISODES, DEFAULT_LR};
use crate::vqc::{AnsatzSpec, EncodingSpec};
use crate::workload::{ingest_sql_dir, load_workload, summarize, Workload, WorkloadFormat};

#[derive(Debug, Parser)]
#[command(name = "qcard", version, about = "Variational quantum circuits for cardinality estimation and correction")]
pub struct Cli {
    /// Worker threads for per-query and sampling parallelism (default: all cores, or QCARD_WORKERS)
    #[arg(long, global = true, env = "QCARD_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse queries.sql against <dir>/<table>.csv and write a digested workload
    Ingest(IngestArgs),
    /// Train a model and write checkpoint.json, metrics.csv and loss_curve.csv
    Train(TrainArgs),
    /// Score a checkpoint on a workload and write metrics.csv
    Eval(EvalArgs),
    /// Histogram head outputs under Haar-random states
    Hist(HistArgs),
    /// Generate synthetic workloads or the example sql+data directory
    Fixture(FixtureArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct IngestArgs {
    /// Directory with <table>.csv files, queries.sql and truths.csv
    #[arg(long)]
    pub data: PathBuf,
    /// Digested workload to write
    #[arg(long)]
    pub out: PathBuf,
    /// Where to list rejected queries [default: <out>.rejects.csv]
    #[arg(long)]
    pub rejects: Option<PathBuf>,
    /// Key-value config file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliMode {
    Estimate,
    Correct,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Self {
        match m {
            CliMode::Estimate => Mode::Estimation,
            CliMode::Correct => Mode::Correction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliFormat {
    Digested,
    #[value(name = "sql+data")]
    SqlData,
}

impl From<CliFormat> for WorkloadFormat {
    fn from(f: CliFormat) -> Self {
        match f {
            CliFormat::Digested => WorkloadFormat::Digested,
            CliFormat::SqlData => WorkloadFormat::SqlData,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LayerArgs {
    /// Post-processing head: linear, rational, rational-log, threshold, threshold-ratio, place-value, place-value-neg
    #[arg(long, default_value = "rational-log", value_parser = parse_layer_kind)]
    pub layer: LayerKind,
    /// Place-value input width (4 or 8)
    #[arg(long, default_value_t = 4)]
    pub width: usize,
    /// Threshold d of the threshold heads
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub d: f64,
    /// Epsilon of the rational heads
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Initial place-value base
    #[arg(long, default_value_t = DEFAULT_BASE)]
    pub base: f64,
    /// Reuse s1 in the threshold-ratio denominator
    #[arg(long)]
    pub tie_threshold_scalars: bool,
}

impl LayerArgs {
    pub fn build(&self) -> Result<PostLayer> {
        PostLayer::new(
            self.layer,
            LayerOptions {
                width: self.width,
                d: self.d,
                epsilon: self.epsilon,
                base: self.base,
                tie_threshold_scalars: self.tie_threshold_scalars,
            },
        )
    }
}

fn parse_layer_kind(s: &str) -> std::result::Result<LayerKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_split(s: &str) -> std::result::Result<Split, String> {
    if s == "full" {
        return Ok(Split::Full);
    }
    s.parse::<f64>()
        .map(Split::Fraction)
        .map_err(|_| format!("expected `full` or a train fraction, got `{s}`"))
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    /// Workload file (digested) or directory (sql+data)
    #[arg(long)]
    pub workload: PathBuf,
    #[arg(long, value_enum, default_value_t = CliFormat::Digested)]
    pub format: CliFormat,
    #[arg(long, value_enum, default_value_t = CliMode::Estimate)]
    pub mode: CliMode,
    #[command(flatten)]
    pub layer: LayerArgs,
    /// Qubits (table slots) of the circuit
    #[arg(long, default_value_t = 6)]
    pub qubits: usize,
    /// Ansatz layers
    #[arg(long = "ansatz-layers", default_value_t = 16)]
    pub ansatz_layers: usize,
    #[arg(long, default_value_t = DEFAULT_EPISODES)]
    pub episodes: usize,
    /// Initial Adam learning rate
    #[arg(long, default_value_t = DEFAULT_LR)]
    pub lr: f64,
    /// Per-episode learning-rate decay factor
    #[arg(long = "lr-decay", default_value_t = default_lr_decay())]
    pub lr_decay: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `full`, or a train fraction such as 0.8
    #[arg(long, default_value = "full", value_parser = parse_split)]
    pub split: Split,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Key-value config file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub workload: PathBuf,
    #[arg(long, value_enum, default_value_t = CliFormat::Digested)]
    pub format: CliFormat,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Key-value config file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct HistArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Panels to emit by label (e.g. threshold,place_value8) [default: all eight]
    #[arg(long, value_delimiter = ',')]
    pub panels: Vec<String>,
    /// Sample this register size for every panel instead of 4 (8 for the 8-wide heads)
    #[arg(long)]
    pub register_qubits: Option<usize>,
    /// Feed per-qubit |0> probabilities instead of basis-state probabilities
    #[arg(long)]
    pub marginals: bool,
    /// Key-value config file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    /// Classical estimate = truth · e^bias
    Biased,
    /// Every query has the same true cardinality
    Constant,
    /// Classical estimate = truth · e^b, b uniform in [bias/3, bias]
    Overestimate,
    /// The three-table example as a sql+data directory
    ExampleSql,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct FixtureArgs {
    #[arg(long, value_enum)]
    pub kind: FixtureKind,
    /// Output file (or directory for example-sql)
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub queries: usize,
    #[arg(long, default_value_t = 4)]
    pub tables: u32,
    #[arg(long, default_value_t = 4)]
    pub max_slots: usize,
    #[arg(long, default_value_t = 1.5)]
    pub bias: f64,
    /// True cardinality for `constant`
    #[arg(long, default_value_t = 1000)]
    pub card: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Key-value config file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Turns `key = value` lines into flags.
pub fn config_to_args(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("config line {}: expected `key = value`", n + 1)))?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        if key == "config" {
            return Err(Error::Usage("config files cannot include other config files".into()));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

/// Splices config-file flags in right after the subcommand name.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        return Ok(args);
    };
    let path = args
        .get(pos + 1)
        .ok_or_else(|| Error::Usage("--config needs a path".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(PathBuf::from(path), e))?;
    let extra = config_to_args(&text)?;
    let sub = args
        .iter()
        .position(|a| ["ingest", "train", "eval", "hist", "fixture"].iter().any(|s| a == s))
        .ok_or_else(|| Error::Usage("--config must follow a subcommand".into()))?;
    let mut out = args[..=sub].to_vec();
    out.extend(extra);
    out.extend(args[sub + 1..].iter().cloned());
    Ok(out)
}

/// Parses `args` (including the program name) and runs the command, returning
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args.iter()) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Train(a) => cmd_train(&a).map(|_| 0),
        Command::Eval(a) => cmd_eval(&a).map(|_| 0),
        Command::Hist(a) => cmd_hist(&a).map(|_| 0),
        Command::Fixture(a) => cmd_fixture(&a).map(|_| 0),
    })
}

/// Writes the digested file and, when some queries fail, a rejects report.
/// Returns 0 when every query was ingested and 2 on partial success.
pub fn cmd_ingest(args: &IngestArgs) -> Result<i32> {
    let outcome = ingest_sql_dir(&args.data)?;
    outcome.workload.write_digested(&args.out)?;
    print!("{}", summarize(&outcome.workload));
    println!(
        "ingested {} queries over {} tables into {}",
        outcome.workload.len(),
        outcome.catalog.table_count(),
        args.out.display()
    );
    if outcome.rejects.is_empty() {
        return Ok(0);
    }
    let path = args.rejects.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".rejects.csv");
        PathBuf::from(p)
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["query_id", "reason"]).expect("in-memory write");
    for (id, reason) in &outcome.rejects {
        eprintln!("rejected {id}: {reason}");
        w.write_record([id, reason]).expect("in-memory write");
    }
    let bytes = w.into_inner().expect("flush");
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    eprintln!("{} queries rejected, listed in {}", outcome.rejects.len(), path.display());
    Ok(2)
}

fn load(path: &Path, format: CliFormat) -> Result<Workload> {
    Ok(load_workload(path, format.into())?.0)
}

fn print_summary(report: &RunReport) {
    println!("queries: {}", report.rows.len());
    println!("mean abs log error: {}", report.mean_abs_log_error);
    if let (Some(b), Some(i)) = (report.baseline_mean_abs_log_error, report.improvement) {
        println!("baseline mean abs log error: {b}");
        println!("improvement factor: {i}");
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<RunReport> {
    let workload = load(&args.workload, args.format)?;
    let config = ModelConfig {
        mode: args.mode.into(),
        encoding: EncodingSpec::new(args.qubits, workload.schema_table_count)?,
        ansatz: AnsatzSpec::new(args.qubits, args.ansatz_layers)?,
        layer: args.layer.build()?,
        seed: args.seed,
    };
    let train_cfg = TrainConfig {
        episodes: args.episodes,
        lr_initial: args.lr,
        lr_decay: args.lr_decay,
        split: args.split,
        ..TrainConfig::default()
    };
    let model = Model::init(config)?;
    let (model, report) = train(model, &workload, &train_cfg)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    model.save(&args.out.join("checkpoint.json"), Some(&train_cfg))?;
    emit_report(&report, &[], &args.out)?;
    print_summary(&report);
    Ok(report)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<RunReport> {
    let model = Model::load(&args.checkpoint)?;
    let workload = load(&args.workload, args.format)?;
    let enc = model.config.encoding;
    if workload.schema_table_count != enc.max_table_id {
        return Err(Error::Usage(format!(
            "checkpoint encodes {} schema tables but the workload has {}",
            enc.max_table_id, workload.schema_table_count
        )));
    }
    if workload.max_tables_per_query() > enc.n_qubits {
        return Err(Error::Usage(format!(
            "checkpoint encoding is {} qubits wide but the workload needs {}",
            enc.n_qubits,
            workload.max_tables_per_query()
        )));
    }
    if model.config.mode == Mode::Correction {
        workload.require_classical()?;
    }
    let baseline = workload.classical_log_cards();
    let report = evaluate(&model, &workload, baseline.as_deref())?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let path = args.out.join("metrics.csv");
    fs::write(&path, crate::analysis::metrics_csv(&report)).map_err(|e| Error::io(&path, e))?;
    print_summary(&report);
    Ok(report)
}

pub fn cmd_hist(args: &HistArgs) -> Result<Vec<PathBuf>> {
    let mut panels = default_panels(args.register_qubits);
    if !args.panels.is_empty() {
        for want in &args.panels {
            if !panels.iter().any(|(l, _)| &l.label() == want) {
                return Err(Error::Usage(format!("unknown panel `{want}`")));
            }
        }
        panels.retain(|(l, _)| args.panels.contains(&l.label()));
    }
    let view = if args.marginals { InputView::Marginal } else { InputView::Basis };
    let mut written = Vec::new();
    for (layer, qubits) in panels {
        let hist = value_distribution(&layer, qubits, args.samples, args.seed, args.bins, view)?;
        println!(
            "{}: {} qubits, range [{}, {}], modal bin {}",
            hist.label,
            qubits,
            hist.min_value,
            hist.max_value,
            hist.modal_bin()
        );
        written.extend(write_histogram(&hist, &args.out)?);
    }
    Ok(written)
}

pub fn cmd_fixture(args: &FixtureArgs) -> Result<()> {
    let mut spec = SyntheticSpec {
        queries: args.queries,
        tables: args.tables,
        max_tables_per_query: args.max_slots,
        seed: args.seed,
        ..SyntheticSpec::default()
    };
    match args.kind {
        FixtureKind::ExampleSql => return write_example_sql_dir(&args.out),
        FixtureKind::Biased => spec.classical = ClassicalEstimate::Bias(args.bias),
        FixtureKind::Constant => spec.constant_card = Some(args.card),
        FixtureKind::Overestimate => spec.classical = ClassicalEstimate::BiasRange(args.bias / 3.0, args.bias),
    }
    let workload = synthetic_workload(&spec)?;
    workload.write_digested(&args.out)?;
    println!("wrote {} queries to {}", workload.len(), args.out.display());
    Ok(())
}
