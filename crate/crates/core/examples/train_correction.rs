//! Corrects a classical estimator that overestimates every query by e^1.5,
//! using the Threshold head, then round-trips the checkpoint.

use qcard::fixtures::{synthetic_workload, ClassicalEstimate, SyntheticSpec};
use qcard::{evaluate, train, AnsatzSpec, EncodingSpec, LayerKind, LayerOptions, Mode, Model, ModelConfig, PostLayer, TrainConfig};

fn main() -> qcard::Result<()> {
    let workload = synthetic_workload(&SyntheticSpec { classical: ClassicalEstimate::Bias(1.5), ..Default::default() })?;
    let config = ModelConfig {
        mode: Mode::Correction,
        encoding: EncodingSpec::new(4, workload.schema_table_count)?,
        ansatz: AnsatzSpec::new(4, 8)?,
        layer: PostLayer::new(LayerKind::Threshold, LayerOptions::default())?,
        seed: 0,
    };
    let cfg = TrainConfig { episodes: 2000, ..TrainConfig::default() };
    let (model, report) = train(Model::init(config)?, &workload, &cfg)?;
    println!("baseline mean abs log error {:.4}", report.baseline_mean_abs_log_error.unwrap_or(f64::NAN));
    println!("model mean abs log error    {:.4}", report.mean_abs_log_error);
    if let Some(f) = report.improvement {
        println!("improvement factor          {f}");
    }

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("checkpoint.json");
    model.save(&path, Some(&cfg))?;
    let again = evaluate(&Model::load(&path)?, &workload, workload.classical_log_cards().as_deref())?;
    assert_eq!(again.mean_abs_log_error, report.mean_abs_log_error);
    println!("checkpoint reload reproduces the report");
    Ok(())
}
