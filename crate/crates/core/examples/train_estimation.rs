//! Trains a small estimator with the RationalLog head on a synthetic workload.

use qcard::fixtures::{synthetic_workload, SyntheticSpec};
use qcard::{train, AnsatzSpec, EncodingSpec, LayerKind, LayerOptions, Mode, Model, ModelConfig, PostLayer, TrainConfig};

fn main() -> qcard::Result<()> {
    let workload = synthetic_workload(&SyntheticSpec { queries: 20, ..Default::default() })?;
    let config = ModelConfig {
        mode: Mode::Estimation,
        encoding: EncodingSpec::new(4, workload.schema_table_count)?,
        ansatz: AnsatzSpec::new(4, 4)?,
        layer: PostLayer::new(LayerKind::RationalLog, LayerOptions::default())?,
        seed: 1,
    };
    let cfg = TrainConfig { episodes: 300, ..TrainConfig::default() };
    let (_, report) = train(Model::init(config)?, &workload, &cfg)?;
    println!(
        "loss {:.3} -> {:.3}",
        report.loss_curve[0],
        report.loss_curve.last().copied().unwrap_or(f64::NAN)
    );
    for row in report.rows.iter().take(5) {
        println!(
            "{}: predicted {:.2}  true {:.2}",
            row.query_id, row.predicted_log_card, row.true_log_card
        );
    }
    println!("mean abs log error {:.4}", report.mean_abs_log_error);
    Ok(())
}
