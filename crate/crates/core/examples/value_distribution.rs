//! Histograms of head outputs under Haar-random states, written as CSV and SVG.
//!
//! `cargo run --release --example value_distribution -- [out_dir]`

use qcard::analysis::{default_panels, value_distribution, write_histogram, InputView};

fn main() -> qcard::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "value_distribution".into());
    for (layer, qubits) in default_panels(None) {
        let h = value_distribution(&layer, qubits, 20_000, 1, 50, InputView::Basis)?;
        let modal = h.modal_bin();
        println!(
            "{:<18} range [{:+.4}, {:+.4}]  modal bin [{:+.4}, {:+.4}) holds {:.1}%",
            h.label,
            h.min_value,
            h.max_value,
            h.edges[modal],
            h.edges[modal + 1],
            100.0 * h.counts[modal] as f64 / h.total_samples as f64
        );
        write_histogram(&h, std::path::Path::new(&out))?;
    }
    println!("wrote histograms to {out}/");
    Ok(())
}
