//! Evaluates every post-processing head on one probability vector.

use qcard::postproc::{LayerKind, LayerOptions, PostLayer};

fn main() -> qcard::Result<()> {
    let probs = [0.40, 0.25, 0.15, 0.10, 0.04, 0.03, 0.02, 0.01];
    for kind in LayerKind::ALL {
        let layer = PostLayer::new(kind, LayerOptions::default())?;
        let g = layer.grad(&probs);
        println!(
            "{:<18} v = {:+.6}  dv/dx0 = {:+.6}  dv/ds = {:?}",
            layer.label(),
            layer.eval(&probs),
            g.dx[0],
            g.dscalars
        );
    }
    let wide = PostLayer::new(LayerKind::PlaceValue, LayerOptions { width: 8, ..Default::default() })?;
    println!("{:<18} v = {:+.6}", wide.label(), wide.eval(&probs));
    Ok(())
}
