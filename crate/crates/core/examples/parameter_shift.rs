//! Parameter-shift gradient of a small circuit checked against finite differences.

use qcard::vqc::{encode_query, forward, build_ansatz, parameter_shift_grad, AnsatzSpec, EncodingSpec, ParamVector, Slot};

fn main() -> qcard::Result<()> {
    let enc_spec = EncodingSpec::new(2, 2)?;
    let spec = AnsatzSpec::new(2, 2)?;
    let enc = encode_query(&enc_spec, &[Slot::new(1, 0.3), Slot::new(2, 0.8)])?;
    let params = ParamVector((0..spec.n_params()).map(|i| 0.37 * i as f64 - 1.0).collect());

    // loss = p(|00>)
    let tail = |p: &[f64]| {
        let mut g = vec![0.0; p.len()];
        g[0] = 1.0;
        (p[0], g)
    };
    let (loss, grad) = parameter_shift_grad(&enc, &spec, &params, tail)?;
    println!("p(|00>) = {loss:.6}");

    let h = 1e-6;
    for k in 0..params.len() {
        let mut plus = params.clone();
        let mut minus = params.clone();
        plus.0[k] += h;
        minus.0[k] -= h;
        let fp = forward(2, &enc, &build_ansatz(&spec, &plus)?)?[0];
        let fm = forward(2, &enc, &build_ansatz(&spec, &minus)?)?[0];
        println!("theta[{k}]: shift {:+.8}  finite diff {:+.8}", grad[k], (fp - fm) / (2.0 * h));
    }
    Ok(())
}
