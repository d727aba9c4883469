//! Encodes two queries and shows that different queries land on different states.

use qcard::sim::StateVector;
use qcard::vqc::{encode_query, EncodingSpec, Slot};

fn main() -> qcard::Result<()> {
    let spec = EncodingSpec::new(3, 3)?;
    let a = [Slot::new(2, 0.5), Slot::new(3, 0.4), Slot::new(1, 1.0)];
    let b = [Slot::new(1, 1.0), Slot::new(2, 0.5)];

    let gates = encode_query(&spec, &a)?;
    for g in &gates {
        println!("{g:?}");
    }

    let state = |slots: &[Slot]| -> qcard::Result<StateVector> {
        let mut s = StateVector::zero(3)?;
        s.apply_all(&encode_query(&spec, slots)?)?;
        Ok(s)
    };
    println!("fidelity(a, b) = {:.6}", state(&a)?.fidelity(&state(&b)?));
    Ok(())
}
