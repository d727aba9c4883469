//! Builds a Bell pair with the simulator and samples a Haar-random state.

use qcard::sim::{haar_random_state, Gate, StateVector};

fn main() -> qcard::Result<()> {
    let mut psi = StateVector::zero(2)?;
    psi.apply_all(&[
        Gate::Ry { target: 0, angle: std::f64::consts::FRAC_PI_2 },
        Gate::Cnot { control: 0, target: 1 },
    ])?;
    println!("Bell pair probabilities: {:?}", psi.probabilities());

    let mut flipped = StateVector::zero(1)?;
    flipped.apply(&Gate::X { target: 0 })?;
    println!("X|0> probabilities: {:?}", flipped.probabilities());

    let haar = haar_random_state(3, 7)?;
    println!("Haar state norm: {:.12}", haar.norm_sqr());
    println!("per-qubit P(0): {:?}", haar.zero_marginals());
    Ok(())
}
