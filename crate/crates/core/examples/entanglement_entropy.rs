//! Entanglement entropy as the pump split drifts from balance.

use gpq::source::{imperfect_state, SourceImperfection};
use gpq::state::{binary_entropy, entanglement_entropy};

fn main() -> Result<(), gpq::error::Error> {
    println!("   p   entropy   h(p)");
    for p in [0.5, 0.55, 0.6, 0.65, 0.68, 0.7, 0.8, 0.9] {
        let rho = imperfect_state(0.3, &SourceImperfection::new(p, 1.0)?)?;
        println!("{p:>4} {:>9.4} {:>6.4}", entanglement_entropy(&rho)?, binary_entropy(p));
    }
    Ok(())
}
