//! Choosing the stack angle that cancels residual birefringence.

use gpq::experiment::compensate;

fn main() -> Result<(), gpq::error::Error> {
    println!("phi_h  phi_v  theta_h  fidelity");
    for (h, v) in [(30.0, -10.0), (5.0, 5.0), (-42.0, 17.5), (90.0, 0.0)] {
        let c = compensate(h, v)?;
        println!("{h:>5} {v:>6} {:>8.3} {:>9.6}", c.theta_h_deg, c.fidelity);
    }
    Ok(())
}
