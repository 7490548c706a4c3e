//! Pump power behind four polarizers as the stack HWP turns.

use gpq::polarization::{pump_port_powers, GpSetup};

fn main() {
    println!("theta_h     H      V      D      A");
    for deg in (0..=180).step_by(10) {
        let [h, v, d, a] = pump_port_powers(GpSetup::new(f64::from(deg).to_radians()));
        println!("{deg:>7} {h:.3}  {v:.3}  {d:.3}  {a:.3}");
    }
}
