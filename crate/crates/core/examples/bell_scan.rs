//! CHSH parameter against the stack angle, with the S-curve fit and the
//! optimal-basis bound alongside.

use gpq::counting::{angle_grid, bell_scan, fit_s_curve, DetectorModel, SCurveModel};
use gpq::source::SourceImperfection;
use gpq::state::{gp_state, horodecki_smax};

fn main() -> Result<(), gpq::error::Error> {
    let grid = angle_grid(0.0, 90f64.to_radians(), 7.5f64.to_radians())?;
    let v = std::env::args().nth(1).map_or(Ok(1.0), |s| s.parse()).unwrap_or(1.0);
    let table = bell_scan(&grid, &SourceImperfection::werner(v)?, &DetectorModel::ideal(1e4), 7)?;
    println!("theta_h      S    sigma   S_max");
    for p in &table {
        let smax = horodecki_smax(&gp_state(2.0 * p.theta_h).density())?;
        println!("{:>7.1} {:>6.3} {:>8.4} {:>7.4}", p.theta_h.to_degrees(), p.s, p.sigma_s, smax);
    }
    let fit = fit_s_curve(&table, SCurveModel::Absolute)?;
    let (a, b, _) = fit.params();
    println!("S = {a:.4} + {b:.4} |cos 4theta_h|  (v = {v})");
    Ok(())
}
