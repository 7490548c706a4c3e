//! Idler-analyzer fringes with the signal analyzer fixed on H or D.

use gpq::counting::{angle_grid, fit_fringe, fringe_scan, DetectorModel};
use gpq::measurement::AnalyzerSetting;
use gpq::polarization::Polarization;
use gpq::state::gp_state;

fn main() -> Result<(), gpq::error::Error> {
    let det = DetectorModel::ideal(1e4);
    let sweep = angle_grid(0.0, 180f64.to_radians(), 5f64.to_radians())?;
    println!("phi_deg basis visibility  |cos2phi|");
    for phi_deg in [0.0, 45.0, 90.0, 135.0] {
        let phi: f64 = f64::to_radians(phi_deg);
        for basis in [Polarization::H, Polarization::D] {
            let records = fringe_scan(&gp_state(phi), &AnalyzerSetting::labeled(basis), &sweep, &det, 1)?;
            let fit = fit_fringe(&records)?;
            println!("{phi_deg:>7} {basis:>5} {:>10.4} {:>10.4}", fit.visibility, (2.0 * phi).cos().abs());
        }
    }
    Ok(())
}
