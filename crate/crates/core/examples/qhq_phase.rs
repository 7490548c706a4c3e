//! The quarter-half-quarter stack as a pure phase shifter.

use gpq::polarization::{pancharatnam_phase, qhq_transfer, GpSetup, JonesVector, Polarization};

fn main() -> Result<(), gpq::error::Error> {
    println!("{:>8} {:>12} {:>10} {:>10} {:>10}", "theta_h", "matrix_dev", "phi", "arg_H", "arg_V");
    for deg in (0..=90).step_by(15) {
        let setup = GpSetup::new(f64::from(deg).to_radians());
        let (dev, _) = setup.composed().diff_up_to_global_phase(&qhq_transfer(setup));
        // H picks up +phi and V picks up pi - phi.
        let out = qhq_transfer(setup).apply(&Polarization::D.jones());
        let h = JonesVector::new(out.h(), 0.0.into()).normalized()?;
        let v = JonesVector::new(0.0.into(), out.v()).normalized()?;
        let ph = pancharatnam_phase(&Polarization::H.jones(), &h)?;
        let pv = pancharatnam_phase(&Polarization::V.jones(), &v)?;
        println!(
            "{deg:>8} {dev:>12.2e} {:>10.3} {:>10.3} {:>10.3}",
            setup.geometric_phase().to_degrees(),
            ph.to_degrees(),
            pv.to_degrees()
        );
    }
    Ok(())
}
