//! Reconstructs the state at a 45 degree geometric phase from simulated
//! counts and prints the real and imaginary density-matrix grids.

use gpq::counting::DetectorModel;
use gpq::state::gp_state;
use gpq::tomography::{
    linear_inversion, mle_reconstruct, simulate_tomography, tomography_report, BasisSet, TomographySettings,
    BASIS_LABELS,
};

fn print_grid(name: &str, g: &[[f64; 4]; 4]) {
    println!("{name:>4} {:>7} {:>7} {:>7} {:>7}", BASIS_LABELS[0], BASIS_LABELS[1], BASIS_LABELS[2], BASIS_LABELS[3]);
    for (label, row) in BASIS_LABELS.iter().zip(g) {
        println!("{label:>4} {:>7.3} {:>7.3} {:>7.3} {:>7.3}", row[0], row[1], row[2], row[3]);
    }
}

fn main() -> Result<(), gpq::error::Error> {
    let target = gp_state(45f64.to_radians());
    let records = simulate_tomography(&target, BasisSet::Overcomplete36, &DetectorModel::ideal(1e4), 3)?;

    let lin = linear_inversion(&records)?;
    println!("linear inversion: min eigenvalue {:.2e}", lin.min_eigenvalue);

    let result = mle_reconstruct(&records, &TomographySettings::default(), Some(&target))?;
    let report = tomography_report(&result, &target);
    println!(
        "mle: fidelity {:.5}  entropy {:.5}  iterations {}",
        report.fidelity, report.entropy, report.iterations
    );
    print_grid("Re", &report.real);
    print_grid("Im", &report.imag);
    Ok(())
}
