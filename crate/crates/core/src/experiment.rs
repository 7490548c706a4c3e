//! Drivers that turn a [`RunPlan`] into result tables, plus their CSV and
//! JSON encodings. The command-line front end and the examples both go
//! through here.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{MeasureKind, RunPlan};
use crate::counting::{
    bell_point, derive_seed, fit_fringe, fit_s_curve, fringe_scan, report_deg, write_counts_csv, BellOptions, BellPoint,
    CountRecord, DetectorModel, FringeFit, SCurveFit, SCurveModel,
};
use crate::error::{Error, Result};
use crate::measurement::AnalyzerSetting;
use crate::polarization::{classical_projection_power, JonesVector, Polarization};
use crate::source::{birefringent_evolve, compensation_angle, spdc_state, PumpState, SourceImperfection};
use crate::state::{fidelity_pure, gp_state, DensityMatrix};
use crate::tomography::{
    mle_reconstruct, reconstruct, simulate_tomography, tomography_report, BasisSet, TomographyReport,
    TomographySettings, BASIS_LABELS,
};

/// Knobs that are not part of a bench program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecOptions {
    pub seed: u64,
    pub bell: BellOptions,
    pub s_curve: SCurveModel,
    pub tomography: TomographySettings,
    /// Standard deviation of additive Gaussian power-meter noise.
    pub classical_noise: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalRow {
    pub theta_h_deg: f64,
    pub p_h: f64,
    pub p_v: f64,
    pub p_d: f64,
    pub p_a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeRun {
    pub signal: AnalyzerSetting,
    pub records: Vec<CountRecord>,
    pub fit: FringeFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellRun {
    pub table: Vec<BellPoint>,
    /// Absent when the grid is too short to fit.
    pub fit: Option<SCurveFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomoPoint {
    pub theta_h_deg: Option<f64>,
    pub rho: DensityMatrix,
    pub report: TomographyReport,
    pub likelihood_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "measure", rename_all = "lowercase")]
pub enum RunOutput {
    Classical { rows: Vec<ClassicalRow> },
    Fringe(FringeRun),
    Bell(BellRun),
    Tomo { points: Vec<TomoPoint> },
}

fn port_powers(pump: &JonesVector) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (slot, p) in out.iter_mut().zip([Polarization::H, Polarization::V, Polarization::D, Polarization::A]) {
        *slot = classical_projection_power(pump, &p.jones())?;
    }
    Ok(out)
}

pub fn execute(plan: &RunPlan, opts: &ExecOptions) -> Result<RunOutput> {
    match plan.measure {
        MeasureKind::Classical => {
            let rows = plan
                .points
                .iter()
                .enumerate()
                .map(|(k, pt)| {
                    let mut p = port_powers(&pt.pump_out)?;
                    if opts.classical_noise > 0.0 {
                        let normal = Normal::new(0.0, opts.classical_noise).map_err(|_| Error::InvalidParameter {
                            name: "noise",
                            value: opts.classical_noise,
                            reason: "must be finite and non-negative",
                        })?;
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, k as u64));
                        for x in &mut p {
                            *x += normal.sample(&mut rng);
                        }
                    }
                    Ok(ClassicalRow {
                        theta_h_deg: pt.gp_hwp_deg.unwrap_or(0.0),
                        p_h: p[0],
                        p_v: p[1],
                        p_d: p[2],
                        p_a: p[3],
                    })
                })
                .collect::<Result<_>>()?;
            Ok(RunOutput::Classical { rows })
        }
        MeasureKind::Fringe => {
            let state = &plan.points[0].state;
            let records = fringe_scan(state, &plan.signal_analyzer, &plan.analyzer_sweep, &plan.detector, opts.seed)?;
            let fit = fit_fringe(&records)?;
            Ok(RunOutput::Fringe(FringeRun {
                signal: plan.signal_analyzer,
                records,
                fit,
            }))
        }
        MeasureKind::Bell => {
            let table = plan
                .points
                .par_iter()
                .enumerate()
                .map(|(k, pt)| {
                    let theta = pt.gp_hwp_deg.unwrap_or(0.0).to_radians();
                    bell_point(&pt.state, theta, &plan.detector, derive_seed(opts.seed, k as u64), &opts.bell)
                })
                .collect::<Result<Vec<_>>>()?;
            let fit = fit_s_curve(&table, opts.s_curve).ok();
            Ok(RunOutput::Bell(BellRun { table, fit }))
        }
        MeasureKind::Tomo => {
            let points = plan
                .points
                .par_iter()
                .enumerate()
                .map(|(k, pt)| {
                    let target = spdc_state(&PumpState::new(pt.pump_out, 1.0)?);
                    let records = simulate_tomography(
                        &pt.state,
                        opts.tomography.basis_set,
                        &plan.detector,
                        derive_seed(opts.seed, k as u64),
                    )?;
                    let res = reconstruct(&records, &opts.tomography, Some(&target))?;
                    Ok(TomoPoint {
                        theta_h_deg: pt.gp_hwp_deg,
                        rho: res.rho,
                        report: tomography_report(&res, &target),
                        likelihood_trace: res.likelihood_trace,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(RunOutput::Tomo { points })
        }
    }
}

/// Reconstruction of `gp_state(2θ_H)` data from an imperfect source, with
/// fidelity measured against the ideal state.
pub fn tomography_at(
    theta_h: f64,
    imp: &SourceImperfection,
    det: &DetectorModel,
    seed: u64,
    basis_set: BasisSet,
) -> Result<crate::tomography::TomographyResult> {
    let rho = crate::source::imperfect_state(2.0 * theta_h, imp)?;
    let records = simulate_tomography(&rho, basis_set, det, seed)?;
    let settings = TomographySettings {
        basis_set,
        ..Default::default()
    };
    mle_reconstruct(&records, &settings, Some(&gp_state(2.0 * theta_h)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Compensation {
    pub phi_h_deg: f64,
    pub phi_v_deg: f64,
    pub theta_h_deg: f64,
    /// Overlap of the compensated state with `(|HH⟩ − |VV⟩)/√2`.
    pub fidelity: f64,
}

/// Stack angle that undoes birefringent phases `(φ_H, φ_V)` (degrees), with
/// the fidelity of the resulting state to the uncompensated reference.
pub fn compensate(phi_h_deg: f64, phi_v_deg: f64) -> Result<Compensation> {
    let (ph, pv) = (phi_h_deg.to_radians(), phi_v_deg.to_radians());
    let theta = compensation_angle(ph, pv);
    let out = birefringent_evolve(&spdc_state(&PumpState::after_gp_stack(theta)), ph, pv)?;
    Ok(Compensation {
        phi_h_deg,
        phi_v_deg,
        theta_h_deg: theta.to_degrees(),
        fidelity: fidelity_pure(&out, &gp_state(0.0)),
    })
}

impl RunOutput {
    pub fn measure(&self) -> MeasureKind {
        match self {
            RunOutput::Classical { .. } => MeasureKind::Classical,
            RunOutput::Fringe(_) => MeasureKind::Fringe,
            RunOutput::Bell(_) => MeasureKind::Bell,
            RunOutput::Tomo { .. } => MeasureKind::Tomo,
        }
    }

    /// Plot-ready table; angles in degrees.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        match self {
            RunOutput::Classical { rows } => {
                let mut w = csv::Writer::from_writer(writer);
                for r in rows {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            RunOutput::Fringe(run) => write_counts_csv(writer, &run.records)?,
            RunOutput::Bell(run) => {
                let mut w = csv::Writer::from_writer(writer);
                w.write_record(["theta_h_deg", "phi_deg", "s", "sigma_s", "e_ab", "e_ab2", "e_a2b", "e_a2b2"])?;
                for p in &run.table {
                    let t = report_deg(p.theta_h);
                    let mut row = vec![t, 2.0 * t, p.s, p.sigma_s];
                    row.extend(p.correlations);
                    w.write_record(row.iter().map(f64::to_string))?;
                }
                w.flush()?;
            }
            RunOutput::Tomo { points } => {
                let mut w = csv::Writer::from_writer(writer);
                let mut header = vec!["theta_h_deg", "fidelity", "entropy", "part", "row"];
                header.extend(BASIS_LABELS);
                w.write_record(&header)?;
                for p in points {
                    let theta = p.theta_h_deg.map_or(String::new(), |t| t.to_string());
                    for (part, grid) in [("re", &p.report.real), ("im", &p.report.imag)] {
                        for (label, row) in BASIS_LABELS.iter().zip(grid) {
                            let mut rec = vec![
                                theta.clone(),
                                p.report.fidelity.to_string(),
                                p.report.entropy.to_string(),
                                part.to_string(),
                                label.to_string(),
                            ];
                            rec.extend(row.iter().map(f64::to_string));
                            w.write_record(&rec)?;
                        }
                    }
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{compile, parse};

    fn run(text: &str, opts: &ExecOptions) -> RunOutput {
        execute(&compile(&parse(text).unwrap().program).unwrap(), opts).unwrap()
    }

    const STACK: &str = "pump D\ngp qwp 45\ngp hwp 0\ngp qwp 45\nsource p=0.5 v=1\n";

    #[test]
    fn classical_rows() {
        let out = run(
            &format!("{STACK}detector\nscan gp_hwp from 0 to 180 step 45\nmeasure classical\n"),
            &ExecOptions::default(),
        );
        let RunOutput::Classical { rows } = out else { panic!() };
        assert_eq!(rows.len(), 5);
        assert!(rows[0].p_d.abs() < 1e-12 && (rows[0].p_h - 0.5).abs() < 1e-12);
        assert!((rows[1].p_d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classical_noise_is_seeded() {
        let text = format!("{STACK}detector\nscan gp_hwp from 0 to 90 step 10\nmeasure classical\n");
        let opts = ExecOptions {
            classical_noise: 0.01,
            seed: 5,
            ..Default::default()
        };
        assert_eq!(run(&text, &opts), run(&text, &opts));
        assert_ne!(run(&text, &opts), run(&text, &ExecOptions::default()));
    }

    #[test]
    fn fringe_through_plan() {
        let out = run(
            &format!("{STACK}detector eta_s=1 eta_i=1 dark=0 window=0 sampling=expected\nscan analyzer_i_hwp from 0 to 180 step 5\nmeasure fringe\n"),
            &ExecOptions::default(),
        );
        let RunOutput::Fringe(f) = out else { panic!() };
        assert!((f.fit.visibility - 1.0).abs() < 1e-9);
        let mut buf = Vec::new();
        RunOutput::Fringe(f).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 38);
    }

    #[test]
    fn tomo_through_plan() {
        let out = run(
            &format!("{STACK}detector eta_s=1 eta_i=1 dark=0 window=0 pairs=40000\nscan gp_hwp from 22.5 to 67.5 step 45\nmeasure tomo\n"),
            &ExecOptions::default(),
        );
        let RunOutput::Tomo { points } = &out else { panic!() };
        assert_eq!(points.len(), 2);
        assert!((points[0].report.imag[0][3] - 0.5).abs() < 0.03);
        assert!((points[1].report.imag[0][3] + 0.5).abs() < 0.03);
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 2 * 8);
    }

    #[test]
    fn compensation_report() {
        let c = compensate(0.0, -90.0).unwrap();
        assert!((c.theta_h_deg - 22.5).abs() < 1e-12);
        assert!((c.fidelity - 1.0).abs() < 1e-12);
        assert_eq!(compensate(30.0, 30.0).unwrap().theta_h_deg, 0.0);
    }
}
