//! Two-photon state tomography from coincidence counts.
//!
//! Counts are normalized per basis: a record is divided by the summed counts
//! of the four port combinations of its analyzer bases when all four were
//! measured, and by the average complete-group total otherwise. This
//! assumes the source intensity is stable across settings.

use std::fmt;
use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::counting::{simulate_settings, CountRecord, DetectorModel};
use crate::error::{Result, TomographyError};
use crate::linalg::{self, Mat};
use crate::measurement::AnalyzerSetting;
use crate::polarization::{JonesVector, Polarization};
use crate::state::{
    entanglement_entropy, fidelity_pure, pauli, DensityMatrix, QuantumState, TwoQubitPure, EIGENVALUE_FLOOR,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisSet {
    /// `{H, V, D, R}²`
    #[serde(rename = "minimal-16")]
    Minimal16,
    /// `{H, V, D, A, R, L}²`
    #[default]
    #[serde(rename = "overcomplete-36")]
    Overcomplete36,
}

impl BasisSet {
    pub fn labels(self) -> &'static [Polarization] {
        match self {
            BasisSet::Minimal16 => &[Polarization::H, Polarization::V, Polarization::D, Polarization::R],
            BasisSet::Overcomplete36 => &Polarization::ALL,
        }
    }
}

impl fmt::Display for BasisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisSet::Minimal16 => "minimal-16",
            BasisSet::Overcomplete36 => "overcomplete-36",
        })
    }
}

impl std::str::FromStr for BasisSet {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "minimal-16" | "16" => Ok(BasisSet::Minimal16),
            "overcomplete-36" | "36" => Ok(BasisSet::Overcomplete36),
            _ => Err(format!("unknown basis set {s:?} (expected minimal-16 or overcomplete-36)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub enabled: bool,
    /// Stop once the likelihood gradient is flat on the state's support to
    /// within this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            enabled: true,
            tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographySettings {
    pub basis_set: BasisSet,
    /// Mean coincidences per setting when simulating.
    pub counts_per_setting: f64,
    pub mle: MleOptions,
}

impl Default for TomographySettings {
    fn default() -> Self {
        TomographySettings {
            basis_set: BasisSet::default(),
            counts_per_setting: 1e4,
            mle: MleOptions::default(),
        }
    }
}

impl TomographySettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.mle.tolerance > 0.0) {
            return Err(TomographyError::InvalidOptions("tolerance must be positive").into());
        }
        if self.mle.max_iterations == 0 {
            return Err(TomographyError::InvalidOptions("max_iterations must be at least 1").into());
        }
        Ok(())
    }
}

/// Analyzer pairs of a basis set, signal label outermost.
pub fn tomography_settings_list(basis_set: BasisSet) -> Vec<(AnalyzerSetting, AnalyzerSetting)> {
    let labels = basis_set.labels();
    labels
        .iter()
        .flat_map(|&s| labels.iter().map(move |&i| (AnalyzerSetting::labeled(s), AnalyzerSetting::labeled(i))))
        .collect()
}

/// Counts for every setting of `basis_set`.
pub fn simulate_tomography(
    state: &impl QuantumState,
    basis_set: BasisSet,
    det: &DetectorModel,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    simulate_settings(state, &tomography_settings_list(basis_set), det, seed)
}

/// A record's two-photon projector and normalized frequency.
#[derive(Clone, Copy, Debug)]
struct Datum {
    projector: TwoQubitPure,
    counts: f64,
    /// Expected total over the record's complete port group.
    norm: f64,
}

const SAME_STATE: f64 = 1.0 - 1e-9;
const ORTHOGONAL: f64 = 1e-9;

/// 0 if `a` and `b` are the same state, 1 if orthogonal, `None` otherwise.
fn port_relation(a: &JonesVector, b: &JonesVector) -> Option<usize> {
    let f = a.inner(b).norm_sqr();
    if f > SAME_STATE {
        Some(0)
    } else if f < ORTHOGONAL {
        Some(1)
    } else {
        None
    }
}

fn prepare(records: &[CountRecord]) -> Result<Vec<Datum>> {
    if records.is_empty() {
        return Err(TomographyError::Empty.into());
    }
    let proj: Vec<(JonesVector, JonesVector)> =
        records.iter().map(|r| (r.settings.0.projector(), r.settings.1.projector())).collect();
    let mut group_total: Vec<Option<f64>> = Vec::with_capacity(records.len());
    for (s, i) in &proj {
        let mut seen = [false; 4];
        let mut total = 0.0;
        for (k, (s2, i2)) in proj.iter().enumerate() {
            if let (Some(a), Some(b)) = (port_relation(s, s2), port_relation(i, i2)) {
                seen[2 * a + b] = true;
                total += records[k].coincidence_value();
            }
        }
        group_total.push(seen.iter().all(|&x| x).then_some(total));
    }
    let complete: Vec<f64> = group_total.iter().flatten().copied().collect();
    if complete.is_empty() {
        return Err(TomographyError::NoNormalization.into());
    }
    let fallback = complete.iter().sum::<f64>() / complete.len() as f64;
    records
        .iter()
        .zip(&proj)
        .zip(&group_total)
        .map(|((r, (s, i)), total)| {
            Ok(Datum {
                projector: TwoQubitPure::product(s, i)?,
                counts: r.coincidence_value(),
                norm: total.unwrap_or(fallback),
            })
        })
        .collect()
}

/// `σ_a ⊗ σ_b`, `j = 4a + b`.
fn pauli_basis(j: usize) -> Mat<4> {
    linalg::kron(&pauli(j / 4), &pauli(j % 4))
}

fn missing_settings(data: &[Datum]) -> Vec<String> {
    let labels = Polarization::ALL;
    let mut out = Vec::new();
    for s in labels {
        for i in labels {
            let target = TwoQubitPure::product(&s.jones(), &i.jones()).expect("labels are normalized");
            if !data.iter().any(|d| fidelity_pure(&d.projector, &target) > SAME_STATE) {
                out.push(format!("{s}{i}"));
            }
        }
    }
    out
}

/// Output of [`linear_inversion`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearInversion {
    /// Hermitian with unit trace; possibly not positive.
    pub rho: DensityMatrix,
    pub min_eigenvalue: f64,
    /// Set when an eigenvalue falls below the physicality floor.
    pub unphysical: bool,
}

/// Least-squares solve of `Tr(ρ Π_k) = n_k / N_k` in the Pauli basis.
pub fn linear_inversion(records: &[CountRecord]) -> Result<LinearInversion> {
    let data = prepare(records)?;
    let design: Vec<Vec<f64>> = data
        .iter()
        .map(|d| {
            let m = d.projector.amplitudes();
            (0..16)
                .map(|j| 0.25 * linalg::inner(&m, &linalg::mat_vec(&pauli_basis(j), &m)).re)
                .collect()
        })
        .collect();
    let rank = linalg::rank_real(&design, 1e-9);
    if rank < 16 {
        return Err(TomographyError::RankDeficient {
            rank,
            missing: missing_settings(&data),
        }
        .into());
    }
    let freq: Vec<f64> = data.iter().map(|d| if d.norm > 0.0 { d.counts / d.norm } else { 0.0 }).collect();
    let fit = linalg::linear_least_squares(&design, &freq, None).ok_or(TomographyError::RankDeficient {
        rank,
        missing: Vec::new(),
    })?;
    let trace = fit.params[0];
    let mut m = linalg::zeros::<4>();
    for (j, r) in fit.params.iter().enumerate() {
        m = linalg::add(&m, &linalg::scale(&pauli_basis(j), C64::new(0.25 * r / trace, 0.0)));
    }
    // Symmetrize away round-off.
    let m = linalg::scale(&linalg::add(&m, &linalg::adjoint(&m)), C64::new(0.5, 0.0));
    let rho = DensityMatrix::from_entries_unchecked(m);
    let min_eigenvalue = rho.min_eigenvalue();
    Ok(LinearInversion {
        rho,
        min_eigenvalue,
        unphysical: min_eigenvalue < EIGENVALUE_FLOOR,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    MaximumLikelihood,
    LinearInversion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    pub rho: DensityMatrix,
    pub estimator: Estimator,
    /// Poisson log-likelihood `Σ n log μ − μ` of `rho`.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub fidelity_to_target: Option<f64>,
    pub entropy: f64,
    pub converged: bool,
    /// Log-likelihood after each accepted step, starting point first.
    pub likelihood_trace: Vec<f64>,
    /// Magnitude of the most negative eigenvalue removed before reporting.
    pub eigenvalue_clamp: f64,
}

const START_MIXTURE: f64 = 1e-4;

fn log_likelihood(data: &[Datum], rho: &DensityMatrix) -> f64 {
    data.iter()
        .map(|d| {
            let mu = d.norm * rho.expectation(&d.projector).max(0.0);
            if d.counts > 0.0 {
                d.counts * mu.ln() - mu
            } else {
                -mu
            }
        })
        .sum()
}

/// Likelihood gradient `Σ_k N_k (n_k/μ_k − 1) Π_k`, divided by the total
/// count so that step sizes are comparable between data sets.
fn gradient(data: &[Datum], rho: &DensityMatrix, total: f64) -> Mat<4> {
    let mut g = linalg::zeros::<4>();
    for d in data {
        let mu = d.norm * rho.expectation(&d.projector);
        let w = if d.counts > 0.0 && mu > 0.0 { d.counts / mu - 1.0 } else { -1.0 };
        let p = d.projector.density();
        g = linalg::add(&g, &linalg::scale(p.entries(), C64::new(w * d.norm / total, 0.0)));
    }
    g
}

/// `Tr(ρG²) − Tr(ρG)²`; zero exactly at a constrained maximum.
fn spread(g: &Mat<4>, rho: &DensityMatrix) -> f64 {
    let gr = linalg::matmul(g, rho.entries());
    let mean = linalg::trace(&gr).re;
    linalg::trace(&linalg::matmul(&gr, g)).re - mean * mean
}

fn normalized(m: Mat<4>) -> DensityMatrix {
    let m = linalg::scale(&linalg::add(&m, &linalg::adjoint(&m)), C64::new(0.5, 0.0));
    let t = linalg::trace(&m).re;
    DensityMatrix::from_entries_unchecked(linalg::scale(&m, C64::new(1.0 / t, 0.0)))
}

fn finish(
    rho: DensityMatrix,
    estimator: Estimator,
    data: &[Datum],
    iterations: usize,
    converged: bool,
    likelihood_trace: Vec<f64>,
    target: Option<&TwoQubitPure>,
) -> Result<TomographyResult> {
    let (rho, clamp) = rho.clamp_negative_eigenvalues();
    Ok(TomographyResult {
        log_likelihood: log_likelihood(data, &rho),
        fidelity_to_target: target.map(|t| rho.expectation(t).clamp(0.0, 1.0)),
        entropy: entanglement_entropy(&rho)?,
        rho,
        estimator,
        iterations,
        converged,
        likelihood_trace,
        eigenvalue_clamp: clamp,
    })
}

/// Maximum-likelihood reconstruction by diluted iteration
/// `ρ ← N[(I + εG) ρ (I + εG)]` along the likelihood gradient `G`. Any
/// `ε > 0` small enough raises the likelihood; each iteration keeps the best
/// of a few step sizes around the previous one. Stops once `ρ` is
/// stationary (`Tr(ρG²) − Tr(ρG)² < tolerance`). Starts from the
/// linear-inversion estimate with a trace of white noise, so every
/// predicted rate is positive.
pub fn mle_reconstruct(
    records: &[CountRecord],
    settings: &TomographySettings,
    target: Option<&TwoQubitPure>,
) -> Result<TomographyResult> {
    settings.validate()?;
    let data = prepare(records)?;
    let total = data.iter().map(|d| d.counts).sum::<f64>().max(1.0);
    let start = linear_inversion(records)?.rho.clamp_negative_eigenvalues().0;
    let mixed = linalg::add(
        &linalg::scale(start.entries(), C64::new(1.0 - START_MIXTURE, 0.0)),
        &linalg::scale(DensityMatrix::maximally_mixed().entries(), C64::new(START_MIXTURE, 0.0)),
    );
    let mut rho = normalized(mixed);
    let mut ll = log_likelihood(&data, &rho);
    let mut trace = vec![ll];
    let mut epsilon: f64 = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    let id: Mat<4> = linalg::identity();

    while iterations < settings.mle.max_iterations {
        let g = gradient(&data, &rho, total);
        if spread(&g, &rho) < settings.mle.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let try_step = |eps: f64| {
            let a = linalg::add(&id, &linalg::scale(&g, C64::new(eps, 0.0)));
            let cand = normalized(linalg::matmul(&linalg::matmul(&a, rho.entries()), &a));
            let cand_ll = log_likelihood(&data, &cand);
            (eps, cand, cand_ll)
        };
        // Best of a few step sizes around the last one, then back off.
        let mut best = [0.25, 0.5, 1.0, 2.0, 4.0]
            .into_iter()
            .map(|f| try_step((epsilon * f).min(1e3)))
            .max_by(|a, b| a.2.total_cmp(&b.2))
            .filter(|c| c.2 >= ll);
        while best.is_none() && epsilon > 1e-12 {
            epsilon *= 0.125;
            best = Some(try_step(epsilon)).filter(|c| c.2 >= ll);
        }
        let Some((eps, cand, cand_ll)) = best else {
            // No ascent left at working precision.
            converged = true;
            break;
        };
        epsilon = eps;
        debug_assert!(cand_ll >= ll);
        rho = cand;
        ll = cand_ll;
        trace.push(ll);
    }
    finish(rho, Estimator::MaximumLikelihood, &data, iterations, converged, trace, target)
}

/// Runs the estimator selected by `settings.mle.enabled`; linear inversion
/// output is projected onto the physical states before reporting.
pub fn reconstruct(
    records: &[CountRecord],
    settings: &TomographySettings,
    target: Option<&TwoQubitPure>,
) -> Result<TomographyResult> {
    if settings.mle.enabled {
        return mle_reconstruct(records, settings, target);
    }
    let data = prepare(records)?;
    let li = linear_inversion(records)?;
    finish(li.rho, Estimator::LinearInversion, &data, 0, true, Vec::new(), target)
}

/// Plot- and file-ready summary of a reconstruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub real: [[f64; 4]; 4],
    pub imag: [[f64; 4]; 4],
    pub fidelity: f64,
    pub entropy: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub eigenvalue_clamp: f64,
}

pub fn tomography_report(result: &TomographyResult, target: &TwoQubitPure) -> TomographyReport {
    let m = result.rho.entries();
    TomographyReport {
        real: m.map(|row| row.map(|z| z.re)),
        imag: m.map(|row| row.map(|z| z.im)),
        fidelity: result.rho.expectation(target).clamp(0.0, 1.0),
        entropy: result.entropy,
        log_likelihood: result.log_likelihood,
        iterations: result.iterations,
        converged: result.converged,
        eigenvalue_clamp: result.eigenvalue_clamp,
    }
}

pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

/// One matrix grid as CSV with row and column labels.
pub fn write_grid_csv<W: Write>(writer: W, grid: &[[f64; 4]; 4]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(std::iter::once("row").chain(BASIS_LABELS))?;
    for (label, row) in BASIS_LABELS.iter().zip(grid) {
        w.write_record(std::iter::once(label.to_string()).chain(row.iter().map(|x| x.to_string())))?;
    }
    w.flush()?;
    Ok(())
}

/// `|HH⟩ + e^{iχ}|VV⟩` coherence, `ρ[HH][VV]`.
pub fn hh_vv_coherence(rho: &DensityMatrix) -> C64 {
    rho.entries()[0][3]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::derive_seed;
    use crate::state::{bell_state, gp_state, BellState};

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn settings_lists() {
        assert_eq!(tomography_settings_list(BasisSet::Minimal16).len(), 16);
        let full = tomography_settings_list(BasisSet::Overcomplete36);
        assert_eq!(full.len(), 36);
        for (s, i) in &full {
            assert!((s.projector().norm_sqr() - 1.0).abs() < 1e-12);
            assert!((i.projector().norm_sqr() - 1.0).abs() < 1e-12);
        }
        let (d, a) = full
            .iter()
            .find(|(s, i)| s.label == Some(Polarization::D) && i.label == Some(Polarization::A))
            .unwrap();
        assert!((d.projector().inner(&Polarization::D.jones()).norm() - 1.0).abs() < 1e-12);
        assert!((a.projector().inner(&Polarization::A.jones()).norm() - 1.0).abs() < 1e-12);
    }

    fn exact(state: &impl QuantumState, basis: BasisSet) -> Vec<CountRecord> {
        simulate_tomography(state, basis, &DetectorModel::ideal(1e4).noiseless(), 0).unwrap()
    }

    #[test]
    fn noiseless_inversion_is_exact() {
        for basis in [BasisSet::Minimal16, BasisSet::Overcomplete36] {
            let li = linear_inversion(&exact(&gp_state(0.0), basis)).unwrap();
            let truth = bell_state(BellState::PhiMinus).density();
            assert!(linalg::max_abs_diff(li.rho.entries(), truth.entries()) < 1e-10, "{basis}");
            let li = linear_inversion(&exact(&DensityMatrix::maximally_mixed(), basis)).unwrap();
            assert!(linalg::max_abs_diff(li.rho.entries(), DensityMatrix::maximally_mixed().entries()) < 1e-10);
        }
    }

    #[test]
    fn low_counts_can_go_unphysical() {
        let det = DetectorModel::ideal(1e3);
        let flagged = (0..20).any(|k| {
            let recs = simulate_tomography(&gp_state(0.3), BasisSet::Overcomplete36, &det, derive_seed(9, k)).unwrap();
            let li = linear_inversion(&recs).unwrap();
            assert_eq!(li.unphysical, li.min_eigenvalue < EIGENVALUE_FLOOR);
            li.unphysical
        });
        assert!(flagged);
    }

    #[test]
    fn rank_deficiency_names_missing_settings() {
        let recs: Vec<CountRecord> = exact(&gp_state(0.0), BasisSet::Overcomplete36)
            .into_iter()
            .filter(|r| {
                let l = [r.settings.0.label.unwrap(), r.settings.1.label.unwrap()];
                !l.contains(&Polarization::R) && !l.contains(&Polarization::L)
            })
            .collect();
        match linear_inversion(&recs) {
            Err(crate::error::Error::Tomography(TomographyError::RankDeficient { rank, missing })) => {
                assert!(rank < 16);
                assert_eq!(missing.len(), 36 - 16);
                assert!(missing.contains(&"RH".to_string()));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            linear_inversion(&[]),
            Err(crate::error::Error::Tomography(TomographyError::Empty))
        ));
    }

    #[test]
    fn mle_at_truth_stops_quickly() {
        let recs = exact(&gp_state(deg(30.0)), BasisSet::Overcomplete36);
        let res = mle_reconstruct(&recs, &TomographySettings::default(), Some(&gp_state(deg(30.0)))).unwrap();
        assert!(res.converged);
        assert!(res.fidelity_to_target.unwrap() > 0.999, "{:?}", res.fidelity_to_target);
        assert!(res.iterations < 10_000);
    }

    #[test]
    fn mle_is_physical_and_monotone() {
        let det = DetectorModel::ideal(1e3);
        for k in 0..5 {
            let recs = simulate_tomography(&gp_state(0.4), BasisSet::Overcomplete36, &det, k).unwrap();
            let res = mle_reconstruct(&recs, &TomographySettings::default(), Some(&gp_state(0.4))).unwrap();
            assert!(res.rho.is_physical());
            assert!((res.rho.trace().re - 1.0).abs() < 1e-10);
            assert!(res.rho.min_eigenvalue() > -1e-10);
            assert!(res.likelihood_trace.windows(2).all(|w| w[1] >= w[0]));
            assert!(res.fidelity_to_target.unwrap() > 0.95);
        }
    }

    #[test]
    fn mle_handles_minimal_set() {
        let recs = simulate_tomography(&gp_state(0.2), BasisSet::Minimal16, &DetectorModel::ideal(1e4), 3).unwrap();
        let settings = TomographySettings {
            basis_set: BasisSet::Minimal16,
            ..Default::default()
        };
        let res = mle_reconstruct(&recs, &settings, Some(&gp_state(0.2))).unwrap();
        assert!(res.fidelity_to_target.unwrap() > 0.97, "{:?}", res.fidelity_to_target);
    }

    #[test]
    fn imaginary_coherence_sign() {
        let det = DetectorModel::ideal(1e4);
        let at = |theta_deg: f64| {
            let phi = 2.0 * deg(theta_deg);
            let recs = simulate_tomography(&gp_state(phi), BasisSet::Overcomplete36, &det, 1).unwrap();
            let res = mle_reconstruct(&recs, &TomographySettings::default(), None).unwrap();
            hh_vv_coherence(&res.rho).im
        };
        let a = at(22.5);
        let b = at(67.5);
        assert!((a - 0.5).abs() < 0.03, "{a}");
        assert!((b + 0.5).abs() < 0.03, "{b}");
    }

    #[test]
    fn linear_estimator_path() {
        let recs = exact(&gp_state(0.0), BasisSet::Overcomplete36);
        let settings = TomographySettings {
            mle: MleOptions {
                enabled: false,
                ..Default::default()
            },
            ..Default::default()
        };
        let res = reconstruct(&recs, &settings, Some(&gp_state(0.0))).unwrap();
        assert_eq!(res.estimator, Estimator::LinearInversion);
        assert!((res.fidelity_to_target.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn options_are_validated() {
        let recs = exact(&gp_state(0.0), BasisSet::Overcomplete36);
        let mut s = TomographySettings::default();
        s.mle.tolerance = 0.0;
        assert!(mle_reconstruct(&recs, &s, None).is_err());
        let mut s = TomographySettings::default();
        s.mle.max_iterations = 0;
        assert!(mle_reconstruct(&recs, &s, None).is_err());
    }

    #[test]
    fn iteration_cap_is_reported() {
        let recs = simulate_tomography(&gp_state(0.1), BasisSet::Overcomplete36, &DetectorModel::ideal(1e3), 2).unwrap();
        let mut s = TomographySettings::default();
        s.mle.max_iterations = 1;
        s.mle.tolerance = 1e-300;
        let res = mle_reconstruct(&recs, &s, None).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(!res.converged);
    }

    #[test]
    fn report_examples() {
        let recs = simulate_tomography(&gp_state(deg(90.0)), BasisSet::Overcomplete36, &DetectorModel::ideal(1e4), 6).unwrap();
        let res = mle_reconstruct(&recs, &TomographySettings::default(), None).unwrap();
        let rep = tomography_report(&res, &gp_state(0.0));
        assert!(rep.fidelity < 0.02);
        assert!((rep.entropy - 1.0).abs() < 0.02);
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &rep.real).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("row,HH,HV,VH,VV\nHH,"));
    }

    #[test]
    fn csv_input_round_trip() {
        let recs = simulate_tomography(&gp_state(0.5), BasisSet::Overcomplete36, &DetectorModel::ideal(1e4), 8).unwrap();
        let mut buf = Vec::new();
        crate::counting::write_counts_csv(&mut buf, &recs).unwrap();
        let back = crate::counting::read_counts_csv(buf.as_slice()).unwrap();
        let a = mle_reconstruct(&recs, &TomographySettings::default(), None).unwrap();
        let b = mle_reconstruct(&back, &TomographySettings::default(), None).unwrap();
        assert!(a.rho.trace_distance(&b.rho) < 1e-9);
    }
}
