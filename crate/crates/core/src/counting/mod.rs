//! Photon-counting simulation.
//!
//! Each analyzer setting gets one Poisson draw of aggregate counts. For a
//! setting pair with coincidence probability `P` and single-arm
//! probabilities `P_s`, `P_i`:
//!
//! ```text
//! singles rate   S_s = R η_s P_s + dark_s        (same for the idler)
//! true pairs     C   = R η_s η_i P T
//! accidentals    A   = S_s S_i τ T
//! ```
//!
//! with `R` the pair rate, `τ` the coincidence window and `T` the
//! acquisition time. Accidentals are an independent Poisson term on top of
//! `C`, so `coincidences ≤ min(singles)` is not guaranteed.
//!
//! Scan points draw from `ChaCha8Rng` seeded with
//! [`derive_seed`]`(master, index)`, so results do not depend on the order
//! (or thread) in which points are evaluated.
//!
//! Correlations are `E = (N₊₊ + N₋₋ − N₊₋ − N₋₊)/N` over the four port
//! combinations, with first-order Poisson error
//! `σ_E² = Σ_k (s_k − E)² N_k / N²`, and `σ_S² = Σ σ_E²`.

pub mod fit;

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{coincidence_probability, single_probability, AnalyzerSetting, ChshAngles, ChshForm, QUARTER_TURN};
use crate::polarization::Polarization;
use crate::source::{imperfect_state, SourceImperfection};
use crate::state::{check_fraction, QuantumState, Subsystem};

pub use fit::{fit_fringe, fit_s_curve, FringeFit, SCurveFit, SCurveModel, SCurveParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Poisson draws.
    #[default]
    Poisson,
    /// Exact expectations, the infinite-count limit.
    Expected,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub eta_s: f64,
    pub eta_i: f64,
    /// Dark counts per second.
    pub dark_s: f64,
    pub dark_i: f64,
    /// Generated pairs per second.
    pub pair_rate: f64,
    /// Coincidence window, seconds.
    pub window: f64,
    /// Seconds per setting.
    pub acquisition: f64,
    #[serde(default)]
    pub sampling: Sampling,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel {
            eta_s: 0.2,
            eta_i: 0.2,
            dark_s: 500.0,
            dark_i: 500.0,
            pair_rate: 1e6,
            window: 1.6e-9,
            acquisition: 1.0,
            sampling: Sampling::Poisson,
        }
    }
}

impl DetectorModel {
    /// Perfect detectors with no darks and no accidentals, sized so that a
    /// setting with coincidence probability ¼ (the average over a complete
    /// set of port combinations) collects `mean_counts` on average.
    pub fn ideal(mean_counts: f64) -> Self {
        DetectorModel {
            eta_s: 1.0,
            eta_i: 1.0,
            dark_s: 0.0,
            dark_i: 0.0,
            pair_rate: 4.0 * mean_counts,
            window: 0.0,
            acquisition: 1.0,
            sampling: Sampling::Poisson,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.sampling = Sampling::Expected;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_fraction("eta_s", self.eta_s)?;
        check_fraction("eta_i", self.eta_i)?;
        for (name, value) in [
            ("dark_s", self.dark_s),
            ("dark_i", self.dark_i),
            ("pair_rate", self.pair_rate),
            ("window", self.window),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and non-negative",
                });
            }
        }
        if !(self.acquisition > 0.0 && self.acquisition.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "acquisition",
                value: self.acquisition,
                reason: "must be positive",
            });
        }
        Ok(())
    }

    /// Mean counts for given probabilities.
    pub fn expected(&self, p_coinc: f64, p_signal: f64, p_idler: f64) -> ExpectedCounts {
        let t = self.acquisition;
        let rate_s = self.pair_rate * self.eta_s * p_signal + self.dark_s;
        let rate_i = self.pair_rate * self.eta_i * p_idler + self.dark_i;
        let true_coincidences = self.pair_rate * self.eta_s * self.eta_i * p_coinc * t;
        let accidentals = rate_s * rate_i * self.window * t;
        ExpectedCounts {
            singles_s: rate_s * t,
            singles_i: rate_i * t,
            true_coincidences,
            accidentals,
            coincidences: true_coincidences + accidentals,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCounts {
    pub singles_s: f64,
    pub singles_i: f64,
    pub true_coincidences: f64,
    pub accidentals: f64,
    pub coincidences: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    /// (signal, idler)
    pub settings: (AnalyzerSetting, AnalyzerSetting),
    pub singles_s: u64,
    pub singles_i: u64,
    pub coincidences: u64,
    pub expected_coincidences: f64,
    pub sampling: Sampling,
    pub seed: u64,
}

impl CountRecord {
    /// Coincidences as used by estimators: the draw, or the exact mean for
    /// noiseless records.
    pub fn coincidence_value(&self) -> f64 {
        match self.sampling {
            Sampling::Poisson => self.coincidences as f64,
            Sampling::Expected => self.expected_coincidences,
        }
    }
}

/// SplitMix64 finalizer over `master` and the point index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn poisson(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(u64::MAX)
}

pub fn simulate_counts(
    state: &impl QuantumState,
    signal: &AnalyzerSetting,
    idler: &AnalyzerSetting,
    det: &DetectorModel,
    seed: u64,
) -> Result<CountRecord> {
    det.validate()?;
    let rho = state.density();
    let p = coincidence_probability(&rho, signal, idler)?;
    let ps = single_probability(&rho, signal, Subsystem::Signal)?;
    let pi = single_probability(&rho, idler, Subsystem::Idler)?;
    let mean = det.expected(p, ps, pi);
    let (singles_s, singles_i, coincidences) = match det.sampling {
        Sampling::Poisson => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = poisson(mean.singles_s, &mut rng);
            let i = poisson(mean.singles_i, &mut rng);
            let c = poisson(mean.true_coincidences, &mut rng) + poisson(mean.accidentals, &mut rng);
            (s, i, c)
        }
        Sampling::Expected => (
            mean.singles_s.round() as u64,
            mean.singles_i.round() as u64,
            mean.coincidences.round() as u64,
        ),
    };
    Ok(CountRecord {
        settings: (*signal, *idler),
        singles_s,
        singles_i,
        coincidences,
        expected_coincidences: mean.coincidences,
        sampling: det.sampling,
        seed,
    })
}

/// Simulates a list of setting pairs in parallel; point `k` uses
/// `derive_seed(seed, k)`.
pub fn simulate_settings(
    state: &impl QuantumState,
    settings: &[(AnalyzerSetting, AnalyzerSetting)],
    det: &DetectorModel,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    let rho = state.density();
    settings
        .par_iter()
        .enumerate()
        .map(|(k, (s, i))| simulate_counts(&rho, s, i, det, derive_seed(seed, k as u64)))
        .collect()
}

/// Scans the idler HWP (QWP at zero) over `sweep` (radians) with the signal
/// analyzer held at `fixed`.
pub fn fringe_scan(
    state: &impl QuantumState,
    fixed: &AnalyzerSetting,
    sweep: &[f64],
    det: &DetectorModel,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    let settings: Vec<_> = sweep.iter().map(|&h| (*fixed, AnalyzerSetting::new(h, 0.0))).collect();
    simulate_settings(state, &settings, det, seed)
}

/// One row of a Bell scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellPoint {
    /// GP-stack HWP angle, radians.
    pub theta_h: f64,
    pub s: f64,
    pub sigma_s: f64,
    /// `E(a,b), E(a,b'), E(a',b), E(a',b')`
    pub correlations: [f64; 4],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BellOptions {
    pub angles: ChshAngles,
    pub form: ChshForm,
}

/// The sixteen `(signal, idler)` settings behind one CHSH estimate, four
/// port combinations per angle pair in the order `++, +−, −+, −−`.
pub fn chsh_settings(angles: &ChshAngles) -> Vec<(AnalyzerSetting, AnalyzerSetting)> {
    let mut out = Vec::with_capacity(16);
    for (a, b) in angles.pairs() {
        for da in [0.0, QUARTER_TURN] {
            for db in [0.0, QUARTER_TURN] {
                out.push((AnalyzerSetting::linear(a + da), AnalyzerSetting::linear(b + db)));
            }
        }
    }
    out
}

/// `(E, σ_E)` from `N₊₊, N₊₋, N₋₊, N₋₋`.
pub fn correlation_from_counts(n: [f64; 4]) -> (f64, f64) {
    let signs = [1.0, -1.0, -1.0, 1.0];
    let total: f64 = n.iter().sum();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let e = n.iter().zip(signs).map(|(c, s)| s * c).sum::<f64>() / total;
    let var = n.iter().zip(signs).map(|(c, s)| (s - e).powi(2) * c).sum::<f64>() / (total * total);
    (e, var.sqrt())
}

/// CHSH estimate from the sixteen records of [`chsh_settings`].
pub fn chsh_from_records(records: &[CountRecord], form: ChshForm) -> (f64, f64, [f64; 4]) {
    let mut e = [0.0; 4];
    let mut var = 0.0;
    for (k, chunk) in records.chunks(4).take(4).enumerate() {
        let n = [0, 1, 2, 3].map(|j| chunk[j].coincidence_value());
        let (ek, sk) = correlation_from_counts(n);
        e[k] = ek;
        var += sk * sk;
    }
    (form.combine(e), var.sqrt(), e)
}

pub fn bell_scan(theta_grid: &[f64], imp: &SourceImperfection, det: &DetectorModel, seed: u64) -> Result<Vec<BellPoint>> {
    bell_scan_with(theta_grid, imp, det, seed, &BellOptions::default())
}

/// CHSH value versus GP-stack HWP angle. The state at `θ_H` carries
/// geometric phase `2θ_H`.
pub fn bell_scan_with(
    theta_grid: &[f64],
    imp: &SourceImperfection,
    det: &DetectorModel,
    seed: u64,
    opts: &BellOptions,
) -> Result<Vec<BellPoint>> {
    det.validate()?;
    let settings = chsh_settings(&opts.angles);
    theta_grid
        .par_iter()
        .enumerate()
        .map(|(k, &theta_h)| {
            let rho = imperfect_state(2.0 * theta_h, imp)?;
            let records = simulate_settings(&rho, &settings, det, derive_seed(seed, k as u64))?;
            let (s, sigma_s, correlations) = chsh_from_records(&records, opts.form);
            Ok(BellPoint {
                theta_h,
                s,
                sigma_s,
                correlations,
            })
        })
        .collect()
}

/// One CHSH estimate for an arbitrary state, labeled with `theta_h`.
pub fn bell_point(
    state: &impl QuantumState,
    theta_h: f64,
    det: &DetectorModel,
    seed: u64,
    opts: &BellOptions,
) -> Result<BellPoint> {
    det.validate()?;
    let records = simulate_settings(state, &chsh_settings(&opts.angles), det, seed)?;
    let (s, sigma_s, correlations) = chsh_from_records(&records, opts.form);
    Ok(BellPoint {
        theta_h,
        s,
        sigma_s,
        correlations,
    })
}

/// Inclusive grid `from, from + step, …, to` (any units). The last point is
/// kept when `to` is hit to within a millionth of a step.
pub fn angle_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite() && from.is_finite() && to.is_finite()) || to < from {
        return Err(Error::InvalidParameter {
            name: "step",
            value: step,
            reason: "need finite from <= to and step > 0",
        });
    }
    let n = ((to - from) / step + 1e-6).floor() as usize;
    Ok((0..=n).map(|k| from + k as f64 * step).collect())
}

/// Radians to degrees for tables. Values within 1e-9 deg of a micro-degree
/// are snapped to it, which hides conversion noise such as `14.999999999999998`.
pub fn report_deg(rad: f64) -> f64 {
    let d = rad.to_degrees();
    let snapped = (d * 1e6).round() / 1e6;
    if (d - snapped).abs() < 1e-9 {
        snapped + 0.0
    } else {
        d
    }
}

/// Flat CSV row for a [`CountRecord`]; angles in degrees.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    signal_hwp_deg: f64,
    signal_qwp_deg: f64,
    idler_hwp_deg: f64,
    idler_qwp_deg: f64,
    signal_label: Option<Polarization>,
    idler_label: Option<Polarization>,
    singles_s: u64,
    singles_i: u64,
    coincidences: u64,
    expected_coincidences: f64,
    sampling: Sampling,
    seed: u64,
}

pub fn write_counts_csv<W: Write>(writer: W, records: &[CountRecord]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        let (s, i) = r.settings;
        w.serialize(CsvRow {
            signal_hwp_deg: report_deg(s.hwp),
            signal_qwp_deg: report_deg(s.qwp),
            idler_hwp_deg: report_deg(i.hwp),
            idler_qwp_deg: report_deg(i.qwp),
            signal_label: s.label,
            idler_label: i.label,
            singles_s: r.singles_s,
            singles_i: r.singles_i,
            coincidences: r.coincidences,
            expected_coincidences: r.expected_coincidences,
            sampling: r.sampling,
            seed: r.seed,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_counts_csv<R: Read>(reader: R) -> std::result::Result<Vec<CountRecord>, csv::Error> {
    let mut rd = csv::Reader::from_reader(reader);
    rd.deserialize::<CsvRow>()
        .map(|row| {
            let row = row?;
            let setting = |h: f64, q: f64, label| AnalyzerSetting {
                hwp: h.to_radians(),
                qwp: q.to_radians(),
                label,
            };
            Ok(CountRecord {
                settings: (
                    setting(row.signal_hwp_deg, row.signal_qwp_deg, row.signal_label),
                    setting(row.idler_hwp_deg, row.idler_qwp_deg, row.idler_label),
                ),
                singles_s: row.singles_s,
                singles_i: row.singles_i,
                coincidences: row.coincidences,
                expected_coincidences: row.expected_coincidences,
                sampling: row.sampling,
                seed: row.seed,
            })
        })
        .collect()
}
