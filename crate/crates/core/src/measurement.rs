//! Projective polarization analysis of photon pairs.
//!
//! Each analyzer is a half-wave plate, then a quarter-wave plate, then a
//! polarizing beam splitter whose transmitted port passes `|H⟩`. The state
//! that is transmitted with certainty is found by back-propagating `|H⟩`
//! through the QWP and then the HWP: `|m⟩ = HWP(h)† QWP(q)† |H⟩`. The
//! reflected port projects onto the orthogonal state built from `|V⟩`.
//!
//! With the QWP at 0 the stack is a linear polarizer at twice the HWP
//! angle, which is how the fringes are scanned.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg;
use crate::polarization::{half_wave_plate, quarter_wave_plate, JonesVector, Polarization};
use crate::state::{QuantumState, TwoQubitPure};

/// Waveplate angles (radians) of one analyzer arm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub hwp: f64,
    pub qwp: f64,
    pub label: Option<Polarization>,
}

impl AnalyzerSetting {
    pub fn new(hwp: f64, qwp: f64) -> Self {
        AnalyzerSetting {
            hwp,
            qwp,
            label: None,
        }
    }

    /// Setting that transmits the named polarization.
    pub fn labeled(label: Polarization) -> Self {
        let (hwp_deg, qwp_deg): (f64, f64) = match label {
            Polarization::H => (0.0, 0.0),
            Polarization::V => (45.0, 0.0),
            Polarization::D => (22.5, 0.0),
            Polarization::A => (67.5, 0.0),
            Polarization::R => (0.0, 135.0),
            Polarization::L => (0.0, 45.0),
        };
        let s = AnalyzerSetting {
            hwp: hwp_deg.to_radians(),
            qwp: qwp_deg.to_radians(),
            label: Some(label),
        };
        debug_assert!((s.projector().inner(&label.jones()).norm() - 1.0).abs() < 1e-12);
        s
    }

    /// Linear polarizer at `angle` from horizontal.
    pub fn linear(angle: f64) -> Self {
        AnalyzerSetting::new(0.5 * angle, 0.0)
    }

    /// Polarizer angle for a QWP-at-zero setting; `None` otherwise.
    pub fn polarizer_angle(&self) -> Option<f64> {
        (self.qwp == 0.0).then_some(2.0 * self.hwp)
    }

    fn back_propagate(&self, port: &JonesVector) -> JonesVector {
        let h = half_wave_plate(self.hwp).adjoint();
        let q = quarter_wave_plate(self.qwp).adjoint();
        h.apply(&q.apply(port))
    }

    /// State transmitted by the PBS port.
    pub fn projector(&self) -> JonesVector {
        self.back_propagate(&Polarization::H.jones())
    }

    /// State sent to the reflected port.
    pub fn orthogonal_projector(&self) -> JonesVector {
        self.back_propagate(&Polarization::V.jones())
    }

    pub fn port(&self, port: Port) -> JonesVector {
        match port {
            Port::Transmitted => self.projector(),
            Port::Reflected => self.orthogonal_projector(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Port {
    /// `+`: photon emerges from the analyzer.
    Transmitted,
    /// `−`: photon goes to the orthogonal port.
    Reflected,
}

impl Port {
    pub fn sign(self) -> f64 {
        match self {
            Port::Transmitted => 1.0,
            Port::Reflected => -1.0,
        }
    }
}

/// Born-rule probability for one port combination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementOutcome {
    pub probability: f64,
    /// `|m_s⟩ ⊗ |m_i⟩`; the outcome projector is its outer product.
    pub projector: TwoQubitPure,
}

pub fn outcome(
    state: &impl QuantumState,
    signal: &AnalyzerSetting,
    signal_port: Port,
    idler: &AnalyzerSetting,
    idler_port: Port,
) -> Result<MeasurementOutcome> {
    let rho = state.density();
    rho.check_physical()?;
    let projector = TwoQubitPure::product(&signal.port(signal_port), &idler.port(idler_port))?;
    Ok(MeasurementOutcome {
        probability: rho.expectation(&projector).clamp(0.0, 1.0),
        projector,
    })
}

/// Probability that both photons are transmitted.
pub fn coincidence_probability(
    state: &impl QuantumState,
    signal: &AnalyzerSetting,
    idler: &AnalyzerSetting,
) -> Result<f64> {
    Ok(outcome(state, signal, Port::Transmitted, idler, Port::Transmitted)?.probability)
}

/// Probability that one photon is transmitted, whatever its partner does.
pub fn single_probability(
    state: &impl QuantumState,
    setting: &AnalyzerSetting,
    arm: crate::state::Subsystem,
) -> Result<f64> {
    let rho = state.density();
    rho.check_physical()?;
    let reduced = crate::state::partial_trace(&rho, arm);
    let m = setting.projector().amplitudes();
    let rm = linalg::mat_vec(&reduced, &m);
    Ok(linalg::inner(&m, &rm).re.clamp(0.0, 1.0))
}

/// Coincidence probability for linear polarizers on the ideal geometric
/// phase state, in closed form:
/// `½(cos²Θs cos²Θi + sin²Θs sin²Θi − ½ sin2Θs sin2Θi cos2φ)`.
pub fn gp_coincidence_closed_form(phi: f64, theta_s: f64, theta_i: f64) -> f64 {
    let (ss, cs) = theta_s.sin_cos();
    let (si, ci) = theta_i.sin_cos();
    0.5 * (cs * cs * ci * ci + ss * ss * si * si
        - 0.5 * (2.0 * theta_s).sin() * (2.0 * theta_i).sin() * (2.0 * phi).cos())
}

/// Coincidence probability with both analyzers on D (or both on A):
/// `¼(1 − cos 2φ)`.
pub fn gp_diagonal_coincidence(phi: f64) -> f64 {
    0.25 * (1.0 - (2.0 * phi).cos())
}

/// Correlation `P(+,+) + P(−,−) − P(+,−) − P(−,+)` for linear polarizers at
/// `theta_s`, `theta_i`, with ± the two PBS ports.
pub fn correlation(state: &impl QuantumState, theta_s: f64, theta_i: f64) -> Result<f64> {
    correlation_with_settings(
        state,
        &AnalyzerSetting::linear(theta_s),
        &AnalyzerSetting::linear(theta_i),
    )
}

pub fn correlation_with_settings(
    state: &impl QuantumState,
    signal: &AnalyzerSetting,
    idler: &AnalyzerSetting,
) -> Result<f64> {
    let rho = state.density();
    let mut c = 0.0;
    for ps in [Port::Transmitted, Port::Reflected] {
        for pi in [Port::Transmitted, Port::Reflected] {
            c += ps.sign() * pi.sign() * outcome(&rho, signal, ps, idler, pi)?.probability;
        }
    }
    Ok(c.clamp(-1.0, 1.0))
}

/// `cos2Θs cos2Θi − sin2Θs sin2Θi cos2φ`
pub fn gp_correlation_closed_form(phi: f64, theta_s: f64, theta_i: f64) -> f64 {
    (2.0 * theta_s).cos() * (2.0 * theta_i).cos()
        - (2.0 * theta_s).sin() * (2.0 * theta_i).sin() * (2.0 * phi).cos()
}

/// Polarizer angles `(Θs, Θi, Θ's, Θ'i)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub theta_s: f64,
    pub theta_i: f64,
    pub theta_s_prime: f64,
    pub theta_i_prime: f64,
}

impl Default for ChshAngles {
    /// (0°, 22.5°, 45°, 67.5°)
    fn default() -> Self {
        ChshAngles {
            theta_s: 0.0,
            theta_i: FRAC_PI_4 / 2.0,
            theta_s_prime: FRAC_PI_4,
            theta_i_prime: 3.0 * FRAC_PI_4 / 2.0,
        }
    }
}

impl ChshAngles {
    /// The four `(Θs, Θi)` pairs in the order `E(a,b), E(a,b'), E(a',b), E(a',b')`.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.theta_s, self.theta_i),
            (self.theta_s, self.theta_i_prime),
            (self.theta_s_prime, self.theta_i),
            (self.theta_s_prime, self.theta_i_prime),
        ]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChshForm {
    /// `|C(a,b) − C(a,b')| + |C(a',b) + C(a',b')|`, never below √2 for the
    /// ideal geometric-phase states.
    #[default]
    Absolute,
    /// `C(a,b) − C(a,b') + C(a',b) + C(a',b')`.
    Signed,
}

impl ChshForm {
    pub fn combine(self, c: [f64; 4]) -> f64 {
        match self {
            ChshForm::Absolute => (c[0] - c[1]).abs() + (c[2] + c[3]).abs(),
            ChshForm::Signed => c[0] - c[1] + c[2] + c[3],
        }
    }
}

pub fn chsh(state: &impl QuantumState, angles: &ChshAngles) -> Result<f64> {
    chsh_with(state, angles, ChshForm::Absolute)
}

pub fn chsh_with(state: &impl QuantumState, angles: &ChshAngles, form: ChshForm) -> Result<f64> {
    let rho = state.density();
    let mut c = [0.0; 4];
    for (k, (a, b)) in angles.pairs().into_iter().enumerate() {
        c[k] = correlation(&rho, a, b)?;
    }
    Ok(form.combine(c))
}

/// `√2 + √2·|cos 2φ|`
pub fn chsh_closed_form(phi: f64) -> f64 {
    SQRT_2 + SQRT_2 * (2.0 * phi).cos().abs()
}

/// Visibility `(max − min)/(max + min)` of a sampled fringe.
pub fn sampled_visibility(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if max + min <= 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}

pub(crate) const QUARTER_TURN: f64 = FRAC_PI_2;
