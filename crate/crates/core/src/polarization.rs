//! Jones calculus for the classical pump.
//!
//! Vectors are ordered `(H, V)`; angles are radians measured from the
//! horizontal axis.
//!
//! # Retarder convention
//!
//! A linear retarder with retardance `Γ` and fast axis at `θ` is
//!
//! ```text
//! W(Γ, θ) = R(θ) · diag(1, e^{−iΓ}) · R(−θ),    R(θ) = [[cos θ, −sin θ], [sin θ, cos θ]]
//! ```
//!
//! so the component along the fast axis keeps its phase and the slow-axis
//! component lags by `Γ`. With this choice a half-wave plate at 0 is
//! `diag(1, −1)`, and the quarter/half/quarter stack with both quarter-wave
//! plates at 45° is exactly `−i · diag(e^{2iθ_H}, −e^{−2iθ_H})`: the
//! geometric-phase transfer matrix up to one constant global phase `−i`
//! that does not depend on `θ_H`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, ONE, ZERO};

/// Tolerance used for "is normalized" checks on classical and photon states.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Named polarization states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    /// `(|H⟩ − i|V⟩)/√2`
    R,
    /// `(|H⟩ + i|V⟩)/√2`
    L,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Polarization::H,
        Polarization::V,
        Polarization::D,
        Polarization::A,
        Polarization::R,
        Polarization::L,
    ];

    pub fn jones(self) -> JonesVector {
        let s = FRAC_1_SQRT_2;
        let (h, v) = match self {
            Polarization::H => (ONE, ZERO),
            Polarization::V => (ZERO, ONE),
            Polarization::D => (C64::new(s, 0.0), C64::new(s, 0.0)),
            Polarization::A => (C64::new(s, 0.0), C64::new(-s, 0.0)),
            Polarization::R => (C64::new(s, 0.0), C64::new(0.0, -s)),
            Polarization::L => (C64::new(s, 0.0), C64::new(0.0, s)),
        };
        JonesVector::new(h, v)
    }

    pub fn orthogonal(self) -> Polarization {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
            Polarization::D => Polarization::A,
            Polarization::A => Polarization::D,
            Polarization::R => Polarization::L,
            Polarization::L => Polarization::R,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Polarization::H => "H",
            Polarization::V => "V",
            Polarization::D => "D",
            Polarization::A => "A",
            Polarization::R => "R",
            Polarization::L => "L",
        };
        f.write_str(s)
    }
}

impl FromStr for Polarization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "H" => Ok(Polarization::H),
            "V" => Ok(Polarization::V),
            "D" => Ok(Polarization::D),
            "A" => Ok(Polarization::A),
            "R" => Ok(Polarization::R),
            "L" => Ok(Polarization::L),
            other => Err(format!("unknown polarization '{other}' (expected H, V, D, A, R or L)")),
        }
    }
}

/// Complex amplitudes `(c_H, c_V)` of a polarization state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JonesVector([C64; 2]);

impl JonesVector {
    pub fn new(h: C64, v: C64) -> Self {
        JonesVector([h, v])
    }

    /// Linear polarization at `angle` from horizontal.
    pub fn linear(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        JonesVector::new(C64::new(c, 0.0), C64::new(s, 0.0))
    }

    pub fn h(&self) -> C64 {
        self.0[0]
    }

    pub fn v(&self) -> C64 {
        self.0[1]
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized {
                what: "Jones vector",
                norm_sqr: n,
            });
        }
        let s = 1.0 / n.sqrt();
        Ok(JonesVector([self.0[0] * s, self.0[1] * s]))
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &JonesVector) -> C64 {
        linalg::inner(&self.0, &other.0)
    }

    pub fn scaled(&self, s: C64) -> Self {
        JonesVector([self.0[0] * s, self.0[1] * s])
    }

    pub(crate) fn require_normalized(&self, what: &'static str) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                what,
                norm_sqr: self.norm_sqr(),
            })
        }
    }
}

/// A 2×2 Jones operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JonesMatrix(Mat<2>);

impl JonesMatrix {
    pub fn new(entries: Mat<2>) -> Self {
        JonesMatrix(entries)
    }

    pub fn identity() -> Self {
        JonesMatrix(linalg::identity())
    }

    pub fn diag(a: C64, b: C64) -> Self {
        JonesMatrix([[a, ZERO], [ZERO, b]])
    }

    pub fn entries(&self) -> &Mat<2> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        JonesMatrix(linalg::adjoint(&self.0))
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn apply(&self, v: &JonesVector) -> JonesVector {
        JonesVector(linalg::mat_vec(&self.0, &v.0))
    }

    /// `max |(M†M − I)_ij|`
    pub fn unitarity_defect(&self) -> f64 {
        let p = linalg::matmul(&self.adjoint().0, &self.0);
        linalg::max_abs_diff(&p, &linalg::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn max_abs_diff(&self, other: &JonesMatrix) -> f64 {
        linalg::max_abs_diff(&self.0, &other.0)
    }

    /// Largest entrywise deviation between `self` and `e^{iγ}·other`, with
    /// `γ` chosen from the largest entry of `other`. Returns the deviation and
    /// the global phase.
    pub fn diff_up_to_global_phase(&self, other: &JonesMatrix) -> (f64, f64) {
        let (i, j) = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .max_by(|&(a, b), &(c, d)| other.0[a][b].norm().total_cmp(&other.0[c][d].norm()))
            .unwrap();
        let gamma = if self.0[i][j].norm() == 0.0 {
            0.0
        } else {
            (self.0[i][j] / other.0[i][j]).arg()
        };
        let rotated = JonesMatrix(linalg::scale(&other.0, C64::from_polar(1.0, gamma)));
        (self.max_abs_diff(&rotated), gamma)
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        JonesMatrix(linalg::matmul(&self.0, &rhs.0))
    }
}

impl Mul<JonesVector> for JonesMatrix {
    type Output = JonesVector;

    fn mul(self, rhs: JonesVector) -> JonesVector {
        self.apply(&rhs)
    }
}

fn rotation(theta: f64) -> JonesMatrix {
    let (s, c) = theta.sin_cos();
    JonesMatrix([[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]])
}

/// Linear retarder with the given retardance and fast-axis angle (see the
/// module docs for the phase convention).
pub fn waveplate(retardance: f64, fast_axis: f64) -> JonesMatrix {
    let core = JonesMatrix::diag(ONE, C64::from_polar(1.0, -retardance));
    rotation(fast_axis) * core * rotation(-fast_axis)
}

pub fn half_wave_plate(fast_axis: f64) -> JonesMatrix {
    waveplate(PI, fast_axis)
}

pub fn quarter_wave_plate(fast_axis: f64) -> JonesMatrix {
    waveplate(FRAC_PI_2, fast_axis)
}

/// The geometric-phase stack: QWP(45°), HWP(`theta_h`), QWP(45°).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpSetup {
    pub theta_h: f64,
}

impl GpSetup {
    pub fn new(theta_h: f64) -> Self {
        GpSetup { theta_h }
    }

    /// φ = 2θ_H.
    pub fn geometric_phase(&self) -> f64 {
        2.0 * self.theta_h
    }

    /// The stack composed from its three waveplates. Equals
    /// [`qhq_transfer`] times the constant `−i`.
    pub fn composed(&self) -> JonesMatrix {
        let q = quarter_wave_plate(FRAC_PI_4);
        q * half_wave_plate(self.theta_h) * q
    }
}

/// `diag(e^{2iθ_H}, −e^{−2iθ_H})`.
pub fn qhq_transfer(setup: GpSetup) -> JonesMatrix {
    let phi = setup.geometric_phase();
    JonesMatrix::diag(C64::from_polar(1.0, phi), -C64::from_polar(1.0, -phi))
}

/// `arg⟨a|b⟩` in `(−π, π]`.
pub fn pancharatnam_phase(a: &JonesVector, b: &JonesVector) -> Result<f64> {
    let overlap = a.inner(b);
    let scale = (a.norm_sqr() * b.norm_sqr()).sqrt();
    if overlap.norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::UndefinedPhase {
            overlap: overlap.norm(),
        });
    }
    let phase = overlap.arg();
    // atan2 already returns (−π, π]; map an exact −π to π.
    Ok(if phase <= -PI { PI } else { phase })
}

/// What to do with inputs whose norm is not 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NormPolicy {
    #[default]
    Reject,
    Normalize,
}

/// Fraction of pump power transmitted by a polarizer that passes
/// `polarizer_basis`, `|⟨basis|pump⟩|²`. Rejects unnormalized inputs.
pub fn classical_projection_power(pump: &JonesVector, polarizer_basis: &JonesVector) -> Result<f64> {
    classical_projection_power_with(pump, polarizer_basis, NormPolicy::Reject)
}

pub fn classical_projection_power_with(
    pump: &JonesVector,
    polarizer_basis: &JonesVector,
    policy: NormPolicy,
) -> Result<f64> {
    let (pump, basis) = match policy {
        NormPolicy::Reject => {
            pump.require_normalized("pump")?;
            polarizer_basis.require_normalized("polarizer basis")?;
            (*pump, *polarizer_basis)
        }
        NormPolicy::Normalize => (pump.normalized()?, polarizer_basis.normalized()?),
    };
    Ok(basis.inner(&pump).norm_sqr().clamp(0.0, 1.0))
}

/// Port powers `(P_H, P_V, P_D, P_A)` of the pump after the stack, for a
/// diagonal input.
pub fn pump_port_powers(setup: GpSetup) -> [f64; 4] {
    let pump = qhq_transfer(setup).apply(&Polarization::D.jones());
    [Polarization::H, Polarization::V, Polarization::D, Polarization::A]
        .map(|p| p.jones().inner(&pump).norm_sqr())
}
