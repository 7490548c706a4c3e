//! Two-photon polarization states and their figures of merit.
//!
//! Basis order is `(HH, HV, VH, VV)` with the signal photon first. Pauli
//! operators use `σ_z = diag(1, −1)` with `|H⟩ ↔ +1`, so the
//! `(|HH⟩ − e^{2iφ}|VV⟩)/√2` family has `t_zz = 1`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use num_complex::Complex64 as C64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, ONE, ZERO};
use crate::polarization::NORM_TOLERANCE;

pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const TRACE_TOLERANCE: f64 = 1e-10;
/// Eigenvalues down to this value count as zero.
pub const EIGENVALUE_FLOOR: f64 = -1e-9;

pub const HH: usize = 0;
pub const HV: usize = 1;
pub const VH: usize = 2;
pub const VV: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    Signal,
    Idler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

/// Pure two-photon state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitPure([C64; 4]);

impl TwoQubitPure {
    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        let s = TwoQubitPure(amplitudes);
        let n = s.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized {
                what: "two-photon state",
                norm_sqr: n,
            });
        }
        Ok(s)
    }

    /// Normalizes the given amplitudes.
    pub fn normalized(amplitudes: [C64; 4]) -> Result<Self> {
        let n: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized {
                what: "two-photon state",
                norm_sqr: n,
            });
        }
        let s = 1.0 / n.sqrt();
        Ok(TwoQubitPure(amplitudes.map(|a| a * s)))
    }

    pub fn product(signal: &crate::polarization::JonesVector, idler: &crate::polarization::JonesVector) -> Result<Self> {
        TwoQubitPure::new(linalg::kron_vec(&signal.amplitudes(), &idler.amplitudes()))
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &TwoQubitPure) -> C64 {
        linalg::inner(&self.0, &other.0)
    }

    /// Removes the global phase: the first amplitude with modulus above
    /// 1e-12 is made real and positive.
    pub fn canonical_phase(&self) -> TwoQubitPure {
        match self.0.iter().find(|a| a.norm() > 1e-12) {
            Some(a) => {
                let rot = C64::from_polar(1.0, -a.arg());
                TwoQubitPure(self.0.map(|x| x * rot))
            }
            None => *self,
        }
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix(linalg::outer(&self.0, &self.0))
    }
}

/// `(|HH⟩ − e^{2iφ}|VV⟩)/√2`, the state produced by a pump carrying
/// geometric phase `phi`.
pub fn gp_state(phi: f64) -> TwoQubitPure {
    let s = FRAC_1_SQRT_2;
    TwoQubitPure([
        C64::new(s, 0.0),
        ZERO,
        ZERO,
        -C64::from_polar(s, 2.0 * phi),
    ])
}

pub fn bell_state(which: BellState) -> TwoQubitPure {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let amps = match which {
        BellState::PhiPlus => [s, ZERO, ZERO, s],
        BellState::PhiMinus => [s, ZERO, ZERO, -s],
        BellState::PsiPlus => [ZERO, s, s, ZERO],
        BellState::PsiMinus => [ZERO, s, -s, ZERO],
    };
    TwoQubitPure(amps)
}

/// Anything that can be viewed as a two-photon density matrix.
pub trait QuantumState {
    fn density(&self) -> DensityMatrix;
}

impl QuantumState for TwoQubitPure {
    fn density(&self) -> DensityMatrix {
        TwoQubitPure::density(self)
    }
}

impl QuantumState for DensityMatrix {
    fn density(&self) -> DensityMatrix {
        *self
    }
}

/// 4×4 two-photon density operator.
///
/// Construction through [`DensityMatrix::new`] checks physicality;
/// [`DensityMatrix::from_entries_unchecked`] exists for estimators whose
/// output may be slightly unphysical.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Mat<4>);

impl DensityMatrix {
    pub fn new(entries: Mat<4>) -> Result<Self> {
        let rho = DensityMatrix(entries);
        rho.check_physical()?;
        Ok(rho)
    }

    pub fn from_entries_unchecked(entries: Mat<4>) -> Self {
        DensityMatrix(entries)
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(linalg::scale(&linalg::identity(), C64::new(0.25, 0.0)))
    }

    /// `v |ψ⟩⟨ψ| + (1 − v) I/4`
    pub fn werner(v: f64, target: &TwoQubitPure) -> Result<Self> {
        check_fraction("werner_v", v)?;
        let pure = linalg::scale(&target.density().0, C64::new(v, 0.0));
        let noise = linalg::scale(&Self::maximally_mixed().0, C64::new(1.0 - v, 0.0));
        Ok(DensityMatrix(linalg::add(&pure, &noise)))
    }

    pub fn entries(&self) -> &Mat<4> {
        &self.0
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.0)
    }

    pub fn eigen(&self) -> linalg::Eigh<4> {
        linalg::eigh(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().values[3]
    }

    pub fn check_physical(&self) -> Result<()> {
        let herm = linalg::hermiticity_defect(&self.0);
        if !(herm <= HERMITICITY_TOLERANCE) {
            return Err(Error::Unphysical(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = self.trace();
        if !((tr.re - 1.0).abs() <= TRACE_TOLERANCE && tr.im.abs() <= TRACE_TOLERANCE) {
            return Err(Error::Unphysical(format!("trace {tr} != 1")));
        }
        let min = self.min_eigenvalue();
        if min < EIGENVALUE_FLOOR {
            return Err(Error::Unphysical(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn is_physical(&self) -> bool {
        self.check_physical().is_ok()
    }

    /// Sets negative eigenvalues to zero and renormalizes the trace.
    /// Returns the projected matrix and the magnitude of the most negative
    /// eigenvalue removed (0 if none).
    pub fn clamp_negative_eigenvalues(&self) -> (DensityMatrix, f64) {
        let e = self.eigen();
        let clamp = e.values.iter().fold(0.0_f64, |acc, &x| acc.max(-x));
        if clamp == 0.0 {
            return (*self, 0.0);
        }
        let positive_sum: f64 = e.values.iter().filter(|&&x| x > 0.0).sum();
        let m = e.reconstruct_with(|x| if x > 0.0 { x / positive_sum } else { 0.0 });
        (DensityMatrix(m), clamp)
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn expectation(&self, psi: &TwoQubitPure) -> f64 {
        let r = linalg::mat_vec(&self.0, &psi.amplitudes());
        linalg::inner(&psi.amplitudes(), &r).re
    }

    /// `Tr(ρ O)` for a Hermitian observable, real part.
    pub fn expectation_operator(&self, op: &Mat<4>) -> f64 {
        linalg::trace(&linalg::matmul(&self.0, op)).re
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = linalg::sub(&self.0, &other.0);
        0.5 * linalg::eigh(&diff).values.iter().map(|x| x.abs()).sum::<f64>()
    }

    pub fn purity(&self) -> f64 {
        linalg::trace(&linalg::matmul(&self.0, &self.0)).re
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .0
            .iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
            return Err(D::Error::custom("density matrix must be 4 rows of 4 [re, im] pairs"));
        }
        let mut m = linalg::zeros::<4>();
        for (i, row) in rows.iter().enumerate() {
            for (j, &[re, im]) in row.iter().enumerate() {
                m[i][j] = C64::new(re, im);
            }
        }
        Ok(DensityMatrix(m))
    }
}

pub(crate) fn check_fraction(name: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: x,
            reason: "must lie in [0, 1]",
        })
    }
}

/// `|⟨a|b⟩|²`
pub fn fidelity_pure(a: &TwoQubitPure, b: &TwoQubitPure) -> f64 {
    a.inner(b).norm_sqr().min(1.0)
}

/// `⟨target|ρ|target⟩`, after clamping eigenvalues in `(−1e-9, 0)`.
pub fn fidelity_mixed(rho: &DensityMatrix, target: &TwoQubitPure) -> Result<f64> {
    rho.check_physical()?;
    let (rho, _) = rho.clamp_negative_eigenvalues();
    Ok(rho.expectation(target).clamp(0.0, 1.0))
}

/// Reduced single-photon density matrix.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> Mat<2> {
    let m = &rho.0;
    let mut out = linalg::zeros::<2>();
    for a in 0..2 {
        for b in 0..2 {
            out[a][b] = match keep {
                Subsystem::Signal => (0..2).map(|k| m[2 * a + k][2 * b + k]).sum(),
                Subsystem::Idler => (0..2).map(|k| m[2 * k + a][2 * k + b]).sum(),
            };
        }
    }
    out
}

/// Von Neumann entropy (bits) of a single-qubit density matrix.
pub fn von_neumann_entropy_qubit(rho: &Mat<2>) -> f64 {
    linalg::eigvals_hermitian_2x2(rho)
        .iter()
        .map(|&l| l.max(0.0))
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.log2())
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Entropy (bits) of the signal photon's reduced state.
///
/// For a pure global state this is the entanglement entropy. For a mixed
/// global state it is only the entropy of the marginal, which also counts
/// classical mixing.
pub fn entanglement_entropy(state: &impl QuantumState) -> Result<f64> {
    let rho = state.density();
    rho.check_physical()?;
    let (rho, _) = rho.clamp_negative_eigenvalues();
    Ok(von_neumann_entropy_qubit(&partial_trace(&rho, Subsystem::Signal)))
}

/// Binary entropy `h(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    [p, 1.0 - p]
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

pub fn pauli(index: usize) -> Mat<2> {
    match index {
        0 => linalg::identity(),
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("pauli index {index} out of range"),
    }
}

/// `t_mn = Tr(ρ σ_m ⊗ σ_n)` for m, n ∈ {x, y, z}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix(pub [[f64; 3]; 3]);

impl CorrelationMatrix {
    /// Eigenvalues of `TᵀT`, descending.
    pub fn gram_eigenvalues(&self) -> [f64; 3] {
        let t = &self.0;
        let mut g = linalg::zeros::<3>();
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = C64::new((0..3).map(|k| t[k][i] * t[k][j]).sum(), 0.0);
            }
        }
        linalg::eigh(&g).values
    }
}

pub fn correlation_matrix(rho: &DensityMatrix) -> Result<CorrelationMatrix> {
    rho.check_physical()?;
    let mut t = [[0.0; 3]; 3];
    for (m, row) in t.iter_mut().enumerate() {
        for (n, entry) in row.iter_mut().enumerate() {
            let op = linalg::kron(&pauli(m + 1), &pauli(n + 1));
            *entry = rho.expectation_operator(&op).clamp(-1.0, 1.0);
        }
    }
    Ok(CorrelationMatrix(t))
}

/// Largest CHSH value reachable with optimal analyzer settings:
/// `2·√(u₁ + u₂)` with `u₁ ≥ u₂` the top eigenvalues of `TᵀT`.
pub fn horodecki_smax(rho: &DensityMatrix) -> Result<f64> {
    let u = correlation_matrix(rho)?.gram_eigenvalues();
    let sum = (u[0] + u[1]).max(0.0);
    Ok((2.0 * sum.sqrt()).min(2.0 * SQRT_2))
}
