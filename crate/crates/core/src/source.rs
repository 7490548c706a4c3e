//! Black-box model of the Sagnac down-conversion source.
//!
//! The H and V pump components drive the two directions of the loop, which
//! emit `|HH⟩` and `|VV⟩` pairs coherently. The emitted amplitudes have the
//! moduli of the pump amplitudes and the opposite relative phase:
//!
//! ```text
//! a|H⟩ + b|V⟩  ↦  a*|HH⟩ + b*|VV⟩   (up to a global phase)
//! ```
//!
//! so a pump `(e^{iφ}|H⟩ − e^{−iφ}|V⟩)/√2` yields `(|HH⟩ − e^{2iφ}|VV⟩)/√2`.
//! Global phases are always discarded.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, ZERO};
use crate::polarization::{qhq_transfer, GpSetup, JonesVector, Polarization};
use crate::state::{check_fraction, DensityMatrix, TwoQubitPure, HH, HV, VH, VV};

/// HV/VH weight above which a state is not in the `a|HH⟩ + b|VV⟩` family.
pub const FAMILY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PumpState {
    jones: JonesVector,
    /// Milliwatts; carried along for bookkeeping only.
    pub power_mw: f64,
}

impl PumpState {
    pub fn new(jones: JonesVector, power_mw: f64) -> Result<Self> {
        jones.require_normalized("pump")?;
        Ok(PumpState { jones, power_mw })
    }

    /// Diagonal pump after the geometric-phase stack at `theta_h`.
    pub fn after_gp_stack(theta_h: f64) -> Self {
        PumpState {
            jones: qhq_transfer(GpSetup::new(theta_h)).apply(&Polarization::D.jones()),
            power_mw: 0.0,
        }
    }

    pub fn jones(&self) -> &JonesVector {
        &self.jones
    }
}

/// State-level imperfections of the source.
///
/// * `amplitude_p`: weight of `|HH⟩` relative to `|VV⟩`; 0.5 is balanced.
/// * `werner_v`: isotropic-noise admixture, `ρ → vρ + (1 − v)I/4`.
/// * `coherence`: scales the `|HH⟩⟨VV|` coherences only, leaving H/V
///   correlations untouched (partial distinguishability of the two loop
///   directions).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceImperfection {
    pub amplitude_p: f64,
    pub werner_v: f64,
    #[serde(default = "one")]
    pub coherence: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for SourceImperfection {
    fn default() -> Self {
        SourceImperfection {
            amplitude_p: 0.5,
            werner_v: 1.0,
            coherence: 1.0,
        }
    }
}

impl SourceImperfection {
    pub fn new(amplitude_p: f64, werner_v: f64) -> Result<Self> {
        let imp = SourceImperfection {
            amplitude_p,
            werner_v,
            coherence: 1.0,
        };
        imp.validate()?;
        Ok(imp)
    }

    pub fn werner(v: f64) -> Result<Self> {
        Self::new(0.5, v)
    }

    pub fn with_coherence(mut self, coherence: f64) -> Result<Self> {
        self.coherence = coherence;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_fraction("amplitude_p", self.amplitude_p)?;
        check_fraction("werner_v", self.werner_v)?;
        check_fraction("coherence", self.coherence)
    }

    /// Applies the imbalance to a pure `a|HH⟩ + b|VV⟩` state: amplitudes
    /// are weighted by `√(2p)` and `√(2(1 − p))` and renormalized, so a
    /// balanced input becomes `√p|HH⟩ + e^{iχ}√(1 − p)|VV⟩`.
    pub fn reweight(&self, state: &TwoQubitPure) -> Result<TwoQubitPure> {
        self.validate()?;
        let mut a = state.amplitudes();
        a[HH] *= (2.0 * self.amplitude_p).sqrt();
        a[VV] *= (2.0 * (1.0 - self.amplitude_p)).sqrt();
        TwoQubitPure::normalized(a).map(|s| s.canonical_phase())
    }

    /// Applies coherence loss then Werner mixing to a density matrix.
    pub fn mix(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.validate()?;
        let mut m = *rho.entries();
        for (i, j) in [(HH, VV), (VV, HH)] {
            m[i][j] *= self.coherence;
        }
        let v = C64::new(self.werner_v, 0.0);
        let noise = linalg::scale(DensityMatrix::maximally_mixed().entries(), C64::new(1.0 - self.werner_v, 0.0));
        Ok(DensityMatrix::from_entries_unchecked(linalg::add(&linalg::scale(&m, v), &noise)))
    }
}

/// Pump-split imbalance that drifts with the stack HWP angle, as
/// `(θ_H, p)` knots (radians) joined linearly and held flat past the ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceProfile {
    knots: Vec<(f64, f64)>,
}

impl ImbalanceProfile {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidParameter {
                name: "imbalance",
                value: 0.0,
                reason: "needs at least one knot",
            });
        }
        for &(theta, p) in &knots {
            if !theta.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "imbalance angle",
                    value: theta,
                    reason: "must be finite",
                });
            }
            check_fraction("amplitude_p", p)?;
        }
        if let Some(w) = knots.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter {
                name: "imbalance angle",
                value: w[1].0,
                reason: "knot angles must increase strictly",
            });
        }
        Ok(ImbalanceProfile { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn at(&self, theta_h: f64) -> f64 {
        let k = &self.knots;
        let (first, last) = (k[0], k[k.len() - 1]);
        if theta_h <= first.0 {
            return first.1;
        }
        if theta_h >= last.0 {
            return last.1;
        }
        let i = k.partition_point(|&(t, _)| t <= theta_h);
        let ((t0, p0), (t1, p1)) = (k[i - 1], k[i]);
        p0 + (p1 - p0) * (theta_h - t0) / (t1 - t0)
    }
}

/// Two-photon state emitted for a given pump polarization.
pub fn spdc_state(pump: &PumpState) -> TwoQubitPure {
    let [a, b] = pump.jones.amplitudes();
    TwoQubitPure::normalized([a.conj(), ZERO, ZERO, b.conj()])
        .expect("pump is normalized by construction")
        .canonical_phase()
}

fn family_weight(state: &TwoQubitPure) -> f64 {
    let a = state.amplitudes();
    a[HV].norm_sqr() + a[VH].norm_sqr()
}

/// Propagation through a birefringent medium that adds `phi_h` to `|HH⟩`
/// and `phi_v` to `|VV⟩`.
pub fn birefringent_evolve(state: &TwoQubitPure, phi_h: f64, phi_v: f64) -> Result<TwoQubitPure> {
    let weight = family_weight(state);
    if weight > FAMILY_TOLERANCE {
        return Err(Error::OutsideFamily { weight });
    }
    let mut a = state.amplitudes();
    a[HH] *= C64::from_polar(1.0, phi_h);
    a[VV] *= C64::from_polar(1.0, phi_v);
    Ok(TwoQubitPure::normalized(a)?.canonical_phase())
}

/// Stack angle that cancels the birefringent phase: solves
/// `2φ + φ_V − φ_H = 0` with `φ = 2θ_H`, reduced to `[0, π/2)`.
pub fn compensation_angle(phi_h: f64, phi_v: f64) -> f64 {
    let phi = 0.5 * (phi_h - phi_v);
    let theta = (0.5 * phi).rem_euclid(FRAC_PI_2);
    // rem_euclid can round up to the modulus itself.
    if theta >= FRAC_PI_2 {
        0.0
    } else {
        theta
    }
}

/// `v |ψ⟩⟨ψ| + (1 − v) I/4` with `|ψ⟩ = √p|HH⟩ − e^{2iφ}√(1 − p)|VV⟩`, and
/// the `|HH⟩⟨VV|` coherences scaled by `imp.coherence` before mixing.
pub fn imperfect_state(phi: f64, imp: &SourceImperfection) -> Result<DensityMatrix> {
    imp.validate()?;
    let p = imp.amplitude_p;
    let psi = TwoQubitPure::new([
        C64::new(p.sqrt(), 0.0),
        ZERO,
        ZERO,
        -C64::from_polar((1.0 - p).sqrt(), 2.0 * phi),
    ])?;
    imp.mix(&psi.density())
}

/// Full source chain for an arbitrary pump: emission, imbalance,
/// birefringent phases, coherence loss and Werner mixing.
pub fn emitted_state(
    pump: &PumpState,
    imp: &SourceImperfection,
    birefringence: Option<(f64, f64)>,
) -> Result<DensityMatrix> {
    let mut psi = imp.reweight(&spdc_state(pump))?;
    if let Some((phi_h, phi_v)) = birefringence {
        psi = birefringent_evolve(&psi, phi_h, phi_v)?;
    }
    imp.mix(&psi.density())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{entanglement_entropy, fidelity_pure, gp_state, binary_entropy};
    use proptest::prelude::*;

    #[test]
    fn imbalance_profile_interpolates() {
        let prof = ImbalanceProfile::new(vec![(0.0, 0.5), (1.0, 0.7), (2.0, 0.6)]).unwrap();
        assert_eq!(prof.at(-1.0), 0.5);
        assert!((prof.at(0.5) - 0.6).abs() < 1e-15);
        assert_eq!(prof.at(1.0), 0.7);
        assert!((prof.at(1.5) - 0.65).abs() < 1e-15);
        assert_eq!(prof.at(9.0), 0.6);
        assert!(ImbalanceProfile::new(vec![]).is_err());
        assert!(ImbalanceProfile::new(vec![(0.0, 0.5), (0.0, 0.6)]).is_err());
        assert!(ImbalanceProfile::new(vec![(0.0, 1.5)]).is_err());
    }

    fn close(a: &TwoQubitPure, b: &TwoQubitPure, tol: f64) -> bool {
        (fidelity_pure(a, b) - 1.0).abs() < tol
    }

    #[test]
    fn unrotated_stack_gives_phi_minus() {
        let out = spdc_state(&PumpState::after_gp_stack(0.0));
        let expected = gp_state(0.0);
        for k in 0..4 {
            assert!((out.amplitudes()[k] - expected.amplitudes()[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn stack_at_22_5_gives_minus_i() {
        let out = spdc_state(&PumpState::after_gp_stack(22.5f64.to_radians()));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected = TwoQubitPure::new([C64::new(s, 0.0), ZERO, ZERO, C64::new(0.0, -s)]).unwrap();
        assert!(close(&out, &expected, 1e-14));
    }

    #[test]
    fn horizontal_pump_gives_product_state() {
        let pump = PumpState::new(Polarization::H.jones(), 2.0).unwrap();
        let out = spdc_state(&pump);
        assert!((out.amplitudes()[HH].norm() - 1.0).abs() < 1e-15);
        assert!(entanglement_entropy(&out).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pump_must_be_normalized() {
        let j = JonesVector::new(C64::new(1.0, 0.0), C64::new(1.0, 0.0));
        assert!(PumpState::new(j, 1.0).is_err());
    }

    #[test]
    fn birefringence_examples() {
        let phi = 0.37;
        let (ph, pv) = (0.2, 1.1);
        let out = birefringent_evolve(&gp_state(phi), ph, pv).unwrap();
        // 2φ' = 2φ + φ_V − φ_H
        let expected = gp_state(phi + 0.5 * (pv - ph));
        assert!(close(&out, &expected, 1e-14));

        let same = birefringent_evolve(&gp_state(phi), 0.8, 0.8).unwrap();
        assert!(close(&same, &gp_state(phi), 1e-14));

        let flipped = birefringent_evolve(&gp_state(0.0), 0.0, std::f64::consts::PI).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi_plus = TwoQubitPure::new([C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]).unwrap();
        assert!(close(&flipped, &phi_plus, 1e-14));
        assert!(close(&flipped, &gp_state(FRAC_PI_2), 1e-14));
    }

    #[test]
    fn birefringence_rejects_states_outside_family() {
        let psi = crate::state::bell_state(crate::state::BellState::PsiPlus);
        assert!(matches!(birefringent_evolve(&psi, 0.1, 0.2), Err(Error::OutsideFamily { .. })));
    }

    #[test]
    fn compensation_examples() {
        assert_eq!(compensation_angle(0.4, 0.4), 0.0);
        let t = compensation_angle(0.0, -FRAC_PI_2);
        assert!((t - 22.5f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn imperfect_state_examples() {
        let phi = 0.9;
        let ideal = imperfect_state(phi, &SourceImperfection::default()).unwrap();
        assert!(crate::linalg::max_abs_diff(ideal.entries(), gp_state(phi).density().entries()) < 1e-15);

        let imb = SourceImperfection::new(0.6, 1.0).unwrap();
        let s = entanglement_entropy(&imperfect_state(phi, &imb).unwrap()).unwrap();
        assert!((s - binary_entropy(0.6)).abs() < 1e-12);
        assert!((s - 0.971).abs() < 1e-3);

        assert!(SourceImperfection::new(1.2, 1.0).is_err());
        assert!(SourceImperfection::new(0.5, -0.1).is_err());
    }

    #[test]
    fn emitted_state_matches_imperfect_state_for_the_stack() {
        let imp = SourceImperfection::new(0.68, 0.9).unwrap().with_coherence(0.8).unwrap();
        for deg in [0.0_f64, 11.0, 22.5, 40.0, 67.5] {
            let t = deg.to_radians();
            let a = emitted_state(&PumpState::after_gp_stack(t), &imp, None).unwrap();
            let b = imperfect_state(2.0 * t, &imp).unwrap();
            assert!(crate::linalg::max_abs_diff(a.entries(), b.entries()) < 1e-14, "{deg}");
            assert!(a.is_physical());
        }
    }

    proptest! {
        #[test]
        fn emission_preserves_pump_moduli(re_h in -1.0f64..1.0, im_h in -1.0f64..1.0, re_v in -1.0f64..1.0, im_v in -1.0f64..1.0) {
            prop_assume!(re_h.abs() + im_h.abs() + re_v.abs() + im_v.abs() > 1e-3);
            let j = JonesVector::new(C64::new(re_h, im_h), C64::new(re_v, im_v)).normalized().unwrap();
            let out = spdc_state(&PumpState::new(j, 1.0).unwrap());
            prop_assert!((out.amplitudes()[HH].norm() - j.h().norm()).abs() < 1e-12);
            prop_assert!((out.amplitudes()[VV].norm() - j.v().norm()).abs() < 1e-12);
        }

        #[test]
        fn birefringence_round_trip(phi in -3.2f64..3.2, ph in -6.3f64..6.3, pv in -6.3f64..6.3) {
            let s = gp_state(phi);
            let there = birefringent_evolve(&s, ph, pv).unwrap();
            prop_assert!((there.norm_sqr() - 1.0).abs() < 1e-12);
            let back = birefringent_evolve(&there, -ph, -pv).unwrap();
            for k in 0..4 {
                prop_assert!((back.amplitudes()[k] - s.canonical_phase().amplitudes()[k]).norm() < 1e-12);
            }
        }

        #[test]
        fn compensation_restores_reference(ph in -6.3f64..6.3, pv in -6.3f64..6.3) {
            let t = compensation_angle(ph, pv);
            prop_assert!((0.0..FRAC_PI_2).contains(&t));
            let out = birefringent_evolve(&spdc_state(&PumpState::after_gp_stack(t)), ph, pv).unwrap();
            prop_assert!((fidelity_pure(&out, &gp_state(0.0)) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn balanced_ideal_source_is_gp_state(phi in -7.0f64..7.0) {
            let rho = imperfect_state(phi, &SourceImperfection::default()).unwrap();
            prop_assert!(crate::linalg::max_abs_diff(rho.entries(), gp_state(phi).density().entries()) < 1e-12);
        }
    }
}
