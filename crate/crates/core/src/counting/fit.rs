//! Curve fits for fringes and the CHSH-vs-phase curve.

use serde::{Deserialize, Serialize};

use super::{BellPoint, CountRecord};
use crate::error::FitError;
use crate::linalg::{invert_real, linear_least_squares, solve_real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Converged once `|δ| / |p|` drops below this.
    pub step_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            step_tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub iterations: usize,
    pub residual_sum_squares: f64,
    /// `(JᵀJ)⁻¹` at the solution, if the Jacobian has full rank there.
    pub normal_inverse: Option<Vec<Vec<f64>>>,
}

fn rss<F>(x: &[f64], y: &[f64], p: &[f64], model: &F) -> f64
where
    F: Fn(&[f64], f64) -> (f64, Vec<f64>),
{
    x.iter().zip(y).map(|(&xi, &yi)| (yi - model(p, xi).0).powi(2)).sum()
}

/// Gauss–Newton with Levenberg damping. `model(p, x)` returns the model
/// value and its gradient with respect to `p`.
pub fn levenberg_marquardt<F>(
    x: &[f64],
    y: &[f64],
    init: Vec<f64>,
    model: F,
    opts: LmOptions,
) -> Result<LmOutcome, FitError>
where
    F: Fn(&[f64], f64) -> (f64, Vec<f64>),
{
    let n = init.len();
    let mut p = init;
    let mut current = rss(x, y, &p, &model);
    let mut lambda = 1e-3;
    for iteration in 1..=opts.max_iterations {
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for (&xi, &yi) in x.iter().zip(y) {
            let (f, grad) = model(&p, xi);
            let r = yi - f;
            for a in 0..n {
                jtr[a] += grad[a] * r;
                for b in 0..n {
                    jtj[a][b] += grad[a] * grad[b];
                }
            }
        }
        let scale = (0..n).map(|a| jtj[a][a]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        loop {
            let mut damped = jtj.clone();
            for (a, row) in damped.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-12 * scale);
            }
            let Some(delta) = solve_real(&damped, &jtr, 1e-300) else {
                lambda *= 10.0;
                if lambda > 1e20 {
                    return Err(FitError::Degenerate);
                }
                continue;
            };
            let step = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
            let size = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if step <= opts.step_tolerance * (size + opts.step_tolerance) {
                return Ok(LmOutcome {
                    normal_inverse: invert_real(&jtj, 1e-12),
                    params: p,
                    iterations: iteration,
                    residual_sum_squares: current,
                });
            }
            let trial: Vec<f64> = p.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let trial_rss = rss(x, y, &trial, &model);
            if trial_rss <= current {
                p = trial;
                current = trial_rss;
                lambda = (lambda / 10.0).max(1e-12);
                break;
            }
            lambda *= 10.0;
            if lambda > 1e20 {
                // No downhill step exists at machine precision.
                return Ok(LmOutcome {
                    normal_inverse: invert_real(&jtj, 1e-12),
                    params: p,
                    iterations: iteration,
                    residual_sum_squares: current,
                });
            }
        }
    }
    Err(FitError::NonConvergence {
        iterations: opts.max_iterations,
        last_params: p,
        residual: current,
    })
}

/// `N(Θ) = offset + amplitude·cos(4(Θ − phase))` in idler HWP angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub amplitude: f64,
    pub offset: f64,
    /// Radians of HWP angle, in `[0, π/2)`.
    pub phase: f64,
    /// `amplitude / offset`, clamped to `[0, 1]`.
    pub visibility: f64,
    /// Over `(amplitude, offset, phase)`; `None` when the phase is
    /// undetermined (flat fringe).
    pub covariance: Option<[[f64; 3]; 3]>,
    pub residual_sum_squares: f64,
    pub iterations: usize,
}

pub const FRINGE_MIN_POINTS: usize = 5;
/// Half the 90° fringe period in HWP angle.
pub const FRINGE_MIN_SPAN: f64 = std::f64::consts::FRAC_PI_4;

fn span(x: &[f64]) -> f64 {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}

pub fn fit_fringe(records: &[CountRecord]) -> Result<FringeFit, FitError> {
    let x: Vec<f64> = records.iter().map(|r| r.settings.1.hwp).collect();
    let y: Vec<f64> = records.iter().map(CountRecord::coincidence_value).collect();
    fit_fringe_points(&x, &y)
}

/// Fringe fit on raw `(HWP angle, counts)` pairs.
pub fn fit_fringe_points(x: &[f64], y: &[f64]) -> Result<FringeFit, FitError> {
    if x.len() < FRINGE_MIN_POINTS {
        return Err(FitError::TooFewPoints {
            needed: FRINGE_MIN_POINTS,
            got: x.len(),
        });
    }
    let s = span(x);
    if s < FRINGE_MIN_SPAN - 1e-12 {
        return Err(FitError::InsufficientSpan {
            span_deg: s.to_degrees(),
            needed_deg: FRINGE_MIN_SPAN.to_degrees(),
        });
    }

    // The model is linear in (offset, A cos, B sin); solve that first and let
    // the nonlinear iteration polish it.
    let design: Vec<Vec<f64>> = x.iter().map(|&t| vec![1.0, (4.0 * t).cos(), (4.0 * t).sin()]).collect();
    let lin = linear_least_squares(&design, y, None).ok_or(FitError::Degenerate)?;
    let (o, a, b) = (lin.params[0], lin.params[1], lin.params[2]);
    let init = vec![a.hypot(b), o, 0.25 * b.atan2(a)];

    let model = |p: &[f64], t: f64| {
        let arg = 4.0 * (t - p[2]);
        let (s, c) = arg.sin_cos();
        (p[1] + p[0] * c, vec![c, 1.0, 4.0 * p[0] * s])
    };
    let out = levenberg_marquardt(x, y, init, model, LmOptions::default())?;

    let (mut amplitude, offset, mut phase) = (out.params[0], out.params[1], out.params[2]);
    if amplitude < 0.0 {
        amplitude = -amplitude;
        phase += std::f64::consts::FRAC_PI_4;
    }
    phase = phase.rem_euclid(std::f64::consts::FRAC_PI_2);
    let visibility = if offset > 0.0 {
        (amplitude / offset).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let dof = (x.len() - 3) as f64;
    let s2 = out.residual_sum_squares / dof;
    let covariance = out.normal_inverse.map(|inv| {
        let mut c = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = s2 * inv[i][j];
            }
        }
        c
    });
    Ok(FringeFit {
        amplitude,
        offset,
        phase,
        visibility,
        covariance,
        residual_sum_squares: out.residual_sum_squares,
        iterations: out.iterations,
    })
}

/// Which functional form of `S(θ_H)` is reported as the headline fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SCurveModel {
    /// `a + b·|cos 4θ_H|`
    #[default]
    Absolute,
    /// `a + b·cos 4θ_H`
    Cosine,
}

impl SCurveModel {
    pub fn basis(self, theta_h: f64) -> f64 {
        let c = (4.0 * theta_h).cos();
        match self {
            SCurveModel::Absolute => c.abs(),
            SCurveModel::Cosine => c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SCurveParams {
    pub a: f64,
    pub b: f64,
    /// Over `(a, b)`.
    pub covariance: [[f64; 2]; 2],
    pub residual_sum_squares: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SCurveFit {
    pub primary: SCurveModel,
    pub absolute: SCurveParams,
    pub cosine: SCurveParams,
}

impl SCurveFit {
    pub fn headline(&self) -> &SCurveParams {
        match self.primary {
            SCurveModel::Absolute => &self.absolute,
            SCurveModel::Cosine => &self.cosine,
        }
    }

    /// `(a, b, covariance)` of the primary model.
    pub fn params(&self) -> (f64, f64, [[f64; 2]; 2]) {
        let h = self.headline();
        (h.a, h.b, h.covariance)
    }
}

pub const S_CURVE_MIN_POINTS: usize = 8;
pub const S_CURVE_MIN_SPAN: f64 = std::f64::consts::FRAC_PI_2;

fn fit_one(model: SCurveModel, theta: &[f64], s: &[f64], sigma: &[f64]) -> Result<SCurveParams, FitError> {
    let design: Vec<Vec<f64>> = theta.iter().map(|&t| vec![1.0, model.basis(t)]).collect();
    let weighted = sigma.iter().all(|&e| e > 0.0 && e.is_finite());
    let w: Vec<f64> = sigma.iter().map(|e| 1.0 / (e * e)).collect();
    let fit = linear_least_squares(&design, s, weighted.then_some(w.as_slice())).ok_or(FitError::Degenerate)?;
    // With known errors the covariance is (XᵀWX)⁻¹; otherwise scale by the
    // residual variance.
    let scale = if weighted {
        1.0
    } else {
        fit.residual_sum_squares / (theta.len() - 2) as f64
    };
    let c = &fit.normal_inverse;
    Ok(SCurveParams {
        a: fit.params[0],
        b: fit.params[1],
        covariance: [[scale * c[0][0], scale * c[0][1]], [scale * c[1][0], scale * c[1][1]]],
        residual_sum_squares: fit.residual_sum_squares,
    })
}

/// Weighted least squares of the Bell table against both models.
pub fn fit_s_curve(table: &[BellPoint], primary: SCurveModel) -> Result<SCurveFit, FitError> {
    if table.len() < S_CURVE_MIN_POINTS {
        return Err(FitError::TooFewPoints {
            needed: S_CURVE_MIN_POINTS,
            got: table.len(),
        });
    }
    let theta: Vec<f64> = table.iter().map(|p| p.theta_h).collect();
    let s_span = span(&theta);
    if s_span < S_CURVE_MIN_SPAN - 1e-12 {
        return Err(FitError::InsufficientSpan {
            span_deg: s_span.to_degrees(),
            needed_deg: S_CURVE_MIN_SPAN.to_degrees(),
        });
    }
    let s: Vec<f64> = table.iter().map(|p| p.s).collect();
    let sigma: Vec<f64> = table.iter().map(|p| p.sigma_s).collect();
    Ok(SCurveFit {
        primary,
        absolute: fit_one(SCurveModel::Absolute, &theta, &s, &sigma)?,
        cosine: fit_one(SCurveModel::Cosine, &theta, &s, &sigma)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn grid(from_deg: f64, to_deg: f64, step_deg: f64) -> Vec<f64> {
        let n = ((to_deg - from_deg) / step_deg).round() as usize;
        (0..=n).map(|k| (from_deg + k as f64 * step_deg).to_radians()).collect()
    }

    #[test]
    fn recovers_exact_fringe() {
        let x = grid(0.0, 180.0, 5.0);
        let truth = (120.0, 400.0, 0.3);
        let y: Vec<f64> = x.iter().map(|&t| truth.1 + truth.0 * (4.0 * (t - truth.2)).cos()).collect();
        let f = fit_fringe_points(&x, &y).unwrap();
        assert!((f.amplitude - truth.0).abs() < 1e-8);
        assert!((f.offset - truth.1).abs() < 1e-8);
        assert!((f.phase - truth.2).abs() < 1e-10);
        assert!((f.visibility - 0.3).abs() < 1e-12);
    }

    #[test]
    fn cos_squared_has_unit_visibility() {
        let x = grid(0.0, 90.0, 2.5);
        let y: Vec<f64> = x.iter().map(|&t| 1000.0 * (2.0 * t).cos().powi(2)).collect();
        let f = fit_fringe_points(&x, &y).unwrap();
        assert!((f.visibility - 1.0).abs() < 1e-9);
        let period = std::f64::consts::FRAC_PI_2;
        assert!(f.phase.min(period - f.phase) < 1e-10, "{}", f.phase);
    }

    #[test]
    fn flat_fringe_has_zero_visibility() {
        let x = grid(0.0, 90.0, 10.0);
        let y = vec![250.0; x.len()];
        let f = fit_fringe_points(&x, &y).unwrap();
        assert!(f.visibility < 1e-12);
        assert!(f.covariance.is_none());
    }

    #[test]
    fn fringe_preconditions() {
        let x = grid(0.0, 20.0, 5.0);
        let y = vec![1.0; x.len()];
        assert!(matches!(fit_fringe_points(&x, &y), Err(FitError::InsufficientSpan { .. })));
        assert!(matches!(
            fit_fringe_points(&x[..3], &y[..3]),
            Err(FitError::TooFewPoints { needed: 5, got: 3 })
        ));
    }

    #[test]
    fn lm_reports_non_convergence() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 2.7, 7.4, 20.1];
        let model = |p: &[f64], t: f64| {
            let e = (p[1] * t).exp();
            (p[0] * e, vec![e, p[0] * t * e])
        };
        let opts = LmOptions {
            max_iterations: 2,
            step_tolerance: 1e-14,
        };
        match levenberg_marquardt(&x, &y, vec![0.1, 0.1], model, opts) {
            Err(FitError::NonConvergence { iterations, last_params, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(last_params.len(), 2);
            }
            other => panic!("{other:?}"),
        }
        let ok = levenberg_marquardt(&x, &y, vec![0.1, 0.1], model, LmOptions::default()).unwrap();
        assert!((ok.params[1] - 1.0).abs() < 0.01);
    }

    fn table(f: impl Fn(f64) -> f64) -> Vec<BellPoint> {
        grid(0.0, 90.0, 2.5)
            .into_iter()
            .map(|t| BellPoint {
                theta_h: t,
                s: f(t),
                sigma_s: 0.0,
                correlations: [0.0; 4],
            })
            .collect()
    }

    #[test]
    fn s_curve_examples() {
        let exact = table(|t| SQRT_2 + SQRT_2 * (4.0 * t).cos().abs());
        let (a, b, _) = fit_s_curve(&exact, SCurveModel::Absolute).unwrap().params();
        assert!((a - SQRT_2).abs() < 1e-6 && (b - SQRT_2).abs() < 1e-6);

        let flat = table(|_| 0.0);
        let fit = fit_s_curve(&flat, SCurveModel::Cosine).unwrap();
        assert!(fit.absolute.b.abs() < 1e-12 && fit.cosine.b.abs() < 1e-12);
    }

    #[test]
    fn s_curve_preconditions() {
        let short: Vec<BellPoint> = table(|_| 2.0).into_iter().take(5).collect();
        assert!(matches!(fit_s_curve(&short, SCurveModel::Absolute), Err(FitError::TooFewPoints { .. })));

        // Every point sits where |cos 4θ| = 1, so a and b cannot be separated.
        let degenerate: Vec<BellPoint> = (0..9)
            .map(|k| BellPoint {
                theta_h: (k as f64 * 45.0).to_radians(),
                s: 2.0,
                sigma_s: 0.1,
                correlations: [0.0; 4],
            })
            .collect();
        assert_eq!(fit_s_curve(&degenerate, SCurveModel::Absolute), Err(FitError::Degenerate));
    }
}
