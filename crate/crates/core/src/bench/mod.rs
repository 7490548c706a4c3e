//! `.bench` files: a line-oriented description of one experiment.
//!
//! ```text
//! # Bell parameter versus geometric phase
//! pump D
//! gp qwp 45
//! gp hwp 0
//! gp qwp 45
//! source p=0.5 v=1
//! detector eta_s=0.2 eta_i=0.2 dark=500 window=1.6 pairs=1000000 acq=1
//! scan gp_hwp from 0 to 90 step 2.5
//! measure bell
//! seed 7
//! ```
//!
//! One statement per line, `#` starts a comment, angles are in degrees and
//! the detector window in nanoseconds. Besides the core statements there are
//! a few optional extras: `source ... c=<0..1>` for the HH/VV coherence,
//! `detector ... sampling=<poisson|expected>`, `analyzer signal=<H|V|D|A|R|L>`
//! for the fixed signal analyzer of a fringe scan, and
//! `imbalance <deg>:<p> <deg>:<p> ...` to let the pump split drift with the
//! stack HWP angle (linear between knots, flat beyond them).

mod compile;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::counting::{DetectorModel, Sampling};
use crate::polarization::Polarization;

pub use compile::{compile, PlanPoint, RunPlan};
pub use parse::parse;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A located message. Line 0 refers to the program as a whole; columns are
/// 1-based character positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub severity: Severity,
}

impl ParseDiagnostic {
    pub fn error(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            line,
            column,
            message: message.into(),
            severity: Severity::Error,
        }
    }

    pub fn warning(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            line,
            column,
            message: message.into(),
            severity: Severity::Warning,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {kind}: {}", self.line, self.column, self.message)
    }
}

/// Sorts by line, then column, errors before warnings at the same spot.
pub fn sort_diagnostics(diags: &mut [ParseDiagnostic]) {
    diags.sort_by(|a, b| (a.line, a.column, a.severity).cmp(&(b.line, b.column, b.severity)));
}

/// A value with the line it was declared on. Equality ignores the line.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Located<T> {
    pub value: T,
    pub line: usize,
}

impl<T: PartialEq> PartialEq for Located<T> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl<T> Located<T> {
    pub fn new(value: T, line: usize) -> Self {
        Located { value, line }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GpElement {
    /// Fast-axis angle in degrees.
    Qwp(f64),
    Hwp(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub p: f64,
    pub v: f64,
    pub c: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Birefringence {
    pub phi_h_deg: f64,
    pub phi_v_deg: f64,
}

/// Detector block as written; unspecified keys take the defaults of
/// [`DetectorModel`]. The same dark rate applies to both arms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub eta_s: f64,
    pub eta_i: f64,
    pub dark: f64,
    pub window_ns: f64,
    pub pairs: f64,
    pub acq: f64,
    pub sampling: Sampling,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        let d = DetectorModel::default();
        DetectorSpec {
            eta_s: d.eta_s,
            eta_i: d.eta_i,
            dark: d.dark_s,
            window_ns: d.window * 1e9,
            pairs: d.pair_rate,
            acq: d.acquisition,
            sampling: d.sampling,
        }
    }
}

impl DetectorSpec {
    pub fn model(&self) -> DetectorModel {
        DetectorModel {
            eta_s: self.eta_s,
            eta_i: self.eta_i,
            dark_s: self.dark,
            dark_i: self.dark,
            pair_rate: self.pairs,
            window: self.window_ns * 1e-9,
            acquisition: self.acq,
            sampling: self.sampling,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanTarget {
    GpHwp,
    AnalyzerIHwp,
}

impl ScanTarget {
    pub fn keyword(self) -> &'static str {
        match self {
            ScanTarget::GpHwp => "gp_hwp",
            ScanTarget::AnalyzerIHwp => "analyzer_i_hwp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub target: ScanTarget,
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Fringe,
    Bell,
    Tomo,
    Classical,
}

impl MeasureKind {
    pub fn keyword(self) -> &'static str {
        match self {
            MeasureKind::Fringe => "fringe",
            MeasureKind::Bell => "bell",
            MeasureKind::Tomo => "tomo",
            MeasureKind::Classical => "classical",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchProgram {
    pub pump: Located<Polarization>,
    /// In beam order.
    pub gp: Vec<Located<GpElement>>,
    pub source: Located<SourceSpec>,
    pub birefringence: Option<Located<Birefringence>>,
    /// `(θ_H, p)` knots in degrees; overrides `source p` point by point.
    pub imbalance: Option<Located<Vec<(f64, f64)>>>,
    pub detector: Located<DetectorSpec>,
    pub signal_analyzer: Option<Located<Polarization>>,
    pub scan: Option<Located<ScanSpec>>,
    pub measure: Located<MeasureKind>,
    pub seed: Option<Located<u64>>,
}

/// Canonical text; parses back to an equal program.
impl fmt::Display for BenchProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pump {}", self.pump.value)?;
        for el in &self.gp {
            match el.value {
                GpElement::Qwp(a) => writeln!(f, "gp qwp {a}")?,
                GpElement::Hwp(a) => writeln!(f, "gp hwp {a}")?,
            }
        }
        let s = self.source.value;
        write!(f, "source p={} v={}", s.p, s.v)?;
        if let Some(c) = s.c {
            write!(f, " c={c}")?;
        }
        writeln!(f)?;
        if let Some(b) = &self.birefringence {
            writeln!(f, "birefringence phiH={} phiV={}", b.value.phi_h_deg, b.value.phi_v_deg)?;
        }
        if let Some(knots) = &self.imbalance {
            write!(f, "imbalance")?;
            for (theta, p) in &knots.value {
                write!(f, " {theta}:{p}")?;
            }
            writeln!(f)?;
        }
        let d = self.detector.value;
        let sampling = match d.sampling {
            Sampling::Poisson => "poisson",
            Sampling::Expected => "expected",
        };
        writeln!(
            f,
            "detector eta_s={} eta_i={} dark={} window={} pairs={} acq={} sampling={sampling}",
            d.eta_s, d.eta_i, d.dark, d.window_ns, d.pairs, d.acq
        )?;
        if let Some(a) = &self.signal_analyzer {
            writeln!(f, "analyzer signal={}", a.value)?;
        }
        if let Some(s) = &self.scan {
            let s = s.value;
            writeln!(f, "scan {} from {} to {} step {}", s.target.keyword(), s.from, s.to, s.step)?;
        }
        writeln!(f, "measure {}", self.measure.value.keyword())?;
        if let Some(seed) = &self.seed {
            writeln!(f, "seed {}", seed.value)?;
        }
        Ok(())
    }
}
