use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("phase undefined: states are orthogonal (|<a|b>| = {overlap:e})")]
    UndefinedPhase { overlap: f64 },

    #[error("{what} is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { what: &'static str, norm_sqr: f64 },

    #[error("unphysical density matrix: {0}")]
    Unphysical(String),

    #[error("state lies outside the a|HH> + b|VV> family (HV/VH weight {weight:e})")]
    OutsideFamily { weight: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(transparent)]
    Fit(#[from] FitError),

    #[error(transparent)]
    Tomography(#[from] TomographyError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("points span {span_deg:.3} deg, need at least {needed_deg:.3} deg")]
    InsufficientSpan { span_deg: f64, needed_deg: f64 },

    #[error("degenerate design matrix")]
    Degenerate,

    #[error(
        "fit did not converge after {iterations} iterations \
         (last params {last_params:?}, residual {residual:e})"
    )]
    NonConvergence {
        iterations: usize,
        last_params: Vec<f64>,
        residual: f64,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomographyError {
    #[error("no count records supplied")]
    Empty,

    #[error("measurement set is not informationally complete (rank {rank}/16); missing settings: {missing:?}")]
    RankDeficient { rank: usize, missing: Vec<String> },

    #[error("cannot normalize counts: no complete projector group (e.g. HH, HV, VH, VV) present")]
    NoNormalization,

    #[error("invalid tomography options: {0}")]
    InvalidOptions(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
