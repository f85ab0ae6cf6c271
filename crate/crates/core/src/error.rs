use std::path::PathBuf;

use thiserror::Error;

use crate::shooting::{Side, SolutionProfile, ShotSummary};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `phi` was asked for a slope on or beyond the light-cone barrier.
    #[error("phi is undefined for |s| >= 1 (got s = {0})")]
    SlopeOutOfDomain(f64),

    #[error("right-hand side evaluated at non-positive radius r = {0}")]
    NonPositiveRadius(f64),

    #[error("origin start requested on an annulus (R1 = {0})")]
    OriginStartOnAnnulus(f64),

    #[error("integration failed at r = {r}: {reason}")]
    IntegrationFailure { r: f64, reason: String },

    #[error("degenerate polar path: rho = 0 at sample {index} (r = {r})")]
    DegeneratePath { index: usize, r: f64 },

    #[error("unwrapped angle decreased by {decrement:e} at sample {index} (r = {r})")]
    NonMonotoneAngle { index: usize, r: f64, decrement: f64 },

    #[error("no eigenvalue bracket found below mu = {mu_max:e} for k = {k}")]
    EigenBracketNotFound { k: usize, mu_max: f64 },

    #[error("bracket [{lo}, {hi}] does not straddle the target angle {target}")]
    InvalidBracket { lo: f64, hi: f64, target: f64 },

    #[error("hypothesis f'(s0) > lambda_{} fails for k = {k} (margin {margin})", k + 1)]
    HypothesisFailed { k: usize, margin: f64 },

    #[error("found {} of the {} guaranteed solutions; missing {}", .0.profiles.len(), 2 * .0.k, format_missing(&.0.missing))]
    Incomplete(Box<IncompleteSolve>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Partial outcome of a solve that did not reach every guaranteed target.
#[derive(Debug)]
pub struct IncompleteSolve {
    pub k: usize,
    pub missing: Vec<(Side, usize)>,
    pub profiles: Vec<SolutionProfile>,
    pub scan: Vec<ShotSummary>,
}

fn format_missing(missing: &[(Side, usize)]) -> String {
    missing
        .iter()
        .map(|(side, j)| format!("({side}, j={j})"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
