use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("scale count {scales} too large for a {rows}x{cols} grid: coarsest band starts at {lower_edge:.4} rad, below the frequency resolution {resolution:.4} rad")]
    TooManyScales {
        scales: usize,
        rows: usize,
        cols: usize,
        lower_edge: f64,
        resolution: f64,
    },

    #[error("multiplier coefficients not normalized: sum of squares is {0}")]
    NotNormalized(f64),

    #[error("{n_max} channels cannot carry harmonics up to {l_max} (need at least {})", 2 * l_max + 1)]
    TooFewChannels { n_max: usize, l_max: usize },

    #[error("pyramid was built by a different filter bank or multiplier family")]
    ProvenanceMismatch,

    #[error("no multiplier channel peaks inside the pseudo-scaling interval ({lo:.4}, {hi:.4}]")]
    NoChannelInInterval { lo: f64, hi: f64 },

    #[error("calibration sweep too sparse: phase step {step:.3} exceeds half a period ({half_period:.3}) between radii {r0} and {r1}")]
    SweepTooSparse {
        step: f64,
        half_period: f64,
        r0: f64,
        r1: f64,
    },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("could not place disk {index} of {total}: overlap limit {limit} px not satisfiable after {attempts} attempts")]
    PackingInfeasible {
        index: usize,
        total: usize,
        limit: f64,
        attempts: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
