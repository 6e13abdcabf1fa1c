//! Error type shared by all solver modules.
//!
//! Diagnostics are carried as `f64` regardless of the scalar type the
//! solver runs at; they are for reporting, not further arithmetic.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval: lo = {lo}, hi = {hi} (need lo < hi)")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid grid size J = {j_count} (need J >= 4)")]
    InvalidGridSize { j_count: usize },

    #[error("x = {x} outside density domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("unknown example id {id:?}; valid ids: {valid:?}")]
    UnknownExample {
        id: String,
        valid: &'static [&'static str],
    },

    #[error("probability p = {p} outside [0, 1]")]
    InvalidProbability { p: f64 },

    #[error("initial potential not strictly convex: u0''({x}) = {value}")]
    NonConvexInitial { x: f64, value: f64 },

    #[error("density not positive at x = {x}: value = {value}")]
    NonPositiveDensity { x: f64, value: f64 },

    #[error("derivative callable {which} unavailable for this density")]
    MissingDerivative { which: &'static str },

    #[error("convexity loss at step {step}: discrete second derivative {lap} <= 0 at j = {j}")]
    ConvexityLoss { step: u64, j: usize, lap: f64 },

    #[error("gradient left the target interval at step {step}, j = {j}: g({grad}) = {value} <= 0")]
    MapRange {
        step: u64,
        j: usize,
        grad: f64,
        value: f64,
    },

    #[error("degenerate time step {dt} at step {step}")]
    DegenerateDt { step: u64, dt: f64 },

    #[error("non-finite value at step {step}, j = {j}")]
    NonFinite { step: u64, j: isize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
