//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("node window must be strictly increasing; gap {gap:e} before node {index}")]
    DuplicateNodes { index: usize, gap: f64 },

    #[error("node window has {m} nodes, more than the cap of {cap}")]
    WindowTooLarge { m: usize, cap: usize },

    #[error("node window is empty")]
    EmptyWindow,

    #[error("fractional order nu = {nu} is outside (0, 1]")]
    InvalidNu { nu: f64 },

    #[error("kernel interval a = {a}, b = {b}, t* = {t_target} violates a < b <= t*")]
    InvalidInterval { a: f64, b: f64, t_target: f64 },

    #[error("monomial degree {k} exceeds the cap of {cap}")]
    DegreeTooLarge { k: usize, cap: usize },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("right-hand side undefined at t = {t}, x = {x}: {reason}")]
    RhsDomain { t: f64, x: f64, reason: String },

    #[error("non-finite value produced at t = {t}")]
    NonFinite { t: f64 },

    #[error("alpha = {alpha} is outside the open interval (0, 1)")]
    AlphaOutOfRange { alpha: f64 },

    #[error("alpha-path solve failed at alpha = {alpha}: {source}")]
    SweepRow {
        alpha: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no grid row for alpha = {requested}: {detail}")]
    GridMismatch { requested: f64, detail: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("series did not converge within {max_terms} terms (last term {last_term:e})")]
    NoConvergence { max_terms: usize, last_term: f64 },

    #[error("quadrature tolerance not met: requested {requested:e}, achieved {achieved:e}")]
    ToleranceNotMet { requested: f64, achieved: f64 },
}
