//! Error type shared by all modules.
//!
//! Scalar payloads are carried as `f64` regardless of the working scalar
//! type, so the error enum stays non-generic and cheap to pass around.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A weight value must be strictly positive.
    #[error("weight at index {index} must be positive and finite, got {value}")]
    NonPositiveWeight { index: usize, value: f64 },

    /// Weight sequences must be non-decreasing.
    #[error("weights decrease at index {index}: {prev} -> {value}")]
    DecreasingWeight { index: usize, prev: f64, value: f64 },

    /// A 1-based index was requested beyond the materialised horizon.
    #[error("index {requested} exceeds horizon {horizon}")]
    HorizonExceeded { requested: usize, horizon: usize },

    /// The operation needs a longer prefix than the source provides.
    #[error("operation needs a horizon of at least {required}, got {horizon}")]
    HorizonTooSmall { horizon: usize, required: usize },

    /// Pairwise interleaving requires equally long inputs.
    #[error("sequences must share a horizon: {left} vs {right}")]
    HorizonMismatch { left: usize, right: usize },

    /// Subsequence indices must be 1-based and strictly increasing.
    #[error("subsequence indices must be >= 1 and strictly increasing; offending position {position}")]
    InvalidSubsequence { position: usize },

    /// A checkpoint grid entry lies outside the usable index range.
    #[error("checkpoint {n} outside the usable range [2, {max}]")]
    GridOutOfRange { n: usize, max: usize },

    /// The epsilon grid must be non-empty, positive and strictly decreasing.
    #[error("epsilon grid must be non-empty, positive and strictly decreasing")]
    InvalidEpsGrid,

    /// The `Deviation` predicate needs a level to deviate from.
    #[error("deviation predicate requires a level")]
    MissingLevel,

    /// A limit verdict needs enough checkpoints to read off a trend.
    #[error("verdict needs at least {required} checkpoints, got {available}")]
    InsufficientEvidence { available: usize, required: usize },

    /// Lacunary window boundaries must start at 0 and increase strictly.
    #[error("lacunary boundaries must start at 0 and increase strictly; offending position {position}")]
    MalformedTheta { position: usize },

    /// A sequence left the domain of the function applied to it.
    #[error("sequence '{sequence}' leaves the domain [{lo}, {hi}] of '{function}' at index {index} (value {value})")]
    DomainViolation {
        sequence: String,
        function: String,
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Composition `g(f(x))` hit a value of `f` outside the domain of `g`.
    #[error("range of '{inner}' escapes the domain of '{outer}' (value {value} at index {index})")]
    CompositionDomain {
        inner: String,
        outer: String,
        index: usize,
        value: f64,
    },

    /// Witness extraction could not produce a usable subsequence.
    #[error("no witness: {reason}")]
    NoWitness { reason: String },

    /// A documented operation precondition failed.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A textual spec (weights, sequence, function) failed to parse.
    #[error("invalid spec '{spec}': {reason}")]
    BadSpec { spec: String, reason: String },

    /// Simulation configuration rejected.
    #[error("simulation config: {0}")]
    BadSimConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
