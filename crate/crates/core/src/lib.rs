//! Weighted statistical density analysis for real sequences.
//!
//! The toolkit measures how often a real sequence `(alpha_k)` jumps by at
//! least `eps` — upward (`alpha_{k+1} - alpha_k >= eps`), in absolute value,
//! or away from a level `L` — and normalises those counts by a weight
//! sequence `(rho_n)`:
//!
//! ```text
//! d_n(eps) = |{ k <= n : predicate(k, eps) }| / rho_n
//! ```
//!
//! On top of the raw densities it provides:
//!
//! * three-valued limit verdicts (`Accept` / `Reject` / `Inconclusive`) over
//!   checkpoint grids ([`density`]),
//! * classification of sequences into quasi-Cauchy and weighted-statistical
//!   classes, including lacunary-windowed variants ([`classify`]),
//! * witness extraction from bounded samples and diverging constructions for
//!   the converse direction ([`compactness`]),
//! * preservation tests for functions: downward/ward continuity, sum and
//!   composition closure, uniform-continuity falsification, uniform-limit
//!   checks ([`functions`]),
//! * two seeded, reproducible Monte Carlo simulators that generate bounded
//!   test sequences ([`simulate`]).
//!
//! All numeric code is generic over the scalar type through the [`Real`]
//! trait (implemented for `f32` and `f64`); concrete `f64` aliases are
//! exported at the crate root.

pub mod classify;
pub mod compactness;
pub mod corpus;
pub mod density;
pub mod error;
pub mod functions;
pub mod sequence;
pub mod simulate;
pub mod weights;

mod rng;

pub use classify::{ClassifyConfig, ImplicationReport, LacunaryWindows, SequenceClass};
pub use compactness::{ExtractConfig, SampleSet, Witness, WitnessKind};
pub use density::{DensityProfile, Outcome, PredicateTag, Tolerances, Verdict};
pub use error::{Error, Result};
pub use functions::RealFunction;
pub use sequence::{IndexSubsequence, SequenceSource};
pub use simulate::{SimConfig, SimulatedSequence};
pub use weights::{WeightSequence, WeightSpec};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};
use std::fmt::{Debug, Display};

/// Scalar abstraction for every sequence, weight and density computation.
///
/// The bound set is exactly what the toolkit needs: float arithmetic,
/// conversions from counts and parsed literals, ordering, and serde support
/// for report serialisation. Implemented for `f32` and `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` constant into the working scalar type.
///
/// Conversion from `f64` cannot fail for the provided impls (`f32` saturates
/// to infinity on overflow), so this is a plain convenience wrapper.
pub fn real<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 converts into every Real impl")
}

/// Converts the working scalar back to `f64` for error messages and display.
pub(crate) fn to_f64<R: Real>(x: R) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `f64` alias for [`weights::WeightSequence`].
pub type Weights64 = weights::WeightSequence<f64>;
/// `f64` alias for [`sequence::SequenceSource`].
pub type Sequence64 = sequence::SequenceSource<f64>;
/// `f64` alias for [`density::DensityProfile`].
pub type Profile64 = density::DensityProfile<f64>;
/// `f64` alias for [`density::Verdict`].
pub type Verdict64 = density::Verdict<f64>;
/// `f64` alias for [`classify::SequenceClass`].
pub type Class64 = classify::SequenceClass<f64>;
/// `f64` alias for [`compactness::Witness`].
pub type Witness64 = compactness::Witness<f64>;
/// `f64` alias for [`functions::RealFunction`].
pub type Function64 = functions::RealFunction<f64>;
