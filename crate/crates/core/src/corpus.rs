//! The standard corpus: a small, fixed family of sequences with known
//! character — flat, slowly settling, falling, rising, oscillating, escaping,
//! plunging, and two simulated processes — that the report-style checks run
//! over.

use crate::compactness::{construct_descent_sequence, construct_escaping_sequence};
use crate::error::{Error, Result};
use crate::sequence::SequenceSource;
use crate::simulate::{pairing_survivor_sequence, ternary_split_sequence, SimConfig};
use crate::weights::WeightSequence;
use crate::{real, Real};

/// Fixed simulation settings for the two corpus processes; the seed is part
/// of the corpus definition so everyone reproduces the same values.
pub fn default_sim_config() -> SimConfig {
    SimConfig {
        max_n: 64,
        trials: 20_000,
        seed: 17,
        exact_cutoff: 7,
    }
}

/// Builds the default corpus at the given horizon. The escaping and
/// plunging members are constructed against `w`, so `w` must cover the
/// horizon; the simulated members keep their own fixed length.
pub fn default_corpus<R: Real>(
    horizon: usize,
    w: &WeightSequence<R>,
) -> Result<Vec<SequenceSource<R>>> {
    if horizon < 64 {
        return Err(Error::HorizonTooSmall {
            horizon,
            required: 64,
        });
    }
    if w.horizon() < horizon {
        return Err(Error::HorizonExceeded {
            requested: horizon,
            horizon: w.horizon(),
        });
    }
    let mut corpus = vec![
        SequenceSource::constant(real(3.0), horizon)?,
        SequenceSource::closed_form("sqrt(k)", horizon)?,
        SequenceSource::closed_form("-k", horizon)?,
        SequenceSource::closed_form("k", horizon)?,
        SequenceSource::closed_form("(-1)^k", horizon)?,
        construct_escaping_sequence(R::zero(), w, horizon)?,
        construct_descent_sequence(w, horizon)?,
    ];
    let sim = default_sim_config();
    corpus.push(pairing_survivor_sequence::<R>(&sim)?.sequence);
    corpus.push(ternary_split_sequence::<R>(&sim)?.sequence);
    Ok(corpus)
}
