//! Random elimination processes whose summary statistics form the simulated
//! sequences of the corpus: a mutual-pairing removal game and a ternary
//! split-until-singletons game.
//!
//! Small indices are computed exactly (full enumeration or a distribution
//! recursion); larger ones fall back to seeded Monte Carlo with per-index,
//! per-trial random streams so results are reproducible and independent of
//! thread scheduling.

use crate::error::{Error, Result};
use crate::rng::{purpose, stream_rng};
use crate::sequence::SequenceSource;
use crate::{real, Real};
use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest population whose pairing round may be enumerated exhaustively:
/// the round has `(n-1)^n` pick patterns.
pub const MAX_EXACT_CUTOFF: usize = 8;

/// Configuration shared by both simulated sequences.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// Sequence indices run `1..=max_n`.
    pub max_n: usize,
    /// Monte Carlo trials per index beyond the exact range.
    pub trials: usize,
    pub seed: u64,
    /// Indices up to this bound are computed exactly.
    pub exact_cutoff: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            max_n: 64,
            trials: 20_000,
            seed: 0,
            exact_cutoff: 7,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_n == 0 {
            return Err(Error::BadSimConfig("max_n must be at least 1".to_string()));
        }
        if self.exact_cutoff == 0 {
            return Err(Error::BadSimConfig(
                "exact_cutoff must be at least 1".to_string(),
            ));
        }
        if self.exact_cutoff > MAX_EXACT_CUTOFF {
            return Err(Error::BadSimConfig(format!(
                "exact_cutoff {} exceeds the enumeration limit {}",
                self.exact_cutoff, MAX_EXACT_CUTOFF
            )));
        }
        if self.max_n > self.exact_cutoff && self.trials < 1000 {
            return Err(Error::BadSimConfig(format!(
                "{} trials are too few for Monte Carlo entries (need >= 1000)",
                self.trials
            )));
        }
        Ok(())
    }
}

/// A sequence produced by simulation, with a per-index standard-error
/// sidecar (zero over the exact prefix).
#[derive(Debug, Clone, Serialize)]
pub struct SimulatedSequence<R: Real> {
    pub sequence: SequenceSource<R>,
    pub standard_errors: Vec<R>,
    /// Indices `1..=exact_upto` carry exact values.
    pub exact_upto: usize,
}

// ---------------------------------------------------------------------------
// Pairing removal game.
//
// Each round every remaining participant picks another uniformly at random;
// everyone who was picked is removed. Rounds repeat while at least two
// remain. The sequence records the probability that a lone survivor is left
// (rather than nobody).
// ---------------------------------------------------------------------------

/// Distribution of the survivor count after one round with `m >= 2`
/// participants, by exhaustive enumeration of all `(m-1)^m` pick patterns.
fn pairing_round_distribution(m: usize) -> Vec<f64> {
    debug_assert!((2..=MAX_EXACT_CUTOFF).contains(&m));
    let total = ((m - 1) as f64).powi(m as i32);
    let mut tally = vec![0u64; m + 1];
    let mut picks = vec![0usize; m];
    loop {
        let mut picked: u32 = 0;
        for (i, &p) in picks.iter().enumerate() {
            let target = if p >= i { p + 1 } else { p };
            picked |= 1 << target;
        }
        let survivors = m - picked.count_ones() as usize;
        tally[survivors] += 1;

        let mut digit = 0;
        loop {
            if digit == m {
                let probs = tally.iter().map(|&c| c as f64 / total).collect();
                return probs;
            }
            picks[digit] += 1;
            if picks[digit] < m - 1 {
                break;
            }
            picks[digit] = 0;
            digit += 1;
        }
    }
}

/// Exact lone-survivor probabilities for populations `0..=n_max` via the
/// survivor-count recursion; `n_max` is capped by the enumeration limit.
fn pairing_exact_table(n_max: usize) -> Result<Vec<f64>> {
    if n_max > MAX_EXACT_CUTOFF {
        return Err(Error::BadSimConfig(format!(
            "exact pairing probabilities stop at n = {MAX_EXACT_CUTOFF}, requested {n_max}"
        )));
    }
    let mut table = vec![0.0f64; n_max + 1];
    if n_max >= 1 {
        table[1] = 1.0;
    }
    for m in 2..=n_max {
        let dist = pairing_round_distribution(m);
        // One round always removes someone, so every term looks strictly
        // below m.
        table[m] = dist
            .iter()
            .enumerate()
            .take(m)
            .map(|(s, &p)| p * table[s])
            .sum();
    }
    Ok(table)
}

/// Exact probability that the pairing game on `n` participants ends with a
/// lone survivor.
pub fn pairing_exact_probability(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::BadSimConfig(
            "the pairing game needs at least one participant".to_string(),
        ));
    }
    Ok(pairing_exact_table(n)?[n])
}

/// One full game; `true` when a lone survivor remains.
fn pairing_trial(seed: u64, n: usize, trial: u64) -> bool {
    let mut rng = stream_rng(seed, purpose::PAIRING_SIM, n as u64, trial);
    let mut m = n;
    let mut picked = vec![false; n];
    while m >= 2 {
        picked[..m].fill(false);
        for i in 0..m {
            let p = rng.random_range(0..m - 1);
            let target = if p >= i { p + 1 } else { p };
            picked[target] = true;
        }
        m = picked[..m].iter().filter(|&&hit| !hit).count();
    }
    m == 1
}

/// Monte Carlo estimate `(p_hat, standard_error)` of the lone-survivor
/// probability.
pub fn pairing_mc_probability<R: Real>(n: usize, trials: usize, seed: u64) -> Result<(R, R)> {
    if n == 0 || trials == 0 {
        return Err(Error::BadSimConfig(
            "pairing Monte Carlo needs n >= 1 and trials >= 1".to_string(),
        ));
    }
    let successes: u64 = (0..trials as u64)
        .into_par_iter()
        .map(|t| pairing_trial(seed, n, t) as u64)
        .sum();
    let p = successes as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    Ok((real(p), real(se)))
}

/// The lone-survivor probability sequence `alpha_n`, exact up to the
/// configured cutoff and Monte Carlo beyond it.
pub fn pairing_survivor_sequence<R: Real>(cfg: &SimConfig) -> Result<SimulatedSequence<R>> {
    cfg.validate()?;
    let exact_upto = cfg.max_n.min(cfg.exact_cutoff);
    let exact = pairing_exact_table(exact_upto)?;
    let mut values = Vec::with_capacity(cfg.max_n);
    let mut errors = Vec::with_capacity(cfg.max_n);
    for &probability in &exact[1..=exact_upto] {
        values.push(real(probability));
        errors.push(R::zero());
    }
    for n in exact_upto + 1..=cfg.max_n {
        let (p, se) = pairing_mc_probability::<R>(n, cfg.trials, cfg.seed)?;
        values.push(p);
        errors.push(se);
    }
    Ok(SimulatedSequence {
        sequence: SequenceSource::from_values("pairing-survivor", values)?,
        standard_errors: errors,
        exact_upto,
    })
}

// ---------------------------------------------------------------------------
// Ternary split game.
//
// A group splits by everyone independently picking one of three rooms;
// rooms holding at most one person are dissolved at the end of the round
// and the larger rooms split again, all in the same round cadence. The
// round count is driven by the slowest room, i.e. a maximum, so the
// recursion works on the distribution rather than on expectations.
// ---------------------------------------------------------------------------

fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![0.0f64; n + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1.0;
        for j in 1..=i {
            c[i][j] = c[i - 1][j - 1] + if j < i { c[i - 1][j] } else { 0.0 };
        }
    }
    c
}

/// `P(rounds(k) <= t)` for all `k <= k_max`, iterated over `t` until the
/// tail at `k_max` drops below `tail_tol`; returns the per-`t` tables'
/// complement sums, i.e. the expected round counts.
fn ternary_expected_table(k_max: usize, tail_tol: f64) -> Result<Vec<f64>> {
    const MAX_ROUNDS: usize = 10_000;
    let binom = binomial_table(k_max);
    // cdf[j] = P(rounds(j) <= t) for the current t; groups of size <= 1
    // are already dissolved.
    let mut cdf = vec![0.0f64; k_max + 1];
    for done in cdf.iter_mut().take(1.min(k_max) + 1) {
        *done = 1.0;
    }
    let mut expected = vec![0.0f64; k_max + 1];
    for j in 2..=k_max {
        expected[j] += 1.0 - cdf[j];
    }
    for _t in 1..=MAX_ROUNDS {
        let mut next = vec![0.0f64; k_max + 1];
        next[0] = 1.0;
        if k_max >= 1 {
            next[1] = 1.0;
        }
        for j in 2..=k_max {
            let third: f64 = 3f64.powi(j as i32);
            let mut acc = 0.0;
            for a in 0..=j {
                for b in 0..=j - a {
                    let c = j - a - b;
                    let weight = binom[j][a] * binom[j - a][b] / third;
                    acc += weight * cdf[a] * cdf[b] * cdf[c];
                }
            }
            next[j] = acc;
        }
        cdf = next;
        let mut tail = 0.0f64;
        for j in 2..=k_max {
            let miss = 1.0 - cdf[j];
            expected[j] += miss;
            tail = tail.max(miss);
        }
        if tail < tail_tol {
            return Ok(expected);
        }
    }
    Err(Error::BadSimConfig(format!(
        "ternary round recursion did not converge within {MAX_ROUNDS} rounds"
    )))
}

/// Exact expected number of rounds of the ternary split game on `k` people.
pub fn ternary_expected_rounds_exact(k: usize) -> Result<f64> {
    if k > 1024 {
        return Err(Error::BadSimConfig(format!(
            "ternary recursion table capped at k = 1024, requested {k}"
        )));
    }
    Ok(ternary_expected_table(k, 1e-13)?[k])
}

/// One full game; returns the number of rounds until every room is
/// dissolved.
fn ternary_trial(seed: u64, k: usize, trial: u64) -> u64 {
    let mut rng = stream_rng(seed, purpose::TERNARY_SIM, k as u64, trial);
    let mut groups: Vec<usize> = if k >= 2 { vec![k] } else { Vec::new() };
    let mut rounds = 0u64;
    while !groups.is_empty() {
        rounds += 1;
        let mut next = Vec::with_capacity(groups.len() * 2);
        for g in groups {
            let mut rooms = [0usize; 3];
            for _ in 0..g {
                rooms[rng.random_range(0..3)] += 1;
            }
            next.extend(rooms.into_iter().filter(|&r| r >= 2));
        }
        groups = next;
    }
    rounds
}

/// Monte Carlo estimate `(mean, standard_error)` of the expected round
/// count.
pub fn ternary_mc_rounds<R: Real>(k: usize, trials: usize, seed: u64) -> Result<(R, R)> {
    if trials < 2 {
        return Err(Error::BadSimConfig(
            "ternary Monte Carlo needs at least 2 trials".to_string(),
        ));
    }
    let (sum, sum_sq) = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let r = ternary_trial(seed, k, t);
            (r, r * r)
        })
        .reduce(|| (0u64, 0u64), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = trials as f64;
    let mean = sum as f64 / n;
    let var = (sum_sq as f64 - n * mean * mean).max(0.0) / (n - 1.0);
    Ok((real(mean), real((var / n).sqrt())))
}

/// The normalized round-count sequence `alpha_k = E[rounds(k)] / k`, exact
/// up to the configured cutoff and Monte Carlo beyond it.
pub fn ternary_split_sequence<R: Real>(cfg: &SimConfig) -> Result<SimulatedSequence<R>> {
    cfg.validate()?;
    let exact_upto = cfg.max_n.min(cfg.exact_cutoff);
    let exact = ternary_expected_table(exact_upto, 1e-13)?;
    let mut values = Vec::with_capacity(cfg.max_n);
    let mut errors = Vec::with_capacity(cfg.max_n);
    for (k, &rounds) in exact.iter().enumerate().take(exact_upto + 1).skip(1) {
        values.push(real(rounds / k as f64));
        errors.push(R::zero());
    }
    for k in exact_upto + 1..=cfg.max_n {
        let (mean, se) = ternary_mc_rounds::<R>(k, cfg.trials, cfg.seed)?;
        let scale = real::<R>(k as f64);
        values.push(mean / scale);
        errors.push(se / scale);
    }
    Ok(SimulatedSequence {
        sequence: SequenceSource::from_values("ternary-rounds", values)?,
        standard_errors: errors,
        exact_upto,
    })
}
