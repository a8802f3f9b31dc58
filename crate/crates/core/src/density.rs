//! The weighted density functional `d_n(eps) = (1/rho_n) |{k <= n : predicate
//! at k}|` and the three-valued limit verdicts built on top of it.
//!
//! A [`DensityProfile`] samples `d_n` along a checkpoint grid for one fixed
//! `eps`; [`limit_verdict`] reads a trend off a single profile and
//! [`eps_sweep`] combines verdicts across an `eps`-grid, smaller `eps` being
//! the stricter evidence.

use crate::error::{Error, Result};
use crate::sequence::SequenceSource;
use crate::weights::WeightSequence;
use crate::{real, to_f64, Real};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;

/// Which per-index predicate is being counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredicateTag {
    /// One-sided upward jump: `alpha_{k+1} - alpha_k >= eps`.
    Downward,
    /// Two-sided jump: `|alpha_{k+1} - alpha_k| >= eps`.
    Absolute,
    /// Deviation from a level: `|alpha_k - L| >= eps`.
    Deviation,
}

impl PredicateTag {
    /// Difference predicates consume pairs `(alpha_k, alpha_{k+1})`, so the
    /// last usable index is `horizon - 1`; the deviation predicate reads
    /// single terms.
    pub fn max_index(self, horizon: usize) -> usize {
        match self {
            PredicateTag::Downward | PredicateTag::Absolute => horizon.saturating_sub(1),
            PredicateTag::Deviation => horizon,
        }
    }
}

impl fmt::Display for PredicateTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PredicateTag::Downward => "downward",
            PredicateTag::Absolute => "absolute",
            PredicateTag::Deviation => "deviation",
        };
        f.write_str(name)
    }
}

/// One sampled point of a density trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<R> {
    /// Prefix length `n`.
    pub n: usize,
    /// Exact count `|{k <= n : predicate holds at k}|`.
    pub count: usize,
    /// `count / rho_n`.
    pub density: R,
    /// `count / rho(min(n, last observable index))`: past the last index
    /// the predicate can evaluate, no new hits can appear and the raw
    /// density dips mechanically; trend decisions read this value instead.
    /// Equal to `density` at every checkpoint within the observable range.
    pub observable_density: R,
}

/// The density trajectory of one sequence, one predicate and one `eps`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DensityProfile<R: Real> {
    pub sequence: String,
    pub weights: String,
    pub epsilon: R,
    pub tag: PredicateTag,
    /// Level `L` for the deviation predicate; absent otherwise.
    pub level: Option<R>,
    pub checkpoints: Vec<Checkpoint<R>>,
}

impl<R: Real> DensityProfile<R> {
    /// Density at the largest checkpoint.
    pub fn final_density(&self) -> R {
        self.checkpoints.last().map(|c| c.density).unwrap_or_else(R::zero)
    }

    /// Count at the largest checkpoint.
    pub fn final_count(&self) -> usize {
        self.checkpoints.last().map(|c| c.count).unwrap_or(0)
    }

    /// Largest count over all checkpoints.
    pub fn max_count(&self) -> usize {
        self.checkpoints.iter().map(|c| c.count).max().unwrap_or(0)
    }
}

/// Thresholds used to call a finite-prefix limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances<R> {
    /// Final density at or below this (with a non-increasing tail)
    /// supports "tends to 0".
    pub tau_accept: R,
    /// Final density at or above this (with a non-decreasing tail)
    /// supports "does not tend to 0".
    pub tau_reject: R,
}

impl<R: Real> Default for Tolerances<R> {
    fn default() -> Self {
        Tolerances {
            tau_accept: real(0.01),
            tau_reject: real(0.1),
        }
    }
}

impl<R: Real> Tolerances<R> {
    /// Widened acceptance threshold for Monte Carlo sequences, whose
    /// difference terms carry sampling noise.
    pub fn noise_tolerant() -> Self {
        Tolerances {
            tau_accept: real(0.05),
            tau_reject: real(0.1),
        }
    }
}

/// Three-valued decision about an asymptotic property read from a prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Accept,
    Reject,
    Inconclusive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Outcome::Accept => "Accept",
            Outcome::Reject => "Reject",
            Outcome::Inconclusive => "Inconclusive",
        };
        f.write_str(name)
    }
}

/// A decision plus the density evidence it was read from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Verdict<R: Real> {
    pub outcome: Outcome,
    pub evidence: Vec<DensityProfile<R>>,
    pub tolerances: Tolerances<R>,
    pub narrative: String,
}

impl<R: Real> Verdict<R> {
    pub fn is_accept(&self) -> bool {
        self.outcome == Outcome::Accept
    }

    pub fn is_reject(&self) -> bool {
        self.outcome == Outcome::Reject
    }

    pub fn is_inconclusive(&self) -> bool {
        self.outcome == Outcome::Inconclusive
    }
}

/// Default `eps`-grid, strictly decreasing so the sweep tightens.
pub fn default_eps_grid<R: Real>() -> Vec<R> {
    [1.0, 0.5, 0.1, 0.05, 0.01].iter().map(|&e| real(e)).collect()
}

pub(crate) fn validate_eps_grid<R: Real>(grid: &[R]) -> Result<()> {
    if grid.is_empty()
        || grid.iter().any(|e| *e <= R::zero() || !e.is_finite())
        || grid.windows(2).any(|p| p[1] >= p[0])
    {
        return Err(Error::InvalidEpsGrid);
    }
    Ok(())
}

/// Log-spaced checkpoint grid: powers of two from 128 up to `max_n`, capped
/// at 2^20, with `max_n` itself always included.
///
/// Short prefixes fall back to quarters of the horizon; below `max_n = 9`
/// four distinct checkpoints `>= 2` cannot exist and the call errors.
pub fn default_checkpoints(max_n: usize) -> Result<Vec<usize>> {
    let mut grid: Vec<usize> = (7..=20)
        .map(|p| 1usize << p)
        .filter(|&n| n < max_n)
        .collect();
    grid.push(max_n);
    if grid.len() < 4 {
        grid = [max_n.div_ceil(8), max_n.div_ceil(4), max_n.div_ceil(2), max_n]
            .iter()
            .map(|&n| n.max(2))
            .collect();
        grid.dedup();
    }
    if grid.len() < 4 {
        return Err(Error::HorizonTooSmall {
            horizon: max_n,
            required: 9,
        });
    }
    Ok(grid)
}

/// Computes the exact density trajectory of `s` under the given predicate.
///
/// Counting is a single pass; for the difference predicates the count at a
/// checkpoint `n` covers `k <= min(n, horizon - 1)` since `Δalpha_k` needs
/// `alpha_{k+1}`.
pub fn density_profile<R: Real>(
    s: &SequenceSource<R>,
    w: &WeightSequence<R>,
    eps: R,
    tag: PredicateTag,
    level: Option<R>,
    grid: &[usize],
) -> Result<DensityProfile<R>> {
    if eps <= R::zero() || !eps.is_finite() {
        return Err(Error::Precondition(format!(
            "epsilon must be positive and finite, got {eps}"
        )));
    }
    if tag == PredicateTag::Deviation && level.is_none() {
        return Err(Error::MissingLevel);
    }
    if grid.is_empty() {
        return Err(Error::Precondition("checkpoint grid is empty".to_string()));
    }
    let mut sorted: Vec<usize> = grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &n in &sorted {
        if n < 2 || n > s.horizon() {
            return Err(Error::GridOutOfRange {
                n,
                max: s.horizon(),
            });
        }
    }
    let max_n = *sorted.last().expect("non-empty grid");
    w.rho(max_n)?;

    let values = s.values();
    let level_val = level.unwrap_or_else(R::zero);
    let holds = |k: usize| -> bool {
        // k is 1-based and already bounded by tag.max_index(horizon).
        match tag {
            PredicateTag::Downward => values[k] - values[k - 1] >= eps,
            PredicateTag::Absolute => (values[k] - values[k - 1]).abs() >= eps,
            PredicateTag::Deviation => (values[k - 1] - level_val).abs() >= eps,
        }
    };

    let last_k = tag.max_index(s.horizon());
    let mut checkpoints = Vec::with_capacity(sorted.len());
    let mut count = 0usize;
    let mut k = 1usize;
    for &n in &sorted {
        while k <= n.min(last_k) {
            if holds(k) {
                count += 1;
            }
            k += 1;
        }
        let density = real::<R>(count as f64) / w.rho(n)?;
        let observable_density = if n <= last_k {
            density
        } else {
            real::<R>(count as f64) / w.rho(last_k)?
        };
        checkpoints.push(Checkpoint {
            n,
            count,
            density,
            observable_density,
        });
    }

    Ok(DensityProfile {
        sequence: s.label().to_string(),
        weights: w.label().to_string(),
        epsilon: eps,
        tag,
        level,
        checkpoints,
    })
}

fn tail_non_increasing<R: Real>(d: &[R]) -> bool {
    d.windows(2).all(|p| p[1] <= p[0])
}

fn tail_non_decreasing<R: Real>(d: &[R]) -> bool {
    d.windows(2).all(|p| p[1] >= p[0])
}

/// Decides whether one density trajectory "tends to 0".
///
/// Accept needs a final density at or below `tau_accept` and a
/// non-increasing last three checkpoints; Reject needs a final density at
/// or above `tau_reject` and a non-decreasing last three. Everything else
/// is Inconclusive. The trend is read from the observable densities so
/// that the mechanical dip past the last evaluable index cannot mask a
/// genuinely flat trajectory.
pub fn limit_verdict<R: Real>(p: &DensityProfile<R>, tol: Tolerances<R>) -> Result<Verdict<R>> {
    if p.checkpoints.len() < 4 {
        return Err(Error::InsufficientEvidence {
            available: p.checkpoints.len(),
            required: 4,
        });
    }
    let trend: Vec<R> = p
        .checkpoints
        .iter()
        .map(|c| c.observable_density)
        .collect();
    let tail = &trend[trend.len() - 3..];
    let last = p.final_density();
    let final_n = p.checkpoints.last().expect("non-empty").n;

    let outcome = if last <= tol.tau_accept && tail_non_increasing(tail) {
        Outcome::Accept
    } else if last >= tol.tau_reject && tail_non_decreasing(tail) {
        Outcome::Reject
    } else {
        Outcome::Inconclusive
    };
    let narrative = format!(
        "{} density of '{}' at eps={}: final d={} at n={}, tail trend {} -> {}",
        p.tag,
        p.sequence,
        p.epsilon,
        last,
        final_n,
        if tail_non_increasing(tail) {
            "non-increasing"
        } else if tail_non_decreasing(tail) {
            "non-decreasing"
        } else {
            "mixed"
        },
        outcome,
    );
    Ok(Verdict {
        outcome,
        evidence: vec![p.clone()],
        tolerances: tol,
        narrative,
    })
}

/// Runs [`density_profile`] + [`limit_verdict`] over a decreasing
/// `eps`-grid and combines: Accept only if every `eps` accepts, Reject as
/// soon as any rejects, otherwise Inconclusive.
pub fn eps_sweep<R: Real>(
    s: &SequenceSource<R>,
    w: &WeightSequence<R>,
    tag: PredicateTag,
    level: Option<R>,
    eps_grid: &[R],
    n_grid: &[usize],
    tol: Tolerances<R>,
) -> Result<Verdict<R>> {
    validate_eps_grid(eps_grid)?;
    let per_eps: Vec<(DensityProfile<R>, Verdict<R>)> = eps_grid
        .par_iter()
        .map(|&eps| {
            let profile = density_profile(s, w, eps, tag, level, n_grid)?;
            let verdict = limit_verdict(&profile, tol)?;
            Ok((profile, verdict))
        })
        .collect::<Result<_>>()?;

    let outcome = if per_eps.iter().any(|(_, v)| v.is_reject()) {
        Outcome::Reject
    } else if per_eps.iter().all(|(_, v)| v.is_accept()) {
        Outcome::Accept
    } else {
        Outcome::Inconclusive
    };
    // The smallest eps is the most demanding test, so it leads the story.
    let mut lines: Vec<String> = per_eps
        .iter()
        .rev()
        .map(|(_, v)| v.narrative.clone())
        .collect();
    lines.insert(0, format!("sweep over {} eps values -> {outcome}", per_eps.len()));
    Ok(Verdict {
        outcome,
        evidence: per_eps.into_iter().map(|(p, _)| p).collect(),
        tolerances: tol,
        narrative: lines.join("; "),
    })
}

/// Writes profiles as `eps,n,density` rows for external plotting.
pub fn profiles_to_csv<R: Real>(profiles: &[DensityProfile<R>], mut out: impl Write) -> Result<()> {
    writeln!(out, "eps,n,density")?;
    for p in profiles {
        for c in &p.checkpoints {
            writeln!(out, "{},{},{}", to_f64(p.epsilon), c.n, to_f64(c.density))?;
        }
    }
    Ok(())
}
