//! Named sequence classes built on the density machinery.
//!
//! Statistical classes reduce to [`eps_sweep`] with the right predicate;
//! pointwise classes (plain quasi-Cauchy, the one-sided variants) use
//! explicit tail-window heuristics, since "there exists k0" cannot be
//! verified on a prefix; the lacunary class swaps cumulative weights for
//! per-window densities.

use crate::density::{
    default_checkpoints, default_eps_grid, eps_sweep, limit_verdict, validate_eps_grid,
    Checkpoint, DensityProfile, Outcome, PredicateTag, Tolerances, Verdict,
};
use crate::error::{Error, Result};
use crate::rng::{purpose, stream_rng};
use crate::sequence::SequenceSource;
use crate::weights::WeightSequence;
use crate::{real, Real};
use rand::RngExt;
use serde::{Deserialize, Serialize};

/// Increasing window boundaries `0 = k_0 < k_1 < k_2 < ...` defining the
/// half-open windows `(k_{r-1}, k_r]` of widths `h_r = k_r - k_{r-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LacunaryWindows {
    boundaries: Vec<usize>,
}

impl LacunaryWindows {
    /// Validates that boundaries start at 0 and increase strictly; the
    /// offending position (0-based) is reported otherwise.
    pub fn new(boundaries: Vec<usize>) -> Result<Self> {
        if boundaries.len() < 2 || boundaries[0] != 0 {
            return Err(Error::MalformedTheta { position: 0 });
        }
        for (pos, pair) in boundaries.windows(2).enumerate() {
            if pair[1] <= pair[0] {
                return Err(Error::MalformedTheta { position: pos + 1 });
            }
        }
        Ok(LacunaryWindows { boundaries })
    }

    /// Doubling boundaries `0, 1, 2, 4, 8, ...` up to `max_n`, with `max_n`
    /// itself always the last boundary.
    pub fn doubling(max_n: usize) -> Result<Self> {
        if max_n < 1 {
            return Err(Error::MalformedTheta { position: 0 });
        }
        let mut boundaries = vec![0, 1];
        let mut next = 2usize;
        while next < max_n {
            boundaries.push(next);
            next *= 2;
        }
        if *boundaries.last().expect("non-empty") != max_n {
            boundaries.push(max_n);
        }
        Ok(LacunaryWindows { boundaries })
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// The windows `(lo, hi]` in order.
    pub fn windows(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.boundaries.windows(2).map(|p| (p[0], p[1]))
    }

    /// Number of windows.
    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest boundary.
    pub fn max_index(&self) -> usize {
        *self.boundaries.last().expect("validated non-empty")
    }
}

/// The sequence classes the toolkit can test for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum SequenceClass<R: Real> {
    /// `|Δalpha_k| -> 0` pointwise (tail-sup heuristic).
    QuasiCauchy,
    /// One-sided pointwise variant: upward jumps `Δalpha_k` eventually
    /// stay below every `eps` (tail-sup of the signed difference).
    DownwardQuasiCauchy,
    /// Weighted density of `{k : |Δalpha_k| >= eps}` tends to 0.
    RhoStatQuasiCauchy,
    /// Weighted density of `{k : Δalpha_k >= eps}` tends to 0.
    RhoStatDownwardQuasiCauchy,
    /// Weighted density of `{k : |alpha_k - level| >= eps}` tends to 0.
    RhoStatConvergent { level: R },
    /// Eventually no late rise: `alpha_m - alpha_n < eps` for `m >= n`
    /// beyond some index (sampled tail pairs).
    DownwardHalfCauchy,
    /// Per-window densities `(1/h_r) |{k in (k_{r-1}, k_r] : Δalpha_k >=
    /// eps}|` tend to 0.
    LacunaryStatDownwardQuasiCauchy { theta: LacunaryWindows },
}

impl<R: Real> SequenceClass<R> {
    /// Human-readable class name for reports.
    pub fn name(&self) -> &'static str {
        match self {
            SequenceClass::QuasiCauchy => "quasi-Cauchy",
            SequenceClass::DownwardQuasiCauchy => "downward quasi-Cauchy",
            SequenceClass::RhoStatQuasiCauchy => "rho-statistically quasi-Cauchy",
            SequenceClass::RhoStatDownwardQuasiCauchy => {
                "rho-statistically downward quasi-Cauchy"
            }
            SequenceClass::RhoStatConvergent { .. } => "rho-statistically convergent",
            SequenceClass::DownwardHalfCauchy => "downward half Cauchy",
            SequenceClass::LacunaryStatDownwardQuasiCauchy { .. } => {
                "lacunary statistically downward quasi-Cauchy"
            }
        }
    }
}

/// Shared knobs for every classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClassifyConfig<R: Real> {
    pub tolerances: Tolerances<R>,
    /// Strictly decreasing positive thresholds; the sweep grid for
    /// statistical classes and the Accept/Reject band for tail checks.
    pub eps_grid: Vec<R>,
    /// Explicit checkpoint grid; `None` derives the default log-spaced one.
    pub checkpoints: Option<Vec<usize>>,
    /// Fraction of the prefix treated as "the tail" by pointwise checks.
    pub tail_fraction: f64,
    /// Pair-sampling budget for the half-Cauchy check.
    pub max_pairs: usize,
    /// Seed for deterministic pair sampling.
    pub seed: u64,
}

impl<R: Real> Default for ClassifyConfig<R> {
    fn default() -> Self {
        ClassifyConfig {
            tolerances: Tolerances::default(),
            eps_grid: default_eps_grid(),
            checkpoints: None,
            tail_fraction: 0.5,
            max_pairs: 10_000,
            seed: 0,
        }
    }
}

impl<R: Real> ClassifyConfig<R> {
    /// Config with the widened acceptance threshold for noisy Monte Carlo
    /// sequences.
    pub fn noise_tolerant() -> Self {
        ClassifyConfig {
            tolerances: Tolerances::noise_tolerant(),
            ..ClassifyConfig::default()
        }
    }
}

const TAIL_MIN_HORIZON: usize = 64;

/// Average of the last `fraction` of the prefix — a cheap stand-in for the
/// limit when the caller does not supply a level.
pub fn estimate_level<R: Real>(s: &SequenceSource<R>, fraction: f64) -> R {
    let h = s.horizon();
    let take = ((h as f64 * fraction).ceil() as usize).clamp(1, h);
    let tail = &s.values()[h - take..];
    let sum = tail.iter().fold(R::zero(), |acc, &v| acc + v);
    sum / real(take as f64)
}

fn checkpoint_grid<R: Real>(cfg: &ClassifyConfig<R>, horizon: usize) -> Result<Vec<usize>> {
    match &cfg.checkpoints {
        Some(grid) => Ok(grid.clone()),
        None => default_checkpoints(horizon),
    }
}

/// Verdict from a single tail statistic compared against the `eps` band:
/// Accept when even the smallest `eps` dominates the statistic, Reject when
/// the statistic reaches the largest, Inconclusive between.
fn tail_verdict<R: Real>(
    stat: R,
    what: &str,
    span: (usize, usize),
    cfg: &ClassifyConfig<R>,
) -> Result<Verdict<R>> {
    validate_eps_grid(&cfg.eps_grid)?;
    let eps_max = cfg.eps_grid[0];
    let eps_min = *cfg.eps_grid.last().expect("validated non-empty");
    let outcome = if stat < eps_min {
        Outcome::Accept
    } else if stat >= eps_max {
        Outcome::Reject
    } else {
        Outcome::Inconclusive
    };
    Ok(Verdict {
        outcome,
        evidence: Vec::new(),
        tolerances: cfg.tolerances,
        narrative: format!(
            "{what} over indices [{}, {}] is {stat}: Accept below {eps_min}, Reject at {eps_max} or above -> {outcome}",
            span.0, span.1,
        ),
    })
}

fn tail_start(horizon: usize, fraction: f64) -> usize {
    let keep = ((horizon as f64) * fraction.clamp(0.0, 1.0)).ceil() as usize;
    (horizon - keep.min(horizon)).max(1)
}

fn require_tail_horizon(horizon: usize) -> Result<()> {
    if horizon < TAIL_MIN_HORIZON {
        return Err(Error::HorizonTooSmall {
            horizon,
            required: TAIL_MIN_HORIZON,
        });
    }
    Ok(())
}

/// Density profile over lacunary windows: one checkpoint per window `r`,
/// placed at `n = k_r`, carrying `(1/h_r) |{k in (k_{r-1}, k_r] :
/// predicate}|`.
pub fn lacunary_profile<R: Real>(
    s: &SequenceSource<R>,
    theta: &LacunaryWindows,
    eps: R,
) -> Result<DensityProfile<R>> {
    if eps <= R::zero() || !eps.is_finite() {
        return Err(Error::Precondition(format!(
            "epsilon must be positive and finite, got {eps}"
        )));
    }
    let last_k = s.horizon().saturating_sub(1);
    if theta.max_index() > last_k {
        return Err(Error::GridOutOfRange {
            n: theta.max_index(),
            max: last_k,
        });
    }
    let values = s.values();
    let checkpoints = theta
        .windows()
        .map(|(lo, hi)| {
            let count = (lo + 1..=hi)
                .filter(|&k| values[k] - values[k - 1] >= eps)
                .count();
            let width = hi - lo;
            let density = real::<R>(count as f64) / real(width as f64);
            // Window boundaries never exceed the last difference index, so
            // the lacunary densities are observable as-is.
            Checkpoint {
                n: hi,
                count,
                density,
                observable_density: density,
            }
        })
        .collect();
    Ok(DensityProfile {
        sequence: s.label().to_string(),
        weights: "lacunary 1/h_r".to_string(),
        epsilon: eps,
        tag: PredicateTag::Downward,
        level: None,
        checkpoints,
    })
}

fn lacunary_sweep<R: Real>(
    s: &SequenceSource<R>,
    theta: &LacunaryWindows,
    cfg: &ClassifyConfig<R>,
) -> Result<Verdict<R>> {
    validate_eps_grid(&cfg.eps_grid)?;
    let mut profiles = Vec::with_capacity(cfg.eps_grid.len());
    let mut verdicts = Vec::with_capacity(cfg.eps_grid.len());
    for &eps in &cfg.eps_grid {
        let p = lacunary_profile(s, theta, eps)?;
        verdicts.push(limit_verdict(&p, cfg.tolerances)?);
        profiles.push(p);
    }
    let outcome = if verdicts.iter().any(Verdict::is_reject) {
        Outcome::Reject
    } else if verdicts.iter().all(Verdict::is_accept) {
        Outcome::Accept
    } else {
        Outcome::Inconclusive
    };
    let mut lines: Vec<String> = verdicts.iter().rev().map(|v| v.narrative.clone()).collect();
    lines.insert(
        0,
        format!(
            "per-window sweep over {} eps values and {} windows -> {outcome}",
            cfg.eps_grid.len(),
            theta.len(),
        ),
    );
    Ok(Verdict {
        outcome,
        evidence: profiles,
        tolerances: cfg.tolerances,
        narrative: lines.join("; "),
    })
}

/// Tests `s` for membership in `class` at finite scale.
pub fn classify<R: Real>(
    s: &SequenceSource<R>,
    w: &WeightSequence<R>,
    class: &SequenceClass<R>,
    cfg: &ClassifyConfig<R>,
) -> Result<Verdict<R>> {
    let h = s.horizon();
    match class {
        SequenceClass::RhoStatDownwardQuasiCauchy => {
            let grid = checkpoint_grid(cfg, h)?;
            eps_sweep(s, w, PredicateTag::Downward, None, &cfg.eps_grid, &grid, cfg.tolerances)
        }
        SequenceClass::RhoStatQuasiCauchy => {
            let grid = checkpoint_grid(cfg, h)?;
            eps_sweep(s, w, PredicateTag::Absolute, None, &cfg.eps_grid, &grid, cfg.tolerances)
        }
        SequenceClass::RhoStatConvergent { level } => {
            let grid = checkpoint_grid(cfg, h)?;
            eps_sweep(
                s,
                w,
                PredicateTag::Deviation,
                Some(*level),
                &cfg.eps_grid,
                &grid,
                cfg.tolerances,
            )
        }
        SequenceClass::QuasiCauchy => {
            require_tail_horizon(h)?;
            let start = tail_start(h - 1, cfg.tail_fraction);
            let values = s.values();
            let stat = (start..h)
                .map(|k| (values[k] - values[k - 1]).abs())
                .fold(R::zero(), R::max);
            tail_verdict(stat, "tail sup of |Δalpha_k|", (start, h - 1), cfg)
        }
        SequenceClass::DownwardQuasiCauchy => {
            require_tail_horizon(h)?;
            let start = tail_start(h - 1, cfg.tail_fraction);
            let values = s.values();
            let stat = (start..h)
                .map(|k| values[k] - values[k - 1])
                .fold(R::neg_infinity(), R::max)
                .max(R::zero());
            tail_verdict(stat, "tail sup of upward jumps Δalpha_k", (start, h - 1), cfg)
        }
        SequenceClass::DownwardHalfCauchy => {
            require_tail_horizon(h)?;
            let start = tail_start(h, cfg.tail_fraction);
            let values = s.values();
            let tail_len = h - start + 1;
            let all_pairs = tail_len * (tail_len + 1) / 2;
            let stat = if all_pairs <= cfg.max_pairs {
                let mut best = R::zero();
                for n in start..=h {
                    for m in n..=h {
                        best = best.max(values[m - 1] - values[n - 1]);
                    }
                }
                best
            } else {
                let mut rng = stream_rng(cfg.seed, purpose::HALF_CAUCHY_PAIRS, 0, 0);
                let mut best = R::zero();
                for _ in 0..cfg.max_pairs {
                    let a = rng.random_range(start..=h);
                    let b = rng.random_range(start..=h);
                    let (n, m) = if a <= b { (a, b) } else { (b, a) };
                    best = best.max(values[m - 1] - values[n - 1]);
                }
                best
            };
            tail_verdict(
                stat,
                "max late rise alpha_m - alpha_n over tail pairs m >= n",
                (start, h),
                cfg,
            )
        }
        SequenceClass::LacunaryStatDownwardQuasiCauchy { theta } => lacunary_sweep(s, theta, cfg),
    }
}

/// One classifier row of an implication report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: String,
    pub outcome: Outcome,
}

/// An observed `Accept -> Reject` edge along a one-way implication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImplicationAnomaly {
    pub upstream: String,
    pub downstream: String,
}

/// All classifiers run against one sequence, with any implication
/// violations flagged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImplicationReport {
    pub sequence: String,
    pub rows: Vec<ClassRow>,
    pub anomalies: Vec<ImplicationAnomaly>,
}

impl ImplicationReport {
    pub fn is_consistent(&self) -> bool {
        self.anomalies.is_empty()
    }

    pub fn outcome_of(&self, class: &str) -> Option<Outcome> {
        self.rows.iter().find(|r| r.class == class).map(|r| r.outcome)
    }
}

/// Runs every classifier and checks the one-way implications
/// convergent => quasi-Cauchy => downward quasi-Cauchy and half Cauchy =>
/// downward quasi-Cauchy; an anomaly is an Accept upstream of a Reject.
/// Inconclusive never counts as a violation.
pub fn implication_report<R: Real>(
    s: &SequenceSource<R>,
    w: &WeightSequence<R>,
    cfg: &ClassifyConfig<R>,
) -> Result<ImplicationReport> {
    let level = estimate_level(s, 0.1);
    let theta = LacunaryWindows::doubling(s.horizon().saturating_sub(1))?;
    let classes: Vec<SequenceClass<R>> = vec![
        SequenceClass::QuasiCauchy,
        SequenceClass::DownwardQuasiCauchy,
        SequenceClass::RhoStatQuasiCauchy,
        SequenceClass::RhoStatDownwardQuasiCauchy,
        SequenceClass::RhoStatConvergent { level },
        SequenceClass::DownwardHalfCauchy,
        SequenceClass::LacunaryStatDownwardQuasiCauchy { theta },
    ];
    let mut rows = Vec::with_capacity(classes.len());
    for class in &classes {
        let verdict = classify(s, w, class, cfg)?;
        rows.push(ClassRow {
            class: class.name().to_string(),
            outcome: verdict.outcome,
        });
    }
    let outcome = |name: &str| {
        rows.iter()
            .find(|r| r.class == name)
            .map(|r| r.outcome)
            .expect("all classes ran")
    };
    let edges = [
        ("rho-statistically convergent", "rho-statistically quasi-Cauchy"),
        (
            "rho-statistically quasi-Cauchy",
            "rho-statistically downward quasi-Cauchy",
        ),
        (
            "downward half Cauchy",
            "rho-statistically downward quasi-Cauchy",
        ),
    ];
    let anomalies = edges
        .iter()
        .filter(|(up, down)| outcome(up) == Outcome::Accept && outcome(down) == Outcome::Reject)
        .map(|(up, down)| ImplicationAnomaly {
            upstream: up.to_string(),
            downstream: down.to_string(),
        })
        .collect();
    Ok(ImplicationReport {
        sequence: s.label().to_string(),
        rows,
        anomalies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{make_weights, WeightSpec};

    fn statistical(h: usize) -> WeightSequence<f64> {
        make_weights(&WeightSpec::Statistical, h).unwrap()
    }

    fn run(expr: &str, h: usize, class: &SequenceClass<f64>) -> Outcome {
        let s = SequenceSource::closed_form(expr, h).unwrap();
        classify(&s, &statistical(h), class, &ClassifyConfig::default())
            .unwrap()
            .outcome
    }

    #[test]
    fn falling_ramp_is_downward_but_not_two_sided() {
        let h = 16384;
        assert_eq!(run("-k", h, &SequenceClass::RhoStatDownwardQuasiCauchy), Outcome::Accept);
        assert_eq!(run("-k", h, &SequenceClass::RhoStatQuasiCauchy), Outcome::Reject);
        assert_eq!(run("-k", h, &SequenceClass::QuasiCauchy), Outcome::Reject);
        assert_eq!(run("-k", h, &SequenceClass::DownwardQuasiCauchy), Outcome::Accept);
        assert_eq!(run("-k", h, &SequenceClass::DownwardHalfCauchy), Outcome::Accept);
    }

    #[test]
    fn rising_ramp_rejects_everywhere() {
        let h = 16384;
        for class in [
            SequenceClass::QuasiCauchy,
            SequenceClass::DownwardQuasiCauchy,
            SequenceClass::RhoStatQuasiCauchy,
            SequenceClass::RhoStatDownwardQuasiCauchy,
            SequenceClass::DownwardHalfCauchy,
        ] {
            assert_eq!(run("k", h, &class), Outcome::Reject, "{}", class.name());
        }
    }

    #[test]
    fn alternating_signs_reject_the_downward_class() {
        assert_eq!(
            run("(-1)^k", 16384, &SequenceClass::RhoStatDownwardQuasiCauchy),
            Outcome::Reject
        );
    }

    #[test]
    fn slow_square_root_growth_is_tail_quasi_cauchy() {
        // Differences of sqrt(k) fall below the smallest grid eps well
        // before the tail window at this horizon.
        assert_eq!(run("sqrt(k)", 16384, &SequenceClass::QuasiCauchy), Outcome::Accept);
        // The cumulative density at eps = 0.01 is still 2499/16384 here, so
        // the statistical downward class cannot accept yet — but it must
        // not reject a shrinking trajectory either.
        assert_eq!(
            run("sqrt(k)", 16384, &SequenceClass::RhoStatDownwardQuasiCauchy),
            Outcome::Inconclusive
        );
    }

    #[test]
    fn shifted_reciprocal_accepts_both_statistical_classes() {
        let h = 16384;
        assert_eq!(run("3 + 1/k", h, &SequenceClass::RhoStatQuasiCauchy), Outcome::Accept);
        assert_eq!(
            run("3 + 1/k", h, &SequenceClass::RhoStatDownwardQuasiCauchy),
            Outcome::Accept
        );
    }

    #[test]
    fn convergence_needs_a_level() {
        let h = 16384;
        let s = SequenceSource::<f64>::closed_form("5 + 1/k", h).unwrap();
        let level = estimate_level(&s, 0.1);
        assert!((level - 5.0).abs() < 0.01);
        let v = classify(
            &s,
            &statistical(h),
            &SequenceClass::RhoStatConvergent { level },
            &ClassifyConfig::default(),
        )
        .unwrap();
        assert_eq!(v.outcome, Outcome::Accept);
    }

    #[test]
    fn late_rise_breaks_the_half_cauchy_class() {
        // Flat until the tail, then a jump of 2: every sampled tail pair
        // across the jump shows the rise.
        let mut values = vec![0.0f64; 128];
        for v in values.iter_mut().skip(100) {
            *v = 2.0;
        }
        let s = SequenceSource::from_values("late-step", values).unwrap();
        let v = classify(
            &s,
            &statistical(128),
            &SequenceClass::DownwardHalfCauchy,
            &ClassifyConfig::default(),
        )
        .unwrap();
        assert_eq!(v.outcome, Outcome::Reject);
    }

    #[test]
    fn tail_checks_demand_a_minimal_horizon() {
        let s = SequenceSource::closed_form("k", 32).unwrap();
        for class in [
            SequenceClass::QuasiCauchy,
            SequenceClass::DownwardQuasiCauchy,
            SequenceClass::DownwardHalfCauchy,
        ] {
            let err = classify(&s, &statistical(32), &class, &ClassifyConfig::default())
                .unwrap_err();
            assert!(matches!(err, Error::HorizonTooSmall { required: 64, .. }));
        }
    }

    #[test]
    fn lacunary_windows_validate_their_boundaries() {
        assert!(LacunaryWindows::new(vec![0, 1, 2, 4]).is_ok());
        assert!(matches!(
            LacunaryWindows::new(vec![1, 2, 3]),
            Err(Error::MalformedTheta { position: 0 })
        ));
        assert!(matches!(
            LacunaryWindows::new(vec![0, 2, 2, 5]),
            Err(Error::MalformedTheta { position: 2 })
        ));
        let doubling = LacunaryWindows::doubling(1000).unwrap();
        assert_eq!(doubling.boundaries().first(), Some(&0));
        assert_eq!(doubling.max_index(), 1000);
        assert!(doubling.boundaries().windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn singleton_windows_partition_the_global_count() {
        let h = 257;
        let s = SequenceSource::closed_form("(-1)^k", h).unwrap();
        let theta = LacunaryWindows::new((0..=h - 1).collect()).unwrap();
        let p = lacunary_profile(&s, &theta, 1.0).unwrap();
        let windowed: usize = p.checkpoints.iter().map(|c| c.count).sum();
        let global = crate::density::density_profile(
            &s,
            &statistical(h),
            1.0,
            PredicateTag::Downward,
            None,
            &[h - 1],
        )
        .unwrap()
        .final_count();
        assert_eq!(windowed, global);
        assert!(p.checkpoints.iter().all(|c| c.count <= 1));
    }

    #[test]
    fn lacunary_doubling_classifies_the_ramp_pair() {
        let h = 16384;
        let theta = LacunaryWindows::doubling(h - 1).unwrap();
        let falling = run(
            "-k",
            h,
            &SequenceClass::LacunaryStatDownwardQuasiCauchy { theta: theta.clone() },
        );
        assert_eq!(falling, Outcome::Accept);
        let rising = run(
            "k",
            h,
            &SequenceClass::LacunaryStatDownwardQuasiCauchy { theta },
        );
        assert_eq!(rising, Outcome::Reject);
    }

    #[test]
    fn constant_sequence_is_consistent_everywhere() {
        let h = 4096;
        let s = SequenceSource::constant(3.0f64, h).unwrap();
        let report =
            implication_report(&s, &statistical(h), &ClassifyConfig::default()).unwrap();
        assert!(report.is_consistent());
        assert_eq!(report.rows.len(), 7);
        assert!(report.rows.iter().all(|r| r.outcome == Outcome::Accept));
    }

    #[test]
    fn ramps_are_consistent_with_one_way_implications() {
        let h = 4096;
        for expr in ["-k", "k"] {
            let s = SequenceSource::closed_form(expr, h).unwrap();
            let report =
                implication_report(&s, &statistical(h), &ClassifyConfig::default()).unwrap();
            assert!(report.is_consistent(), "{expr}: {:?}", report.anomalies);
        }
        let s = SequenceSource::closed_form("k", h).unwrap();
        let report = implication_report(&s, &statistical(h), &ClassifyConfig::default()).unwrap();
        assert!(report
            .rows
            .iter()
            .all(|r| r.outcome == Outcome::Reject));
    }

    #[test]
    fn half_cauchy_sampling_is_deterministic() {
        // 8192 tail indices give ~33M pairs, forcing the sampling path.
        let h = 16384;
        let s = SequenceSource::<f64>::uniform_random(0.0, 1.0, h, 77).unwrap();
        let w = statistical(h);
        let a = classify(&s, &w, &SequenceClass::DownwardHalfCauchy, &ClassifyConfig::default())
            .unwrap();
        let b = classify(&s, &w, &SequenceClass::DownwardHalfCauchy, &ClassifyConfig::default())
            .unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.narrative, b.narrative);
        // Rises close to 1 occur in any long uniform window, but never a
        // full 1, so the verdict lands between the thresholds.
        assert_eq!(a.outcome, Outcome::Inconclusive);
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            /// Monotone non-increasing sequences always accept the
            /// pointwise downward classes and never trip an implication
            /// anomaly.
            #[test]
            fn non_increasing_sequences_accept_downward(
                steps in proptest::collection::vec(0.0f64..3.0, 64..128),
            ) {
                let mut acc = 0.0;
                let values: Vec<f64> = steps
                    .iter()
                    .map(|s| {
                        acc -= s;
                        acc
                    })
                    .collect();
                let h = values.len();
                let s = SequenceSource::from_values("desc", values).unwrap();
                let w = statistical(h);
                let cfg = ClassifyConfig::default();
                let down = classify(&s, &w, &SequenceClass::DownwardQuasiCauchy, &cfg).unwrap();
                prop_assert_eq!(down.outcome, Outcome::Accept);
                let half = classify(&s, &w, &SequenceClass::DownwardHalfCauchy, &cfg).unwrap();
                prop_assert_eq!(half.outcome, Outcome::Accept);
                let report = implication_report(&s, &w, &cfg).unwrap();
                prop_assert!(report.is_consistent());
            }

            /// The half-Cauchy statistic is monotone under adding a late
            /// upward shift.
            #[test]
            fn late_shift_never_improves_half_cauchy(
                base in proptest::collection::vec(-1.0f64..1.0, 80..120),
                shift in 1.5f64..4.0,
            ) {
                let h = base.len();
                let mut shifted = base.clone();
                let cut = h - h / 4;
                for v in shifted.iter_mut().skip(cut) {
                    *v += shift;
                }
                let w = statistical(h);
                let cfg = ClassifyConfig::default();
                let before = classify(
                    &SequenceSource::from_values("base", base).unwrap(),
                    &w,
                    &SequenceClass::DownwardHalfCauchy,
                    &cfg,
                )
                .unwrap();
                let after = classify(
                    &SequenceSource::from_values("shifted", shifted).unwrap(),
                    &w,
                    &SequenceClass::DownwardHalfCauchy,
                    &cfg,
                )
                .unwrap();
                let rank = |o: Outcome| match o {
                    Outcome::Accept => 0,
                    Outcome::Inconclusive => 1,
                    Outcome::Reject => 2,
                };
                prop_assert!(rank(after.outcome) >= rank(before.outcome));
            }
        }
    }
}
