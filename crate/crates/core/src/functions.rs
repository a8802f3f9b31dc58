//! Real functions over declared domains and the empirical continuity
//! machinery: preservation reports, closure of sums and compositions,
//! the downward/ward/convergence chain, image compactness, and the
//! uniform-continuity checks in both directions.
//!
//! "Continuity" here is always tested against a named corpus of sequences,
//! never claimed universally.

use crate::classify::{classify, estimate_level, ClassifyConfig, SequenceClass};
use crate::compactness::{
    bounded_above_check, extract_downward_witness, ExtractConfig, SampleSet,
};
use crate::density::{
    default_checkpoints, density_profile, Outcome, PredicateTag, Verdict,
};
use crate::error::{Error, Result};
use crate::rng::{purpose, stream_rng};
use crate::sequence::{limit_interleave, pair_interleave, zigzag_interleave, SequenceSource};
use crate::weights::WeightSequence;
use crate::{real, to_f64, Real};
use rand::RngExt;
use serde::Serialize;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
enum Rule<R: Real> {
    Affine { a: R, b: R },
    Square,
    Neg,
    Abs,
    Sin,
    Const(R),
    /// Piecewise-linear interpolation through `(xs[i], ys[i])` knots.
    Pwl { xs: Vec<R>, ys: Vec<R> },
    /// Polynomial in Bernstein form on [0, 1] with the given coefficients,
    /// evaluated by de Casteljau's algorithm.
    Bernstein { coeffs: Vec<R> },
    Sum(Box<RealFunction<R>>, Box<RealFunction<R>>),
    Scale { c: R, inner: Box<RealFunction<R>> },
    Compose {
        outer: Box<RealFunction<R>>,
        inner: Box<RealFunction<R>>,
    },
}

/// A deterministic real function on a declared closed interval, with an
/// optional Lipschitz-constant hint.
#[derive(Debug, Clone)]
pub struct RealFunction<R: Real> {
    label: String,
    domain: (R, R),
    lipschitz: Option<R>,
    rule: Rule<R>,
}

impl<R: Real> RealFunction<R> {
    pub fn affine(a: R, b: R) -> Self {
        RealFunction {
            label: format!("affine({a},{b})"),
            domain: (R::neg_infinity(), R::infinity()),
            lipschitz: Some(a.abs()),
            rule: Rule::Affine { a, b },
        }
    }

    pub fn identity() -> Self {
        let mut f = Self::affine(R::one(), R::zero());
        f.label = "identity".to_string();
        f
    }

    pub fn square() -> Self {
        RealFunction {
            label: "square".to_string(),
            domain: (R::neg_infinity(), R::infinity()),
            lipschitz: None,
            rule: Rule::Square,
        }
    }

    pub fn neg() -> Self {
        RealFunction {
            label: "neg".to_string(),
            domain: (R::neg_infinity(), R::infinity()),
            lipschitz: Some(R::one()),
            rule: Rule::Neg,
        }
    }

    pub fn abs() -> Self {
        RealFunction {
            label: "abs".to_string(),
            domain: (R::neg_infinity(), R::infinity()),
            lipschitz: Some(R::one()),
            rule: Rule::Abs,
        }
    }

    pub fn sin() -> Self {
        RealFunction {
            label: "sin".to_string(),
            domain: (R::neg_infinity(), R::infinity()),
            lipschitz: Some(R::one()),
            rule: Rule::Sin,
        }
    }

    pub fn constant(c: R) -> Self {
        RealFunction {
            label: format!("const({c})"),
            domain: (R::neg_infinity(), R::infinity()),
            lipschitz: Some(R::zero()),
            rule: Rule::Const(c),
        }
    }

    /// Piecewise-linear function through the given knots; the domain is
    /// `[xs[0], xs[last]]` and the Lipschitz hint is the largest absolute
    /// slope.
    pub fn pwl(label: impl Into<String>, xs: Vec<R>, ys: Vec<R>) -> Result<Self> {
        let label = label.into();
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::BadSpec {
                spec: label,
                reason: "piecewise-linear needs >= 2 knots with matching x/y lengths".to_string(),
            });
        }
        if xs.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::BadSpec {
                spec: label,
                reason: "piecewise-linear knots must have strictly increasing x".to_string(),
            });
        }
        let lipschitz = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(xp, yp)| ((yp[1] - yp[0]) / (xp[1] - xp[0])).abs())
            .fold(R::zero(), R::max);
        Ok(RealFunction {
            label,
            domain: (xs[0], *xs.last().expect("len >= 2")),
            lipschitz: Some(lipschitz),
            rule: Rule::Pwl { xs, ys },
        })
    }

    /// Degree-`n` Bernstein-form approximation of `base` on [0, 1]: the
    /// coefficients are `base(j/n)`. A Lipschitz base keeps its constant.
    pub fn bernstein_of(base: &RealFunction<R>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition(
                "bernstein approximation needs degree >= 1".to_string(),
            ));
        }
        if base.domain.0 > R::zero() || base.domain.1 < R::one() {
            return Err(Error::Precondition(format!(
                "bernstein approximation needs the base defined on [0, 1], got [{}, {}]",
                base.domain.0, base.domain.1
            )));
        }
        let coeffs = (0..=n)
            .map(|j| base.eval(real::<R>(j as f64) / real(n as f64)))
            .collect::<Result<Vec<R>>>()?;
        Ok(RealFunction {
            label: format!("bernstein[{n}]({})", base.label),
            domain: (R::zero(), R::one()),
            lipschitz: base.lipschitz,
            rule: Rule::Bernstein { coeffs },
        })
    }

    /// Pointwise sum `f + g` on the intersection of the domains.
    pub fn sum(f: RealFunction<R>, g: RealFunction<R>) -> Self {
        let lipschitz = match (f.lipschitz, g.lipschitz) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        RealFunction {
            label: format!("({} + {})", f.label, g.label),
            domain: (f.domain.0.max(g.domain.0), f.domain.1.min(g.domain.1)),
            lipschitz,
            rule: Rule::Sum(Box::new(f), Box::new(g)),
        }
    }

    /// Scalar multiple `c * f`.
    pub fn scale(c: R, f: RealFunction<R>) -> Self {
        RealFunction {
            label: format!("{c}*{}", f.label),
            domain: f.domain,
            lipschitz: f.lipschitz.map(|l| l * c.abs()),
            rule: Rule::Scale {
                c,
                inner: Box::new(f),
            },
        }
    }

    /// Composition `outer(inner(x))` on the inner domain; values of the
    /// inner function must land in the outer domain at evaluation time.
    pub fn compose(outer: RealFunction<R>, inner: RealFunction<R>) -> Self {
        let lipschitz = match (outer.lipschitz, inner.lipschitz) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        RealFunction {
            label: format!("({} o {})", outer.label, inner.label),
            domain: inner.domain,
            lipschitz,
            rule: Rule::Compose {
                outer: Box::new(outer),
                inner: Box::new(inner),
            },
        }
    }

    /// Parses the textual grammar: `affine:a,b`, `square`, `neg`, `abs`,
    /// `sin`, `const:c`, `lipschitz-pwl:<path>` (CSV lines `x,y`).
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |reason: String| Error::BadSpec {
            spec: spec.to_string(),
            reason,
        };
        let trimmed = spec.trim();
        match trimmed {
            "square" => return Ok(Self::square()),
            "neg" => return Ok(Self::neg()),
            "abs" => return Ok(Self::abs()),
            "sin" => return Ok(Self::sin()),
            _ => {}
        }
        if let Some(args) = trimmed.strip_prefix("affine:") {
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() != 2 {
                return Err(bad("affine needs exactly two parameters a,b".to_string()));
            }
            let a = f64::from_str(parts[0].trim()).map_err(|e| bad(e.to_string()))?;
            let b = f64::from_str(parts[1].trim()).map_err(|e| bad(e.to_string()))?;
            return Ok(Self::affine(real(a), real(b)));
        }
        if let Some(arg) = trimmed.strip_prefix("const:") {
            let c = f64::from_str(arg.trim()).map_err(|e| bad(e.to_string()))?;
            return Ok(Self::constant(real(c)));
        }
        if let Some(path) = trimmed.strip_prefix("lipschitz-pwl:") {
            let text = std::fs::read_to_string(path.trim())?;
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let (x, y) = line
                    .split_once(',')
                    .ok_or_else(|| bad(format!("line {}: expected x,y", lineno + 1)))?;
                xs.push(real(
                    f64::from_str(x.trim()).map_err(|e| bad(e.to_string()))?,
                ));
                ys.push(real(
                    f64::from_str(y.trim()).map_err(|e| bad(e.to_string()))?,
                ));
            }
            return Self::pwl(format!("pwl({})", path.trim()), xs, ys);
        }
        Err(bad(
            "expected one of: affine:a,b, square, neg, abs, sin, const:c, lipschitz-pwl:<path>"
                .to_string(),
        ))
    }

    /// Restricts (or widens) the declared domain.
    pub fn with_domain(mut self, lo: R, hi: R) -> Self {
        self.domain = (lo, hi);
        self
    }

    /// Overrides the Lipschitz hint.
    pub fn with_lipschitz(mut self, l: R) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> (R, R) {
        self.domain
    }

    pub fn lipschitz(&self) -> Option<R> {
        self.lipschitz
    }

    fn eval_at(&self, x: R, index: usize, sequence: &str) -> Result<R> {
        if x < self.domain.0 || x > self.domain.1 || !x.is_finite() {
            return Err(Error::DomainViolation {
                sequence: sequence.to_string(),
                function: self.label.clone(),
                index,
                value: to_f64(x),
                lo: to_f64(self.domain.0),
                hi: to_f64(self.domain.1),
            });
        }
        match &self.rule {
            Rule::Affine { a, b } => Ok(*a * x + *b),
            Rule::Square => Ok(x * x),
            Rule::Neg => Ok(-x),
            Rule::Abs => Ok(x.abs()),
            Rule::Sin => Ok(x.sin()),
            Rule::Const(c) => Ok(*c),
            Rule::Pwl { xs, ys } => {
                let i = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
                let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
                Ok(ys[i - 1] + t * (ys[i] - ys[i - 1]))
            }
            Rule::Bernstein { coeffs } => {
                let mut work = coeffs.clone();
                let one_minus = R::one() - x;
                for round in (1..work.len()).rev() {
                    for j in 0..round {
                        work[j] = one_minus * work[j] + x * work[j + 1];
                    }
                }
                Ok(work[0])
            }
            Rule::Sum(f, g) => Ok(f.eval_at(x, index, sequence)? + g.eval_at(x, index, sequence)?),
            Rule::Scale { c, inner } => Ok(*c * inner.eval_at(x, index, sequence)?),
            Rule::Compose { outer, inner } => {
                let y = inner.eval_at(x, index, sequence)?;
                outer.eval_at(y, index, sequence).map_err(|e| match e {
                    Error::DomainViolation { value, .. } => Error::CompositionDomain {
                        inner: inner.label.clone(),
                        outer: outer.label.clone(),
                        index,
                        value,
                    },
                    other => other,
                })
            }
        }
    }

    /// Evaluates at a single point.
    pub fn eval(&self, x: R) -> Result<R> {
        self.eval_at(x, 0, "point")
    }

    /// Maps a whole sequence through the function, index by index.
    pub fn apply(&self, s: &SequenceSource<R>) -> Result<SequenceSource<R>> {
        let values = s
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| self.eval_at(v, i + 1, s.label()))
            .collect::<Result<Vec<R>>>()?;
        SequenceSource::from_values(format!("{}({})", self.label, s.label()), values)
    }

    fn check_domain_covers(&self, s: &SequenceSource<R>) -> Result<()> {
        for (i, &v) in s.values().iter().enumerate() {
            if v < self.domain.0 || v > self.domain.1 {
                return Err(Error::DomainViolation {
                    sequence: s.label().to_string(),
                    function: self.label.clone(),
                    index: i + 1,
                    value: to_f64(v),
                    lo: to_f64(self.domain.0),
                    hi: to_f64(self.domain.1),
                });
            }
        }
        Ok(())
    }
}

/// One corpus sequence in a preservation run: the image column is only
/// filled when the input itself is in the class.
#[derive(Debug, Clone, Serialize)]
pub struct PreservationRow {
    pub sequence: String,
    pub input: Outcome,
    pub image: Option<Outcome>,
}

/// Corpus-level summary of a preservation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum PreservationSummary {
    /// Every in-class input mapped to an in-class image (at least one row).
    Preserved,
    /// Some in-class input mapped to an out-of-class image.
    Violated { witness: String },
    /// No in-class inputs, or images without a clear verdict.
    Inconclusive,
}

/// Result of testing whether a function preserves a sequence class over a
/// corpus.
#[derive(Debug, Clone, Serialize)]
pub struct PreservationReport {
    pub function: String,
    pub class: String,
    pub rows: Vec<PreservationRow>,
    pub summary: PreservationSummary,
}

impl PreservationReport {
    pub fn is_preserved(&self) -> bool {
        self.summary == PreservationSummary::Preserved
    }

    pub fn is_violated(&self) -> bool {
        matches!(self.summary, PreservationSummary::Violated { .. })
    }
}

fn summarize(rows: &[PreservationRow]) -> PreservationSummary {
    if let Some(row) = rows
        .iter()
        .find(|r| r.input == Outcome::Accept && r.image == Some(Outcome::Reject))
    {
        return PreservationSummary::Violated {
            witness: row.sequence.clone(),
        };
    }
    let accepted: Vec<&PreservationRow> =
        rows.iter().filter(|r| r.input == Outcome::Accept).collect();
    if !accepted.is_empty() && accepted.iter().all(|r| r.image == Some(Outcome::Accept)) {
        PreservationSummary::Preserved
    } else {
        PreservationSummary::Inconclusive
    }
}

/// Input/image class pair for one preservation run.
enum ClassPair<R: Real> {
    Same(SequenceClass<R>),
    /// Convergence: the image level is the function applied to the input
    /// level.
    Deviation,
}

fn preservation<R: Real>(
    f: &RealFunction<R>,
    corpus: &[SequenceSource<R>],
    w: &WeightSequence<R>,
    pair: ClassPair<R>,
    class_label: &str,
    cfg: &ClassifyConfig<R>,
) -> Result<PreservationReport> {
    for s in corpus {
        f.check_domain_covers(s)?;
    }
    let mut rows = Vec::with_capacity(corpus.len());
    for s in corpus {
        let (input_class, image_class) = match &pair {
            ClassPair::Same(c) => (c.clone(), c.clone()),
            ClassPair::Deviation => {
                let level = estimate_level(s, 0.1);
                (
                    SequenceClass::RhoStatConvergent { level },
                    SequenceClass::RhoStatConvergent {
                        level: f.eval(level)?,
                    },
                )
            }
        };
        let input = classify(s, w, &input_class, cfg)?.outcome;
        let image = if input == Outcome::Accept {
            let mapped = f.apply(s)?;
            Some(classify(&mapped, w, &image_class, cfg)?.outcome)
        } else {
            None
        };
        rows.push(PreservationRow {
            sequence: s.label().to_string(),
            input,
            image,
        });
    }
    let summary = summarize(&rows);
    Ok(PreservationReport {
        function: f.label().to_string(),
        class: class_label.to_string(),
        rows,
        summary,
    })
}

/// Does `f` preserve the statistical downward quasi-Cauchy class on the
/// corpus?
pub fn test_downward_continuity<R: Real>(
    f: &RealFunction<R>,
    corpus: &[SequenceSource<R>],
    w: &WeightSequence<R>,
    cfg: &ClassifyConfig<R>,
) -> Result<PreservationReport> {
    preservation(
        f,
        corpus,
        w,
        ClassPair::Same(SequenceClass::RhoStatDownwardQuasiCauchy),
        "downward",
        cfg,
    )
}

/// Does `f` preserve the two-sided statistical quasi-Cauchy class on the
/// corpus?
pub fn test_ward_continuity<R: Real>(
    f: &RealFunction<R>,
    corpus: &[SequenceSource<R>],
    w: &WeightSequence<R>,
    cfg: &ClassifyConfig<R>,
) -> Result<PreservationReport> {
    preservation(
        f,
        corpus,
        w,
        ClassPair::Same(SequenceClass::RhoStatQuasiCauchy),
        "ward",
        cfg,
    )
}

/// Does `f` map statistically convergent inputs (estimated level `l`) to
/// statistically convergent images at level `f(l)`?
pub fn test_deviation_preservation<R: Real>(
    f: &RealFunction<R>,
    corpus: &[SequenceSource<R>],
    w: &WeightSequence<R>,
    cfg: &ClassifyConfig<R>,
) -> Result<PreservationReport> {
    preservation(f, corpus, w, ClassPair::Deviation, "deviation", cfg)
}

/// One checkpoint of the sum-closure count comparison.
#[derive(Debug, Clone, Serialize)]
pub struct SumInequalityRow {
    pub sequence: String,
    pub eps: f64,
    pub n: usize,
    pub sum_count: usize,
    pub f_count: usize,
    pub g_count: usize,
    pub holds: bool,
}

/// Exact per-checkpoint comparison `count_{f+g}(eps) <= count_f(eps/2) +
/// count_g(eps/2)` for the downward predicate, the set-inclusion behind
/// sum closure. Holds for arbitrary `f`, `g`.
pub fn sum_count_inequality<R: Real>(
    f: &RealFunction<R>,
    g: &RealFunction<R>,
    s: &SequenceSource<R>,
    w: &WeightSequence<R>,
    eps_grid: &[R],
    grid: &[usize],
) -> Result<Vec<SumInequalityRow>> {
    let two = real::<R>(2.0);
    let f_image = f.apply(s)?;
    let g_image = g.apply(s)?;
    let sum_image = RealFunction::sum(f.clone(), g.clone()).apply(s)?;
    let mut rows = Vec::new();
    for &eps in eps_grid {
        let sum_profile =
            density_profile(&sum_image, w, eps, PredicateTag::Downward, None, grid)?;
        let f_profile =
            density_profile(&f_image, w, eps / two, PredicateTag::Downward, None, grid)?;
        let g_profile =
            density_profile(&g_image, w, eps / two, PredicateTag::Downward, None, grid)?;
        for ((sc, fc), gc) in sum_profile
            .checkpoints
            .iter()
            .zip(&f_profile.checkpoints)
            .zip(&g_profile.checkpoints)
        {
            rows.push(SumInequalityRow {
                sequence: s.label().to_string(),
                eps: to_f64(eps),
                n: sc.n,
                sum_count: sc.count,
                f_count: fc.count,
                g_count: gc.count,
                holds: sc.count <= fc.count + gc.count,
            });
        }
    }
    Ok(rows)
}

/// Closure of preservation under `f + g` and `g o f`, with the exact count
/// inequality checked at every checkpoint.
#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    pub sum: PreservationReport,
    pub composition: PreservationReport,
    pub inequality_rows: Vec<SumInequalityRow>,
    pub inequality_holds: bool,
}

/// Verifies that `f + g` and `g o f` stay preserved when `f` and `g`
/// individually are, and asserts the sum-closure count inequality.
pub fn closure_harness<R: Real>(
    f: &RealFunction<R>,
    g: &RealFunction<R>,
    corpus: &[SequenceSource<R>],
    w: &WeightSequence<R>,
    cfg: &ClassifyConfig<R>,
) -> Result<ClosureReport> {
    for (name, func) in [("first", f), ("second", g)] {
        let report = test_downward_continuity(func, corpus, w, cfg)?;
        if report.is_violated() {
            return Err(Error::Precondition(format!(
                "{name} function '{}' is not preserved on the corpus",
                func.label()
            )));
        }
    }
    let sum = test_downward_continuity(&RealFunction::sum(f.clone(), g.clone()), corpus, w, cfg)?;
    let composition = test_downward_continuity(
        &RealFunction::compose(g.clone(), f.clone()),
        corpus,
        w,
        cfg,
    )?;
    let grid = match &cfg.checkpoints {
        Some(g) => g.clone(),
        None => default_checkpoints(corpus.iter().map(|s| s.horizon()).min().unwrap_or(0))?,
    };
    let mut inequality_rows = Vec::new();
    for s in corpus {
        let seq_grid: Vec<usize> = grid.iter().copied().filter(|&n| n <= s.horizon()).collect();
        rows_for_sequence(&mut inequality_rows, f, g, s, w, &cfg.eps_grid, &seq_grid)?;
    }
    let inequality_holds = inequality_rows.iter().all(|r| r.holds);
    Ok(ClosureReport {
        sum,
        composition,
        inequality_rows,
        inequality_holds,
    })
}

fn rows_for_sequence<R: Real>(
    out: &mut Vec<SumInequalityRow>,
    f: &RealFunction<R>,
    g: &RealFunction<R>,
    s: &SequenceSource<R>,
    w: &WeightSequence<R>,
    eps_grid: &[R],
    grid: &[usize],
) -> Result<()> {
    if grid.is_empty() {
        return Ok(());
    }
    out.extend(sum_count_inequality(f, g, s, w, eps_grid, grid)?);
    Ok(())
}

/// One interleaving construction fed through the chain machinery.
#[derive(Debug, Clone, Serialize)]
pub struct InterleaveRow {
    pub sequence: String,
    pub construction: String,
    /// Verdict of the gating class on the raw input (two-sided for the
    /// zigzag, convergence for the limit interleaving).
    pub input: Outcome,
    /// Downward verdict of the interleaved sequence itself.
    pub object: Outcome,
    /// Downward verdict of the function image of the interleaved sequence.
    pub image: Outcome,
}

/// The downward => ward => convergence chain exercised on one function.
#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub downward: PreservationReport,
    pub ward: PreservationReport,
    pub deviation: PreservationReport,
    pub interleaves: Vec<InterleaveRow>,
    /// True when downward preservation did not contradict the implied ward
    /// and convergence behaviour.
    pub consistent: bool,
}

/// Runs the implication chain: a downward-preserving function must also
/// behave ward-preserving and convergence-preserving, and the interleaved
/// constructions built from in-class inputs must classify downward.
///
/// The weight sequence must cover four times the corpus horizon, since the
/// interleavings stretch a length-`h` input to `4h` terms.
pub fn chain_check<R: Real>(
    f: &RealFunction<R>,
    corpus: &[SequenceSource<R>],
    w: &WeightSequence<R>,
    cfg: &ClassifyConfig<R>,
) -> Result<ChainReport> {
    let downward = test_downward_continuity(f, corpus, w, cfg)?;
    let ward = test_ward_continuity(f, corpus, w, cfg)?;
    let deviation = test_deviation_preservation(f, corpus, w, cfg)?;

    let downward_class = SequenceClass::RhoStatDownwardQuasiCauchy;
    let mut interleaves = Vec::new();
    for s in corpus {
        // A two-sided quasi-Cauchy input makes the zigzag downward.
        let two_sided = classify(s, w, &SequenceClass::RhoStatQuasiCauchy, cfg)?.outcome;
        if two_sided == Outcome::Accept {
            let zig = zigzag_interleave(s)?;
            let object = classify(&zig, w, &downward_class, &grid_for(cfg, zig.horizon())?)?;
            let image = f.apply(&zig)?;
            let image_outcome =
                classify(&image, w, &downward_class, &grid_for(cfg, image.horizon())?)?.outcome;
            interleaves.push(InterleaveRow {
                sequence: s.label().to_string(),
                construction: "zigzag".to_string(),
                input: two_sided,
                object: object.outcome,
                image: image_outcome,
            });
        }
        // A statistically convergent input makes its limit interleaving
        // downward.
        let level = estimate_level(s, 0.1);
        let convergent =
            classify(s, w, &SequenceClass::RhoStatConvergent { level }, cfg)?.outcome;
        if convergent == Outcome::Accept {
            let lim = limit_interleave(s, level)?;
            let object = classify(&lim, w, &downward_class, &grid_for(cfg, lim.horizon())?)?;
            let image = f.apply(&lim)?;
            let image_outcome =
                classify(&image, w, &downward_class, &grid_for(cfg, image.horizon())?)?.outcome;
            interleaves.push(InterleaveRow {
                sequence: s.label().to_string(),
                construction: "limit".to_string(),
                input: convergent,
                object: object.outcome,
                image: image_outcome,
            });
        }
    }

    let consistent = if downward.is_preserved() {
        !ward.is_violated()
            && !deviation.is_violated()
            && interleaves
                .iter()
                .all(|r| r.object != Outcome::Reject && r.image != Outcome::Reject)
    } else {
        true
    };
    Ok(ChainReport {
        downward,
        ward,
        deviation,
        interleaves,
        consistent,
    })
}

/// Clone of `cfg` whose checkpoint grid fits a derived sequence of the
/// given horizon.
fn grid_for<R: Real>(cfg: &ClassifyConfig<R>, horizon: usize) -> Result<ClassifyConfig<R>> {
    let mut derived = cfg.clone();
    derived.checkpoints = Some(default_checkpoints(horizon)?);
    Ok(derived)
}

/// One input sequence in an image-compactness run.
#[derive(Debug, Clone, Serialize)]
pub struct ImageCompactnessRow {
    pub sequence: String,
    pub witness_len: usize,
    /// Downward verdict of the function image of the extracted witness.
    pub image: Outcome,
}

/// Images of extracted downward witnesses under a preserved function.
#[derive(Debug, Clone, Serialize)]
pub struct ImageCompactnessReport {
    pub function: String,
    /// Set when the function failed downward preservation, in which case no
    /// image behaviour is implied and the rows are empty.
    pub skipped: bool,
    pub rows: Vec<ImageCompactnessRow>,
}

/// For each bounded-above input: extract a downward witness, map it through
/// `f`, and classify the image subsequence. Skipped when `f` itself fails
/// downward preservation on the inputs.
pub fn image_compactness_check<R: Real>(
    f: &RealFunction<R>,
    seqs: &[SequenceSource<R>],
    w: &WeightSequence<R>,
    cfg: &ExtractConfig<R>,
) -> Result<ImageCompactnessReport> {
    let guard = test_downward_continuity(f, seqs, w, &cfg.classify)?;
    if guard.is_violated() {
        return Ok(ImageCompactnessReport {
            function: f.label().to_string(),
            skipped: true,
            rows: Vec::new(),
        });
    }
    let mut rows = Vec::with_capacity(seqs.len());
    for s in seqs {
        let sample = SampleSet::from_sequence(s)?;
        let report = bounded_above_check(&sample, cfg.bound_probe);
        if !report.bounded {
            return Err(Error::Precondition(format!(
                "input '{}' is not bounded above at sample level (max {})",
                s.label(),
                report.sup_estimate
            )));
        }
        let witness = extract_downward_witness(s, w, cfg)?;
        let witness_source = SequenceSource::from_values(
            format!("witness({})", s.label()),
            witness.values.clone(),
        )?;
        let image = f.apply(&witness_source)?;
        let outcome = classify(
            &image,
            w,
            &SequenceClass::RhoStatDownwardQuasiCauchy,
            &cfg.classify,
        )?
        .outcome;
        rows.push(ImageCompactnessRow {
            sequence: s.label().to_string(),
            witness_len: witness.values.len(),
            image: outcome,
        });
    }
    Ok(ImageCompactnessReport {
        function: f.label().to_string(),
        skipped: false,
        rows,
    })
}

/// Search configuration for the uniform-continuity falsifier.
#[derive(Debug, Clone)]
pub struct FalsifyConfig<R: Real> {
    /// Candidate gap thresholds, tried in order.
    pub eps0_grid: Vec<R>,
    /// Random pair draws per index `n`.
    pub draws_per_n: usize,
    /// Refinement rounds around the best pair (each spends `draws_per_n`
    /// draws in a shrinking window).
    pub refine_rounds: usize,
    /// Pairs are required for every `n = 1..=max_n`.
    pub max_n: usize,
    /// Wall-clock budget; exhaustion returns "no counterexample found".
    pub budget: Duration,
    pub seed: u64,
}

impl<R: Real> Default for FalsifyConfig<R> {
    fn default() -> Self {
        FalsifyConfig {
            eps0_grid: [1.0, 0.5, 0.1].iter().map(|&e| real(e)).collect(),
            draws_per_n: 1000,
            refine_rounds: 10,
            max_n: 64,
            budget: Duration::from_secs(10),
            seed: 0,
        }
    }
}

/// A witnessed failure of uniform continuity: pairs closer than `1/n`
/// whose images stay at least `eps0` apart, plus the interleaved sequence
/// the contradiction is read from.
#[derive(Debug, Clone, Serialize)]
pub struct UcCounterexample<R: Real> {
    pub eps0: R,
    pub alphas: SequenceSource<R>,
    pub betas: SequenceSource<R>,
    pub interleaved: SequenceSource<R>,
    /// Downward classification of the interleaved input.
    pub input_verdict: Verdict<R>,
    /// Downward classification of the function image of the interleaved
    /// input.
    pub image_verdict: Verdict<R>,
}

/// Searches for pairs `|alpha_n - beta_n| < 1/n` with `|f(alpha_n) -
/// f(beta_n)| >= eps0` for every `n`; absence of a counterexample is not a
/// proof of uniform continuity.
pub fn falsify_uniform_continuity<R: Real>(
    f: &RealFunction<R>,
    sample_lo: R,
    sample_hi: R,
    w: &WeightSequence<R>,
    cfg: &FalsifyConfig<R>,
) -> Result<Option<UcCounterexample<R>>> {
    if sample_lo >= sample_hi {
        return Err(Error::Precondition(format!(
            "empty sampling interval [{sample_lo}, {sample_hi}]"
        )));
    }
    if sample_lo < f.domain().0 || sample_hi > f.domain().1 {
        return Err(Error::Precondition(format!(
            "sampling interval [{sample_lo}, {sample_hi}] leaves the domain of '{}'",
            f.label()
        )));
    }
    if cfg.eps0_grid.is_empty() || cfg.max_n == 0 {
        return Err(Error::Precondition(
            "falsifier needs a non-empty eps0 grid and max_n >= 1".to_string(),
        ));
    }
    let start = Instant::now();
    let width = sample_hi - sample_lo;

    fn consider<R: Real>(
        best: &mut Option<(R, R, R)>,
        x: R,
        y: R,
        f: &RealFunction<R>,
    ) -> Result<()> {
        let gap = (f.eval(x)? - f.eval(y)?).abs();
        if best.is_none_or(|(g, _, _)| gap > g) {
            *best = Some((gap, x, y));
        }
        Ok(())
    }

    'eps: for (eps_idx, &eps0) in cfg.eps0_grid.iter().enumerate() {
        let mut alphas = Vec::with_capacity(cfg.max_n);
        let mut betas = Vec::with_capacity(cfg.max_n);
        for n in 1..=cfg.max_n {
            if start.elapsed() > cfg.budget {
                return Ok(None);
            }
            let mut rng = stream_rng(cfg.seed, purpose::FALSIFY, n as u64, eps_idx as u64);
            let gap_limit = R::one() / real(n as f64);
            let mut best: Option<(R, R, R)> = None;
            for _ in 0..cfg.draws_per_n {
                let x = sample_lo + width * real(rng.random::<f64>());
                let offset = gap_limit * real(2.0 * rng.random::<f64>() - 1.0);
                let y = (x + offset).clamp(sample_lo, sample_hi);
                consider(&mut best, x, y, f)?;
            }
            let mut round = 0usize;
            while best.is_none_or(|(g, _, _)| g < eps0) && round < cfg.refine_rounds {
                round += 1;
                let (_, cx, _) = best.expect("draws_per_n >= 1");
                let window = width / real(10f64.powi(round as i32));
                let lo = (cx - window).max(sample_lo);
                let hi = (cx + window).min(sample_hi);
                for _ in 0..cfg.draws_per_n {
                    let x = lo + (hi - lo) * real(rng.random::<f64>());
                    let offset = gap_limit * real(2.0 * rng.random::<f64>() - 1.0);
                    let y = (x + offset).clamp(sample_lo, sample_hi);
                    consider(&mut best, x, y, f)?;
                }
            }
            match best {
                Some((gap, x, y)) if gap >= eps0 => {
                    alphas.push(x);
                    betas.push(y);
                }
                _ => continue 'eps,
            }
        }
        let alphas = SequenceSource::from_values(format!("uc-alphas({})", f.label()), alphas)?;
        let betas = SequenceSource::from_values(format!("uc-betas({})", f.label()), betas)?;
        let interleaved = pair_interleave(&betas, &alphas)?;
        let classify_cfg = grid_for(&ClassifyConfig::default(), interleaved.horizon())?;
        let input_verdict = classify(
            &interleaved,
            w,
            &SequenceClass::RhoStatDownwardQuasiCauchy,
            &classify_cfg,
        )?;
        let image = f.apply(&interleaved)?;
        let image_verdict = classify(
            &image,
            w,
            &SequenceClass::RhoStatDownwardQuasiCauchy,
            &classify_cfg,
        )?;
        return Ok(Some(UcCounterexample {
            eps0,
            alphas,
            betas,
            interleaved,
            input_verdict,
            image_verdict,
        }));
    }
    Ok(None)
}

/// The count bound for one `eps` on one sequence.
#[derive(Debug, Clone, Serialize)]
pub struct UcBoundRow {
    pub eps: f64,
    /// One past the last input index whose difference reaches `eps / L`.
    pub k0: usize,
    /// Largest downward count of the image over all checkpoints.
    pub max_count: usize,
    pub holds: bool,
}

/// One corpus row of [`uc_image_check`].
#[derive(Debug, Clone, Serialize)]
pub struct UcImageRow {
    pub sequence: String,
    pub image: Outcome,
    pub bounds: Vec<UcBoundRow>,
}

/// Images of quasi-Cauchy inputs under a uniformly continuous function.
#[derive(Debug, Clone, Serialize)]
pub struct UcImageReport {
    pub function: String,
    /// Whether the Lipschitz hint was available for the count bound.
    pub bound_available: bool,
    pub rows: Vec<UcImageRow>,
}

/// Verifies that images of quasi-Cauchy inputs classify downward, and — when
/// a Lipschitz hint `L` is present — that the image's downward count at
/// `eps` never exceeds `k0(eps)`, the first index after which input
/// differences stay below `eps / L`.
pub fn uc_image_check<R: Real>(
    f: &RealFunction<R>,
    corpus: &[SequenceSource<R>],
    w: &WeightSequence<R>,
    cfg: &ClassifyConfig<R>,
) -> Result<UcImageReport> {
    let mut rows = Vec::with_capacity(corpus.len());
    for s in corpus {
        let input = classify(s, w, &SequenceClass::QuasiCauchy, cfg)?.outcome;
        if input != Outcome::Accept {
            return Err(Error::Precondition(format!(
                "input '{}' is not quasi-Cauchy at this scale ({input})",
                s.label()
            )));
        }
        let image = f.apply(s)?;
        let image_outcome = classify(
            &image,
            w,
            &SequenceClass::RhoStatDownwardQuasiCauchy,
            cfg,
        )?
        .outcome;
        let mut bounds = Vec::new();
        if let Some(l) = f.lipschitz() {
            let grid = match &cfg.checkpoints {
                Some(g) => g.clone(),
                None => default_checkpoints(s.horizon())?,
            };
            let values = s.values();
            for &eps in &cfg.eps_grid {
                let delta = if l > R::zero() { eps / l } else { R::infinity() };
                let k0 = 1 + (1..values.len())
                    .rev()
                    .find(|&k| (values[k] - values[k - 1]).abs() >= delta)
                    .unwrap_or(0);
                let profile =
                    density_profile(&image, w, eps, PredicateTag::Downward, None, &grid)?;
                let max_count = profile.max_count();
                bounds.push(UcBoundRow {
                    eps: to_f64(eps),
                    k0,
                    max_count,
                    holds: max_count <= k0,
                });
            }
        }
        rows.push(UcImageRow {
            sequence: s.label().to_string(),
            image: image_outcome,
            bounds,
        });
    }
    Ok(UcImageReport {
        function: f.label().to_string(),
        bound_available: f.lipschitz().is_some(),
        rows,
    })
}

/// An indexed family `f_n` converging uniformly to `limit`, with a declared
/// uniform-error bound `u(n) >= sup |f_n - limit|` that tends to 0.
#[derive(Clone)]
pub struct UniformFamily<R: Real> {
    label: String,
    limit: RealFunction<R>,
    member: Arc<dyn Fn(usize) -> Result<RealFunction<R>> + Send + Sync>,
    error_bound: Option<Arc<dyn Fn(usize) -> R + Send + Sync>>,
    /// Largest member index the `N` search may use.
    index_cap: usize,
}

impl<R: Real> std::fmt::Debug for UniformFamily<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UniformFamily")
            .field("label", &self.label)
            .field("limit", &self.limit.label)
            .field("has_error_bound", &self.error_bound.is_some())
            .field("index_cap", &self.index_cap)
            .finish()
    }
}

impl<R: Real> UniformFamily<R> {
    pub fn new(
        label: impl Into<String>,
        limit: RealFunction<R>,
        member: impl Fn(usize) -> Result<RealFunction<R>> + Send + Sync + 'static,
        error_bound: Option<impl Fn(usize) -> R + Send + Sync + 'static>,
    ) -> Self {
        UniformFamily {
            label: label.into(),
            limit,
            member: Arc::new(member),
            error_bound: error_bound.map(|b| Arc::new(b) as Arc<dyn Fn(usize) -> R + Send + Sync>),
            index_cap: 1_000_000,
        }
    }

    /// `f_n(x) = x + 1/n`, converging uniformly to the identity with
    /// `u(n) = 1/n`.
    pub fn shifted_identity() -> Self {
        Self::new(
            "x + 1/n",
            RealFunction::identity(),
            |n| Ok(RealFunction::affine(R::one(), R::one() / real(n as f64))),
            Some(|n: usize| R::one() / real::<R>(n as f64)),
        )
    }

    /// Bernstein approximations of a Lipschitz base on [0, 1] with the
    /// classical uniform bound `u(n) = L / (2 sqrt(n))`.
    pub fn bernstein(base: RealFunction<R>) -> Result<Self> {
        let Some(l) = base.lipschitz() else {
            return Err(Error::Precondition(format!(
                "bernstein family needs a Lipschitz hint on '{}'",
                base.label()
            )));
        };
        let label = format!("bernstein({})", base.label());
        let base_for_member = base.clone();
        Ok(Self::new(
            label,
            base,
            move |n| RealFunction::bernstein_of(&base_for_member, n),
            Some(move |n: usize| l / (real::<R>(2.0) * real::<R>(n as f64).sqrt())),
        ))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn limit(&self) -> &RealFunction<R> {
        &self.limit
    }

    pub fn member(&self, n: usize) -> Result<RealFunction<R>> {
        (self.member)(n)
    }

    /// Caps how large an `N` the `u(N) <= eps/3` search may pick.
    pub fn with_index_cap(mut self, cap: usize) -> Self {
        self.index_cap = cap;
        self
    }

    /// Smallest `n <= cap` with `u(n) <= target`, assuming `u`
    /// non-increasing.
    fn pick_index(&self, target: R) -> Result<usize> {
        let bound = self.error_bound.as_ref().ok_or_else(|| {
            Error::Precondition(format!(
                "family '{}' declares no uniform error bound",
                self.label
            ))
        })?;
        let mut hi = 1usize;
        while bound(hi) > target {
            hi *= 2;
            if hi > self.index_cap {
                return Err(Error::Precondition(format!(
                    "no member of '{}' reaches error {} within index cap {}",
                    self.label, target, self.index_cap
                )));
            }
        }
        let mut lo = hi / 2 + 1;
        if hi == 1 {
            return Ok(1);
        }
        while lo < hi {
            let mid = (lo + hi) / 2;
            if bound(mid) <= target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(hi)
    }
}

/// One `(sequence, eps)` row of the uniform-limit count inequality.
#[derive(Debug, Clone, Serialize)]
pub struct UniformLimitRow {
    pub sequence: String,
    pub eps: f64,
    /// Member index `N` with `u(N) <= eps/3`.
    pub member_index: usize,
    /// Whether `count_limit(eps) <= count_{f_N}(eps/3)` at every checkpoint.
    pub holds: bool,
}

/// Result of [`uniform_limit_check`].
#[derive(Debug, Clone, Serialize)]
pub struct UniformLimitReport {
    pub family: String,
    pub limit_report: PreservationReport,
    pub rows: Vec<UniformLimitRow>,
    pub all_hold: bool,
}

/// The uniform-limit argument at finite scale: for each `eps` pick `N` with
/// `u(N) <= eps/3`; then a jump of the limit by `eps` forces a jump of
/// `f_N` by at least `eps/3`, so the limit's downward counts are dominated
/// checkpoint by checkpoint. The limit's preservation over the corpus is
/// reported alongside.
pub fn uniform_limit_check<R: Real>(
    family: &UniformFamily<R>,
    corpus: &[SequenceSource<R>],
    w: &WeightSequence<R>,
    cfg: &ClassifyConfig<R>,
) -> Result<UniformLimitReport> {
    let three = real::<R>(3.0);
    let limit_report = test_downward_continuity(family.limit(), corpus, w, cfg)?;
    let mut rows = Vec::new();
    for s in corpus {
        let grid = match &cfg.checkpoints {
            Some(g) => g.clone(),
            None => default_checkpoints(s.horizon())?,
        };
        let limit_image = family.limit().apply(s)?;
        for &eps in &cfg.eps_grid {
            let member_index = family.pick_index(eps / three)?;
            let member = family.member(member_index)?;
            let member_image = member.apply(s)?;
            let limit_profile =
                density_profile(&limit_image, w, eps, PredicateTag::Downward, None, &grid)?;
            let member_profile = density_profile(
                &member_image,
                w,
                eps / three,
                PredicateTag::Downward,
                None,
                &grid,
            )?;
            let holds = limit_profile
                .checkpoints
                .iter()
                .zip(&member_profile.checkpoints)
                .all(|(a, b)| a.count <= b.count);
            rows.push(UniformLimitRow {
                sequence: s.label().to_string(),
                eps: to_f64(eps),
                member_index,
                holds,
            });
        }
    }
    let all_hold = rows.iter().all(|r| r.holds);
    Ok(UniformLimitReport {
        family: family.label().to_string(),
        limit_report,
        rows,
        all_hold,
    })
}
