//! Real sequence sources with a fixed finite horizon, plus the interleaving
//! and subsequence transforms used by the classification machinery.
//!
//! Every source freezes its realised prefix at construction — including
//! stochastic sources, which are seeded once and materialised eagerly.
//! Downstream code therefore sees bit-identical values no matter how often
//! or in which order a prefix is evaluated.

use crate::error::{Error, Result};
use crate::rng::{purpose, stream_rng};
use crate::{real, Real};
use rand::RngExt;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::Arc;

/// A real sequence `alpha_1, ..., alpha_h` materialised to its horizon `h`.
///
/// Values are 1-indexed through [`SequenceSource::term`]; bulk access goes
/// through [`SequenceSource::values`] or [`SequenceSource::eval_prefix`].
#[derive(Debug, Clone)]
pub struct SequenceSource<R: Real> {
    label: String,
    values: Arc<Vec<R>>,
}

/// Serialised shape: `{"label": ..., "values": [...]}`.
#[derive(Serialize, Deserialize)]
struct SequenceJson<R> {
    label: String,
    values: Vec<R>,
}

impl<R: Real> Serialize for SequenceSource<R> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SequenceJson {
            label: self.label.clone(),
            values: (*self.values).clone(),
        }
        .serialize(serializer)
    }
}

impl<'de, R: Real> Deserialize<'de> for SequenceSource<R> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = SequenceJson::<R>::deserialize(deserializer)?;
        SequenceSource::from_values(raw.label, raw.values).map_err(serde::de::Error::custom)
    }
}

impl<R: Real> SequenceSource<R> {
    /// Wraps explicit values; the horizon is their length (must be >= 1).
    pub fn from_values(label: impl Into<String>, values: Vec<R>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::HorizonTooSmall {
                horizon: 0,
                required: 1,
            });
        }
        Ok(SequenceSource {
            label: label.into(),
            values: Arc::new(values),
        })
    }

    /// The constant sequence `c, c, ..., c`.
    pub fn constant(c: R, horizon: usize) -> Result<Self> {
        Self::from_values(format!("const({c})"), vec![c; horizon])
    }

    /// Evaluates a closed-form expression in the variable `k` for
    /// `k = 1..=horizon`.
    pub fn closed_form(expr: &str, horizon: usize) -> Result<Self> {
        let parsed = meval::Expr::from_str(expr).map_err(|e| Error::BadSpec {
            spec: expr.to_string(),
            reason: e.to_string(),
        })?;
        let f = parsed.bind("k").map_err(|e| Error::BadSpec {
            spec: expr.to_string(),
            reason: e.to_string(),
        })?;
        let values = (1..=horizon).map(|k| real(f(k as f64))).collect();
        Self::from_values(expr.to_string(), values)
    }

    /// Builds `alpha` from explicit initial terms and a step rule.
    ///
    /// `step(k, prefix)` receives the 1-based index of the term being created
    /// and the prefix built so far (`prefix.len() == k - 1`), and returns
    /// `alpha_k`.
    pub fn from_recurrence(
        label: impl Into<String>,
        initial: Vec<R>,
        horizon: usize,
        mut step: impl FnMut(usize, &[R]) -> R,
    ) -> Result<Self> {
        let mut values = initial;
        values.truncate(horizon);
        while values.len() < horizon {
            let next = step(values.len() + 1, &values);
            values.push(next);
        }
        Self::from_values(label, values)
    }

    /// Independent uniform draws from `[lo, hi]`, frozen at construction.
    pub fn uniform_random(lo: R, hi: R, horizon: usize, seed: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, purpose::UNIFORM_SOURCE, 0, 0);
        let width = hi - lo;
        let values = (0..horizon)
            .map(|_| lo + width * real(rng.random::<f64>()))
            .collect();
        Self::from_values(format!("uniform[{lo},{hi}](seed={seed})"), values)
    }

    /// Parses the textual grammar used on the command line:
    ///
    /// * `expr:<expression in k>` evaluated for `k = 1..=horizon`;
    /// * `table:<path>` — CSV file, one value per line;
    /// * `json:<path>` — `{"label": ..., "values": [...]}`.
    ///
    /// `horizon` only applies to `expr:`; file-backed sources keep their own
    /// length.
    pub fn from_spec(spec: &str, horizon: usize) -> Result<Self> {
        let trimmed = spec.trim();
        if let Some(expr) = trimmed.strip_prefix("expr:") {
            return Self::closed_form(expr.trim(), horizon);
        }
        if let Some(path) = trimmed.strip_prefix("table:") {
            let file = std::fs::File::open(path.trim())?;
            return Self::from_csv(path.trim(), std::io::BufReader::new(file));
        }
        if let Some(path) = trimmed.strip_prefix("json:") {
            let file = std::fs::File::open(path.trim())?;
            return Ok(serde_json::from_reader(std::io::BufReader::new(file))?);
        }
        Err(Error::BadSpec {
            spec: spec.to_string(),
            reason: "expected one of: expr:<expression in k>, table:<path>, json:<path>"
                .to_string(),
        })
    }

    /// Reads CSV input: one value per line, blank lines ignored.
    pub fn from_csv(label: impl Into<String>, reader: impl BufRead) -> Result<Self> {
        let label = label.into();
        let mut values = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let v: f64 = trimmed.parse().map_err(|_| Error::BadSpec {
                spec: label.clone(),
                reason: format!("line {}: not a number", lineno + 1),
            })?;
            values.push(real(v));
        }
        Self::from_values(label, values)
    }

    /// Writes CSV output: one value per line.
    pub fn to_csv(&self, mut out: impl Write) -> Result<()> {
        for v in self.values.iter() {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Returns a copy with a different label, sharing the values.
    pub fn relabel(&self, label: impl Into<String>) -> Self {
        SequenceSource {
            label: label.into(),
            values: Arc::clone(&self.values),
        }
    }

    /// Maximum supported index.
    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// The full realised prefix.
    pub fn values(&self) -> &[R] {
        &self.values
    }

    /// `alpha_k` for a 1-based `k`.
    pub fn term(&self, k: usize) -> Result<R> {
        if k == 0 || k > self.values.len() {
            return Err(Error::HorizonExceeded {
                requested: k,
                horizon: self.values.len(),
            });
        }
        Ok(self.values[k - 1])
    }

    /// The prefix `alpha_1 ..= alpha_n`.
    pub fn eval_prefix(&self, n: usize) -> Result<&[R]> {
        if n > self.values.len() {
            return Err(Error::HorizonExceeded {
                requested: n,
                horizon: self.values.len(),
            });
        }
        Ok(&self.values[..n])
    }

    /// Applies `f` to every term, producing a new source.
    pub fn map(&self, label: impl Into<String>, f: impl Fn(R) -> R) -> Self {
        SequenceSource {
            label: label.into(),
            values: Arc::new(self.values.iter().map(|&v| f(v)).collect()),
        }
    }
}

/// Strictly increasing 1-based indices selecting a subsequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSubsequence {
    indices: Vec<usize>,
}

impl IndexSubsequence {
    /// Validates that `indices` is non-empty, 1-based and strictly
    /// increasing; the first offending position (0-based) is reported.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() || indices[0] == 0 {
            return Err(Error::InvalidSubsequence { position: 0 });
        }
        for (pos, pair) in indices.windows(2).enumerate() {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidSubsequence { position: pos + 1 });
            }
        }
        Ok(IndexSubsequence { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Index composition: `self.compose(inner)` selects with `inner` from the
    /// positions of `self`, so that taking subsequences in two steps equals
    /// taking one composed subsequence.
    pub fn compose(&self, inner: &IndexSubsequence) -> Result<IndexSubsequence> {
        let composed = inner
            .indices
            .iter()
            .map(|&j| {
                if j == 0 || j > self.indices.len() {
                    Err(Error::HorizonExceeded {
                        requested: j,
                        horizon: self.indices.len(),
                    })
                } else {
                    Ok(self.indices[j - 1])
                }
            })
            .collect::<Result<Vec<usize>>>()?;
        IndexSubsequence::new(composed)
    }
}

/// The difference sequence `delta_k = alpha_{k+1} - alpha_k`.
///
/// The output horizon is `h - 1`; a horizon below 2 is an error.
pub fn difference<R: Real>(s: &SequenceSource<R>) -> Result<SequenceSource<R>> {
    if s.horizon() < 2 {
        return Err(Error::HorizonTooSmall {
            horizon: s.horizon(),
            required: 2,
        });
    }
    let values = s.values().windows(2).map(|p| p[1] - p[0]).collect();
    SequenceSource::from_values(format!("diff({})", s.label()), values)
}

/// Zigzag interleaving: emits the block `(a_i, a_{i+1}, a_i, a_{i+1})` for
/// each `i = 1..h-1`, so every adjacent pair of original terms appears in
/// both orders.
///
/// The output has length `4 (h - 1)`, and a prefix of length `m` references
/// only original indices `<= ceil(m / 4) + 2`.
pub fn zigzag_interleave<R: Real>(s: &SequenceSource<R>) -> Result<SequenceSource<R>> {
    if s.horizon() < 2 {
        return Err(Error::HorizonTooSmall {
            horizon: s.horizon(),
            required: 2,
        });
    }
    let v = s.values();
    let mut values = Vec::with_capacity(4 * (v.len() - 1));
    for i in 0..v.len() - 1 {
        values.extend_from_slice(&[v[i], v[i + 1], v[i], v[i + 1]]);
    }
    SequenceSource::from_values(format!("zigzag({})", s.label()), values)
}

/// Limit interleaving: emits `(a_k, ell, a_k, ell)` for each `k`, producing
/// `(a_1, ell, a_1, ell, a_2, ell, a_2, ell, ...)` of length `4 h`.
pub fn limit_interleave<R: Real>(s: &SequenceSource<R>, ell: R) -> Result<SequenceSource<R>> {
    let v = s.values();
    let mut values = Vec::with_capacity(4 * v.len());
    for &a in v {
        values.extend_from_slice(&[a, ell, a, ell]);
    }
    SequenceSource::from_values(format!("limit_interleave({},{ell})", s.label()), values)
}

/// Pairwise interleaving `(b_1, a_1, b_2, a_2, ...)` of two equally long
/// sequences, starting with `beta`.
pub fn pair_interleave<R: Real>(
    beta: &SequenceSource<R>,
    alpha: &SequenceSource<R>,
) -> Result<SequenceSource<R>> {
    if beta.horizon() != alpha.horizon() {
        return Err(Error::HorizonMismatch {
            left: beta.horizon(),
            right: alpha.horizon(),
        });
    }
    let mut values = Vec::with_capacity(2 * beta.horizon());
    for (&b, &a) in beta.values().iter().zip(alpha.values()) {
        values.push(b);
        values.push(a);
    }
    SequenceSource::from_values(
        format!("pair({},{})", beta.label(), alpha.label()),
        values,
    )
}

/// Selects `alpha_{n_1}, alpha_{n_2}, ...` along the given indices.
pub fn take_subsequence<R: Real>(
    s: &SequenceSource<R>,
    idx: &IndexSubsequence,
) -> Result<SequenceSource<R>> {
    let last = *idx.indices().last().expect("validated non-empty");
    if last > s.horizon() {
        return Err(Error::HorizonExceeded {
            requested: last,
            horizon: s.horizon(),
        });
    }
    let values = idx.indices().iter().map(|&k| s.values()[k - 1]).collect();
    SequenceSource::from_values(format!("sub({},{})", s.label(), idx.len()), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize) -> SequenceSource<f64> {
        SequenceSource::closed_form("k", h).unwrap()
    }

    #[test]
    fn difference_of_constant_is_zero() {
        let s = SequenceSource::constant(3.5f64, 100).unwrap();
        let d = difference(&s).unwrap();
        assert_eq!(d.horizon(), 99);
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn difference_of_squares_gives_odd_numbers() {
        let s = SequenceSource::<f64>::closed_form("k^2", 6).unwrap();
        let d = difference(&s).unwrap();
        assert_eq!(d.values(), &[3.0, 5.0, 7.0, 9.0, 11.0]);
    }

    #[test]
    fn difference_needs_two_terms() {
        let s = SequenceSource::constant(1.0f64, 1).unwrap();
        assert!(matches!(
            difference(&s),
            Err(Error::HorizonTooSmall { required: 2, .. })
        ));
    }

    #[test]
    fn zigzag_prefix_and_length() {
        let z = zigzag_interleave(&ramp(3)).unwrap();
        assert_eq!(z.values(), &[1.0, 2.0, 1.0, 2.0, 2.0, 3.0, 2.0, 3.0]);
        assert_eq!(z.horizon(), 4 * (3 - 1));

        let two = zigzag_interleave(&ramp(2)).unwrap();
        assert_eq!(two.values(), &[1.0, 2.0, 1.0, 2.0]);
    }

    #[test]
    fn zigzag_of_constant_is_constant() {
        let s = SequenceSource::constant(7.0f64, 10).unwrap();
        let z = zigzag_interleave(&s).unwrap();
        assert!(z.values().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn zigzag_prefix_references_early_indices_only() {
        // With alpha_k = k the emitted value doubles as the original index.
        let z = zigzag_interleave(&ramp(64)).unwrap();
        for m in 1..=z.horizon() {
            let max_index = z.values()[..m]
                .iter()
                .map(|&v| v as usize)
                .max()
                .unwrap();
            assert!(
                max_index <= m.div_ceil(4) + 2,
                "prefix {m} references index {max_index}"
            );
        }
    }

    #[test]
    fn limit_interleave_examples() {
        let single = SequenceSource::from_values("a", vec![7.0f64]).unwrap();
        assert_eq!(
            limit_interleave(&single, 0.0).unwrap().values(),
            &[7.0, 0.0, 7.0, 0.0]
        );
        let s = SequenceSource::from_values("b", vec![1.0f64, 2.0]).unwrap();
        assert_eq!(
            limit_interleave(&s, 5.0).unwrap().values(),
            &[1.0, 5.0, 1.0, 5.0, 2.0, 5.0, 2.0, 5.0]
        );
    }

    #[test]
    fn pair_interleave_starts_with_beta() {
        let beta = SequenceSource::from_values("beta", vec![10.0f64, 20.0]).unwrap();
        let alpha = SequenceSource::from_values("alpha", vec![1.0f64, 2.0]).unwrap();
        let p = pair_interleave(&beta, &alpha).unwrap();
        assert_eq!(p.values(), &[10.0, 1.0, 20.0, 2.0]);

        let short = SequenceSource::from_values("short", vec![1.0f64]).unwrap();
        assert!(matches!(
            pair_interleave(&beta, &short),
            Err(Error::HorizonMismatch { left: 2, right: 1 })
        ));
    }

    #[test]
    fn subsequence_selects_and_validates() {
        let idx = IndexSubsequence::new(vec![2, 4, 6]).unwrap();
        let s = take_subsequence(&ramp(10), &idx).unwrap();
        assert_eq!(s.values(), &[2.0, 4.0, 6.0]);

        assert!(matches!(
            IndexSubsequence::new(vec![3, 3, 4]),
            Err(Error::InvalidSubsequence { position: 1 })
        ));
        assert!(matches!(
            IndexSubsequence::new(vec![0, 1]),
            Err(Error::InvalidSubsequence { position: 0 })
        ));
        assert!(take_subsequence(&ramp(5), &idx).is_err());
    }

    #[test]
    fn subsequence_composition_matches_two_step_selection() {
        let s = SequenceSource::<f64>::closed_form("k^2 - 3*k", 40).unwrap();
        let outer = IndexSubsequence::new(vec![1, 3, 5, 8, 13, 21, 34]).unwrap();
        let inner = IndexSubsequence::new(vec![2, 3, 5, 7]).unwrap();
        let two_step = take_subsequence(&take_subsequence(&s, &outer).unwrap(), &inner).unwrap();
        let one_step = take_subsequence(&s, &outer.compose(&inner).unwrap()).unwrap();
        assert_eq!(two_step.values(), one_step.values());
    }

    #[test]
    fn recurrence_builds_from_initial_terms() {
        let s = SequenceSource::from_recurrence("fib", vec![1.0f64, 1.0], 8, |_, prefix| {
            prefix[prefix.len() - 1] + prefix[prefix.len() - 2]
        })
        .unwrap();
        assert_eq!(s.values(), &[1.0, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 21.0]);
    }

    #[test]
    fn uniform_random_is_deterministic_per_seed() {
        let a = SequenceSource::<f64>::uniform_random(0.0, 1.0, 200, 9).unwrap();
        let b = SequenceSource::<f64>::uniform_random(0.0, 1.0, 200, 9).unwrap();
        let c = SequenceSource::<f64>::uniform_random(0.0, 1.0, 200, 10).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
        assert!(a.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let s = SequenceSource::from_values("roundtrip", vec![1.5f64, -2.25, 0.0]).unwrap();

        let mut csv = Vec::new();
        s.to_csv(&mut csv).unwrap();
        let back = SequenceSource::<f64>::from_csv("roundtrip", csv.as_slice()).unwrap();
        assert_eq!(back.values(), s.values());

        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"label\":\"roundtrip\""));
        let back: SequenceSource<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back.values(), s.values());
        assert_eq!(back.label(), s.label());
    }

    #[test]
    fn eval_prefix_respects_horizon() {
        let s = ramp(10);
        assert_eq!(s.eval_prefix(3).unwrap(), &[1.0, 2.0, 3.0]);
        assert!(s.eval_prefix(11).is_err());
        assert!(s.term(0).is_err());
        assert_eq!(s.term(10).unwrap(), 10.0);
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        fn indices_strategy(max: usize) -> impl Strategy<Value = Vec<usize>> {
            proptest::collection::btree_set(1..=max, 1..=max.min(12))
                .prop_map(|set| set.into_iter().collect())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(128))]

            #[test]
            fn difference_undoes_cumulative_sum(
                steps in proptest::collection::vec(-100.0f64..100.0, 2..60),
            ) {
                let mut acc = 0.0;
                let mut cumulative = vec![0.0f64];
                for &s in &steps {
                    acc += s;
                    cumulative.push(acc);
                }
                let src = SequenceSource::from_values("cum", cumulative).unwrap();
                let diff = difference(&src).unwrap();
                for (d, s) in diff.values().iter().zip(&steps) {
                    prop_assert!((d - s).abs() < 1e-9);
                }
            }

            #[test]
            fn composed_subsequences_agree(
                outer in indices_strategy(30),
                inner_raw in indices_strategy(12),
            ) {
                let outer = IndexSubsequence::new(outer).unwrap();
                let inner: Vec<usize> =
                    inner_raw.into_iter().filter(|&j| j <= outer.len()).collect();
                prop_assume!(!inner.is_empty());
                let inner = IndexSubsequence::new(inner).unwrap();
                let s = SequenceSource::<f64>::closed_form("sin(k) * k", 30).unwrap();
                let two = take_subsequence(&take_subsequence(&s, &outer).unwrap(), &inner).unwrap();
                let one = take_subsequence(&s, &outer.compose(&inner).unwrap()).unwrap();
                prop_assert_eq!(two.values(), one.values());
            }

            #[test]
            fn zigzag_length_is_four_blocks(h in 2usize..100) {
                let z = zigzag_interleave(&ramp(h)).unwrap();
                prop_assert_eq!(z.horizon(), 4 * (h - 1));
            }
        }
    }
}
