//! Witness machinery for the compactness characterization: bounded-above
//! samples yield downward quasi-Cauchy subsequences, unbounded ones yield
//! the diverging construction whose consecutive gaps exceed the weights.

use crate::classify::{classify, ClassifyConfig, SequenceClass};
use crate::density::Verdict;
use crate::error::{Error, Result};
use crate::sequence::SequenceSource;
use crate::weights::WeightSequence;
use crate::{real, Real};
use serde::{Deserialize, Serialize};

/// A finite multiset of reals drawn from some underlying set, with a tag
/// recording how it was drawn.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SampleSet<R: Real> {
    label: String,
    points: Vec<R>,
    bounded_above_hint: Option<R>,
}

impl<R: Real> SampleSet<R> {
    /// Wraps explicit points; they must be non-empty and finite-valued.
    pub fn from_points(label: impl Into<String>, points: Vec<R>) -> Result<Self> {
        let label = label.into();
        if points.is_empty() {
            return Err(Error::Precondition(format!(
                "sample set '{label}' has no points"
            )));
        }
        if let Some(bad) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Precondition(format!(
                "sample set '{label}' has a non-finite point at position {bad}"
            )));
        }
        Ok(SampleSet {
            label,
            points,
            bounded_above_hint: None,
        })
    }

    /// Uses the realised prefix of a sequence as the sample.
    pub fn from_sequence(s: &SequenceSource<R>) -> Result<Self> {
        Self::from_points(s.label(), s.values().to_vec())
    }

    /// Records a claimed upper bound alongside the points.
    pub fn with_hint(mut self, hint: R) -> Self {
        self.bounded_above_hint = Some(hint);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[R] {
        &self.points
    }

    pub fn bounded_above_hint(&self) -> Option<R> {
        self.bounded_above_hint
    }

    pub fn max(&self) -> R {
        self.points.iter().copied().fold(R::neg_infinity(), R::max)
    }

    pub fn min(&self) -> R {
        self.points.iter().copied().fold(R::infinity(), R::min)
    }
}

/// Sample-level boundedness decision.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundedAboveReport<R> {
    /// Whether the sample maximum stays under the probe.
    pub bounded: bool,
    /// The sample maximum itself.
    pub sup_estimate: R,
}

/// Checks whether the sample stays below `bound_probe` and reports its
/// maximum. This decides boundedness for the sample only, never for the
/// underlying set.
pub fn bounded_above_check<R: Real>(set: &SampleSet<R>, bound_probe: R) -> BoundedAboveReport<R> {
    let sup = set.max();
    BoundedAboveReport {
        bounded: sup <= bound_probe,
        sup_estimate: sup,
    }
}

/// How a downward subsequence witness was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractionStrategy {
    /// Forward scan keeping consecutive gaps within a shrinking tolerance.
    ToleranceScan,
    /// Chain dropping by more than the weight at each step.
    SteepDescent,
}

/// What kind of certificate a [`Witness`] is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessKind {
    /// An index subsequence of the input.
    DownwardSubsequence { strategy: ExtractionStrategy },
    /// A constructed sequence whose gaps outrun the weights.
    DivergingConstruction,
}

/// A certificate for one direction of the compactness dichotomy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Witness<R: Real> {
    pub kind: WitnessKind,
    /// 1-based indices into the source (empty for constructions).
    pub indices: Vec<usize>,
    /// The witness terms themselves.
    pub values: Vec<R>,
    /// Downward classification of the witness terms.
    pub verification: Verdict<R>,
}

/// Knobs for [`extract_downward_witness`].
#[derive(Debug, Clone)]
pub struct ExtractConfig<R: Real> {
    /// Sample-level boundedness probe (both signs).
    pub bound_probe: R,
    /// Hard cap on consecutive witness gaps in the tolerance scan; kept
    /// below the smallest default grid eps so accepted witnesses verify.
    pub gap_cap: R,
    /// Scan tolerance halves after every `block_len` selections.
    pub block_len: usize,
    /// Minimum usable length for a tolerance-scan witness.
    pub min_witness_len: usize,
    /// Minimum usable length for a steep-descent witness.
    pub descent_min_len: usize,
    /// Configuration for the verification classifier.
    pub classify: ClassifyConfig<R>,
}

impl<R: Real> Default for ExtractConfig<R> {
    fn default() -> Self {
        ExtractConfig {
            bound_probe: real(1e6),
            gap_cap: real(0.008),
            block_len: 8,
            min_witness_len: 10,
            descent_min_len: 10,
            classify: ClassifyConfig::default(),
        }
    }
}

fn verify_witness<R: Real>(
    label: &str,
    values: Vec<R>,
    w: &WeightSequence<R>,
    cfg: &ClassifyConfig<R>,
) -> Result<(Vec<R>, Verdict<R>)> {
    let source = SequenceSource::from_values(label, values)?;
    let verdict = classify(&source, w, &SequenceClass::RhoStatDownwardQuasiCauchy, cfg)?;
    Ok((source.values().to_vec(), verdict))
}

/// Steep-descent chain: first negative term, then each further index must
/// drop below the previous pick by more than the weight at the new witness
/// position.
fn descent_chain<R: Real>(values: &[R], w: &WeightSequence<R>) -> Result<Vec<usize>> {
    let mut chain = Vec::new();
    let Some(first) = values.iter().position(|&v| v < R::zero()) else {
        return Ok(chain);
    };
    chain.push(first + 1);
    let mut current = values[first];
    for (idx, &value) in values.iter().enumerate().skip(first + 1) {
        if chain.len() >= w.horizon() {
            break;
        }
        let needed = current - w.rho(chain.len() + 1)?;
        if value < needed {
            chain.push(idx + 1);
            current = value;
        }
    }
    Ok(chain)
}

/// Forward scan keeping each consecutive gap within `min(gap_cap,
/// range/2^(j/block_len))`, the tolerance shrinking as the witness grows.
fn tolerance_chain<R: Real>(values: &[R], cfg: &ExtractConfig<R>) -> Vec<usize> {
    let lo = values.iter().copied().fold(R::infinity(), R::min);
    let hi = values.iter().copied().fold(R::neg_infinity(), R::max);
    let range = hi - lo;
    let mut chain = vec![1usize];
    let mut current = values[0];
    let mut idx = 1usize;
    while idx < values.len() {
        let hops = chain.len() - 1;
        let shrink = real::<R>(2.0f64.powi((hops / cfg.block_len) as i32));
        let tol = cfg.gap_cap.min(range / shrink);
        match (idx..values.len()).find(|&i| (values[i] - current).abs() <= tol) {
            Some(found) => {
                chain.push(found + 1);
                current = values[found];
                idx = found + 1;
            }
            None => break,
        }
    }
    chain
}

/// Extracts a downward quasi-Cauchy subsequence witness from the realised
/// prefix, or reports why none exists.
///
/// Strategy: if some term falls below the negated weight at its index, try
/// the steep-descent chain; otherwise, for samples bounded within the
/// probe, run the shrinking tolerance scan. Failure of both paths is the
/// no-witness signal of the unbounded case.
pub fn extract_downward_witness<R: Real>(
    seq: &SequenceSource<R>,
    w: &WeightSequence<R>,
    cfg: &ExtractConfig<R>,
) -> Result<Witness<R>> {
    let h = seq.horizon();
    if h < 64 {
        return Err(Error::HorizonTooSmall {
            horizon: h,
            required: 64,
        });
    }
    if w.horizon() < h {
        return Err(Error::HorizonExceeded {
            requested: h,
            horizon: w.horizon(),
        });
    }
    let values = seq.values();

    let descent_possible = values
        .iter()
        .enumerate()
        .any(|(i, &v)| match w.rho(i + 1) {
            Ok(rho) => v < -rho,
            Err(_) => false,
        });
    if descent_possible {
        let chain = descent_chain(values, w)?;
        if chain.len() >= cfg.descent_min_len {
            let picked: Vec<R> = chain.iter().map(|&k| values[k - 1]).collect();
            let (vals, verification) = verify_witness(
                &format!("descent-witness({})", seq.label()),
                picked,
                w,
                &cfg.classify,
            )?;
            return Ok(Witness {
                kind: WitnessKind::DownwardSubsequence {
                    strategy: ExtractionStrategy::SteepDescent,
                },
                indices: chain,
                values: vals,
                verification,
            });
        }
    }

    let sup = values.iter().copied().fold(R::neg_infinity(), R::max);
    let inf = values.iter().copied().fold(R::infinity(), R::min);
    if sup > cfg.bound_probe {
        return Err(Error::NoWitness {
            reason: format!(
                "sample maximum {sup} exceeds the boundedness probe {}",
                cfg.bound_probe
            ),
        });
    }
    if inf < -cfg.bound_probe {
        return Err(Error::NoWitness {
            reason: format!(
                "sample minimum {inf} falls below the probe -{} and no steep-descent chain of length {} exists",
                cfg.bound_probe, cfg.descent_min_len
            ),
        });
    }

    let chain = tolerance_chain(values, cfg);
    if chain.len() < cfg.min_witness_len {
        return Err(Error::NoWitness {
            reason: format!(
                "tolerance scan stalled at length {} (need {}); consecutive sample values keep gaps above {}",
                chain.len(),
                cfg.min_witness_len,
                cfg.gap_cap
            ),
        });
    }
    let picked: Vec<R> = chain.iter().map(|&k| values[k - 1]).collect();
    let (vals, verification) = verify_witness(
        &format!("scan-witness({})", seq.label()),
        picked,
        w,
        &cfg.classify,
    )?;
    Ok(Witness {
        kind: WitnessKind::DownwardSubsequence {
            strategy: ExtractionStrategy::ToleranceScan,
        },
        indices: chain,
        values: vals,
        verification,
    })
}

/// The diverging construction: `alpha_1 = start`, `alpha_{k+1} = alpha_k +
/// rho_k + 1`, so every gap strictly exceeds the weight at its index.
pub fn construct_escaping_sequence<R: Real>(
    start: R,
    w: &WeightSequence<R>,
    length: usize,
) -> Result<SequenceSource<R>> {
    if length < 2 {
        return Err(Error::Precondition(format!(
            "escaping construction needs length >= 2, got {length}"
        )));
    }
    w.rho(length - 1)?;
    SequenceSource::from_recurrence(
        format!("escape(start={start})"),
        vec![start],
        length,
        |k, prefix| {
            let rho = w.rho(k - 1).expect("checked above");
            prefix[k - 2] + rho + R::one()
        },
    )
}

/// A synthetic unbounded-below input: starts below `-rho_1` and keeps
/// dropping by more than the next weight, so the steep-descent extractor
/// picks every index.
pub fn construct_descent_sequence<R: Real>(
    w: &WeightSequence<R>,
    length: usize,
) -> Result<SequenceSource<R>> {
    if length < 1 {
        return Err(Error::Precondition(
            "descent construction needs length >= 1".to_string(),
        ));
    }
    w.rho(length)?;
    let first = -(w.rho(1)? + R::one());
    SequenceSource::from_recurrence("descent", vec![first], length, |k, prefix| {
        let rho = w.rho(k).expect("checked above");
        prefix[k - 2] - rho - R::one()
    })
}

/// Builds the diverging construction and packages it as a witness with its
/// (expected-Reject) downward classification attached.
pub fn escaping_witness<R: Real>(
    start: R,
    w: &WeightSequence<R>,
    length: usize,
    cfg: &ClassifyConfig<R>,
) -> Result<Witness<R>> {
    let source = construct_escaping_sequence(start, w, length)?;
    let verification = classify(&source, w, &SequenceClass::RhoStatDownwardQuasiCauchy, cfg)?;
    Ok(Witness {
        kind: WitnessKind::DivergingConstruction,
        indices: Vec::new(),
        values: source.values().to_vec(),
        verification,
    })
}
