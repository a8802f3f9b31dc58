//! Weight sequences `(rho_n)` used to normalise jump counts.
//!
//! A usable weight sequence is positive and non-decreasing; that much is
//! enforced at construction. The asymptotic requirements — divergence,
//! `rho_n / n` bounded, bounded increments `rho_{n+1} - rho_n` — cannot be
//! decided from a finite prefix, so [`check_conditions`] evaluates proxy
//! checks on the materialised prefix and reports a flag per condition with
//! the first witnessing index of any violation.

use crate::error::{Error, Result};
use crate::{real, to_f64, Real};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// How a weight sequence is generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightSpec {
    /// `rho_n = n`: plain statistical normalisation.
    Statistical,
    /// Closed-form expression in the variable `n`, with optional explicit
    /// overrides for leading terms (e.g. pinning the first term of
    /// `n + 1/n` to 1 instead of the formula value 2).
    ClosedForm {
        expr: String,
        overrides: Vec<(usize, f64)>,
    },
    /// Explicit 1-indexed table of values.
    Table(Vec<f64>),
}

impl WeightSpec {
    /// Parses the textual grammar used on the command line:
    ///
    /// * `statistical` — `rho_n = n`;
    /// * `expr:<expression in n>` with optional `;<index>=<value>` override
    ///   segments, e.g. `expr:n + 1/n;1=1`;
    /// * `table:<path>` — CSV file, one value per line, 1-indexed.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |reason: &str| Error::BadSpec {
            spec: text.to_string(),
            reason: reason.to_string(),
        };
        let trimmed = text.trim();
        if trimmed == "statistical" {
            return Ok(WeightSpec::Statistical);
        }
        if let Some(rest) = trimmed.strip_prefix("expr:") {
            let mut pieces = rest.split(';');
            let expr = pieces
                .next()
                .map(str::trim)
                .filter(|e| !e.is_empty())
                .ok_or_else(|| bad("empty expression"))?
                .to_string();
            let mut overrides = Vec::new();
            for piece in pieces {
                let (idx, val) = piece
                    .split_once('=')
                    .ok_or_else(|| bad("override segments look like <index>=<value>"))?;
                let index: usize = idx
                    .trim()
                    .parse()
                    .map_err(|_| bad("override index must be a positive integer"))?;
                if index == 0 {
                    return Err(bad("override indices are 1-based"));
                }
                let value: f64 = val
                    .trim()
                    .parse()
                    .map_err(|_| bad("override value must be a number"))?;
                overrides.push((index, value));
            }
            // Fail fast on unparseable expressions instead of at materialisation.
            meval::Expr::from_str(&expr).map_err(|e| bad(&format!("expression: {e}")))?;
            return Ok(WeightSpec::ClosedForm { expr, overrides });
        }
        if let Some(path) = trimmed.strip_prefix("table:") {
            let text = std::fs::read_to_string(path.trim())?;
            let mut values = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let v: f64 = line
                    .parse()
                    .map_err(|_| bad(&format!("line {}: not a number", lineno + 1)))?;
                values.push(v);
            }
            if values.is_empty() {
                return Err(bad("table is empty"));
            }
            return Ok(WeightSpec::Table(values));
        }
        Err(bad(
            "expected one of: statistical, expr:<expression in n>, table:<path>",
        ))
    }

    /// A short human-readable label for reports.
    pub fn label(&self) -> String {
        match self {
            WeightSpec::Statistical => "statistical".to_string(),
            WeightSpec::ClosedForm { expr, overrides } => {
                if overrides.is_empty() {
                    format!("expr:{expr}")
                } else {
                    let ov: Vec<String> =
                        overrides.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    format!("expr:{expr};{}", ov.join(";"))
                }
            }
            WeightSpec::Table(values) => format!("table[{}]", values.len()),
        }
    }
}

/// A positive, non-decreasing weight sequence materialised up to a horizon.
///
/// Values are 1-indexed: `rho(1)` is the first weight. Construction through
/// [`make_weights`] guarantees positivity and monotonicity, so downstream
/// density code never divides by zero or sees a shrinking normaliser.
#[derive(Debug, Clone)]
pub struct WeightSequence<R: Real> {
    label: String,
    values: Vec<R>,
}

impl<R: Real> WeightSequence<R> {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest index `n` for which `rho(n)` is available.
    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// `rho_n` for a 1-based `n`.
    pub fn rho(&self, n: usize) -> Result<R> {
        if n == 0 || n > self.values.len() {
            return Err(Error::HorizonExceeded {
                requested: n,
                horizon: self.values.len(),
            });
        }
        Ok(self.values[n - 1])
    }

    /// The materialised prefix `rho_1 ..= rho_n`.
    pub fn prefix(&self, n: usize) -> Result<&[R]> {
        if n > self.values.len() {
            return Err(Error::HorizonExceeded {
                requested: n,
                horizon: self.values.len(),
            });
        }
        Ok(&self.values[..n])
    }
}

/// Materialises `spec` up to `horizon`, validating every value.
///
/// Rejects non-positive, non-finite or decreasing prefixes, reporting the
/// first offending 1-based index. Tables shorter than `horizon` are an
/// error; longer tables are truncated.
pub fn make_weights<R: Real>(spec: &WeightSpec, horizon: usize) -> Result<WeightSequence<R>> {
    if horizon == 0 {
        return Err(Error::HorizonTooSmall {
            horizon: 0,
            required: 1,
        });
    }
    let raw: Vec<f64> = match spec {
        WeightSpec::Statistical => (1..=horizon).map(|n| n as f64).collect(),
        WeightSpec::ClosedForm { expr, overrides } => {
            let parsed = meval::Expr::from_str(expr).map_err(|e| Error::BadSpec {
                spec: expr.clone(),
                reason: e.to_string(),
            })?;
            let f = parsed.bind("n").map_err(|e| Error::BadSpec {
                spec: expr.clone(),
                reason: e.to_string(),
            })?;
            let mut values: Vec<f64> = (1..=horizon).map(|n| f(n as f64)).collect();
            for &(index, value) in overrides {
                if index <= horizon {
                    values[index - 1] = value;
                }
            }
            values
        }
        WeightSpec::Table(values) => {
            if values.len() < horizon {
                return Err(Error::HorizonTooSmall {
                    horizon: values.len(),
                    required: horizon,
                });
            }
            values[..horizon].to_vec()
        }
    };

    let mut out: Vec<R> = Vec::with_capacity(horizon);
    for (i, &v) in raw.iter().enumerate() {
        let index = i + 1;
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::NonPositiveWeight { index, value: v });
        }
        if let Some(&prev) = out.last() {
            if real::<R>(v) < prev {
                return Err(Error::DecreasingWeight {
                    index,
                    prev: to_f64(prev),
                    value: v,
                });
            }
        }
        out.push(real(v));
    }
    Ok(WeightSequence {
        label: spec.label(),
        values: out,
    })
}

/// Bounds used by the finite-prefix condition checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ConditionBounds<R: Real> {
    /// Minimum value `rho_horizon` must reach; `None` means `ln(horizon)`.
    pub divergence_floor: Option<R>,
    /// Maximum allowed `rho_n / n`.
    pub ratio_bound: R,
    /// Maximum allowed increment `rho_{n+1} - rho_n`.
    pub increment_bound: R,
}

impl<R: Real> Default for ConditionBounds<R> {
    fn default() -> Self {
        ConditionBounds {
            divergence_floor: None,
            ratio_bound: real(10.0),
            increment_bound: real(10.0),
        }
    }
}

/// Outcome of a single condition check.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ConditionFlag<R: Real> {
    pub ok: bool,
    /// First 1-based index violating the condition, if any.
    pub witness_index: Option<usize>,
    /// The offending quantity at that index (the value, ratio or increment).
    pub witness_value: Option<R>,
}

impl<R: Real> ConditionFlag<R> {
    fn pass() -> Self {
        ConditionFlag {
            ok: true,
            witness_index: None,
            witness_value: None,
        }
    }

    fn fail(index: usize, value: R) -> Self {
        ConditionFlag {
            ok: false,
            witness_index: Some(index),
            witness_value: Some(value),
        }
    }
}

/// Report of the four finite-prefix weight conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ConditionReport<R: Real> {
    pub label: String,
    pub horizon: usize,
    /// (a) `rho_n <= rho_{n+1}` over the prefix.
    pub non_decreasing: ConditionFlag<R>,
    /// (b) `rho_horizon >= floor` — a divergence proxy.
    pub divergence_floor: ConditionFlag<R>,
    /// The floor actually used by (b).
    pub floor_used: R,
    /// (c) `rho_n / n <= ratio_bound` over the prefix.
    pub ratio: ConditionFlag<R>,
    pub ratio_bound: R,
    /// (d) `rho_{n+1} - rho_n <= increment_bound` for `n <= horizon`.
    pub increment: ConditionFlag<R>,
    pub increment_bound: R,
}

impl<R: Real> ConditionReport<R> {
    /// True when all four flags pass.
    pub fn all_ok(&self) -> bool {
        self.non_decreasing.ok && self.divergence_floor.ok && self.ratio.ok && self.increment.ok
    }
}

/// Runs the four finite-prefix condition checks on `w` up to `horizon`.
///
/// The increment check (d) inspects `rho_{n+1} - rho_n` for `n <= horizon`,
/// so `w` must be materialised to `horizon + 1`. Violations are report
/// content, not errors.
pub fn check_conditions<R: Real>(
    w: &WeightSequence<R>,
    horizon: usize,
    bounds: &ConditionBounds<R>,
) -> Result<ConditionReport<R>> {
    if horizon < 1 {
        return Err(Error::HorizonTooSmall {
            horizon,
            required: 1,
        });
    }
    if w.horizon() < horizon + 1 {
        return Err(Error::HorizonTooSmall {
            horizon: w.horizon(),
            required: horizon + 1,
        });
    }
    let values = &w.values;

    // (a) Non-decreasing. Construction already guarantees this for sequences
    // built by `make_weights`, but the check still runs so that reports stay
    // meaningful for hand-built tables.
    let mut non_decreasing = ConditionFlag::pass();
    for n in 1..=horizon {
        if values[n] < values[n - 1] {
            non_decreasing = ConditionFlag::fail(n + 1, values[n]);
            break;
        }
    }

    // (b) Divergence proxy: the prefix must have climbed past the floor.
    let floor_used = bounds
        .divergence_floor
        .unwrap_or_else(|| real((horizon as f64).ln()));
    let last = values[horizon - 1];
    let divergence_floor = if last >= floor_used {
        ConditionFlag::pass()
    } else {
        ConditionFlag::fail(horizon, last)
    };

    // (c) rho_n / n stays bounded.
    let mut ratio = ConditionFlag::pass();
    for n in 1..=horizon {
        let r = values[n - 1] / real(n as f64);
        if r > bounds.ratio_bound {
            ratio = ConditionFlag::fail(n, r);
            break;
        }
    }

    // (d) increments stay bounded.
    let mut increment = ConditionFlag::pass();
    for n in 1..=horizon {
        let delta = values[n] - values[n - 1];
        if delta > bounds.increment_bound {
            increment = ConditionFlag::fail(n, delta);
            break;
        }
    }

    Ok(ConditionReport {
        label: w.label.clone(),
        horizon,
        non_decreasing,
        divergence_floor,
        floor_used,
        ratio,
        ratio_bound: bounds.ratio_bound,
        increment,
        increment_bound: bounds.increment_bound,
    })
}
