//! Accuracy and interval metrics, per replicate and aggregated over
//! replicated training sets.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("length mismatch: {a} vs {b}")));
    }
    if a == 0 {
        return Err(Error::InvalidData("metrics need at least one test point".into()));
    }
    Ok(())
}

/// Mean of `pred - truth`.
pub fn bias(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check_lengths(truth.len(), pred.len())?;
    Ok(pred.iter().zip(truth).map(|(p, t)| p - t).sum::<f64>() / truth.len() as f64)
}

pub fn mae(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check_lengths(truth.len(), pred.len())?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / truth.len() as f64)
}

/// Relative allowance for rounding when testing containment, so a degenerate
/// interval around an exact fit still covers the value it reproduces.
pub const COVERAGE_SLACK: f64 = 1e-12;

/// `L ≤ t ≤ U`, up to [`COVERAGE_SLACK`]`·max(1, |t|)`.
pub fn covers(truth: f64, lower: f64, upper: f64) -> bool {
    let slack = COVERAGE_SLACK * truth.abs().max(1.0);
    lower - slack <= truth && truth <= upper + slack
}

/// Fraction of closed intervals `[L, U]` containing the truth.
pub fn coverage(truth: &[f64], intervals: &[(f64, f64)]) -> Result<f64> {
    check_lengths(truth.len(), intervals.len())?;
    if let Some((i, _)) = intervals.iter().enumerate().find(|(_, (l, u))| !(l <= u)) {
        return Err(Error::InvalidData(format!("interval {i} has lower > upper")));
    }
    let hits = truth
        .iter()
        .zip(intervals)
        .filter(|&(&t, &(l, u))| covers(t, l, u))
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Average interval length.
pub fn ail(intervals: &[(f64, f64)]) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::InvalidData("metrics need at least one test point".into()));
    }
    Ok(intervals.iter().map(|(l, u)| u - l).sum::<f64>() / intervals.len() as f64)
}

/// Per-test-point standard deviation across replicates (rows of `preds`,
/// denominator `R - 1`).
pub fn emp_sd_per_point(preds: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    let r = preds.nrows();
    if r < 2 {
        return Err(Error::InvalidData("empirical SD needs at least 2 replicates".into()));
    }
    Ok(preds
        .columns()
        .into_iter()
        .map(|col| {
            let mean = col.sum() / r as f64;
            (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64).sqrt()
        })
        .collect())
}

/// Across-replicate SD of the prediction, averaged over test points.
pub fn emp_sd(preds: ArrayView2<'_, f64>) -> Result<f64> {
    let per = emp_sd_per_point(preds)?;
    if per.is_empty() {
        return Err(Error::InvalidData("metrics need at least one test point".into()));
    }
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// Point estimates and intervals of one method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutput {
    pub y_hat: Vec<f64>,
    /// Standard errors, when the method produces them.
    pub se: Option<Vec<f64>>,
    pub intervals: Vec<(f64, f64)>,
}

impl MethodOutput {
    pub fn new(y_hat: Vec<f64>, se: Option<Vec<f64>>, intervals: Vec<(f64, f64)>) -> Result<Self> {
        if y_hat.len() != intervals.len() || se.as_ref().is_some_and(|s| s.len() != y_hat.len()) {
            return Err(Error::Shape("method output columns differ in length".into()));
        }
        Ok(Self { y_hat, se, intervals })
    }

    pub fn len(&self) -> usize {
        self.y_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_hat.is_empty()
    }
}

/// Metrics of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub bias: f64,
    pub mae: f64,
    pub mean_se: Option<f64>,
    pub cp: f64,
    pub ail: f64,
}

pub fn replicate_metrics(truth: &[f64], out: &MethodOutput) -> Result<ReplicateMetrics> {
    Ok(ReplicateMetrics {
        bias: bias(truth, &out.y_hat)?,
        mae: mae(truth, &out.y_hat)?,
        mean_se: out.se.as_ref().map(|s| s.iter().sum::<f64>() / s.len().max(1) as f64),
        cp: coverage(truth, &out.intervals)?,
        ail: ail(&out.intervals)?,
    })
}

/// One table row: per-replicate metrics averaged over replicates, plus the
/// across-replicate SD of the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub bias: f64,
    pub mae: f64,
    pub emp_sd: f64,
    pub mean_se: Option<f64>,
    pub cp: f64,
    pub ail: f64,
    /// Mean wall-clock seconds per replicate.
    pub runtime_seconds: f64,
}

/// Aggregates `R` replicates. `preds` is the `R × ℓ` matrix of point
/// predictions on the shared test set.
pub fn summarize(
    per_replicate: &[ReplicateMetrics],
    preds: ArrayView2<'_, f64>,
    runtimes: &[f64],
) -> Result<ReplicateSummary> {
    let r = per_replicate.len();
    if r == 0 || preds.nrows() != r || runtimes.len() != r {
        return Err(Error::Shape("replicate counts disagree".into()));
    }
    let avg = |f: &dyn Fn(&ReplicateMetrics) -> f64| per_replicate.iter().map(f).sum::<f64>() / r as f64;
    let mean_se = if per_replicate.iter().all(|m| m.mean_se.is_some()) {
        Some(avg(&|m| m.mean_se.expect("checked")))
    } else {
        None
    };
    let emp = if r >= 2 { emp_sd(preds)? } else { f64::NAN };
    Ok(ReplicateSummary {
        bias: avg(&|m| m.bias),
        mae: avg(&|m| m.mae),
        emp_sd: emp,
        mean_se,
        cp: avg(&|m| m.cp),
        ail: avg(&|m| m.ail),
        runtime_seconds: runtimes.iter().sum::<f64>() / r as f64,
    })
}
