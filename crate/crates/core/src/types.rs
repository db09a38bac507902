//! Shared domain types: datasets, subsample plans, ensemble outputs and
//! per-point inference, plus the seed-derivation contract.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::normal_quantile;
use crate::scalar::Real;

/// Training corpus: `n × p` features and `n` responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetRepr<T>", bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct Dataset<T: Real> {
    features: Array2<T>,
    responses: Array1<T>,
    feature_names: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct DatasetRepr<T: Real> {
    features: Array2<T>,
    responses: Array1<T>,
    feature_names: Option<Vec<String>>,
}

impl<T: Real> TryFrom<DatasetRepr<T>> for Dataset<T> {
    type Error = Error;

    fn try_from(r: DatasetRepr<T>) -> Result<Self> {
        Dataset::with_names(r.features, r.responses, r.feature_names)
    }
}

impl<T: Real> Dataset<T> {
    pub fn new(features: Array2<T>, responses: Array1<T>) -> Result<Self> {
        Self::with_names(features, responses, None)
    }

    pub fn with_names(
        features: Array2<T>,
        responses: Array1<T>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if features.nrows() != responses.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} responses",
                features.nrows(),
                responses.len()
            )));
        }
        if let Some(names) = &feature_names {
            if names.len() != features.ncols() {
                return Err(Error::Shape(format!(
                    "{} feature names for {} columns",
                    names.len(),
                    features.ncols()
                )));
            }
        }
        if features.iter().chain(responses.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite value in dataset".into()));
        }
        Ok(Self {
            features,
            responses,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.responses.len()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, T> {
        self.features.view()
    }

    pub fn responses(&self) -> ArrayView1<'_, T> {
        self.responses.view()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Rows `indices` (in the given order) as a new dataset.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset<T> {
        Dataset {
            features: self.features.select(Axis(0), indices),
            responses: self.responses.select(Axis(0), indices),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Rows whose index is not in `sorted_indices` (which must be ascending).
    pub fn complement_rows(&self, sorted_indices: &[usize]) -> Dataset<T> {
        let rest = complement(self.n(), sorted_indices);
        self.select_rows(&rest)
    }

    pub fn into_parts(self) -> (Array2<T>, Array1<T>, Option<Vec<String>>) {
        (self.features, self.responses, self.feature_names)
    }
}

/// Indices of `[0, n)` not present in the ascending slice `sorted` (repeats allowed).
pub fn complement(n: usize, sorted: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n.saturating_sub(sorted.len()));
    let mut it = sorted.iter().peekable();
    for i in 0..n {
        while it.next_if(|&&v| v < i).is_some() {}
        if it.peek() != Some(&&i) {
            out.push(i);
        }
    }
    out
}

/// `B` subsamples of size `r` drawn without replacement from `[0, n)`,
/// stored both as sorted index sets and as the `B × n` membership matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PlanRepr")]
pub struct SubsamplePlan {
    n: usize,
    r: usize,
    index_sets: Vec<Vec<usize>>,
    membership: Array2<u8>,
}

#[derive(Deserialize)]
struct PlanRepr {
    n: usize,
    r: usize,
    index_sets: Vec<Vec<usize>>,
    membership: Array2<u8>,
}

impl TryFrom<PlanRepr> for SubsamplePlan {
    type Error = Error;

    fn try_from(repr: PlanRepr) -> Result<Self> {
        let plan = SubsamplePlan::new(repr.n, repr.r, repr.index_sets)?;
        if plan.membership != repr.membership {
            return Err(Error::InvalidData(
                "membership matrix disagrees with index sets".into(),
            ));
        }
        Ok(plan)
    }
}

impl SubsamplePlan {
    /// Builds a plan from explicit index sets; each set is sorted and checked
    /// for size `r`, distinctness, and range.
    pub fn new(n: usize, r: usize, mut index_sets: Vec<Vec<usize>>) -> Result<Self> {
        if r == 0 || r >= n {
            return Err(Error::InvalidConfig(format!(
                "subsample size r={r} must satisfy 1 <= r < n={n}"
            )));
        }
        if index_sets.is_empty() {
            return Err(Error::InvalidConfig("plan needs at least one subsample".into()));
        }
        let mut membership = Array2::<u8>::zeros((index_sets.len(), n));
        for (b, set) in index_sets.iter_mut().enumerate() {
            set.sort_unstable();
            if set.len() != r {
                return Err(Error::InvalidData(format!(
                    "subsample {b} has {} members, expected {r}",
                    set.len()
                )));
            }
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidData(format!("subsample {b} repeats an index")));
            }
            if set.last().is_some_and(|&i| i >= n) {
                return Err(Error::InvalidData(format!("subsample {b} index out of range")));
            }
            for &i in set.iter() {
                membership[[b, i]] = 1;
            }
        }
        Ok(Self {
            n,
            r,
            index_sets,
            membership,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of subsamples `B`.
    pub fn b(&self) -> usize {
        self.index_sets.len()
    }

    pub fn index_sets(&self) -> &[Vec<usize>] {
        &self.index_sets
    }

    pub fn index_set(&self, b: usize) -> &[usize] {
        &self.index_sets[b]
    }

    /// `membership[[b, i]] == 1` iff `i` belongs to subsample `b`.
    pub fn membership(&self) -> ArrayView2<'_, u8> {
        self.membership.view()
    }

    /// Subsamples whose membership row has a zero at point `i`.
    pub fn rows_excluding(&self, i: usize) -> Vec<usize> {
        (0..self.b())
            .filter(|&b| self.membership[[b, i]] == 0)
            .collect()
    }

    /// Restricts the plan to the given rows (used by out-of-bag inference).
    pub fn restrict(&self, rows: &[usize]) -> Result<Self> {
        let sets = rows.iter().map(|&b| self.index_sets[b].clone()).collect();
        Self::new(self.n, self.r, sets)
    }

    /// `(n-1)/n · (n/(n-r))²`, the finite-population factor applied to the
    /// summed squared covariances.
    pub fn ij_scale(&self) -> f64 {
        let n = self.n as f64;
        let r = self.r as f64;
        (n - 1.0) / n * (n / (n - r)).powi(2)
    }
}

/// Per-subsample predictions (`B × ℓ`) together with the plan that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct EnsembleResult<T: Real> {
    predictions: Array2<T>,
    plan: SubsamplePlan,
}

impl<T: Real> EnsembleResult<T> {
    pub fn new(predictions: Array2<T>, plan: SubsamplePlan) -> Result<Self> {
        if predictions.nrows() != plan.b() {
            return Err(Error::Shape(format!(
                "{} prediction rows for {} subsamples",
                predictions.nrows(),
                plan.b()
            )));
        }
        if predictions.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite subsample prediction".into()));
        }
        Ok(Self { predictions, plan })
    }

    pub fn predictions(&self) -> &Array2<T> {
        &self.predictions
    }

    pub fn plan(&self) -> &SubsamplePlan {
        &self.plan
    }

    /// Number of test points `ℓ`.
    pub fn test_count(&self) -> usize {
        self.predictions.ncols()
    }
}

/// Point prediction, standard error and a symmetric normal interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InferenceRepr<T>", bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct PredictionInference<T: Real> {
    pub y_hat: T,
    pub sigma_hat: T,
    pub lower: T,
    pub upper: T,
    pub alpha: f64,
}

#[derive(Deserialize)]
struct InferenceRepr<T> {
    y_hat: T,
    sigma_hat: T,
    lower: T,
    upper: T,
    alpha: f64,
}

impl<T: Real> TryFrom<InferenceRepr<T>> for PredictionInference<T> {
    type Error = Error;

    fn try_from(r: InferenceRepr<T>) -> Result<Self> {
        let out = Self {
            y_hat: r.y_hat,
            sigma_hat: r.sigma_hat,
            lower: r.lower,
            upper: r.upper,
            alpha: r.alpha,
        };
        out.validate()?;
        Ok(out)
    }
}

impl<T: Real> PredictionInference<T> {
    /// Interval `y_hat ± z_{1-α/2} · sigma_hat`.
    pub fn normal(y_hat: T, sigma_hat: T, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(sigma_hat >= T::zero()) || !sigma_hat.is_finite() || !y_hat.is_finite() {
            return Err(Error::InvalidData(format!(
                "invalid prediction {y_hat} with standard error {sigma_hat}"
            )));
        }
        let half = T::lit(normal_quantile(1.0 - alpha / 2.0)) * sigma_hat;
        Ok(Self {
            y_hat,
            sigma_hat,
            lower: y_hat - half,
            upper: y_hat + half,
            alpha,
        })
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    pub fn covers(&self, truth: T) -> bool {
        self.lower <= truth && truth <= self.upper
    }

    fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.lower <= self.y_hat && self.y_hat <= self.upper) || self.sigma_hat < T::zero() {
            return Err(Error::InvalidData("inconsistent prediction interval".into()));
        }
        let expected = T::lit(2.0 * normal_quantile(1.0 - self.alpha / 2.0)) * self.sigma_hat;
        let tol = T::lit(1e-12) * expected.abs().max(T::one());
        if (self.width() - expected).abs() > tol {
            return Err(Error::InvalidData(
                "interval width does not match the normal quantile".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("alpha={alpha} must lie in (0, 1)")))
    }
}

/// Root of a deterministic family of random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// A spec for an independent sub-stream, keyed by `(self, index)`.
    pub fn child(&self, stream_id: u64, index: u64) -> SeedSpec {
        SeedSpec::new(derive_seed(*self, index), stream_id)
    }

    pub fn derive(&self, index: u64) -> u64 {
        derive_seed(*self, index)
    }

    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derive(index))
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for subsample `index` of stream `(master_seed, stream_id)`.
///
/// Each stage is a bijection of its input, so for a fixed
/// `(master_seed, stream_id)` distinct indices never collide.
pub fn derive_seed(spec: SeedSpec, index: u64) -> u64 {
    let h = splitmix64(spec.master_seed);
    let h = splitmix64(h ^ spec.stream_id.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(h ^ index.wrapping_mul(0xA076_1D64_78BD_642F))
}
