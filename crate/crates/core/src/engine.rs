//! Combinatory multi-subsampling: plan generation, parallel base-learner fits,
//! ensemble prediction, infinitesimal-jackknife variance, and intervals.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::types::{check_alpha, Dataset, EnsembleResult, PredictionInference, SeedSpec, SubsamplePlan};

/// Something that maps a feature row to a real prediction.
pub trait Predictor<T: Real> {
    fn predict(&self, x: ArrayView1<'_, T>) -> T;

    fn predict_rows(&self, x: ArrayView2<'_, T>) -> Array1<T> {
        x.rows().into_iter().map(|row| self.predict(row)).collect()
    }
}

/// A base learner: deterministic `fit` given data and seed, pure `predict`.
///
/// `valid` is the complement of the training subsample; learners that do not
/// tune on held-out data ignore it.
pub trait BaseLearner<T: Real>: Sync {
    type Fitted: Predictor<T> + Send;

    fn fit(&self, train: &Dataset<T>, valid: &Dataset<T>, seed: u64) -> Result<Self::Fitted>;
}

/// How the subsample size is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsampleSize {
    /// `r = floor(n^gamma)`
    Gamma(f64),
    Explicit(usize),
}

impl SubsampleSize {
    pub fn resolve(&self, n: usize) -> Result<usize> {
        match *self {
            SubsampleSize::Gamma(g) => {
                if !(g > 0.0 && g <= 1.0) || n < 2 {
                    return Err(Error::InvalidConfig(format!(
                        "gamma={g} must lie in (0, 1] with n={n} >= 2"
                    )));
                }
                Ok(compute_r(n, g))
            }
            SubsampleSize::Explicit(r) => {
                if r == 0 || r >= n {
                    Err(Error::InvalidConfig(format!("r={r} must satisfy 1 <= r < n={n}")))
                } else {
                    Ok(r)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UlearnConfig {
    pub size: SubsampleSize,
    pub b: usize,
    pub alpha: f64,
    pub oob: bool,
    /// Subtract the finite-`B` Monte-Carlo noise term from the variance.
    #[serde(default)]
    pub bias_correction: bool,
}

impl UlearnConfig {
    pub const DEFAULT_B_LASSO: usize = 500;
    pub const DEFAULT_B_MLP: usize = 300;

    pub fn new(size: SubsampleSize, b: usize, alpha: f64) -> Self {
        Self {
            size,
            b,
            alpha,
            oob: false,
            bias_correction: false,
        }
    }
}

/// `floor(n^gamma)` clamped to `[1, n-1]`.
pub fn compute_r(n: usize, gamma: f64) -> usize {
    let raw = (n as f64).powf(gamma);
    // n^gamma is an exact integer for gamma = 1 and perfect powers; guard
    // against powf landing a hair below it.
    let nearest = raw.round();
    let r = if (raw - nearest).abs() < 1e-9 * raw.max(1.0) {
        nearest
    } else {
        raw.floor()
    };
    (r as usize).clamp(1, n.saturating_sub(1).max(1))
}

/// Draws `b` independent size-`r` subsets of `[0, n)`, subsample `j` using
/// the seed derived from `(seed, j)`.
pub fn make_plan(n: usize, r: usize, b: usize, seed: SeedSpec) -> Result<SubsamplePlan> {
    if r == 0 || r >= n {
        return Err(Error::InvalidConfig(format!("r={r} must satisfy 1 <= r < n={n}")));
    }
    if b == 0 {
        return Err(Error::InvalidConfig("B must be positive".into()));
    }
    let sets = (0..b)
        .map(|j| {
            let mut rng = seed.rng(j as u64);
            rand::seq::index::sample(&mut rng, n, r).into_vec()
        })
        .collect();
    SubsamplePlan::new(n, r, sets)
}

/// Fits the learner on every subsample of `plan` (validation = complement)
/// and predicts each row of `test`. Output row `b` belongs to subsample `b`
/// regardless of how the fits are scheduled.
pub fn ensemble_fit_predict<T, L>(
    data: &Dataset<T>,
    learner: &L,
    plan: &SubsamplePlan,
    test: ArrayView2<'_, T>,
    seed: SeedSpec,
) -> Result<EnsembleResult<T>>
where
    T: Real,
    L: BaseLearner<T>,
{
    if plan.n() != data.n() {
        return Err(Error::Shape(format!(
            "plan is for n={} but dataset has {} rows",
            plan.n(),
            data.n()
        )));
    }
    if test.ncols() != data.p() {
        return Err(Error::Shape(format!(
            "test features have {} columns, training data {}",
            test.ncols(),
            data.p()
        )));
    }
    let rows = fit_predict_rows(data, learner, plan.index_sets(), seed, |fitted| fitted.predict_rows(test))?;
    let mut predictions = Array2::zeros((plan.b(), test.nrows()));
    for (b, row) in rows.into_iter().enumerate() {
        predictions.row_mut(b).assign(&row);
    }
    EnsembleResult::new(predictions, plan.clone())
}

/// Fits on `data[sets[b]]` (validation: rows absent from the set) for every
/// `b` in parallel and returns `predict(fit_b)` in order of `b`. Sets must be
/// ascending; repeated indices are allowed.
pub(crate) fn fit_predict_rows<T, L, F>(
    data: &Dataset<T>,
    learner: &L,
    sets: &[Vec<usize>],
    seed: SeedSpec,
    predict: F,
) -> Result<Vec<Array1<T>>>
where
    T: Real,
    L: BaseLearner<T>,
    F: Fn(&L::Fitted) -> Array1<T> + Sync,
{
    let seeds: Vec<u64> = (0..sets.len()).map(|b| seed.derive(b as u64)).collect();
    (0..sets.len())
        .into_par_iter()
        .map(|b| {
            let set = &sets[b];
            let train = data.select_rows(set);
            let valid = data.complement_rows(set);
            let fitted = learner
                .fit(&train, &valid, seeds[b])
                .map_err(|e| Error::Subsample {
                    index: b,
                    source: Box::new(e),
                })?;
            Ok(predict(&fitted))
        })
        .collect()
}

/// `ŷ = (1/B) Σ_b ỹ_b` for test point `test_index`.
pub fn ensemble_mean<T: Real>(result: &EnsembleResult<T>, test_index: usize) -> T {
    column_mean(result.predictions().column(test_index))
}

pub(crate) fn column_mean<T: Real>(col: ArrayView1<'_, T>) -> T {
    col.sum() / T::from_usize_lossy(col.len())
}

/// Options for the infinitesimal-jackknife variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IjOptions {
    pub bias_correction: bool,
}

/// Centered membership `J - J̄` (rows restricted to `rows` when given) and
/// the per-point membership variances used by the Monte-Carlo correction.
pub(crate) struct CenteredMembership<T> {
    centered: Array2<T>,
    /// `Σ_i (1/B) Σ_j (J_ji − J̄_i)²`
    total_var: T,
}

impl<T: Real> CenteredMembership<T> {
    pub(crate) fn new<M: Copy + ToPrimitive>(membership: ArrayView2<'_, M>, rows: Option<&[usize]>) -> Self {
        let selected: Vec<usize> = match rows {
            Some(r) => r.to_vec(),
            None => (0..membership.nrows()).collect(),
        };
        let b = selected.len();
        let n = membership.ncols();
        let mut centered = Array2::<T>::zeros((b, n));
        for (dst, &src) in selected.iter().enumerate() {
            for i in 0..n {
                centered[[dst, i]] = T::lit(membership[[src, i]].to_f64().unwrap_or(f64::NAN));
            }
        }
        let bt = T::from_usize_lossy(b);
        let means = centered.sum_axis(Axis(0)) / bt;
        centered -= &means;
        let total_var = centered.iter().map(|&v| v * v).sum::<T>() / bt;
        Self { centered, total_var }
    }

    /// `Σ_i Cov_i²` (and the Monte-Carlo noise estimate) for one prediction column.
    pub(crate) fn sum_sq_cov(&self, preds: ArrayView1<'_, T>) -> (T, T) {
        let b = T::from_usize_lossy(preds.len());
        let mean = column_mean(preds);
        let yc = preds.mapv(|v| v - mean);
        let cov = self.centered.t().dot(&yc) / b;
        let ss = cov.iter().map(|&c| c * c).sum::<T>();
        let noise = self.total_var * yc.iter().map(|&v| v * v).sum::<T>() / (b * b);
        (ss, noise)
    }
}

/// Infinitesimal-jackknife variance of the ensemble prediction at `test_index`:
/// `(n-1)/n · (n/(n-r))² · Σ_i Cov_i²`.
pub fn ij_variance<T: Real>(result: &EnsembleResult<T>, test_index: usize) -> Result<T> {
    ij_variance_with(result, test_index, IjOptions::default())
}

pub fn ij_variance_with<T: Real>(
    result: &EnsembleResult<T>,
    test_index: usize,
    opts: IjOptions,
) -> Result<T> {
    let plan = result.plan();
    if plan.b() < 2 {
        return Err(Error::InvalidConfig("IJ variance needs B >= 2".into()));
    }
    let cm = CenteredMembership::new(plan.membership(), None);
    Ok(scaled_variance(
        &cm,
        result.predictions().column(test_index),
        T::lit(plan.ij_scale()),
        opts,
    ))
}

pub(crate) fn scaled_variance<T: Real>(
    cm: &CenteredMembership<T>,
    preds: ArrayView1<'_, T>,
    scale: T,
    opts: IjOptions,
) -> T {
    let (ss, noise) = cm.sum_sq_cov(preds);
    let raw = if opts.bias_correction { ss - noise } else { ss };
    (scale * raw).max(T::zero())
}

/// Ensemble prediction, IJ standard error and `100(1-α)%` normal interval for
/// every test point.
pub fn infer<T: Real>(result: &EnsembleResult<T>, alpha: f64) -> Result<Vec<PredictionInference<T>>> {
    infer_with(result, alpha, IjOptions::default())
}

pub fn infer_with<T: Real>(
    result: &EnsembleResult<T>,
    alpha: f64,
    opts: IjOptions,
) -> Result<Vec<PredictionInference<T>>> {
    check_alpha(alpha)?;
    let plan = result.plan();
    if plan.b() < 2 {
        return Err(Error::InvalidConfig("IJ variance needs B >= 2".into()));
    }
    let cm = CenteredMembership::new(plan.membership(), None);
    let scale = T::lit(plan.ij_scale());
    (0..result.test_count())
        .map(|t| {
            let col = result.predictions().column(t);
            let var = scaled_variance(&cm, col, scale, opts);
            PredictionInference::normal(column_mean(col), var.sqrt(), alpha)
        })
        .collect()
}

/// Out-of-bag inference for every training point: point `i` uses only the
/// subsamples that exclude it, and the IJ variance is computed over those
/// rows of the membership matrix (with `n` and `r` unchanged).
pub fn oob_predict<T, L>(
    data: &Dataset<T>,
    learner: &L,
    plan: &SubsamplePlan,
    seed: SeedSpec,
    alpha: f64,
    opts: IjOptions,
) -> Result<Vec<PredictionInference<T>>>
where
    T: Real,
    L: BaseLearner<T>,
{
    check_alpha(alpha)?;
    if plan.n() != data.n() {
        return Err(Error::Shape(format!(
            "plan is for n={} but dataset has {} rows",
            plan.n(),
            data.n()
        )));
    }
    let oob_rows: Vec<Vec<usize>> = (0..plan.n()).map(|i| plan.rows_excluding(i)).collect();
    let short: Vec<usize> = oob_rows
        .iter()
        .enumerate()
        .filter(|(_, rows)| rows.len() < 2)
        .map(|(i, _)| i)
        .collect();
    if !short.is_empty() {
        return Err(Error::OobCoverage(short));
    }

    let features = data.features();
    let rows = fit_predict_rows(data, learner, plan.index_sets(), seed, |fitted| {
        fitted.predict_rows(features)
    })?;
    let scale = T::lit(plan.ij_scale());
    oob_rows
        .iter()
        .enumerate()
        .map(|(i, sel)| {
            let preds: Array1<T> = sel.iter().map(|&b| rows[b][i]).collect();
            let cm = CenteredMembership::new(plan.membership(), Some(sel));
            let var = scaled_variance(&cm, preds.view(), scale, opts);
            PredictionInference::normal(column_mean(preds.view()), var.sqrt(), alpha)
        })
        .collect()
}

/// Plan, fit and infer in one call.
pub fn ulearn<T, L>(
    data: &Dataset<T>,
    learner: &L,
    test: ArrayView2<'_, T>,
    config: &UlearnConfig,
    seed: SeedSpec,
) -> Result<(EnsembleResult<T>, Vec<PredictionInference<T>>)>
where
    T: Real,
    L: BaseLearner<T>,
{
    let r = config.size.resolve(data.n())?;
    let plan = make_plan(data.n(), r, config.b, seed.child(1, 0))?;
    let result = ensemble_fit_predict(data, learner, &plan, test, seed.child(2, 0))?;
    let opts = IjOptions {
        bias_correction: config.bias_correction,
    };
    let inference = infer_with(&result, config.alpha, opts)?;
    Ok((result, inference))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    pub(crate) struct ConstLearner(pub f64);
    pub(crate) struct Const(pub f64);

    impl Predictor<f64> for Const {
        fn predict(&self, _x: ArrayView1<'_, f64>) -> f64 {
            self.0
        }
    }

    impl BaseLearner<f64> for ConstLearner {
        type Fitted = Const;
        fn fit(&self, _t: &Dataset<f64>, _v: &Dataset<f64>, _s: u64) -> Result<Const> {
            Ok(Const(self.0))
        }
    }

    struct MeanLearner;

    impl BaseLearner<f64> for MeanLearner {
        type Fitted = Const;
        fn fit(&self, t: &Dataset<f64>, _v: &Dataset<f64>, _s: u64) -> Result<Const> {
            Ok(Const(t.responses().mean().unwrap()))
        }
    }

    struct FailOn(usize);

    impl BaseLearner<f64> for FailOn {
        type Fitted = Const;
        fn fit(&self, t: &Dataset<f64>, _v: &Dataset<f64>, _s: u64) -> Result<Const> {
            if t.responses().iter().any(|&y| y == self.0 as f64) {
                Err(Error::Singular)
            } else {
                Ok(Const(0.0))
            }
        }
    }

    fn toy(n: usize) -> Dataset<f64> {
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let y = Array1::from_shape_fn(n, |i| (i + 1) as f64);
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn compute_r_matches_reported_sizes() {
        assert_eq!(compute_r(500, 0.9), 268);
        assert_eq!(compute_r(500, 0.8), 144);
        assert_eq!(compute_r(500, 0.95), 366);
        assert_eq!(compute_r(1000, 0.95), 707);
        assert_eq!(compute_r(1000, 0.9), 501);
        assert_eq!(compute_r(1000, 0.8), 251);
        assert_eq!(compute_r(10, 1.0), 9);
        assert_eq!(compute_r(2, 0.1), 1);
    }

    #[test]
    fn small_plan_row_sums() {
        let plan = make_plan(5, 4, 3, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(plan.b(), 3);
        for row in plan.membership().rows() {
            assert_eq!(row.iter().map(|&v| v as usize).sum::<usize>(), 4);
        }
        assert!(make_plan(5, 5, 3, SeedSpec::new(1, 0)).is_err());
        assert!(make_plan(5, 0, 3, SeedSpec::new(1, 0)).is_err());
    }

    #[test]
    fn degenerate_plan_singletons() {
        let plan = make_plan(2, 1, 4, SeedSpec::new(3, 0)).unwrap();
        for set in plan.index_sets() {
            assert_eq!(set.len(), 1);
            assert!(set[0] < 2);
        }
    }

    #[test]
    fn inclusion_frequency_matches_r_over_n() {
        let plan = make_plan(10, 9, 10_000, SeedSpec::new(11, 0)).unwrap();
        let freq = plan.membership().mapv(|v| v as f64).mean_axis(Axis(0)).unwrap();
        for f in freq {
            assert!((f - 0.9).abs() <= 0.02, "{f}");
        }
    }

    #[test]
    fn constant_learner_gives_zero_predictions_and_variance() {
        let data = toy(6);
        let plan = make_plan(6, 4, 10, SeedSpec::new(0, 0)).unwrap();
        let test = array![[0.5], [2.0]];
        let res = ensemble_fit_predict(&data, &ConstLearner(0.0), &plan, test.view(), SeedSpec::new(0, 1)).unwrap();
        assert!(res.predictions().iter().all(|&v| v == 0.0));
        let inf = infer(&res, 0.05).unwrap();
        assert!(inf.iter().all(|i| i.sigma_hat == 0.0 && i.lower == i.upper));
    }

    #[test]
    fn mean_learner_on_enumerated_plan() {
        let data = toy(4);
        // lexical order of the omitted index 3, 2, 1, 0
        let sets = vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]];
        let plan = SubsamplePlan::new(4, 3, sets).unwrap();
        let test = array![[0.0]];
        let res = ensemble_fit_predict(&data, &MeanLearner, &plan, test.view(), SeedSpec::new(0, 0)).unwrap();
        let col: Vec<f64> = res.predictions().column(0).to_vec();
        let expected = [2.0, 7.0 / 3.0, 8.0 / 3.0, 3.0];
        for (a, e) in col.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn fit_failure_reports_subsample() {
        let data = toy(4);
        let sets = vec![vec![0, 1], vec![2, 3]];
        let plan = SubsamplePlan::new(4, 2, sets).unwrap();
        let err = ensemble_fit_predict(&data, &FailOn(4), &plan, array![[0.0]].view(), SeedSpec::new(0, 0))
            .unwrap_err();
        assert!(matches!(err, Error::Subsample { index: 1, .. }), "{err}");
    }

    #[test]
    fn shape_checks() {
        let data = toy(4);
        let plan = SubsamplePlan::new(5, 2, vec![vec![0, 1]]).unwrap();
        assert!(ensemble_fit_predict(&data, &MeanLearner, &plan, array![[0.0]].view(), SeedSpec::new(0, 0)).is_err());
        let plan = SubsamplePlan::new(4, 2, vec![vec![0, 1]]).unwrap();
        assert!(ensemble_fit_predict(&data, &MeanLearner, &plan, array![[0.0, 1.0]].view(), SeedSpec::new(0, 0)).is_err());
    }

    fn result_from(col: &[f64], plan: SubsamplePlan) -> EnsembleResult<f64> {
        let preds = Array2::from_shape_vec((col.len(), 1), col.to_vec()).unwrap();
        EnsembleResult::new(preds, plan).unwrap()
    }

    #[test]
    fn mean_of_column() {
        let plan = SubsamplePlan::new(3, 2, vec![vec![0, 1], vec![0, 2], vec![1, 2]]).unwrap();
        assert_eq!(ensemble_mean(&result_from(&[1.0, 2.0, 3.0], plan.clone()), 0), 2.0);
        assert_eq!(ensemble_mean(&result_from(&[4.5, 4.5, 4.5], plan), 0), 4.5);
    }

    #[test]
    fn ij_three_point_instance() {
        // J rows: {0,1} {0,2} {1,2}; J̄ = 2/3 each; ŷ = 2.
        // Cov_0 = [(1/3)(-1) + (1/3)(0) + (-2/3)(1)]/3 = -1/3
        // Cov_1 = [(1/3)(-1) + (-2/3)(0) + (1/3)(1)]/3 = 0
        // Cov_2 = [(-2/3)(-1) + (1/3)(0) + (1/3)(1)]/3 = 1/3
        // σ² = (2/3)·9·(2/9) = 4/3
        let plan = SubsamplePlan::new(3, 2, vec![vec![0, 1], vec![0, 2], vec![1, 2]]).unwrap();
        let res = result_from(&[1.0, 2.0, 3.0], plan);
        let v = ij_variance(&res, 0).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-14, "{v}");
    }

    #[test]
    fn ij_zero_for_constant_column_and_quadratic_scaling() {
        let plan = make_plan(8, 5, 20, SeedSpec::new(5, 0)).unwrap();
        let res = result_from(&[3.0; 20], plan.clone());
        assert_eq!(ij_variance(&res, 0).unwrap(), 0.0);

        let col: Vec<f64> = (0..20).map(|k| ((k * 7) % 5) as f64 - 1.3).collect();
        let scaled: Vec<f64> = col.iter().map(|v| v * 2.5).collect();
        let v1 = ij_variance(&result_from(&col, plan.clone()), 0).unwrap();
        let v2 = ij_variance(&result_from(&scaled, plan), 0).unwrap();
        assert!((v2 - 6.25 * v1).abs() <= 1e-12 * v2);
    }

    #[test]
    fn ij_needs_two_subsamples() {
        let plan = SubsamplePlan::new(3, 2, vec![vec![0, 1]]).unwrap();
        let res = result_from(&[1.0], plan);
        assert!(ij_variance(&res, 0).is_err());
        assert!(infer(&res, 0.05).is_err());
    }

    #[test]
    fn bias_correction_reduces_variance() {
        let plan = make_plan(10, 6, 30, SeedSpec::new(9, 0)).unwrap();
        let col: Vec<f64> = (0..30).map(|k| ((k * 13) % 7) as f64).collect();
        let res = result_from(&col, plan);
        let raw = ij_variance(&res, 0).unwrap();
        let corrected = ij_variance_with(&res, 0, IjOptions { bias_correction: true }).unwrap();
        assert!(corrected <= raw);
        assert!(corrected >= 0.0);
    }

    #[test]
    fn interval_uses_normal_quantile() {
        let plan = SubsamplePlan::new(3, 2, vec![vec![0, 1], vec![0, 2], vec![1, 2]]).unwrap();
        let res = result_from(&[1.0, 2.0, 3.0], plan);
        let wide = infer(&res, 0.05).unwrap()[0];
        let narrow = infer(&res, 0.32).unwrap()[0];
        assert!(wide.lower < narrow.lower && narrow.upper < wide.upper);
        let ratio = wide.width() / narrow.width();
        let z = crate::normal::normal_quantile;
        assert!((ratio - z(0.975) / z(0.84)).abs() < 1e-12);
        assert!(infer(&res, 0.0).is_err());
    }

    #[test]
    fn unit_interval_at_five_percent() {
        let inf = PredictionInference::<f64>::normal(0.0, 1.0, 0.05).unwrap();
        assert!((inf.lower + 1.959964).abs() < 1e-6);
        assert!((inf.upper - 1.959964).abs() < 1e-6);
    }

    #[test]
    fn oob_precondition() {
        let data = toy(3);
        let plan = SubsamplePlan::new(3, 2, vec![vec![0, 1], vec![0, 2], vec![1, 2]]).unwrap();
        let err = oob_predict(&data, &ConstLearner(1.0), &plan, SeedSpec::new(0, 0), 0.05, IjOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::OobCoverage(ref v) if v == &vec![0, 1, 2]));
    }

    #[test]
    fn oob_row_count_and_constant_learner() {
        let data = toy(3);
        let sets = vec![vec![0], vec![0], vec![1], vec![1], vec![2], vec![2]];
        let plan = SubsamplePlan::new(3, 1, sets).unwrap();
        assert_eq!(plan.rows_excluding(0).len(), 4);
        let inf = oob_predict(&data, &ConstLearner(2.5), &plan, SeedSpec::new(0, 0), 0.05, IjOptions::default()).unwrap();
        assert_eq!(inf.len(), 3);
        assert!(inf.iter().all(|i| i.y_hat == 2.5 && i.sigma_hat == 0.0));
    }

    #[test]
    fn oob_uses_only_excluding_subsamples() {
        let data = toy(3);
        let sets = vec![vec![0], vec![0], vec![1], vec![1], vec![2], vec![2]];
        let plan = SubsamplePlan::new(3, 1, sets).unwrap();
        let inf = oob_predict(&data, &MeanLearner, &plan, SeedSpec::new(0, 0), 0.05, IjOptions::default()).unwrap();
        // point 0 is predicted by the fits on {1} (y=2) and {2} (y=3)
        assert!((inf[0].y_hat - 2.5).abs() < 1e-15);
        assert!((inf[2].y_hat - 1.5).abs() < 1e-15);
    }
}
