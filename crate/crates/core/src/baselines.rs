//! Comparison interval methods: split conformal, with-replacement ensembles
//! (SWR), the naive bootstrap, and OLS on the true support inside the
//! subsampling pipeline.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{
    column_mean, ensemble_fit_predict, fit_predict_rows, infer_with, scaled_variance, BaseLearner, CenteredMembership,
    IjOptions, Predictor,
};
use crate::error::{Error, Result};
use crate::normal::normal_quantile;
use crate::scalar::Real;
use crate::types::{check_alpha, Dataset, PredictionInference, SeedSpec, SubsamplePlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConformityTarget {
    ObservedY,
    TrueF0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalConfig {
    pub alpha: f64,
    /// Fraction of the training rows used to fit; the rest calibrate.
    pub split_fraction: f64,
    pub target: ConformityTarget,
}

impl Default for ConformalConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            split_fraction: 0.5,
            target: ConformityTarget::TrueF0,
        }
    }
}

/// A point prediction with a symmetric interval around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalInterval<T> {
    pub prediction: T,
    pub lower: T,
    pub upper: T,
}

impl<T: Real> ConformalInterval<T> {
    pub fn width(&self) -> T {
        self.upper - self.lower
    }
}

/// The `⌈(m+1)(1-α)⌉`-th smallest of `scores`.
pub fn conformal_quantile<T: Real>(scores: &[T], alpha: f64) -> Result<T> {
    check_alpha(alpha)?;
    let m = scores.len();
    let k = ((m as f64 + 1.0) * (1.0 - alpha) - 1e-9).ceil() as usize;
    if k == 0 || k > m {
        return Err(Error::InvalidConfig(format!(
            "{m} calibration scores are too few for alpha={alpha}"
        )));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    Ok(sorted[k - 1])
}

/// Split conformal intervals. `truth` is the noiseless regression function at
/// the training rows and is required when scoring against `TrueF0`.
pub fn split_conformal<T, L>(
    train: &Dataset<T>,
    test: ArrayView2<'_, T>,
    learner: &L,
    cfg: &ConformalConfig,
    truth: Option<ArrayView1<'_, T>>,
    seed: SeedSpec,
) -> Result<Vec<ConformalInterval<T>>>
where
    T: Real,
    L: BaseLearner<T>,
{
    check_alpha(cfg.alpha)?;
    if !(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split fraction {} outside (0, 1)",
            cfg.split_fraction
        )));
    }
    let target = match (cfg.target, truth) {
        (ConformityTarget::ObservedY, _) => train.responses(),
        (ConformityTarget::TrueF0, Some(t)) if t.len() == train.n() => t,
        (ConformityTarget::TrueF0, Some(t)) => {
            return Err(Error::Shape(format!(
                "truth has {} entries for {} training rows",
                t.len(),
                train.n()
            )))
        }
        (ConformityTarget::TrueF0, None) => {
            return Err(Error::InvalidConfig("true-f0 conformity scores need the truth vector".into()))
        }
    };
    if test.ncols() != train.p() {
        return Err(Error::Shape(format!(
            "test features have {} columns, training data {}",
            test.ncols(),
            train.p()
        )));
    }
    let n = train.n();
    let fit_count = (n as f64 * cfg.split_fraction).round() as usize;
    let calib_count = n.saturating_sub(fit_count);
    let needed = (1.0 / cfg.alpha).ceil() as usize;
    if fit_count == 0 || calib_count < needed {
        return Err(Error::InvalidData(format!(
            "calibration split has {calib_count} rows, need at least {needed} for alpha={}",
            cfg.alpha
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed.rng(0));
    let mut proper = order[..fit_count].to_vec();
    let mut calib = order[fit_count..].to_vec();
    proper.sort_unstable();
    calib.sort_unstable();

    let empty = train.select_rows(&[]);
    let fitted = learner.fit(&train.select_rows(&proper), &empty, seed.derive(1))?;
    let calib_pred = fitted.predict_rows(train.select_rows(&calib).features());
    let scores: Vec<T> = calib
        .iter()
        .zip(calib_pred.iter())
        .map(|(&i, &f)| (target[i] - f).abs())
        .collect();
    let q = conformal_quantile(&scores, cfg.alpha)?;
    Ok(fitted
        .predict_rows(test)
        .iter()
        .map(|&f| ConformalInterval {
            prediction: f,
            lower: f - q,
            upper: f + q,
        })
        .collect())
}

/// How bootstrap multiplicities enter the covariance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwrMembership {
    #[default]
    Counts,
    Indicator,
}

/// Ensemble over size-`n` resamples drawn with replacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwrResult<T: Real> {
    /// `B × ℓ` per-resample predictions.
    pub predictions: Array2<T>,
    /// `B × n` multiplicity of each training row in each resample.
    pub counts: Array2<u32>,
}

/// `b` sorted size-`n` resamples with replacement; resample `j` uses the
/// seed derived from `(seed, j)`.
pub fn bootstrap_resamples(n: usize, b: usize, seed: SeedSpec) -> Vec<Vec<usize>> {
    (0..b)
        .map(|j| {
            let mut rng = seed.rng(j as u64);
            let mut set: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            set.sort_unstable();
            set
        })
        .collect()
}

fn counts_matrix(n: usize, sets: &[Vec<usize>]) -> Array2<u32> {
    let mut counts = Array2::zeros((sets.len(), n));
    for (b, set) in sets.iter().enumerate() {
        for &i in set {
            counts[[b, i]] += 1;
        }
    }
    counts
}

/// Fits the learner on `b` bootstrap resamples (validation: rows left out of
/// the resample) and predicts the test rows.
pub fn swr_ensemble<T, L>(
    data: &Dataset<T>,
    learner: &L,
    b: usize,
    test: ArrayView2<'_, T>,
    seed: SeedSpec,
) -> Result<SwrResult<T>>
where
    T: Real,
    L: BaseLearner<T>,
{
    if b < 2 {
        return Err(Error::InvalidConfig("B must be at least 2".into()));
    }
    if data.n() == 0 || test.ncols() != data.p() {
        return Err(Error::Shape("test features do not match the training data".into()));
    }
    let sets = bootstrap_resamples(data.n(), b, seed.child(1, 0));
    let rows = fit_predict_rows(data, learner, &sets, seed.child(2, 0), |f| f.predict_rows(test))?;
    let mut predictions = Array2::zeros((b, test.nrows()));
    for (j, row) in rows.into_iter().enumerate() {
        predictions.row_mut(j).assign(&row);
    }
    Ok(SwrResult {
        predictions,
        counts: counts_matrix(data.n(), &sets),
    })
}

/// Ensemble mean and the bootstrap infinitesimal-jackknife variance
/// `Σ_i Cov(N_i, ỹ)²` (no subsampling factor, which is undefined at `r = n`).
pub fn swr_infer<T: Real>(
    result: &SwrResult<T>,
    alpha: f64,
    membership: SwrMembership,
    opts: IjOptions,
) -> Result<Vec<PredictionInference<T>>> {
    check_alpha(alpha)?;
    let cm = match membership {
        SwrMembership::Counts => CenteredMembership::new(result.counts.view(), None),
        SwrMembership::Indicator => CenteredMembership::new(result.counts.mapv(|c| u32::from(c > 0)).view(), None),
    };
    result
        .predictions
        .columns()
        .into_iter()
        .map(|col| {
            let var = scaled_variance(&cm, col, T::one(), opts);
            PredictionInference::normal(column_mean(col), var.sqrt(), alpha)
        })
        .collect()
}

/// Full-data prediction with a standard error from `b` bootstrap refits
/// (sample standard deviation, denominator `b - 1`).
pub fn naive_bootstrap<T, L>(
    data: &Dataset<T>,
    learner: &L,
    b: usize,
    alpha: f64,
    test: ArrayView2<'_, T>,
    seed: SeedSpec,
) -> Result<Vec<PredictionInference<T>>>
where
    T: Real,
    L: BaseLearner<T>,
{
    check_alpha(alpha)?;
    let boot = swr_ensemble(data, learner, b, test, seed)?;
    let full = learner.fit(data, &data.select_rows(&[]), seed.child(3, 0).derive(0))?;
    let point = full.predict_rows(test);
    let bt = T::from_usize_lossy(b);
    let mean = boot.predictions.mean_axis(Axis(0)).expect("b >= 2");
    point
        .iter()
        .enumerate()
        .map(|(t, &y)| {
            let ss: T = boot
                .predictions
                .column(t)
                .iter()
                .map(|&v| (v - mean[t]) * (v - mean[t]))
                .sum();
            PredictionInference::normal(y, (ss / (bt - T::one())).sqrt(), alpha)
        })
        .collect()
}

/// Least squares on a fixed column subset plus an intercept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OlsLearner {
    pub support: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit<T: Real> {
    pub intercept: T,
    pub support: Vec<usize>,
    pub coefficients: Array1<T>,
}

impl<T: Real> Predictor<T> for OlsFit<T> {
    fn predict(&self, x: ArrayView1<'_, T>) -> T {
        self.support
            .iter()
            .zip(self.coefficients.iter())
            .fold(self.intercept, |acc, (&j, &c)| acc + c * x[j])
    }
}

/// Centered least squares on `support` columns via Householder QR.
pub fn ols_fit<T: Real>(data: &Dataset<T>, support: &[usize]) -> Result<OlsFit<T>> {
    let (m, p) = (data.n(), data.p());
    if support.iter().any(|&j| j >= p) {
        return Err(Error::InvalidConfig(format!("support index out of range for p={p}")));
    }
    if m == 0 || support.len() >= m {
        return Err(Error::Singular);
    }
    let y = data.responses().mapv(|v| v.to_f64_lossy());
    let y_mean = y.sum() / m as f64;
    if support.is_empty() {
        return Ok(OlsFit {
            intercept: T::lit(y_mean),
            support: Vec::new(),
            coefficients: Array1::zeros(0),
        });
    }
    let x = data.features();
    let means: Vec<f64> = support
        .iter()
        .map(|&j| x.column(j).iter().map(|v| v.to_f64_lossy()).sum::<f64>() / m as f64)
        .collect();
    let a = DMatrix::from_fn(m, support.len(), |i, k| x[[i, support[k]]].to_f64_lossy() - means[k]);
    let rhs = DVector::from_fn(m, |i, _| y[i] - y_mean);
    let qr = a.qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if diag_max == 0.0 || r.diagonal().iter().any(|v| v.abs() <= 1e-10 * diag_max) {
        return Err(Error::Singular);
    }
    let qty = qr.q().transpose() * rhs;
    let beta = r.solve_upper_triangular(&qty).ok_or(Error::Singular)?;
    let intercept = y_mean - means.iter().zip(beta.iter()).map(|(m, b)| m * b).sum::<f64>();
    Ok(OlsFit {
        intercept: T::lit(intercept),
        support: support.to_vec(),
        coefficients: beta.iter().map(|&b| T::lit(b)).collect(),
    })
}

impl<T: Real> BaseLearner<T> for OlsLearner {
    type Fitted = OlsFit<T>;

    fn fit(&self, train: &Dataset<T>, _valid: &Dataset<T>, _seed: u64) -> Result<OlsFit<T>> {
        ols_fit(train, &self.support)
    }
}

/// The subsampling pipeline with OLS on the known support as base learner.
pub fn oracle_ols<T: Real>(
    data: &Dataset<T>,
    true_support: &[usize],
    plan: &SubsamplePlan,
    test: ArrayView2<'_, T>,
    alpha: f64,
    seed: SeedSpec,
    opts: IjOptions,
) -> Result<Vec<PredictionInference<T>>> {
    if true_support.len() >= plan.r() {
        return Err(Error::InvalidConfig(format!(
            "support of size {} needs subsamples larger than r={}",
            true_support.len(),
            plan.r()
        )));
    }
    let learner = OlsLearner {
        support: true_support.to_vec(),
    };
    let result = ensemble_fit_predict(data, &learner, plan, test, seed)?;
    infer_with(&result, alpha, opts)
}

/// Convenience: the normal quantile used for all symmetric intervals here.
pub fn z_value(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(normal_quantile(1.0 - alpha / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::make_plan;
    use ndarray::array;

    struct MeanLearner;
    struct Const(f64);
    impl Predictor<f64> for Const {
        fn predict(&self, _x: ArrayView1<'_, f64>) -> f64 {
            self.0
        }
    }
    impl BaseLearner<f64> for MeanLearner {
        type Fitted = Const;
        fn fit(&self, t: &Dataset<f64>, _v: &Dataset<f64>, _s: u64) -> Result<Const> {
            Ok(Const(t.responses().mean().unwrap_or(0.0)))
        }
    }
    struct Fixed(f64);
    impl BaseLearner<f64> for Fixed {
        type Fitted = Const;
        fn fit(&self, _t: &Dataset<f64>, _v: &Dataset<f64>, _s: u64) -> Result<Const> {
            Ok(Const(self.0))
        }
    }

    fn column(y: &[f64]) -> Dataset<f64> {
        let x = Array2::from_shape_fn((y.len(), 1), |(i, _)| i as f64);
        Dataset::new(x, Array1::from(y.to_vec())).unwrap()
    }

    #[test]
    fn conformal_rank() {
        assert_eq!(conformal_quantile(&[3.0, 1.0, 4.0, 2.0], 0.2).unwrap(), 4.0);
        assert_eq!(conformal_quantile(&[0.0; 19], 0.1).unwrap(), 0.0);
        assert!(conformal_quantile(&[1.0, 2.0], 0.1).is_err());
    }

    #[test]
    fn perfect_learner_gives_zero_width() {
        let data = column(&[2.0; 40]);
        let test = array![[0.0], [5.0]];
        let cfg = ConformalConfig {
            alpha: 0.1,
            target: ConformityTarget::ObservedY,
            ..Default::default()
        };
        let out = split_conformal(&data, test.view(), &MeanLearner, &cfg, None, SeedSpec::new(1, 0)).unwrap();
        assert!(out.iter().all(|iv| iv.width() == 0.0 && iv.prediction == 2.0));
    }

    #[test]
    fn conformal_widths_are_equal_and_errors() {
        let y: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
        let data = column(&y);
        let test = Array2::from_shape_fn((7, 1), |(i, _)| i as f64);
        let cfg = ConformalConfig {
            alpha: 0.1,
            target: ConformityTarget::ObservedY,
            ..Default::default()
        };
        let out = split_conformal(&data, test.view(), &MeanLearner, &cfg, None, SeedSpec::new(1, 0)).unwrap();
        assert!(out.iter().all(|iv| iv.width() == out[0].width()));

        let truth_cfg = ConformalConfig {
            target: ConformityTarget::TrueF0,
            ..cfg
        };
        assert!(split_conformal(&data, test.view(), &MeanLearner, &truth_cfg, None, SeedSpec::new(1, 0)).is_err());
        let small = column(&y[..10]);
        assert!(split_conformal(&small, test.view(), &MeanLearner, &cfg, None, SeedSpec::new(1, 0)).is_err());
    }

    #[test]
    fn resamples_of_two_points() {
        let mut seen = std::collections::BTreeSet::new();
        for s in 0..50 {
            for set in bootstrap_resamples(2, 4, SeedSpec::new(s, 0)) {
                assert_eq!(set.len(), 2);
                assert!(set.iter().all(|&i| i < 2));
                seen.insert(set);
            }
        }
        let all: std::collections::BTreeSet<Vec<usize>> = [vec![0, 0], vec![0, 1], vec![1, 1]].into();
        assert_eq!(seen, all);
    }

    #[test]
    fn swr_counts_and_constant_learner() {
        let data = column(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let test = array![[0.0]];
        let res = swr_ensemble(&data, &Fixed(3.0), 20, test.view(), SeedSpec::new(4, 0)).unwrap();
        assert!(res.counts.rows().into_iter().all(|r| r.sum() == 5));
        for m in [SwrMembership::Counts, SwrMembership::Indicator] {
            let inf = swr_infer(&res, 0.05, m, IjOptions::default()).unwrap();
            assert_eq!(inf[0].sigma_hat, 0.0);
            assert_eq!(inf[0].y_hat, 3.0);
        }
    }

    #[test]
    fn swr_variance_matches_naive_loop() {
        let y: Vec<f64> = (0..8).map(|i| (i * i) as f64 * 0.1).collect();
        let data = column(&y);
        let res = swr_ensemble(&data, &MeanLearner, 30, array![[0.0]].view(), SeedSpec::new(2, 0)).unwrap();
        let b = 30.0;
        let preds = res.predictions.column(0);
        let mean = preds.sum() / b;
        let mut total = 0.0;
        for i in 0..8 {
            let nbar = res.counts.column(i).iter().map(|&c| c as f64).sum::<f64>() / b;
            let cov = (0..30)
                .map(|j| (res.counts[[j, i]] as f64 - nbar) * (preds[j] - mean))
                .sum::<f64>()
                / b;
            total += cov * cov;
        }
        let inf = swr_infer(&res, 0.05, SwrMembership::Counts, IjOptions::default()).unwrap();
        assert!((inf[0].sigma_hat.powi(2) - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn bootstrap_of_the_mean() {
        let y: Vec<f64> = (0..40).map(|i| ((i * 7919) % 41) as f64 / 10.0).collect();
        let data = column(&y);
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let sd_plugin = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let inf = naive_bootstrap(&data, &MeanLearner, 4000, 0.05, array![[0.0]].view(), SeedSpec::new(8, 0)).unwrap();
        let expected = sd_plugin / n.sqrt();
        assert!((inf[0].sigma_hat - expected).abs() < 0.05 * expected, "{} vs {expected}", inf[0].sigma_hat);
        assert!((inf[0].y_hat - mean).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_of_fixed_learner_is_degenerate_and_deterministic() {
        let data = column(&[1.0, 5.0, 2.0]);
        let t = array![[0.0], [1.0]];
        let a = naive_bootstrap(&data, &Fixed(7.0), 10, 0.05, t.view(), SeedSpec::new(1, 0)).unwrap();
        assert!(a.iter().all(|p| p.sigma_hat == 0.0 && p.lower == 7.0 && p.upper == 7.0));
        let data = column(&[1.0, 5.0, 2.0, 8.0]);
        let a = naive_bootstrap(&data, &MeanLearner, 10, 0.05, t.view(), SeedSpec::new(1, 0)).unwrap();
        let b = naive_bootstrap(&data, &MeanLearner, 10, 0.05, t.view(), SeedSpec::new(1, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_support_is_intercept_only() {
        let data = column(&[1.0, 2.0, 6.0]);
        let fit = ols_fit(&data, &[]).unwrap();
        assert_eq!(fit.predict(array![100.0].view()), 3.0);
    }

    #[test]
    fn ols_recovers_noiseless_plane() {
        let x = Array2::from_shape_fn((12, 4), |(i, j)| ((i * 5 + j * 3) % 7) as f64 + 0.1 * j as f64);
        let y = x.column(0).mapv(|v| 2.0 * v) - x.column(2).mapv(|v| 0.5 * v) + 1.0;
        let data = Dataset::new(x, y).unwrap();
        let fit = ols_fit(&data, &[0, 2]).unwrap();
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn singular_subsample_reports_index() {
        // column 1 duplicates column 0
        let x = Array2::from_shape_fn((6, 2), |(i, _)| i as f64);
        let data = Dataset::new(x, array![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let plan = make_plan(6, 4, 3, SeedSpec::new(1, 0)).unwrap();
        let err = oracle_ols(&data, &[0, 1], &plan, array![[0.0, 0.0]].view(), 0.05, SeedSpec::new(2, 0), IjOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::Subsample { index: 0, ref source } if matches!(**source, Error::Singular)));
        assert!(oracle_ols(&data, &[0, 1, 0, 1], &plan, array![[0.0, 0.0]].view(), 0.05, SeedSpec::new(2, 0), IjOptions::default()).is_err());
    }
}
