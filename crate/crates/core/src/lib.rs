//! U-learning: ensemble prediction over many size-`r` subsamples drawn
//! without replacement, with infinitesimal-jackknife standard errors and
//! normal confidence intervals for the regression function at test points.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`, which is what the experiment runner uses.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod lasso;
pub mod mlp;
pub mod baselines;
pub mod error;
pub mod experiment;
pub mod io;
pub mod metrics;
pub mod normal;
pub mod scalar;
pub mod simgen;
pub mod types;

pub use engine::{
    compute_r, ensemble_fit_predict, ensemble_mean, infer, infer_with, ij_variance, ij_variance_with,
    make_plan, oob_predict, ulearn, BaseLearner, IjOptions, Predictor, SubsampleSize, UlearnConfig,
};
pub use error::{Error, Result};
pub use normal::normal_quantile;
pub use scalar::Real;
pub use types::{derive_seed, Dataset, EnsembleResult, PredictionInference, SeedSpec, SubsamplePlan};

pub type Dataset64 = Dataset<f64>;
pub type EnsembleResult64 = EnsembleResult<f64>;
pub type PredictionInference64 = PredictionInference<f64>;
pub type LassoFit64 = lasso::LassoFit<f64>;
pub type LassoLearner64 = lasso::LassoLearner<f64>;
pub type MlpFit64 = mlp::MlpFit<f64>;
pub type MlpPredictor64 = mlp::MlpPredictor<f64>;
pub type Simulated64 = simgen::Simulated<f64>;
pub type ConformalInterval64 = baselines::ConformalInterval<f64>;
