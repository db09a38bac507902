//! Replicated simulation studies and real-data runs: configuration, the
//! per-replicate pipeline for each method, aggregation and output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::baselines::{
    naive_bootstrap, oracle_ols, split_conformal, swr_ensemble, swr_infer, ConformalConfig, ConformityTarget,
    SwrMembership,
};
use crate::engine::{ensemble_fit_predict, infer_with, make_plan, oob_predict, BaseLearner, IjOptions};
use crate::error::{Error, Result};
use crate::io::{load_csv, split, write_json, write_results, CsvSchema, SplitSize};
use crate::lasso::{default_k_grid, select_k_cv, CvLassoLearner, LassoLearner, LassoOptions};
use crate::metrics::{emp_sd_per_point, replicate_metrics, summarize, MethodOutput, ReplicateMetrics, ReplicateSummary};
use crate::mlp::{MlpHyper, MlpLearner};
use crate::simgen::{simulate, simulate_features, Design, LinearTruth, NonlinearTruth, Scenario, Truth};
use crate::types::{Dataset, PredictionInference, SeedSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    UlearnLasso,
    UlearnMlp,
    Oracle,
    Swr,
    NaiveBootstrap,
    Conformal,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::UlearnLasso => "ulearn_lasso",
            Method::UlearnMlp => "ulearn_mlp",
            Method::Oracle => "oracle",
            Method::Swr => "swr",
            Method::NaiveBootstrap => "naive_bootstrap",
            Method::Conformal => "conformal",
        }
    }
}

/// Base learner for the baseline methods.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    #[default]
    Lasso,
    Mlp,
}

fn default_uniform() -> Design {
    Design::IidUniform { low: -1.0, high: 1.0 }
}
fn default_one() -> f64 {
    1.0
}
fn default_half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Sparse linear truth; the signal pattern is deterministic, so the same
    /// coefficients are used in every replicate.
    Linear {
        n: usize,
        p: usize,
        s0: usize,
        #[serde(default = "default_one")]
        noise_sd: f64,
        #[serde(default = "default_uniform")]
        design: Design,
    },
    Scenario {
        scenario: Scenario,
        n: usize,
        p: usize,
        #[serde(default = "default_half")]
        noise_sd: f64,
    },
    /// Real data: observed responses stand in for the truth.
    Csv {
        path: PathBuf,
        schema: CsvSchema,
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
    },
}

fn default_train_fraction() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoSettings {
    /// Fixed constraint; chosen by cross-validation on each training set when absent.
    pub k: Option<f64>,
    pub cv_folds: usize,
    pub grid_size: usize,
    pub standardize: bool,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LassoSettings {
    fn default() -> Self {
        let o = LassoOptions::default();
        Self {
            k: None,
            cv_folds: 5,
            grid_size: 20,
            standardize: o.standardize,
            tol: o.tol,
            max_iter: o.max_iter,
        }
    }
}

impl LassoSettings {
    fn options(&self) -> LassoOptions {
        LassoOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            standardize: self.standardize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSettings {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for MlpSettings {
    fn default() -> Self {
        let h = MlpHyper::default();
        Self {
            hidden: vec![128, 64],
            dropout: 0.5,
            learning_rate: h.learning_rate,
            batch_size: h.batch_size,
            max_epochs: h.max_epochs,
            patience: h.patience,
        }
    }
}

impl MlpSettings {
    fn learner(&self) -> MlpLearner {
        MlpLearner::new(
            self.hidden.clone(),
            self.dropout,
            MlpHyper {
                learning_rate: self.learning_rate,
                batch_size: self.batch_size,
                max_epochs: self.max_epochs,
                patience: self.patience,
                init_scale: 1.0,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConformalSettings {
    pub split_fraction: f64,
    /// Defaults to the true regression function for simulated data and to the
    /// observed response for CSV data.
    pub target: Option<ConformityTarget>,
}

impl Default for ConformalSettings {
    fn default() -> Self {
        Self {
            split_fraction: 0.5,
            target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    pub data: DataSource,
    #[serde(default)]
    pub seed: u64,
    /// Threads for subsample fits; `None` uses all cores. Never affects results.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Size `ℓ` of the fixed test set (simulations only).
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    pub gamma: Option<f64>,
    pub r: Option<usize>,
    #[serde(rename = "B")]
    pub b: Option<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Out-of-bag inference on the training rows instead of a test set.
    #[serde(default)]
    pub oob: bool,
    #[serde(default)]
    pub bias_correction: bool,
    #[serde(default)]
    pub base_learner: BaseKind,
    #[serde(default)]
    pub swr_membership: SwrMembership,
    #[serde(default)]
    pub lasso: LassoSettings,
    #[serde(default)]
    pub mlp: MlpSettings,
    #[serde(default)]
    pub conformal: ConformalSettings,
}

fn default_replicates() -> usize {
    1
}
fn default_test_size() -> usize {
    100
}
fn default_alpha() -> f64 {
    0.05
}

impl ExperimentConfig {
    pub fn new(method: Method, data: DataSource) -> Self {
        Self {
            method,
            data,
            seed: 0,
            workers: None,
            replicates: default_replicates(),
            test_size: default_test_size(),
            gamma: Some(0.9),
            r: None,
            b: None,
            alpha: default_alpha(),
            oob: false,
            bias_correction: false,
            base_learner: BaseKind::default(),
            swr_membership: SwrMembership::default(),
            lasso: LassoSettings::default(),
            mlp: MlpSettings::default(),
            conformal: ConformalSettings::default(),
        }
    }

    /// `B` as configured, else the default for the method's learner.
    pub fn resolved_b(&self) -> usize {
        self.b.unwrap_or(match self.method {
            Method::UlearnMlp => crate::engine::UlearnConfig::DEFAULT_B_MLP,
            _ => crate::engine::UlearnConfig::DEFAULT_B_LASSO,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.replicates == 0 {
            return bad("replicates must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        let uses_subsamples = matches!(self.method, Method::UlearnLasso | Method::UlearnMlp | Method::Oracle);
        if uses_subsamples {
            match (self.gamma, self.r) {
                (Some(_), Some(_)) => return bad("set exactly one of gamma and r".into()),
                (None, None) => return bad("one of gamma and r is required".into()),
                (Some(g), None) if !(g > 0.0 && g <= 1.0) => return bad(format!("gamma {g} outside (0, 1]")),
                _ => {}
            }
        }
        if self.resolved_b() < 2 && self.method != Method::Conformal {
            return bad("B must be at least 2".into());
        }
        if self.oob && !matches!(self.method, Method::UlearnLasso | Method::UlearnMlp) {
            return bad("out-of-bag mode applies to the U-learning methods only".into());
        }
        match &self.data {
            DataSource::Linear { n, s0, p, .. } => {
                if *n < 2 || s0 > p {
                    return bad(format!("invalid linear generator n={n}, p={p}, s0={s0}"));
                }
            }
            DataSource::Scenario { n, .. } if *n < 2 => return bad("n must be at least 2".into()),
            DataSource::Scenario { .. } => {}
            DataSource::Csv { .. } => {
                if self.method == Method::Oracle {
                    return bad("the oracle needs a generator with known support".into());
                }
            }
        }
        if matches!(self.data, DataSource::Scenario { .. }) && self.method == Method::Oracle {
            return bad("the oracle needs a linear generator".into());
        }
        if self.test_size == 0 && !self.oob {
            return bad("test_size must be positive".into());
        }
        Ok(())
    }
}

/// Data for one replicate: training set, test features and the target that
/// intervals are scored against.
struct ReplicateData {
    train: Dataset<f64>,
    train_truth: Array1<f64>,
    test: Array2<f64>,
    test_truth: Array1<f64>,
}

enum Source {
    Sim {
        gen: Generator,
        n: usize,
        test: Array2<f64>,
        test_truth: Array1<f64>,
    },
    Real {
        train: Dataset<f64>,
        test: Dataset<f64>,
    },
}

enum Generator {
    Linear(LinearTruth),
    Nonlinear(NonlinearTruth),
}

impl Generator {
    fn simulate(&self, n: usize, seed: SeedSpec) -> Result<(Dataset<f64>, Array1<f64>)> {
        let s = match self {
            Generator::Linear(t) => simulate::<f64, _>(t, n, seed)?,
            Generator::Nonlinear(t) => simulate::<f64, _>(t, n, seed)?,
        };
        Ok((s.data, s.truth))
    }

    fn features(&self, n: usize, seed: SeedSpec) -> Result<(Array2<f64>, Array1<f64>)> {
        match self {
            Generator::Linear(t) => simulate_features(t, n, seed),
            Generator::Nonlinear(t) => simulate_features(t, n, seed),
        }
    }

    fn support(&self) -> Option<Vec<usize>> {
        match self {
            Generator::Linear(t) => t.active_set(),
            Generator::Nonlinear(_) => None,
        }
    }
}

impl Source {
    fn build(cfg: &ExperimentConfig, seed: SeedSpec) -> Result<Self> {
        let (gen, n) = match &cfg.data {
            DataSource::Linear {
                n,
                p,
                s0,
                noise_sd,
                design,
            } => (Generator::Linear(LinearTruth::sparse(*p, *s0, *noise_sd, *design)?), *n),
            DataSource::Scenario {
                scenario,
                n,
                p,
                noise_sd,
            } => (Generator::Nonlinear(NonlinearTruth::new(*scenario, *p, *noise_sd)?), *n),
            DataSource::Csv {
                path,
                schema,
                train_fraction,
            } => {
                let data = load_csv(path, schema)?;
                let parts = split(&data, SplitSize::TrainFraction(*train_fraction), seed)?;
                return Ok(Source::Real {
                    train: parts.train,
                    test: parts.test,
                });
            }
        };
        let (test, test_truth) = gen.features(cfg.test_size.max(1), seed)?;
        Ok(Source::Sim {
            gen,
            n,
            test,
            test_truth,
        })
    }

    fn replicate(&self, seed: SeedSpec) -> Result<ReplicateData> {
        match self {
            Source::Sim {
                gen,
                n,
                test,
                test_truth,
            } => {
                let (train, train_truth) = gen.simulate(*n, seed)?;
                Ok(ReplicateData {
                    train,
                    train_truth,
                    test: test.clone(),
                    test_truth: test_truth.clone(),
                })
            }
            Source::Real { train, test } => Ok(ReplicateData {
                train: train.clone(),
                train_truth: train.responses().to_owned(),
                test: test.features().to_owned(),
                test_truth: test.responses().to_owned(),
            }),
        }
    }

    fn is_simulated(&self) -> bool {
        matches!(self, Source::Sim { .. })
    }

    fn support(&self) -> Option<Vec<usize>> {
        match self {
            Source::Sim { gen, .. } => gen.support(),
            Source::Real { .. } => None,
        }
    }
}

fn inference_output(inf: &[PredictionInference<f64>]) -> Result<MethodOutput> {
    MethodOutput::new(
        inf.iter().map(|p| p.y_hat).collect(),
        Some(inf.iter().map(|p| p.sigma_hat).collect()),
        inf.iter().map(|p| (p.lower, p.upper)).collect(),
    )
}

fn resolve_r(cfg: &ExperimentConfig, n: usize) -> Result<usize> {
    match (cfg.gamma, cfg.r) {
        (_, Some(r)) => crate::engine::SubsampleSize::Explicit(r).resolve(n),
        (Some(g), None) => crate::engine::SubsampleSize::Gamma(g).resolve(n),
        (None, None) => Err(Error::InvalidConfig("one of gamma and r is required".into())),
    }
}

fn ulearn_output<L: BaseLearner<f64>>(
    cfg: &ExperimentConfig,
    rep: &ReplicateData,
    learner: &L,
    seed: SeedSpec,
) -> Result<MethodOutput> {
    let n = rep.train.n();
    let plan = make_plan(n, resolve_r(cfg, n)?, cfg.resolved_b(), seed.child(1, 0))?;
    let opts = IjOptions {
        bias_correction: cfg.bias_correction,
    };
    let inf = if cfg.oob {
        oob_predict(&rep.train, learner, &plan, seed.child(2, 0), cfg.alpha, opts)?
    } else {
        let result = ensemble_fit_predict(&rep.train, learner, &plan, rep.test.view(), seed.child(2, 0))?;
        infer_with(&result, cfg.alpha, opts)?
    };
    inference_output(&inf)
}

fn lasso_k(cfg: &ExperimentConfig, train: &Dataset<f64>, seed: SeedSpec) -> Result<f64> {
    match cfg.lasso.k {
        Some(k) => Ok(k),
        None => {
            let grid = default_k_grid(train, cfg.lasso.grid_size)?;
            select_k_cv(train, cfg.lasso.cv_folds, &grid, seed, &cfg.lasso.options())
        }
    }
}

fn run_method(cfg: &ExperimentConfig, source: &Source, rep: &ReplicateData, seed: SeedSpec) -> Result<MethodOutput> {
    let test = rep.test.view();
    match cfg.method {
        Method::UlearnLasso => {
            let k = lasso_k(cfg, &rep.train, seed.child(3, 0))?;
            let learner = LassoLearner {
                k,
                options: cfg.lasso.options(),
            };
            ulearn_output(cfg, rep, &learner, seed)
        }
        Method::UlearnMlp => ulearn_output(cfg, rep, &cfg.mlp.learner(), seed),
        Method::Oracle => {
            let support = source
                .support()
                .ok_or_else(|| Error::InvalidConfig("the oracle needs a linear generator".into()))?;
            let n = rep.train.n();
            let plan = make_plan(n, resolve_r(cfg, n)?, cfg.resolved_b(), seed.child(1, 0))?;
            let opts = IjOptions {
                bias_correction: cfg.bias_correction,
            };
            let inf = oracle_ols(&rep.train, &support, &plan, test, cfg.alpha, seed.child(2, 0), opts)?;
            inference_output(&inf)
        }
        Method::Swr => {
            let opts = IjOptions {
                bias_correction: cfg.bias_correction,
            };
            let res = match cfg.base_learner {
                BaseKind::Lasso => {
                    let learner = LassoLearner {
                        k: lasso_k(cfg, &rep.train, seed.child(3, 0))?,
                        options: cfg.lasso.options(),
                    };
                    swr_ensemble(&rep.train, &learner, cfg.resolved_b(), test, seed)?
                }
                BaseKind::Mlp => swr_ensemble(&rep.train, &cfg.mlp.learner(), cfg.resolved_b(), test, seed)?,
            };
            inference_output(&swr_infer(&res, cfg.alpha, cfg.swr_membership, opts)?)
        }
        Method::NaiveBootstrap => {
            let inf = match cfg.base_learner {
                BaseKind::Lasso => {
                    let learner = LassoLearner {
                        k: lasso_k(cfg, &rep.train, seed.child(3, 0))?,
                        options: cfg.lasso.options(),
                    };
                    naive_bootstrap(&rep.train, &learner, cfg.resolved_b(), cfg.alpha, test, seed)?
                }
                BaseKind::Mlp => naive_bootstrap(&rep.train, &cfg.mlp.learner(), cfg.resolved_b(), cfg.alpha, test, seed)?,
            };
            inference_output(&inf)
        }
        Method::Conformal => {
            let target = cfg.conformal.target.unwrap_or(if source.is_simulated() {
                ConformityTarget::TrueF0
            } else {
                ConformityTarget::ObservedY
            });
            let ccfg = ConformalConfig {
                alpha: cfg.alpha,
                split_fraction: cfg.conformal.split_fraction,
                target,
            };
            let truth = Some(rep.train_truth.view());
            let iv = match cfg.base_learner {
                BaseKind::Lasso => {
                    let learner = CvLassoLearner {
                        folds: cfg.lasso.cv_folds,
                        grid_size: cfg.lasso.grid_size,
                        options: cfg.lasso.options(),
                    };
                    match cfg.lasso.k {
                        Some(k) => split_conformal(
                            &rep.train,
                            test,
                            &LassoLearner {
                                k,
                                options: cfg.lasso.options(),
                            },
                            &ccfg,
                            truth,
                            seed,
                        )?,
                        None => split_conformal(&rep.train, test, &learner, &ccfg, truth, seed)?,
                    }
                }
                BaseKind::Mlp => split_conformal(&rep.train, test, &cfg.mlp.learner(), &ccfg, truth, seed)?,
            };
            MethodOutput::new(
                iv.iter().map(|i| i.prediction).collect(),
                None,
                iv.iter().map(|i| (i.lower, i.upper)).collect(),
            )
        }
    }
}

/// Everything produced by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub method: Method,
    /// Resolved subsample size, for the subsampling methods.
    pub r: Option<usize>,
    pub b: usize,
    pub outputs: Vec<MethodOutput>,
    /// Scoring target per replicate (equal across replicates for simulations).
    pub truths: Vec<Vec<f64>>,
    pub metrics: Vec<ReplicateMetrics>,
    pub summary: ReplicateSummary,
    pub runtimes: Vec<f64>,
}

impl ExperimentResult {
    /// `R × ℓ` point predictions.
    pub fn prediction_matrix(&self) -> Array2<f64> {
        let l = self.outputs.first().map_or(0, MethodOutput::len);
        Array2::from_shape_fn((self.outputs.len(), l), |(r, t)| self.outputs[r].y_hat[t])
    }
}

/// Runs every replicate on a pool of `cfg.workers` threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_replicates(cfg))
}

fn run_replicates(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let master = SeedSpec::new(cfg.seed, 0);
    let source = Source::build(cfg, master.child(10, 0))?;
    let mut outputs = Vec::with_capacity(cfg.replicates);
    let mut truths = Vec::with_capacity(cfg.replicates);
    let mut metrics = Vec::with_capacity(cfg.replicates);
    let mut runtimes = Vec::with_capacity(cfg.replicates);
    let mut r_used = None;
    for rep_index in 0..cfg.replicates {
        let start = Instant::now();
        let annotate = |e: Error| Error::Replicate {
            index: rep_index,
            source: Box::new(e),
        };
        let rep = source.replicate(master.child(20, rep_index as u64)).map_err(annotate)?;
        if matches!(cfg.method, Method::UlearnLasso | Method::UlearnMlp | Method::Oracle) {
            r_used = Some(resolve_r(cfg, rep.train.n()).map_err(annotate)?);
        }
        let out = run_method(cfg, &source, &rep, master.child(30, rep_index as u64)).map_err(annotate)?;
        let truth = if cfg.oob {
            rep.train_truth.to_vec()
        } else {
            rep.test_truth.to_vec()
        };
        metrics.push(replicate_metrics(&truth, &out).map_err(annotate)?);
        outputs.push(out);
        truths.push(truth);
        runtimes.push(start.elapsed().as_secs_f64());
    }
    let l = outputs[0].len();
    if outputs.iter().any(|o| o.len() != l) {
        return Err(Error::Shape("replicates produced different numbers of predictions".into()));
    }
    let preds = Array2::from_shape_fn((outputs.len(), l), |(r, t)| outputs[r].y_hat[t]);
    let summary = summarize(&metrics, preds.view(), &runtimes)?;
    Ok(ExperimentResult {
        method: cfg.method,
        r: r_used,
        b: cfg.resolved_b(),
        outputs,
        truths,
        metrics,
        summary,
        runtimes,
    })
}

/// Result-file view of the summary: everything except wall-clock time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub method: String,
    pub replicates: usize,
    pub r: Option<usize>,
    #[serde(rename = "B")]
    pub b: usize,
    pub bias: f64,
    pub mae: f64,
    pub emp_sd: Option<f64>,
    pub mean_se: Option<f64>,
    pub cp: f64,
    pub ail: f64,
}

impl From<&ExperimentResult> for SummaryRecord {
    fn from(res: &ExperimentResult) -> Self {
        let s = &res.summary;
        Self {
            method: res.method.name().to_string(),
            replicates: res.outputs.len(),
            r: res.r,
            b: res.b,
            bias: s.bias,
            mae: s.mae,
            emp_sd: s.emp_sd.is_finite().then_some(s.emp_sd),
            mean_se: s.mean_se,
            cp: s.cp,
            ail: s.ail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    CiPerTestPoint,
    SeVsEmpsd,
}

/// Long-format plot table `test_id,x,series,value`.
///
/// `CiPerTestPoint`: x is the truth at the point; series `lower`, `y_hat`,
/// `upper` are averaged over replicates; rows are ordered by truth.
/// `SeVsEmpsd`: x is the across-replicate SD of the prediction; the single
/// series `se` is the replicate-averaged standard error.
pub fn emit_plot_data(res: &ExperimentResult, kind: PlotKind, path: impl AsRef<Path>) -> Result<()> {
    let reps = res.outputs.len();
    if reps == 0 {
        return Err(Error::InvalidData("no results to plot".into()));
    }
    let l = res.outputs[0].len();
    let avg = |f: &dyn Fn(&MethodOutput, usize) -> f64, t: usize| {
        res.outputs.iter().map(|o| f(o, t)).sum::<f64>() / reps as f64
    };
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["test_id", "x", "series", "value"])?;
    match kind {
        PlotKind::CiPerTestPoint => {
            let truth = &res.truths[0];
            let mut order: Vec<usize> = (0..l).collect();
            order.sort_by(|&a, &b| truth[a].total_cmp(&truth[b]).then(a.cmp(&b)));
            for t in order {
                let series = [
                    ("lower", avg(&|o, t| o.intervals[t].0, t)),
                    ("y_hat", avg(&|o, t| o.y_hat[t], t)),
                    ("upper", avg(&|o, t| o.intervals[t].1, t)),
                ];
                for (name, v) in series {
                    w.write_record([t.to_string(), truth[t].to_string(), name.to_string(), v.to_string()])?;
                }
            }
        }
        PlotKind::SeVsEmpsd => {
            let emp = emp_sd_per_point(res.prediction_matrix().view())?;
            for (t, e) in emp.iter().enumerate() {
                let se = if res.outputs.iter().all(|o| o.se.is_some()) {
                    avg(&|o, t| o.se.as_ref().expect("checked")[t], t).to_string()
                } else {
                    String::new()
                };
                w.write_record([t.to_string(), e.to_string(), "se".to_string(), se])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the output directory:
/// `config.json`, `replicates/rep_NNNN.csv`, `summary.json`, `summary.csv`,
/// plot tables, and `timing.json` (the only file that varies between runs).
pub fn write_outputs(cfg: &ExperimentConfig, res: &ExperimentResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir.join("replicates"))?;
    write_json(dir.join("config.json"), cfg)?;
    for (i, (out, truth)) in res.outputs.iter().zip(&res.truths).enumerate() {
        write_results(dir.join("replicates").join(format!("rep_{i:04}.csv")), out, Some(truth))?;
    }
    let record = SummaryRecord::from(res);
    write_json(dir.join("summary.json"), &record)?;
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.serialize(&record)?;
    w.flush()?;
    emit_plot_data(res, PlotKind::CiPerTestPoint, dir.join("plot_ci_per_test_point.csv"))?;
    if res.outputs.len() >= 2 {
        emit_plot_data(res, PlotKind::SeVsEmpsd, dir.join("plot_se_vs_empsd.csv"))?;
    }
    #[derive(Serialize)]
    struct Timing<'a> {
        mean_runtime_seconds: f64,
        per_replicate_seconds: &'a [f64],
    }
    write_json(
        dir.join("timing.json"),
        &Timing {
            mean_runtime_seconds: res.summary.runtime_seconds,
            per_replicate_seconds: &res.runtimes,
        },
    )?;
    Ok(())
}
