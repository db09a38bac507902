//! Monte-Carlo checks of the estimators' behaviour.

use ndarray::{Array1, Array2};
use ulearn::experiment::{run_experiment, DataSource, ExperimentConfig, Method};
use ulearn::lasso::{lasso_fit_with, LassoLearner, LassoOptions};
use ulearn::mlp::{MlpLearner, MlpPredictor};
use ulearn::simgen::{gen_linear, gen_scenario, Design, LinearTruth, NonlinearTruth, Scenario, Simulated};
use ulearn::types::complement;
use ulearn::{ensemble_fit_predict, ensemble_mean, make_plan, BaseLearner, Dataset, EnsembleResult, Predictor, SeedSpec};

fn uniform() -> Design {
    Design::IidUniform { low: -1.0, high: 1.0 }
}

#[test]
fn lasso_prediction_is_lipschitz_in_one_response() {
    let opts = LassoOptions {
        tol: 1e-12,
        max_iter: 200_000,
        standardize: false,
    };
    let truth = LinearTruth::sparse(10, 4, 0.5, uniform()).unwrap();
    for seed in 0..5 {
        let sim: Simulated<f64> = gen_linear(&truth, 30, SeedSpec::new(seed, 0)).unwrap();
        let x_star = Array1::from_elem(10, 0.3);
        let k = 1.5;
        let base = lasso_fit_with(sim.data.features(), sim.data.responses(), k, &opts, None).unwrap();
        let p0 = base.predict(x_star.view());
        let ratios: Vec<f64> = [1e-3, 1e-2, 1e-1]
            .iter()
            .map(|&delta| {
                let mut y = sim.data.responses().to_owned();
                y[0] += delta;
                let fit = lasso_fit_with(sim.data.features(), y.view(), k, &opts, None).unwrap();
                (fit.predict(x_star.view()) - p0).abs() / delta
            })
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi.is_finite() && lo > 0.0 && hi / lo < 10.0, "seed {seed}: {ratios:?}");
    }
}

#[test]
fn lasso_prediction_error_falls_with_n() {
    let truth = LinearTruth::sparse(10, 5, 1.0, uniform()).unwrap();
    let k = truth.beta.iter().map(|b| b.abs()).sum::<f64>();
    let x_star = Array1::from_shape_fn(10, |j| 0.5 - 0.1 * j as f64);
    let f0 = truth.beta.iter().zip(x_star.iter()).map(|(b, x)| b * x).sum::<f64>() + truth.beta0;
    let mse: Vec<f64> = [100usize, 400, 1600]
        .iter()
        .map(|&n| {
            (0..60)
                .map(|rep| {
                    let sim: Simulated<f64> = gen_linear(&truth, n, SeedSpec::new(rep, n as u64)).unwrap();
                    let fit =
                        lasso_fit_with(sim.data.features(), sim.data.responses(), k, &LassoOptions::default(), None)
                            .unwrap();
                    (fit.predict(x_star.view()) - f0).powi(2)
                })
                .sum::<f64>()
                / 60.0
        })
        .collect();
    assert!(mse[0] > mse[1] && mse[1] > mse[2], "{mse:?}");
}

#[test]
fn network_seed_variance_is_below_subsample_variance() {
    let truth = NonlinearTruth::new(Scenario::S1, 20, 0.5).unwrap();
    let sim: Simulated<f64> = gen_scenario(&truth, 200, SeedSpec::new(4, 0)).unwrap();
    let x_star = Array2::from_elem((1, 20), 1.5);
    let learner = MlpLearner::two_hidden_default();
    let plan = make_plan(200, 153, 20, SeedSpec::new(5, 0)).unwrap();
    let fit_on = |set: &[usize], seed: u64| -> f64 {
        let train = sim.data.select_rows(set);
        let valid = sim.data.select_rows(&complement(200, set));
        let f: MlpPredictor<f64> = learner.fit(&train, &valid, seed).unwrap();
        f.predict_rows(x_star.view())[0]
    };
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let same_subsample: Vec<f64> = (0..20).map(|s| fit_on(plan.index_set(0), 1000 + s)).collect();
    let across: Vec<f64> = (0..20).map(|b| fit_on(plan.index_set(b), 2000 + b as u64)).collect();
    let (v_seed, v_sub) = (var(&same_subsample), var(&across));
    println!("seed variance {v_seed:.5}, across-subsample variance {v_sub:.5}");
    assert!(v_seed.is_finite());
    assert!(v_seed < v_sub, "{v_seed} vs {v_sub}");
}

#[test]
fn intervals_cover_at_nominal_rate() {
    let mut cfg = ExperimentConfig::new(
        Method::UlearnLasso,
        DataSource::Linear {
            n: 200,
            p: 5,
            s0: 5,
            noise_sd: 1.0,
            design: uniform(),
        },
    );
    cfg.seed = 77;
    cfg.replicates = 200;
    cfg.test_size = 1;
    cfg.gamma = Some(0.9);
    cfg.b = Some(2000);
    // constraint inactive: the ensemble is unbiased for f0
    cfg.lasso.k = Some(10.0);
    let res = run_experiment(&cfg).unwrap();
    println!("coverage {}", res.summary.cp);
    assert!((0.90..=0.99).contains(&res.summary.cp), "{}", res.summary.cp);
}

fn lasso_ensemble(threads: usize) -> EnsembleResult<f64> {
    let truth = LinearTruth::sparse(40, 5, 1.0, uniform()).unwrap();
    let sim: Simulated<f64> = gen_linear(&truth, 120, SeedSpec::new(1, 0)).unwrap();
    let test = Array2::from_shape_fn((7, 40), |(i, j)| ((i * 13 + j * 7) % 11) as f64 / 10.0 - 0.5);
    let plan = make_plan(120, 74, 64, SeedSpec::new(2, 0)).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        ensemble_fit_predict(&sim.data, &LassoLearner::new(2.0), &plan, test.view(), SeedSpec::new(3, 0)).unwrap()
    })
}

#[test]
fn ensemble_is_bitwise_reproducible_across_thread_counts() {
    let a = lasso_ensemble(1);
    let b = lasso_ensemble(1);
    let c = lasso_ensemble(4);
    assert_eq!(a.predictions(), b.predictions());
    assert_eq!(a.predictions(), c.predictions());
}

#[test]
fn ensemble_mean_matches_compensated_sum() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
    let col: Vec<f64> = (0..1000).map(|_| rng.random_range(-1e3..1e3)).collect();
    // Kahan–Babuška summation
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in &col {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    let oracle = (sum + comp) / 1000.0;
    let sets: Vec<Vec<usize>> = (0..1000).map(|b| vec![b % 3]).collect();
    let plan = ulearn::SubsamplePlan::new(3, 1, sets).unwrap();
    let res = EnsembleResult::new(Array2::from_shape_vec((1000, 1), col).unwrap(), plan).unwrap();
    assert!((ensemble_mean(&res, 0) - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
}

#[test]
fn dataset_rejects_non_finite_values() {
    let x = Array2::from_elem((2, 1), f64::NAN);
    assert!(Dataset::new(x, Array1::zeros(2)).is_err());
}
