//! Synthetic regression problems with a known regression function.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::types::{Dataset, SeedSpec};

/// Feature distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Design {
    /// i.i.d. `Uniform(low, high)` coordinates.
    IidUniform { low: f64, high: f64 },
    /// `N(0, Σ)` with `Σ_jk = rho^|j-k|`.
    GaussianAr1 { rho: f64 },
}

impl Design {
    pub fn sample(&self, n: usize, p: usize, rng: &mut impl Rng) -> Result<Array2<f64>> {
        match *self {
            Design::IidUniform { low, high } => {
                if !(low < high) {
                    return Err(Error::InvalidConfig(format!("empty uniform range [{low}, {high}]")));
                }
                let u = Uniform::new(low, high).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                Ok(Array2::from_shape_fn((n, p), |_| u.sample(rng)))
            }
            Design::GaussianAr1 { rho } => {
                let chol = ar1_cholesky(p, rho)?;
                let mut out = Array2::<f64>::zeros((n, p));
                let mut z = vec![0.0; p];
                for mut row in out.rows_mut() {
                    z.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
                    for j in 0..p {
                        let mut acc = 0.0;
                        for (k, &zk) in z.iter().enumerate().take(j + 1) {
                            acc += chol[(j, k)] * zk;
                        }
                        row[j] = acc;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// `Σ_jk = rho^|j-k|`
pub fn ar1_covariance(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |j, k| rho.powi((j as i32 - k as i32).abs()))
}

/// Lower Cholesky factor of the AR(1) covariance.
pub fn ar1_cholesky(p: usize, rho: f64) -> Result<DMatrix<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidConfig(format!("AR(1) parameter {rho} must lie in (-1, 1)")));
    }
    let chol = ar1_covariance(p, rho).cholesky().ok_or(Error::Singular)?;
    Ok(chol.l())
}

/// A data-generating process: features, noiseless regression function and
/// Gaussian noise level.
pub trait Truth {
    fn p(&self) -> usize;
    fn noise_sd(&self) -> f64;
    fn sample_features(&self, n: usize, rng: &mut impl Rng) -> Result<Array2<f64>>;
    fn f0(&self, x: ArrayView1<'_, f64>) -> f64;

    /// Support of the regression function when it is linear.
    fn active_set(&self) -> Option<Vec<usize>> {
        None
    }
}

/// A generated training set plus the noiseless truth at each row.
#[derive(Debug, Clone)]
pub struct Simulated<T: Real> {
    pub data: Dataset<T>,
    pub truth: Array1<T>,
}

/// Draws `n` rows: features from the design, `y = f0(x) + N(0, σ²)`.
pub fn simulate<T: Real, G: Truth>(truth: &G, n: usize, seed: SeedSpec) -> Result<Simulated<T>> {
    let mut rng = seed.rng(0);
    let x = truth.sample_features(n, &mut rng)?;
    let f: Array1<f64> = x.rows().into_iter().map(|row| truth.f0(row)).collect();
    let sd = truth.noise_sd();
    let mut noise_rng = seed.rng(1);
    let y: Array1<f64> = f
        .iter()
        .map(|&fi| {
            let e: f64 = StandardNormal.sample(&mut noise_rng);
            fi + sd * e
        })
        .collect();
    let data = Dataset::new(x.mapv(T::lit), y.mapv(T::lit))?;
    Ok(Simulated {
        data,
        truth: f.mapv(T::lit),
    })
}

/// Features only, with the truth at each row (for fixed test sets).
pub fn simulate_features<T: Real, G: Truth>(truth: &G, n: usize, seed: SeedSpec) -> Result<(Array2<T>, Array1<T>)> {
    let mut rng = seed.rng(0);
    let x = truth.sample_features(n, &mut rng)?;
    let f: Array1<f64> = x.rows().into_iter().map(|row| truth.f0(row)).collect();
    Ok((x.mapv(T::lit), f.mapv(T::lit)))
}

/// Sparse linear model `f0(x) = β₀ + xβ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTruth {
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub noise_sd: f64,
    pub design: Design,
}

impl LinearTruth {
    /// `s0` nonzero slopes in the leading coordinates, equally spaced on
    /// `[-1, 1.5]` with zero excluded.
    pub fn sparse(p: usize, s0: usize, noise_sd: f64, design: Design) -> Result<Self> {
        if s0 > p {
            return Err(Error::InvalidConfig(format!("s0={s0} exceeds p={p}")));
        }
        let mut beta = vec![0.0; p];
        let values = signal_values(s0);
        beta[..s0].copy_from_slice(&values);
        Ok(Self {
            beta0: 0.0,
            beta,
            noise_sd,
            design,
        })
    }

    pub fn nonzero_count(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }
}

fn signal_values(s0: usize) -> Vec<f64> {
    match s0 {
        0 => Vec::new(),
        1 => vec![-1.0],
        _ => {
            let step = 2.5 / (s0 - 1) as f64;
            (0..s0)
                .map(|i| {
                    let v = -1.0 + step * i as f64;
                    // a grid point on zero moves halfway toward its right neighbour
                    if v.abs() < 1e-12 {
                        step / 2.0
                    } else {
                        v
                    }
                })
                .collect()
        }
    }
}

impl Truth for LinearTruth {
    fn p(&self) -> usize {
        self.beta.len()
    }

    fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    fn sample_features(&self, n: usize, rng: &mut impl Rng) -> Result<Array2<f64>> {
        self.design.sample(n, self.p(), rng)
    }

    fn f0(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.beta0
            + x.iter()
                .zip(&self.beta)
                .filter(|(_, b)| **b != 0.0)
                .map(|(xj, b)| xj * b)
                .sum::<f64>()
    }

    fn active_set(&self) -> Option<Vec<usize>> {
        Some(
            self.beta
                .iter()
                .enumerate()
                .filter(|(_, b)| **b != 0.0)
                .map(|(j, _)| j)
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// `-sin(πx₁) + 2(x₂-0.5)² + 1.5x₃x₄ - 5/x₅`, `x_j ~ Uniform(1, 2)`
    S1,
    /// `0.5x₁² - 0.3x₅x₁₀ + exp(0.2x₁₅) + cos(x₂₀)`, `x ~ N(0, Σ)`, `Σ_jk = 0.5^|j-k|`
    S2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearTruth {
    pub scenario: Scenario,
    pub p: usize,
    pub rho: f64,
    pub noise_sd: f64,
}

impl NonlinearTruth {
    pub fn new(scenario: Scenario, p: usize, noise_sd: f64) -> Result<Self> {
        let min_p = match scenario {
            Scenario::S1 => 5,
            Scenario::S2 => 20,
        };
        if p < min_p {
            return Err(Error::InvalidConfig(format!("{scenario:?} needs p >= {min_p}, got {p}")));
        }
        Ok(Self {
            scenario,
            p,
            rho: 0.5,
            noise_sd,
        })
    }

    fn design(&self) -> Design {
        match self.scenario {
            Scenario::S1 => Design::IidUniform { low: 1.0, high: 2.0 },
            Scenario::S2 => Design::GaussianAr1 { rho: self.rho },
        }
    }
}

impl Truth for NonlinearTruth {
    fn p(&self) -> usize {
        self.p
    }

    fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    fn sample_features(&self, n: usize, rng: &mut impl Rng) -> Result<Array2<f64>> {
        self.design().sample(n, self.p, rng)
    }

    fn f0(&self, x: ArrayView1<'_, f64>) -> f64 {
        match self.scenario {
            Scenario::S1 => {
                -(std::f64::consts::PI * x[0]).sin() + 2.0 * (x[1] - 0.5).powi(2) + 1.5 * x[2] * x[3]
                    - 5.0 / x[4]
            }
            Scenario::S2 => {
                0.5 * x[0] * x[0] - 0.3 * x[4] * x[9] + (0.2 * x[14]).exp() + x[19].cos()
            }
        }
    }
}

/// Linear generator: training set plus truth.
pub fn gen_linear<T: Real>(truth: &LinearTruth, n: usize, seed: SeedSpec) -> Result<Simulated<T>> {
    simulate(truth, n, seed)
}

/// Nonlinear scenario generator: training set plus truth.
pub fn gen_scenario<T: Real>(truth: &NonlinearTruth, n: usize, seed: SeedSpec) -> Result<Simulated<T>> {
    simulate(truth, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    fn uniform() -> Design {
        Design::IidUniform { low: -1.0, high: 1.0 }
    }

    #[test]
    fn noiseless_responses_equal_truth() {
        let truth = LinearTruth::sparse(10, 3, 0.0, uniform()).unwrap();
        let sim: Simulated<f64> = gen_linear(&truth, 50, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(sim.data.responses(), sim.truth.view());
    }

    #[test]
    fn noise_mean_within_clt_band() {
        let truth = LinearTruth::sparse(3, 2, 1.0, uniform()).unwrap();
        let n = 100_000;
        let sim: Simulated<f64> = gen_linear(&truth, n, SeedSpec::new(2, 0)).unwrap();
        let mean = (&sim.data.responses() - &sim.truth).mean().unwrap();
        assert!(mean.abs() <= 3.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn signal_pattern() {
        let truth = LinearTruth::sparse(3000, 25, 1.0, uniform()).unwrap();
        assert_eq!(truth.nonzero_count(), 25);
        assert!(truth.beta[..25].iter().all(|b| (-1.0..=1.5).contains(b)));
        assert_eq!(truth.beta[0], -1.0);
        assert_eq!(truth.beta[24], 1.5);
        // an odd count whose spacing would hit zero: 2.5/(k-1) divides 1 when k = 11
        let t = LinearTruth::sparse(20, 11, 1.0, uniform()).unwrap();
        assert_eq!(t.nonzero_count(), 11);
        assert_eq!(t.active_set().unwrap(), (0..11).collect::<Vec<_>>());
    }

    #[test]
    fn scenario_one_plug_in() {
        let truth = NonlinearTruth::new(Scenario::S1, 5, 0.5).unwrap();
        let x = Array1::from_elem(5, 1.5);
        // -sin(1.5π) + 2·1² + 1.5·2.25 − 5/1.5
        let expected = 1.0 + 2.0 + 3.375 - 5.0 / 1.5;
        assert!((truth.f0(x.view()) - expected).abs() < 1e-12);
        assert!((truth.f0(x.view()) - 3.041_666_666_666_667).abs() < 1e-12);
    }

    #[test]
    fn scenario_two_plug_in() {
        let truth = NonlinearTruth::new(Scenario::S2, 20, 0.5).unwrap();
        let x = Array1::from_shape_fn(20, |j| 0.1 * (j + 1) as f64);
        let expected = 0.5 * 0.01 - 0.3 * 0.5 * 1.0 + (0.2 * 1.5f64).exp() + 2.0f64.cos();
        assert!((truth.f0(x.view()) - expected).abs() < 1e-12);
    }

    #[test]
    fn scenario_one_support() {
        let truth = NonlinearTruth::new(Scenario::S1, 8, 0.5).unwrap();
        let sim: Simulated<f64> = gen_scenario(&truth, 500, SeedSpec::new(3, 0)).unwrap();
        assert!(sim.data.features().iter().all(|&v| v > 1.0 && v < 2.0));
    }

    #[test]
    fn scenario_two_lag_one_correlation() {
        let truth = NonlinearTruth::new(Scenario::S2, 20, 0.5).unwrap();
        let (x, _) = simulate_features::<f64, _>(&truth, 100_000, SeedSpec::new(4, 0)).unwrap();
        let a = x.column(3);
        let b = x.column(4);
        let (ma, mb) = (a.mean().unwrap(), b.mean().unwrap());
        let cov = a.iter().zip(b).map(|(u, v)| (u - ma) * (v - mb)).sum::<f64>() / a.len() as f64;
        let va = a.iter().map(|u| (u - ma).powi(2)).sum::<f64>() / a.len() as f64;
        let vb = b.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / b.len() as f64;
        let corr = cov / (va * vb).sqrt();
        assert!((corr - 0.5).abs() < 0.02, "{corr}");
    }

    #[test]
    fn cholesky_reconstructs_covariance() {
        for p in [1, 5, 50, 200] {
            let l = ar1_cholesky(p, 0.5).unwrap();
            let diff = &l * l.transpose() - ar1_covariance(p, 0.5);
            assert!(diff.amax() < 1e-10, "p={p}");
        }
    }

    #[test]
    fn scenario_dimension_checks() {
        assert!(NonlinearTruth::new(Scenario::S2, 19, 0.5).is_err());
        assert!(NonlinearTruth::new(Scenario::S1, 4, 0.5).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let truth = NonlinearTruth::new(Scenario::S2, 20, 0.5).unwrap();
        let a: Simulated<f64> = gen_scenario(&truth, 30, SeedSpec::new(9, 2)).unwrap();
        let b: Simulated<f64> = gen_scenario(&truth, 30, SeedSpec::new(9, 2)).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.truth, b.truth);
    }
}
