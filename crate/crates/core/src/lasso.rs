//! Least squares with an ℓ1-ball constraint on the slopes and a free
//! intercept, solved by accelerated projected gradient.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::engine::{BaseLearner, Predictor};
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, Real};
use crate::types::{Dataset, SeedSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    /// Stopping tolerance for both the fixed-point residual and the relative
    /// duality gap.
    pub tol: f64,
    pub max_iter: usize,
    /// z-score columns with statistics of the training rows before solving.
    #[serde(default)]
    pub standardize: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50_000,
            standardize: false,
        }
    }
}

/// Solution of `min ‖y − β₀ − Xβ‖² s.t. ‖β‖₁ ≤ K`.
///
/// When fitted with standardization, `coefficients` act on z-scored columns
/// and `column_scale` holds the divisors; the constraint always applies to
/// `coefficients` as stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit<T: Real> {
    pub intercept: T,
    pub coefficients: Array1<T>,
    pub k: T,
    pub train_rows: usize,
    pub column_scale: Option<Array1<T>>,
    pub iterations: usize,
    /// `‖β − P(β − ∇f(β)/L)‖∞` at termination, `f` the mean half squared error.
    pub fixed_point_residual: T,
    /// Frank–Wolfe duality gap at termination (same scaling as above).
    pub gap: T,
    /// Lipschitz constant of the gradient used for the step size.
    pub lipschitz: T,
}

impl<T: Real> LassoFit<T> {
    pub fn l1_norm(&self) -> T {
        self.coefficients.iter().map(|c| c.abs()).sum()
    }

    /// `‖y − β₀ − Xβ‖²` on the given rows.
    pub fn objective(&self, x: ArrayView2<'_, T>, y: ArrayView1<'_, T>) -> T {
        x.rows()
            .into_iter()
            .zip(y.iter())
            .map(|(row, &yi)| {
                let e = yi - self.predict(row);
                e * e
            })
            .sum()
    }
}

impl<T: Real> Predictor<T> for LassoFit<T> {
    fn predict(&self, x: ArrayView1<'_, T>) -> T {
        let mut acc = self.intercept;
        match &self.column_scale {
            Some(scale) => {
                for ((&xj, &bj), &sj) in x.iter().zip(&self.coefficients).zip(scale) {
                    if bj != T::zero() {
                        acc += bj * xj / sj;
                    }
                }
            }
            None => {
                for (&xj, &bj) in x.iter().zip(&self.coefficients) {
                    if bj != T::zero() {
                        acc += bj * xj;
                    }
                }
            }
        }
        acc
    }
}

/// Euclidean projection of `v` onto `{β : ‖β‖₁ ≤ radius}` (sort and threshold).
pub fn project_l1<T: Real>(v: ArrayView1<'_, T>, radius: T) -> Array1<T> {
    let mut out = v.to_owned();
    project_l1_in_place(out.as_slice_mut().expect("owned array is contiguous"), radius);
    out
}

pub(crate) fn project_l1_in_place<T: Real>(v: &mut [T], radius: T) {
    let l1: T = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return;
    }
    if radius <= T::zero() {
        v.iter_mut().for_each(|x| *x = T::zero());
        return;
    }
    let mut mags: Vec<T> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - radius) / T::from_usize_lossy(j + 1);
        if u > t {
            theta = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        let shrunk = (x.abs() - theta).max(T::zero());
        *x = if *x < T::zero() { -shrunk } else { shrunk };
    }
    // Rounding in the threshold can leave the norm a few ulps over the radius.
    let l1: T = v.iter().map(|x| x.abs()).sum();
    if l1 > radius {
        let s = radius / l1;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

/// Fits with default options except `tol` and `max_iter`.
pub fn lasso_fit<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    k: T,
    tol: f64,
    max_iter: usize,
) -> Result<LassoFit<T>> {
    let opts = LassoOptions {
        tol,
        max_iter,
        standardize: false,
    };
    lasso_fit_with(x, y, k, &opts, None)
}

/// Centered design stored transposed (`p × m`) so column operations are
/// contiguous.
struct Problem<T> {
    xt: Array2<T>,
    yc: Array1<T>,
    x_mean: Array1<T>,
    y_mean: T,
    scale: Option<Array1<T>>,
    m: usize,
}

impl<T: Real> Problem<T> {
    fn new(x: ArrayView2<'_, T>, y: ArrayView1<'_, T>, standardize: bool) -> Self {
        let m = x.nrows();
        let mt = T::from_usize_lossy(m);
        let x_mean = x.sum_axis(Axis(0)) / mt;
        let y_mean = y.sum() / mt;
        let mut xt = x.t().as_standard_layout().into_owned();
        for (mut row, &mu) in xt.rows_mut().into_iter().zip(&x_mean) {
            row.mapv_inplace(|v| v - mu);
        }
        let scale = standardize.then(|| {
            let s: Array1<T> = xt
                .rows()
                .into_iter()
                .map(|row| {
                    let sd = (row.iter().map(|&v| v * v).sum::<T>() / mt).sqrt();
                    if sd > T::zero() {
                        sd
                    } else {
                        T::one()
                    }
                })
                .collect();
            for (mut row, &sd) in xt.rows_mut().into_iter().zip(&s) {
                row.mapv_inplace(|v| v / sd);
            }
            s
        });
        let yc = y.mapv(|v| v - y_mean);
        Self {
            xt,
            yc,
            x_mean,
            y_mean,
            scale,
            m,
        }
    }

    fn p(&self) -> usize {
        self.xt.nrows()
    }

    /// `X β`, skipping zero coefficients.
    fn mul(&self, beta: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        for (j, &bj) in beta.iter().enumerate() {
            if bj != T::zero() {
                axpy(bj, self.xt.row(j).as_slice().expect("contiguous"), out);
            }
        }
    }

    /// `Xᵀ v / m`
    fn mul_t(&self, v: &[T], out: &mut [T]) {
        let inv_m = T::one() / T::from_usize_lossy(self.m);
        for (j, o) in out.iter_mut().enumerate() {
            *o = dot(self.xt.row(j).as_slice().expect("contiguous"), v) * inv_m;
        }
    }

    /// Largest eigenvalue of `XᵀX/m` by 20 power iterations.
    fn lipschitz(&self) -> T {
        let p = self.p();
        let mut v: Vec<T> = (0..p)
            .map(|j| T::one() + T::lit(0.01) * T::from_usize_lossy(j % 7))
            .collect();
        let mut xv = vec![T::zero(); self.m];
        let mut w = vec![T::zero(); p];
        let mut lambda = T::zero();
        for _ in 0..20 {
            let norm = v.iter().map(|&a| a * a).sum::<T>().sqrt();
            if norm == T::zero() {
                return T::zero();
            }
            v.iter_mut().for_each(|a| *a /= norm);
            self.mul_dense(&v, &mut xv);
            self.mul_t(&xv, &mut w);
            lambda = dot(&v, &w);
            std::mem::swap(&mut v, &mut w);
        }
        lambda
    }

    fn mul_dense(&self, beta: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        for (j, &bj) in beta.iter().enumerate() {
            axpy(bj, self.xt.row(j).as_slice().expect("contiguous"), out);
        }
    }

    /// Mean half squared error given `Xβ`.
    fn loss(&self, xb: &[T]) -> T {
        let s: T = self
            .yc
            .iter()
            .zip(xb)
            .map(|(&y, &f)| (y - f) * (y - f))
            .sum();
        s / (T::lit(2.0) * T::from_usize_lossy(self.m))
    }

    /// Gradient of the mean half squared error given `Xβ`.
    fn grad(&self, xb: &[T], resid: &mut [T], out: &mut [T]) {
        for ((r, &y), &f) in resid.iter_mut().zip(&self.yc).zip(xb) {
            *r = f - y;
        }
        self.mul_t(resid, out);
    }
}

/// Full solver entry point with an optional warm start.
pub fn lasso_fit_with<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    k: T,
    opts: &LassoOptions,
    warm: Option<ArrayView1<'_, T>>,
) -> Result<LassoFit<T>> {
    let m = x.nrows();
    let p = x.ncols();
    if m == 0 || y.len() != m {
        return Err(Error::Shape(format!("design has {m} rows, response {}", y.len())));
    }
    if !(k > T::zero()) || !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig("K and tol must be positive".into()));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value in lasso input".into()));
    }
    let prob = Problem::new(x, y, opts.standardize);
    let tol = T::lit(opts.tol);

    let mut lip = prob.lipschitz();
    let tiny = T::lit(1e-12);
    let mut beta = match warm {
        Some(w) if w.len() == p => {
            let mut b = w.to_vec();
            project_l1_in_place(&mut b, k);
            b
        }
        _ => vec![T::zero(); p],
    };

    let mut xb = vec![T::zero(); m];
    let mut resid = vec![T::zero(); m];
    let mut g = vec![T::zero(); p];

    let finish = |beta: Vec<T>, iterations: usize, residual: T, gap: T, lip: T| {
        let coefficients = Array1::from(beta);
        let intercept = prob.y_mean
            - match &prob.scale {
                Some(s) => prob
                    .x_mean
                    .iter()
                    .zip(&coefficients)
                    .zip(s)
                    .map(|((&mu, &b), &sd)| mu * b / sd)
                    .sum::<T>(),
                None => prob.x_mean.dot(&coefficients),
            };
        LassoFit {
            intercept,
            coefficients,
            k,
            train_rows: m,
            column_scale: prob.scale.clone(),
            iterations,
            fixed_point_residual: residual,
            gap,
            lipschitz: lip,
        }
    };

    if lip <= tiny {
        // Every centered column is zero: the slopes do not affect the loss.
        let zero = vec![T::zero(); p];
        return Ok(finish(zero, 0, T::zero(), T::zero(), lip));
    }

    // Certificate at the current point: fixed-point residual and the
    // Frank–Wolfe gap ∇fᵀβ + K‖∇f‖∞ ≥ f(β) − f*.
    let certificate = |beta: &[T], g: &[T], lip: T, f: T| -> (T, T, bool) {
        let mut step: Vec<T> = beta.iter().zip(g).map(|(&b, &gi)| b - gi / lip).collect();
        project_l1_in_place(&mut step, k);
        let residual = beta
            .iter()
            .zip(&step)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        let gmax = g.iter().map(|v| v.abs()).fold(T::zero(), T::max);
        let gap = (dot(g, beta) + k * gmax).max(T::zero());
        let done = residual <= tol && gap <= tol * (T::one() + f);
        (residual, gap, done)
    };

    prob.mul(&beta, &mut xb);
    let mut f_x = prob.loss(&xb);
    let mut x_prev = beta.clone();
    let mut xb_prev = xb.clone();
    let mut yv = beta.clone();
    let mut yb = xb.clone();
    let mut t = T::one();
    let mut next = vec![T::zero(); p];
    let mut next_b = vec![T::zero(); m];
    let check_every = 10;

    for iter in 0..opts.max_iter {
        if iter % check_every == 0 {
            prob.grad(&xb, &mut resid, &mut g);
            let (r, gp, done) = certificate(&beta, &g, lip, f_x);
            if done {
                return Ok(finish(beta, iter, r, gp, lip));
            }
        }

        // gradient step from the extrapolated point, with backtracking on L
        prob.grad(&yb, &mut resid, &mut g);
        let f_y = prob.loss(&yb);
        loop {
            for ((n, &yj), &gj) in next.iter_mut().zip(&yv).zip(&g) {
                *n = yj - gj / lip;
            }
            project_l1_in_place(&mut next, k);
            prob.mul(&next, &mut next_b);
            let f_next = prob.loss(&next_b);
            let mut lin = T::zero();
            let mut quad = T::zero();
            for ((&a, &b), &gj) in next.iter().zip(&yv).zip(&g) {
                let d = a - b;
                lin += gj * d;
                quad += d * d;
            }
            let bound = f_y + lin + lip / T::lit(2.0) * quad;
            if f_next <= bound + T::lit(1e-12) * (T::one() + f_y.abs()) {
                f_x = f_next;
                break;
            }
            lip *= T::lit(1.5);
        }

        std::mem::swap(&mut x_prev, &mut beta);
        std::mem::swap(&mut xb_prev, &mut xb);
        beta.copy_from_slice(&next);
        xb.copy_from_slice(&next_b);

        // gradient-based adaptive restart
        let mut restart_dot = T::zero();
        for ((&yj, &bj), &pj) in yv.iter().zip(&beta).zip(&x_prev) {
            restart_dot += (yj - bj) * (bj - pj);
        }
        let t_next = if restart_dot > T::zero() {
            T::one()
        } else {
            (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) / T::lit(2.0)
        };
        let mom = if restart_dot > T::zero() {
            T::zero()
        } else {
            (t - T::one()) / t_next
        };
        t = t_next;
        for j in 0..p {
            yv[j] = beta[j] + mom * (beta[j] - x_prev[j]);
        }
        for i in 0..m {
            yb[i] = xb[i] + mom * (xb[i] - xb_prev[i]);
        }
        if !f_x.is_finite() {
            return Err(Error::NoConvergence {
                iterations: iter,
                gap: f64::INFINITY,
            });
        }
    }

    prob.grad(&xb, &mut resid, &mut g);
    let (r, gp, done) = certificate(&beta, &g, lip, f_x);
    if done {
        return Ok(finish(beta, opts.max_iter, r, gp, lip));
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        gap: gp.max(r).to_f64_lossy(),
    })
}

/// Picks the `K` in `grid` with the smallest mean held-out squared error over
/// `folds` folds; ties go to the smaller `K`.
pub fn select_k_cv<T: Real>(
    data: &Dataset<T>,
    folds: usize,
    grid: &[T],
    seed: SeedSpec,
    opts: &LassoOptions,
) -> Result<T> {
    Ok(cv_curve(data, folds, grid, seed, opts)?.best_k)
}

#[derive(Debug, Clone)]
pub struct CvCurve<T> {
    pub grid: Vec<T>,
    pub mean_mse: Vec<T>,
    pub best_k: T,
}

/// Cross-validated mean squared error for every grid value (sorted ascending).
pub fn cv_curve<T: Real>(
    data: &Dataset<T>,
    folds: usize,
    grid: &[T],
    seed: SeedSpec,
    opts: &LassoOptions,
) -> Result<CvCurve<T>> {
    if folds < 2 {
        return Err(Error::InvalidConfig("cross-validation needs at least 2 folds".into()));
    }
    if grid.is_empty() || grid.iter().any(|k| !(*k > T::zero())) {
        return Err(Error::InvalidConfig("K grid must be nonempty and positive".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    grid.dedup();

    let n = data.n();
    let assignment = fold_assignment(n, folds, seed);
    let mut sums = vec![T::zero(); grid.len()];
    for f in 0..folds {
        let held: Vec<usize> = (0..n).filter(|&i| assignment[i] == f).collect();
        let kept: Vec<usize> = (0..n).filter(|&i| assignment[i] != f).collect();
        if held.len() < 2 || kept.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "fold {f} has {} held-out rows; need at least 2",
                held.len()
            )));
        }
        let train = data.select_rows(&kept);
        let test = data.select_rows(&held);
        let mut warm: Option<Array1<T>> = None;
        for (g, &k) in grid.iter().enumerate() {
            let fit = lasso_fit_with(train.features(), train.responses(), k, opts, warm.as_ref().map(|w| w.view()))?;
            let mse = fit.objective(test.features(), test.responses()) / T::from_usize_lossy(held.len());
            sums[g] += mse;
            warm = Some(fit.coefficients);
        }
    }
    let mean_mse: Vec<T> = sums.iter().map(|&s| s / T::from_usize_lossy(folds)).collect();
    let mut best = 0;
    for g in 1..grid.len() {
        if mean_mse[g] < mean_mse[best] {
            best = g;
        }
    }
    Ok(CvCurve {
        best_k: grid[best],
        grid,
        mean_mse,
    })
}

/// Fold label for each row: a seeded permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: SeedSpec) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed.rng(0));
    let mut out = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        out[i] = pos % folds;
    }
    out
}

/// ℓ1 norm of a lightly penalized ridge fit on the centered data.
pub fn ridge_l1_proxy<T: Real>(data: &Dataset<T>) -> Result<f64> {
    let (m, p) = (data.n(), data.p());
    if m < 2 || p == 0 {
        return Ok(0.0);
    }
    let xs = data.features();
    let ys = data.responses();
    let x_mean = xs.mean_axis(Axis(0)).expect("nonempty");
    let y_mean = ys.mean().expect("nonempty");
    let x = DMatrix::<f64>::from_fn(m, p, |i, j| (xs[[i, j]] - x_mean[j]).to_f64_lossy());
    let y = DVector::<f64>::from_fn(m, |i, _| (ys[i] - y_mean).to_f64_lossy());
    let trace: f64 = x.iter().map(|v| v * v).sum();
    if trace == 0.0 {
        return Ok(0.0);
    }
    let lambda = 1e-3 * trace / p as f64;
    let beta = if p <= m {
        let mut gram = x.transpose() * &x;
        for j in 0..p {
            gram[(j, j)] += lambda;
        }
        let chol = gram.cholesky().ok_or(Error::Singular)?;
        chol.solve(&(x.transpose() * &y))
    } else {
        let mut gram = &x * x.transpose();
        for i in 0..m {
            gram[(i, i)] += lambda;
        }
        let chol = gram.cholesky().ok_or(Error::Singular)?;
        x.transpose() * chol.solve(&y)
    };
    Ok(beta.iter().map(|b| b.abs()).sum())
}

/// `count` log-spaced values from `0.01·proxy` to `10·proxy`, where `proxy`
/// is [`ridge_l1_proxy`] (or 1 when the proxy vanishes).
pub fn default_k_grid<T: Real>(data: &Dataset<T>, count: usize) -> Result<Vec<T>> {
    let proxy = ridge_l1_proxy(data)?;
    let base = if proxy > 0.0 && proxy.is_finite() { proxy } else { 1.0 };
    let (lo, hi) = ((0.01 * base).ln(), (10.0 * base).ln());
    Ok((0..count)
        .map(|i| {
            let frac = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            T::lit((lo + frac * (hi - lo)).exp())
        })
        .collect())
}

/// Base learner with a fixed constraint `K`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoLearner<T: Real> {
    pub k: T,
    pub options: LassoOptions,
}

impl<T: Real> LassoLearner<T> {
    pub fn new(k: T) -> Self {
        Self {
            k,
            options: LassoOptions::default(),
        }
    }
}

impl<T: Real> BaseLearner<T> for LassoLearner<T> {
    type Fitted = LassoFit<T>;

    fn fit(&self, train: &Dataset<T>, _valid: &Dataset<T>, _seed: u64) -> Result<LassoFit<T>> {
        lasso_fit_with(train.features(), train.responses(), self.k, &self.options, None)
    }
}

/// Base learner that picks `K` by cross-validation on its own training rows
/// (default grid) before fitting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvLassoLearner {
    pub folds: usize,
    pub grid_size: usize,
    pub options: LassoOptions,
}

impl Default for CvLassoLearner {
    fn default() -> Self {
        Self {
            folds: 5,
            grid_size: 20,
            options: LassoOptions::default(),
        }
    }
}

impl<T: Real> BaseLearner<T> for CvLassoLearner {
    type Fitted = LassoFit<T>;

    fn fit(&self, train: &Dataset<T>, _valid: &Dataset<T>, seed: u64) -> Result<LassoFit<T>> {
        let grid = default_k_grid(train, self.grid_size)?;
        let k = select_k_cv(train, self.folds, &grid, SeedSpec::new(seed, 0), &self.options)?;
        lasso_fit_with(train.features(), train.responses(), k, &self.options, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn projection_examples() {
        assert_eq!(project_l1(array![0.3, -0.2].view(), 1.0), array![0.3, -0.2]);
        assert_eq!(project_l1(array![3.0, 0.0].view(), 1.0), array![1.0, 0.0]);
        let p = project_l1(array![2.0, 1.0, 0.0].view(), 2.0);
        assert_abs_diff_eq!(p, array![1.5, 0.5, 0.0], epsilon = 1e-15);
        let p = project_l1(array![-2.0, 1.0, 0.0].view(), 2.0);
        assert_abs_diff_eq!(p, array![-1.5, 0.5, 0.0], epsilon = 1e-15);
    }

    #[test]
    fn projection_example_against_grid() {
        // brute force over the boundary |a| + |b| = 2 (third coordinate 0 is optimal)
        let v = [2.0, 1.0];
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let steps = 400_000;
        for s in 0..=steps {
            let a = -2.0 + 4.0 * s as f64 / steps as f64;
            for b in [2.0 - a.abs(), -(2.0 - a.abs())] {
                let d = (a - v[0]).powi(2) + (b - v[1]).powi(2);
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        assert!((best.1 - 1.5).abs() < 1e-4 && (best.2 - 0.5).abs() < 1e-4);
    }

    #[test]
    fn interior_solution_is_ols() {
        let x = array![[1.0], [-1.0]];
        let y = array![1.0, -1.0];
        let fit = lasso_fit(x.view(), y.view(), 10.0, 1e-10, 10_000).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.intercept, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn active_constraint_one_dimension() {
        // objective (1-b)² + (-1+b)² = 2(1-b)², minimized on |b| ≤ 0.5 at b = 0.5
        let x = array![[1.0], [-1.0]];
        let y = array![1.0, -1.0];
        let fit = lasso_fit(x.view(), y.view(), 0.5, 1e-10, 10_000).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.objective(x.view(), y.view()), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn correlated_two_dimensional_against_grid() {
        let x = array![[1.0, 0.9], [0.5, 0.7], [-0.3, -0.1], [2.0, 1.5], [-1.0, -1.2], [0.2, 0.4]];
        let y = array![2.0, 1.1, -0.2, 3.4, -2.0, 0.7];
        let k = 1.0;
        let fit = lasso_fit(x.view(), y.view(), k, 1e-10, 50_000).unwrap();

        // the intercept is profiled out exactly by centering
        let xm = x.mean_axis(Axis(0)).unwrap();
        let ym = y.mean().unwrap();
        let obj = |b0: f64, b1: f64| -> f64 {
            x.rows()
                .into_iter()
                .zip(&y)
                .map(|(r, &yi)| {
                    let e = (yi - ym) - b0 * (r[0] - xm[0]) - b1 * (r[1] - xm[1]);
                    e * e
                })
                .sum()
        };
        let mut best = f64::INFINITY;
        let steps = 2000;
        for s in 0..=steps {
            let a = -k + 2.0 * k * s as f64 / steps as f64;
            let rest = k - a.abs();
            for b in [rest, -rest] {
                best = best.min(obj(a, b));
            }
        }
        let got = fit.objective(x.view(), y.view());
        assert!((got - best).abs() < 1e-4, "{got} vs {best}");
        assert!(fit.l1_norm() <= k * (1.0 + 1e-8));
    }

    #[test]
    fn rejects_bad_input() {
        let x = array![[1.0], [f64::NAN]];
        let y = array![1.0, 2.0];
        assert!(lasso_fit(x.view(), y.view(), 1.0, 1e-8, 100).is_err());
        let x = array![[1.0], [2.0]];
        assert!(lasso_fit(x.view(), y.view(), 0.0, 1e-8, 100).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let x = array![[1.0, 2.0], [2.0, 1.0], [3.0, 3.5], [0.0, 1.0]];
        let y = array![1.0, 2.0, 3.0, 0.5];
        let err = lasso_fit(x.view(), y.view(), 5.0, 1e-14, 1).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 1, .. }), "{err}");
    }

    #[test]
    fn constant_columns_give_zero_slopes() {
        let x = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        let y = array![1.0, 2.0, 3.0];
        let fit = lasso_fit(x.view(), y.view(), 1.0, 1e-8, 100).unwrap();
        assert_eq!(fit.coefficients, array![0.0, 0.0]);
        assert_abs_diff_eq!(fit.intercept, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn standardized_fit_predicts_on_raw_scale() {
        let x = array![[1.0, 10.0], [2.0, 30.0], [3.0, 20.0], [4.0, 50.0], [5.0, 40.0]];
        let y = array![1.0, 2.0, 3.0, 4.0, 5.0];
        let opts = LassoOptions {
            standardize: true,
            ..Default::default()
        };
        let fit = lasso_fit_with(x.view(), y.view(), 100.0, &opts, None).unwrap();
        for (row, &yi) in x.rows().into_iter().zip(&y) {
            assert_abs_diff_eq!(fit.predict(row), yi, epsilon = 1e-6);
        }
    }

    fn line_data(n: usize) -> Dataset<f64> {
        let x = Array2::from_shape_fn((n, 1), |(i, _)| ((i * 37) % n) as f64 / n as f64 - 0.5);
        let y = x.column(0).mapv(|v| 2.0 * v);
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn cv_selects_adequate_radius() {
        let data = line_data(40);
        let opts = LassoOptions::default();
        let k = select_k_cv(&data, 5, &[0.1, 2.0, 100.0], SeedSpec::new(3, 0), &opts).unwrap();
        assert!(k == 2.0 || k == 100.0, "{k}");
        let k2 = select_k_cv(&data, 5, &[100.0, 0.1, 2.0], SeedSpec::new(3, 0), &opts).unwrap();
        assert_eq!(k, k2);
        // noiseless: K=2 and K=100 both interpolate, so the tie goes to the smaller
        assert_eq!(k, 2.0);
    }

    #[test]
    fn cv_singleton_grid_and_errors() {
        let data = line_data(10);
        let opts = LassoOptions::default();
        assert_eq!(select_k_cv(&data, 2, &[0.7], SeedSpec::new(0, 0), &opts).unwrap(), 0.7);
        assert!(select_k_cv(&data, 1, &[0.7], SeedSpec::new(0, 0), &opts).is_err());
        assert!(select_k_cv(&data, 6, &[0.7], SeedSpec::new(0, 0), &opts).is_err());
        assert!(select_k_cv(&data, 2, &[], SeedSpec::new(0, 0), &opts).is_err());
    }

    #[test]
    fn default_grid_spans_proxy() {
        let data = line_data(30);
        let grid = default_k_grid(&data, 20).unwrap();
        assert_eq!(grid.len(), 20);
        let proxy = ridge_l1_proxy(&data).unwrap();
        assert!((proxy - 2.0).abs() < 0.05, "{proxy}");
        assert_abs_diff_eq!(grid[0], 0.01 * proxy, epsilon = 1e-12);
        assert_abs_diff_eq!(grid[19], 10.0 * proxy, epsilon = 1e-9);
    }
}
