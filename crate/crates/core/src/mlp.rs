//! Fully connected ReLU networks with inverted dropout, trained with Adam on
//! mean squared error and early-stopped on a validation set.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{BaseLearner, Predictor};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::types::Dataset;

/// Layer widths `(p₀, …, p_{L+1})` with `p_{L+1} = 1`, and the dropout rate
/// applied after every hidden activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub widths: Vec<usize>,
    pub dropout: f64,
}

impl MlpArchitecture {
    pub fn new(widths: Vec<usize>, dropout: f64) -> Result<Self> {
        let arch = Self { widths, dropout };
        arch.validate()?;
        Ok(arch)
    }

    /// `input → hidden… → 1`
    pub fn with_hidden(input: usize, hidden: &[usize], dropout: f64) -> Result<Self> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input);
        widths.extend_from_slice(hidden);
        widths.push(1);
        Self::new(widths, dropout)
    }

    /// Number of hidden layers `L`.
    pub fn depth(&self) -> usize {
        self.widths.len() - 2
    }

    fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 || self.widths.contains(&0) {
            return Err(Error::InvalidConfig(format!("invalid layer widths {:?}", self.widths)));
        }
        if *self.widths.last().expect("nonempty") != 1 {
            return Err(Error::InvalidConfig("output width must be 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpHyper {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Multiplier on the He-uniform initialization bound.
    pub init_scale: f64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 500,
            patience: 20,
            init_scale: 1.0,
        }
    }
}

impl MlpHyper {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.max_epochs == 0 || !(self.init_scale > 0.0)
        {
            return Err(Error::InvalidConfig(format!("invalid training hyperparameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub train_loss: f64,
    pub valid_loss: f64,
}

/// Weights `W_ℓ` (`p_{ℓ+1} × p_ℓ`) and biases `a_ℓ` of a trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpFit<T: Real> {
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array1<T>>,
    pub dropout: f64,
    pub training_log: Vec<EpochLog>,
    /// Epoch (0-based) whose weights were kept.
    pub stopped_epoch: usize,
}

/// Parameter gradients, laid out like [`MlpFit`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T: Real> {
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array1<T>>,
}

impl<T: Real> MlpFit<T> {
    /// Parameters drawn He-uniform (`U(±scale·√(6/fan_in))`), biases zero.
    pub fn init(arch: &MlpArchitecture, init_scale: f64, rng: &mut impl Rng) -> Result<Self> {
        arch.validate()?;
        let mut weights = Vec::with_capacity(arch.widths.len() - 1);
        let mut biases = Vec::with_capacity(arch.widths.len() - 1);
        for w in arch.widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = init_scale * (6.0 / fan_in as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_out, fan_in), |_| {
                T::lit(rng.random_range(-bound..bound))
            }));
            biases.push(Array1::zeros(fan_out));
        }
        Ok(Self {
            weights,
            biases,
            dropout: arch.dropout,
            training_log: Vec::new(),
            stopped_epoch: 0,
        })
    }

    pub fn input_width(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn depth(&self) -> usize {
        self.weights.len() - 1
    }

    /// Inference on a batch (`m × p₀`); dropout is off.
    pub fn forward_batch(&self, x: ArrayView2<'_, T>) -> Result<Array1<T>> {
        if x.ncols() != self.input_width() {
            return Err(Error::Shape(format!(
                "input has {} features, network expects {}",
                x.ncols(),
                self.input_width()
            )));
        }
        let mut a = x.to_owned();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = a.dot(&w.t());
            z += b;
            if l < last {
                z.mapv_inplace(|v| v.max(T::zero()));
            }
            a = z;
        }
        Ok(a.column(0).to_owned())
    }

    fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }
}

/// `W_L σ(… σ(W₀x + a₀) …) + a_L` for one input row, without dropout.
pub fn mlp_forward<T: Real>(fit: &MlpFit<T>, x: ArrayView1<'_, T>) -> Result<T> {
    if x.len() != fit.input_width() {
        return Err(Error::Shape(format!(
            "input has {} features, network expects {}",
            x.len(),
            fit.input_width()
        )));
    }
    let mut a = x.to_owned();
    let last = fit.weights.len() - 1;
    for (l, (w, b)) in fit.weights.iter().zip(&fit.biases).enumerate() {
        let mut z = w.dot(&a) + b;
        if l < last {
            z.mapv_inplace(|v| v.max(T::zero()));
        }
        a = z;
    }
    Ok(a[0])
}

/// Mean squared error on a batch and the exact gradient of it, with hidden
/// activations multiplied by the given 0/1 masks (one `m × p_{ℓ+1}` matrix per
/// hidden layer) and rescaled by `1/(1 - dropout)`.
pub fn mlp_backward<T: Real>(
    fit: &MlpFit<T>,
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    masks: &[Array2<T>],
) -> Result<(T, Gradients<T>)> {
    let m = x.nrows();
    let depth = fit.depth();
    if x.ncols() != fit.input_width() || y.len() != m || m == 0 {
        return Err(Error::Shape("batch does not match the network".into()));
    }
    if masks.len() != depth
        || masks
            .iter()
            .zip(&fit.weights)
            .any(|(mask, w)| mask.dim() != (m, w.nrows()))
    {
        return Err(Error::Shape("dropout masks do not match the hidden layers".into()));
    }
    let keep_scale = T::lit(1.0 / (1.0 - fit.dropout));

    // forward, keeping activations (post-dropout) and pre-activations
    let mut acts: Vec<Array2<T>> = Vec::with_capacity(depth + 1);
    let mut pre: Vec<Array2<T>> = Vec::with_capacity(depth);
    acts.push(x.to_owned());
    for l in 0..depth {
        let mut z = acts[l].dot(&fit.weights[l].t());
        z += &fit.biases[l];
        let mut a = z.mapv(|v| v.max(T::zero()));
        a *= &masks[l];
        a.mapv_inplace(|v| v * keep_scale);
        pre.push(z);
        acts.push(a);
    }
    let mut out = acts[depth].dot(&fit.weights[depth].t());
    out += &fit.biases[depth];

    let mt = T::from_usize_lossy(m);
    let mut delta = Array2::<T>::zeros((m, 1));
    let mut loss = T::zero();
    for i in 0..m {
        let e = out[[i, 0]] - y[i];
        loss += e * e;
        delta[[i, 0]] = T::lit(2.0) * e / mt;
    }
    loss /= mt;

    let mut gw = vec![Array2::<T>::zeros((0, 0)); depth + 1];
    let mut gb = vec![Array1::<T>::zeros(0); depth + 1];
    for l in (0..=depth).rev() {
        gw[l] = delta.t().dot(&acts[l]);
        gb[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut da = delta.dot(&fit.weights[l]);
            let z = &pre[l - 1];
            let mask = &masks[l - 1];
            ndarray::Zip::from(&mut da).and(z).and(mask).for_each(|d, &zv, &mv| {
                *d = if zv > T::zero() { *d * mv * keep_scale } else { T::zero() };
            });
            delta = da;
        }
    }
    Ok((
        loss,
        Gradients {
            weights: gw,
            biases: gb,
        },
    ))
}

struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
}

impl<T: Real> Adam<T> {
    fn new(size: usize, lr: f64) -> Self {
        Self {
            m: vec![T::zero(); size],
            v: vec![T::zero(); size],
            t: 0,
            lr: T::lit(lr),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }

    fn step(&mut self, fit: &mut MlpFit<T>, grads: &Gradients<T>) {
        self.t += 1;
        let c1 = T::one() - self.beta1.powi(self.t);
        let c2 = T::one() - self.beta2.powi(self.t);
        let step = self.lr * c2.sqrt() / c1;
        let eps_hat = self.eps * c2.sqrt();
        let (b1, b2) = (self.beta1, self.beta2);
        let params = fit
            .weights
            .iter_mut()
            .zip(&grads.weights)
            .flat_map(|(w, g)| w.iter_mut().zip(g.iter()))
            .chain(
                fit.biases
                    .iter_mut()
                    .zip(&grads.biases)
                    .flat_map(|(b, g)| b.iter_mut().zip(g.iter())),
            );
        for ((p, &g), (m, v)) in params.zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            *p -= step * *m / (v.sqrt() + eps_hat);
        }
    }
}

fn mse<T: Real>(fit: &MlpFit<T>, data: &Dataset<T>) -> Result<f64> {
    let pred = fit.forward_batch(data.features())?;
    let s: T = pred
        .iter()
        .zip(data.responses())
        .map(|(&f, &y)| (f - y) * (f - y))
        .sum();
    Ok(s.to_f64_lossy() / data.n() as f64)
}

/// Trains with Adam; stops once validation loss has not improved for more
/// than `patience` consecutive epochs and returns the best-validation weights.
pub fn mlp_fit<T: Real>(
    train: &Dataset<T>,
    valid: &Dataset<T>,
    arch: &MlpArchitecture,
    hyper: &MlpHyper,
    seed: u64,
) -> Result<MlpFit<T>> {
    arch.validate()?;
    hyper.validate()?;
    if train.n() == 0 || valid.n() == 0 {
        return Err(Error::InvalidData("training and validation sets must be nonempty".into()));
    }
    if train.p() != arch.widths[0] || valid.p() != arch.widths[0] {
        return Err(Error::Shape(format!(
            "data has {} features, architecture expects {}",
            train.p(),
            arch.widths[0]
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fit = MlpFit::<T>::init(arch, hyper.init_scale, &mut rng)?;
    // start the output bias at the mean response
    let depth = fit.depth();
    fit.biases[depth][0] = train.responses().sum() / T::from_usize_lossy(train.n());

    let mut adam = Adam::new(fit.param_count(), hyper.learning_rate);
    let keep = 1.0 - arch.dropout;
    let n = train.n();
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = (f64::INFINITY, 0usize, fit.weights.clone(), fit.biases.clone());
    let mut log = Vec::new();
    let mut since_best = 0usize;

    for epoch in 0..hyper.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(hyper.batch_size) {
            let xb = train.features().select(Axis(0), chunk);
            let yb = train.responses().select(Axis(0), chunk);
            let masks: Vec<Array2<T>> = fit.weights[..depth]
                .iter()
                .map(|w| {
                    Array2::from_shape_fn((chunk.len(), w.nrows()), |_| {
                        if arch.dropout == 0.0 || rng.random::<f64>() < keep {
                            T::one()
                        } else {
                            T::zero()
                        }
                    })
                })
                .collect();
            let (loss, grads) = mlp_backward(&fit, xb.view(), yb.view(), &masks)?;
            let loss = loss.to_f64_lossy();
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            loss_sum += loss * chunk.len() as f64;
            adam.step(&mut fit, &grads);
        }
        let valid_loss = mse(&fit, valid)?;
        if !valid_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        log.push(EpochLog {
            train_loss: loss_sum / n as f64,
            valid_loss,
        });
        if valid_loss < best.0 {
            best = (valid_loss, epoch, fit.weights.clone(), fit.biases.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > hyper.patience {
                break;
            }
        }
    }
    let (_, best_epoch, weights, biases) = best;
    fit.weights = weights;
    fit.biases = biases;
    fit.training_log = log;
    fit.stopped_epoch = best_epoch;
    Ok(fit)
}

/// Per-feature min-max map to `[0, 1]` learned on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler<T: Real> {
    min: Array1<T>,
    range: Array1<T>,
}

impl<T: Real> MinMaxScaler<T> {
    pub fn fit(x: ArrayView2<'_, T>) -> Self {
        let min = x.fold_axis(Axis(0), T::infinity(), |&a, &b| a.min(b));
        let max = x.fold_axis(Axis(0), T::neg_infinity(), |&a, &b| a.max(b));
        let range = (&max - &min).mapv(|r| if r > T::zero() { r } else { T::one() });
        Self { min, range }
    }

    pub fn transform(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        (&x - &self.min) / &self.range
    }

    pub fn transform_row(&self, x: ArrayView1<'_, T>) -> Array1<T> {
        (&x - &self.min) / &self.range
    }

    pub fn transform_dataset(&self, d: &Dataset<T>) -> Result<Dataset<T>> {
        Dataset::new(self.transform(d.features()), d.responses().to_owned())
    }
}

/// Network plus the input scaling it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpPredictor<T: Real> {
    pub scaler: MinMaxScaler<T>,
    pub net: MlpFit<T>,
}

impl<T: Real> Predictor<T> for MlpPredictor<T> {
    fn predict(&self, x: ArrayView1<'_, T>) -> T {
        mlp_forward(&self.net, self.scaler.transform_row(x).view()).expect("input width checked at fit")
    }

    fn predict_rows(&self, x: ArrayView2<'_, T>) -> Array1<T> {
        self.net
            .forward_batch(self.scaler.transform(x).view())
            .expect("input width checked at fit")
    }
}

/// Network base learner. Hidden widths are fixed; the input width is taken
/// from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpLearner {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub hyper: MlpHyper,
    /// Fraction of the training rows held out for early stopping when the
    /// caller supplies no validation rows.
    pub fallback_valid_fraction: f64,
}

impl MlpLearner {
    pub fn new(hidden: Vec<usize>, dropout: f64, hyper: MlpHyper) -> Self {
        Self {
            hidden,
            dropout,
            hyper,
            fallback_valid_fraction: 0.2,
        }
    }

    /// `p → 128 → 64 → 1`, 50% dropout.
    pub fn two_hidden_default() -> Self {
        Self::new(vec![128, 64], 0.5, MlpHyper::default())
    }

    /// `p → 64 → 128 → 32 → 1`.
    pub fn three_hidden_default() -> Self {
        Self::new(vec![64, 128, 32], 0.5, MlpHyper::default())
    }
}

impl<T: Real> BaseLearner<T> for MlpLearner {
    type Fitted = MlpPredictor<T>;

    fn fit(&self, train: &Dataset<T>, valid: &Dataset<T>, seed: u64) -> Result<MlpPredictor<T>> {
        let arch = MlpArchitecture::with_hidden(train.p(), &self.hidden, self.dropout)?;
        let (train, valid) = if valid.n() == 0 {
            holdout_split(train, self.fallback_valid_fraction, seed)?
        } else {
            (train.clone(), valid.clone())
        };
        let scaler = MinMaxScaler::fit(train.features());
        let train_s = scaler.transform_dataset(&train)?;
        let valid_s = scaler.transform_dataset(&valid)?;
        let net = mlp_fit(&train_s, &valid_s, &arch, &self.hyper, seed)?;
        Ok(MlpPredictor { scaler, net })
    }
}

/// Seeded split of `data` into `(rest, held)` with `held` a `fraction` of the rows.
fn holdout_split<T: Real>(data: &Dataset<T>, fraction: f64, seed: u64) -> Result<(Dataset<T>, Dataset<T>)> {
    let n = data.n();
    let held = ((n as f64 * fraction).round() as usize).clamp(1, n.saturating_sub(1));
    if n < 2 {
        return Err(Error::InvalidData("need at least 2 rows to hold out a validation set".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x005E_ED0F_5EED));
    let mut valid: Vec<usize> = idx[..held].to_vec();
    let mut rest: Vec<usize> = idx[held..].to_vec();
    valid.sort_unstable();
    rest.sort_unstable();
    Ok((data.select_rows(&rest), data.select_rows(&valid)))
}
