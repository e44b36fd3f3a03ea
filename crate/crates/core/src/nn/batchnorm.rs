//! Batch normalization over the (batch, length) axes of each channel.

use super::tensor::{Real, Tensor3};
use super::{Mode, NnError};

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_MOMENTUM: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub epsilon: T,
    /// Decay applied to the running statistics on each training call.
    pub momentum: T,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    mode: Mode,
    normalized: Tensor3<T>,
    inv_std: Vec<T>,
    batch_mean: Vec<T>,
    batch_var: Vec<T>,
}

impl<T> BatchNormCache<T> {
    pub fn mode(&self) -> Mode {
        self.mode
    }
}

impl<T: Real> BatchNormParams<T> {
    pub fn new(channels: usize, epsilon: T, momentum: T) -> Self {
        Self {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            epsilon,
            momentum,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Gradient holder with the same shape (running statistics zeroed).
    pub fn zeros_like(&self) -> Self {
        let n = self.channels();
        Self {
            gamma: vec![T::zero(); n],
            beta: vec![T::zero(); n],
            running_mean: vec![T::zero(); n],
            running_var: vec![T::zero(); n],
            epsilon: self.epsilon,
            momentum: self.momentum,
        }
    }

    /// Folds the batch statistics recorded by a training-mode forward pass
    /// into the running estimates. Infer-mode caches are ignored.
    pub fn update_running(&mut self, cache: &BatchNormCache<T>) {
        if cache.mode != Mode::Train {
            return;
        }
        let keep = self.momentum;
        let take = T::one() - keep;
        for c in 0..self.channels() {
            self.running_mean[c] = keep * self.running_mean[c] + take * cache.batch_mean[c];
            self.running_var[c] = keep * self.running_var[c] + take * cache.batch_var[c];
        }
    }
}

pub fn batchnorm_forward<T: Real>(
    x: &Tensor3<T>,
    p: &BatchNormParams<T>,
    mode: Mode,
) -> Result<(Tensor3<T>, BatchNormCache<T>), NnError> {
    let (batch, channels, len) = x.shape();
    if channels != p.channels() {
        return Err(NnError::ShapeMismatch(format!(
            "batch norm has {} channels, input has {channels}",
            p.channels()
        )));
    }
    let count = batch * len;
    if mode == Mode::Train && count < 2 {
        return Err(NnError::DegenerateBatch(count));
    }
    let mut normalized = Tensor3::zeros(batch, channels, len);
    let mut inv_std = vec![T::zero(); channels];
    let mut batch_mean = vec![T::zero(); channels];
    let mut batch_var = vec![T::zero(); channels];
    for c in 0..channels {
        let (mean, var) = match mode {
            Mode::Train => {
                let n = T::from_usize_lossy(count);
                let mut sum = T::zero();
                for b in 0..batch {
                    sum += x.row(b, c).iter().copied().sum::<T>();
                }
                let mean = sum / n;
                let mut sq = T::zero();
                for b in 0..batch {
                    for &v in x.row(b, c) {
                        let d = v - mean;
                        sq += d * d;
                    }
                }
                (mean, sq / n)
            }
            Mode::Infer => (p.running_mean[c], p.running_var[c]),
        };
        let istd = T::one() / (var + p.epsilon).sqrt();
        inv_std[c] = istd;
        batch_mean[c] = mean;
        batch_var[c] = var;
        for b in 0..batch {
            for (o, &v) in normalized.row_mut(b, c).iter_mut().zip(x.row(b, c)) {
                *o = (v - mean) * istd;
            }
        }
    }
    let mut y = normalized.clone();
    for b in 0..batch {
        for c in 0..channels {
            let (g, bt) = (p.gamma[c], p.beta[c]);
            for v in y.row_mut(b, c) {
                *v = g * *v + bt;
            }
        }
    }
    Ok((
        y,
        BatchNormCache {
            mode,
            normalized,
            inv_std,
            batch_mean,
            batch_var,
        },
    ))
}

/// Returns `(grad_x, grads)` where `grads` carries `gamma`/`beta` gradients.
/// In training mode the gradient flows through the batch mean and variance.
pub fn batchnorm_backward<T: Real>(
    p: &BatchNormParams<T>,
    cache: &BatchNormCache<T>,
    grad_out: &Tensor3<T>,
) -> Result<(Tensor3<T>, BatchNormParams<T>), NnError> {
    let (batch, channels, len) = cache.normalized.shape();
    if grad_out.shape() != cache.normalized.shape() {
        return Err(NnError::ShapeMismatch(format!(
            "batch norm backward expects {:?}, got {:?}",
            cache.normalized.shape(),
            grad_out.shape()
        )));
    }
    let mut grads = p.zeros_like();
    let mut grad_x = Tensor3::zeros(batch, channels, len);
    let n = T::from_usize_lossy(batch * len);
    for c in 0..channels {
        let mut sum_g = T::zero();
        let mut sum_g_xhat = T::zero();
        for b in 0..batch {
            for (&g, &xh) in grad_out.row(b, c).iter().zip(cache.normalized.row(b, c)) {
                sum_g += g;
                sum_g_xhat += g * xh;
            }
        }
        grads.beta[c] = sum_g;
        grads.gamma[c] = sum_g_xhat;
        let scale = p.gamma[c] * cache.inv_std[c];
        match cache.mode {
            Mode::Train => {
                let mean_g = sum_g / n;
                let mean_g_xhat = sum_g_xhat / n;
                for b in 0..batch {
                    let xh = cache.normalized.row(b, c);
                    let g = grad_out.row(b, c);
                    for ((o, &gv), &xv) in grad_x.row_mut(b, c).iter_mut().zip(g).zip(xh) {
                        *o = scale * (gv - mean_g - xv * mean_g_xhat);
                    }
                }
            }
            Mode::Infer => {
                for b in 0..batch {
                    for (o, &gv) in grad_x.row_mut(b, c).iter_mut().zip(grad_out.row(b, c)) {
                        *o = scale * gv;
                    }
                }
            }
        }
    }
    Ok((grad_x, grads))
}
