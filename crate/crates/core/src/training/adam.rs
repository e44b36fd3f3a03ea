use crate::model::ModelParams;
use crate::nn::Real;

use super::{TrainConfig, TrainError};

/// First and second moments with the same layout as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: ModelParams<T>,
    pub v: ModelParams<T>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update. Gradients are checked for finiteness
/// before anything is modified.
pub fn adam_step<T: Real>(
    params: &mut ModelParams<T>,
    grads: &ModelParams<T>,
    state: &mut AdamState<T>,
    lr: f64,
    cfg: &TrainConfig,
) -> Result<(), TrainError> {
    let grad_views = grads.trainable();
    if let Some(bad) = grad_views
        .iter()
        .find(|g| g.values.iter().any(|x| !x.is_finite()))
    {
        return Err(TrainError::NonFiniteGradient {
            param: bad.name.clone(),
            step: state.t + 1,
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = T::lit(1.0 / (1.0 - b1.powi(t)));
    let c2 = T::lit(1.0 / (1.0 - b2.powi(t)));
    let (b1, b2) = (T::lit(b1), T::lit(b2));
    let one = T::one();
    let (lr, eps) = (T::lit(lr), T::lit(cfg.adam_eps));

    let ms = state.m.trainable_mut();
    let vs = state.v.trainable_mut();
    let ps = params.trainable_mut();
    for (((p, g), m), v) in ps.into_iter().zip(grad_views).zip(ms).zip(vs) {
        for i in 0..p.values.len() {
            let gi = g.values[i];
            let mi = b1 * m.values[i] + (one - b1) * gi;
            let vi = b2 * v.values[i] + (one - b2) * gi * gi;
            m.values[i] = mi;
            v.values[i] = vi;
            p.values[i] -= lr * (mi * c1) / ((vi * c2).sqrt() + eps);
        }
    }
    Ok(())
}
