//! Cross-entropy plus an L2 penalty on convolution kernels only.

use crate::model::ModelParams;
use crate::nn::{softmax_xent_forward, Matrix, NnError, Real};

/// `λ·Σ w²` over depthwise, pointwise and standard conv kernels.
pub fn l2_penalty<T: Real>(params: &ModelParams<T>, lambda: f64) -> T {
    let sum: T = params
        .trainable()
        .iter()
        .filter(|v| v.kind.is_conv_kernel())
        .flat_map(|v| v.values.iter())
        .fold(T::zero(), |acc, &w| acc + w * w);
    T::lit(lambda) * sum
}

/// Adds `2λw` to the conv-kernel entries of `grads`.
pub fn add_l2_gradient<T: Real>(grads: &mut ModelParams<T>, params: &ModelParams<T>, lambda: f64) {
    if lambda == 0.0 {
        return;
    }
    let two_lambda = T::lit(2.0 * lambda);
    let src = params.trainable();
    for (g, p) in grads.trainable_mut().into_iter().zip(src) {
        if p.kind.is_conv_kernel() {
            for (gv, &w) in g.values.iter_mut().zip(p.values) {
                *gv += two_lambda * w;
            }
        }
    }
}

/// Mean cross-entropy of `logits` against `labels` plus the L2 penalty.
pub fn regularized_loss<T: Real>(
    logits: &Matrix<T>,
    labels: &[usize],
    params: &ModelParams<T>,
    lambda: f64,
) -> Result<T, NnError> {
    let (xent, _) = softmax_xent_forward(logits, labels)?;
    Ok(xent + l2_penalty(params, lambda))
}
