//! ReLU and inverted dropout.

use rand::Rng;

use super::tensor::Real;
use super::Mode;

pub fn relu_forward<T: Real>(x: &[T]) -> Vec<T> {
    x.iter()
        .map(|&v| if v > T::zero() { v } else { T::zero() })
        .collect()
}

/// Gradient is zero wherever the input was `<= 0`, including exactly zero.
pub fn relu_backward<T: Real>(input: &[T], grad_out: &[T]) -> Vec<T> {
    input
        .iter()
        .zip(grad_out)
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect()
}

/// Per-element multipliers recorded by a training-mode dropout pass:
/// `0` for dropped elements, `1 / (1 - rate)` for kept ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask<T> {
    scale: Vec<T>,
}

impl<T: Real> DropoutMask<T> {
    pub fn len(&self) -> usize {
        self.scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scale.is_empty()
    }

    pub fn kept(&self) -> usize {
        self.scale.iter().filter(|&&s| s != T::zero()).count()
    }
}

/// Inverted dropout. Infer mode and `rate == 0` return the input unchanged
/// and record no mask; neither consumes randomness.
pub fn dropout_forward<T: Real, R: Rng + ?Sized>(
    x: &[T],
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> (Vec<T>, Option<DropoutMask<T>>) {
    if mode == Mode::Infer || rate <= 0.0 {
        return (x.to_vec(), None);
    }
    let keep = 1.0 - rate;
    let kept_scale = T::lit(1.0 / keep);
    let scale: Vec<T> = x
        .iter()
        .map(|_| {
            if rng.gen::<f64>() < keep {
                kept_scale
            } else {
                T::zero()
            }
        })
        .collect();
    let y = x.iter().zip(&scale).map(|(&v, &s)| v * s).collect();
    (y, Some(DropoutMask { scale }))
}

pub fn dropout_backward<T: Real>(mask: Option<&DropoutMask<T>>, grad_out: &[T]) -> Vec<T> {
    match mask {
        None => grad_out.to_vec(),
        Some(m) => grad_out
            .iter()
            .zip(&m.scale)
            .map(|(&g, &s)| g * s)
            .collect(),
    }
}
