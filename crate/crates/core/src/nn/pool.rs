//! Max pooling (SAME padding with −∞) and global average pooling.

use super::tensor::{same_out_len, same_pad_left, Matrix, Real, Tensor3};
use super::NnError;

#[derive(Debug, Clone)]
pub struct MaxPoolCache {
    input_shape: (usize, usize, usize),
    /// Winning input position (within its row) for every output element.
    argmax: Vec<usize>,
}

pub fn maxpool1d_forward<T: Real>(
    x: &Tensor3<T>,
    pool_size: usize,
    stride: usize,
) -> Result<(Tensor3<T>, MaxPoolCache), NnError> {
    if pool_size == 0 || stride == 0 {
        return Err(NnError::InvalidParams(
            "pool size and stride must be positive".into(),
        ));
    }
    let (batch, channels, len) = x.shape();
    if len == 0 {
        return Err(NnError::ShapeMismatch(
            "max pool input has zero length".into(),
        ));
    }
    let out_len = same_out_len(len, stride);
    let pad = same_pad_left(len, pool_size, stride);
    let mut y = Tensor3::zeros(batch, channels, out_len);
    let mut argmax = Vec::with_capacity(batch * channels * out_len);
    for b in 0..batch {
        for c in 0..channels {
            let src = x.row(b, c);
            let dst = y.row_mut(b, c);
            for (o, d) in dst.iter_mut().enumerate() {
                let start = (o * stride) as isize - pad as isize;
                let lo = start.max(0) as usize;
                let hi = ((start + pool_size as isize) as usize).min(len);
                let mut best = lo;
                for i in lo + 1..hi {
                    if src[i] > src[best] {
                        best = i;
                    }
                }
                *d = src[best];
                argmax.push(best);
            }
        }
    }
    Ok((
        y,
        MaxPoolCache {
            input_shape: x.shape(),
            argmax,
        },
    ))
}

pub fn maxpool1d_backward<T: Real>(
    cache: &MaxPoolCache,
    grad_out: &Tensor3<T>,
) -> Result<Tensor3<T>, NnError> {
    let (batch, channels, len) = cache.input_shape;
    if grad_out.batch() != batch
        || grad_out.channels() != channels
        || grad_out.data().len() != cache.argmax.len()
    {
        return Err(NnError::ShapeMismatch(
            "max pool gradient disagrees with cached forward".into(),
        ));
    }
    let out_len = grad_out.length();
    let mut gx = Tensor3::zeros(batch, channels, len);
    for b in 0..batch {
        for c in 0..channels {
            let base = (b * channels + c) * out_len;
            let g = grad_out.row(b, c);
            let dst = gx.row_mut(b, c);
            for (o, &gv) in g.iter().enumerate() {
                dst[cache.argmax[base + o]] += gv;
            }
        }
    }
    Ok(gx)
}

/// Mean over the length axis: `B×C×L → B×C`.
pub fn global_avg_pool_forward<T: Real>(x: &Tensor3<T>) -> Matrix<T> {
    let (batch, channels, len) = x.shape();
    let n = T::from_usize_lossy(len);
    let mut out = Matrix::zeros(batch, channels);
    for b in 0..batch {
        for c in 0..channels {
            out.set(b, c, x.row(b, c).iter().copied().sum::<T>() / n);
        }
    }
    out
}

pub fn global_avg_pool_backward<T: Real>(grad_out: &Matrix<T>, len: usize) -> Tensor3<T> {
    let (batch, channels) = (grad_out.rows(), grad_out.cols());
    let n = T::from_usize_lossy(len);
    let mut gx = Tensor3::zeros(batch, channels, len);
    for b in 0..batch {
        for c in 0..channels {
            gx.row_mut(b, c).fill(grad_out.get(b, c) / n);
        }
    }
    gx
}
