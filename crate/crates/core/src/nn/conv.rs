//! Depthwise-separable and standard 1D convolutions with SAME padding.
//!
//! Both are cross-correlations (no kernel flip). The output length is
//! `ceil(L / stride)`; zero padding is split evenly with the odd sample on
//! the right.

use rand::Rng;

use super::init::glorot_uniform;
use super::tensor::{same_out_len, same_pad_left, Real, Tensor3};
use super::NnError;

/// Depthwise kernel `K×M` (multiplier 1), pointwise kernel `M×N`, bias `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SepConvParams<T> {
    pub kernel_size: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    /// Indexed `[k * in_channels + m]`.
    pub depthwise: Vec<T>,
    /// Indexed `[m * out_channels + n]`.
    pub pointwise: Vec<T>,
    pub bias: Vec<T>,
}

/// Standard convolution with kernel `K×M×N` and bias `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dParams<T> {
    pub kernel_size: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    /// Indexed `[(k * in_channels + m) * out_channels + n]`.
    pub kernel: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct SepConvCache<T> {
    input: Tensor3<T>,
    depthwise_out: Tensor3<T>,
}

#[derive(Debug, Clone)]
pub struct Conv1dCache<T> {
    input: Tensor3<T>,
}

fn check_geometry(
    kernel_size: usize,
    in_channels: usize,
    out_channels: usize,
    stride: usize,
) -> Result<(), NnError> {
    if kernel_size == 0 || in_channels == 0 || out_channels == 0 {
        return Err(NnError::InvalidParams(format!(
            "convolution needs K, M, N >= 1 (got {kernel_size}, {in_channels}, {out_channels})"
        )));
    }
    if stride == 0 {
        return Err(NnError::InvalidParams("stride must be positive".into()));
    }
    Ok(())
}

/// Range of output positions `o` for which tap `k` reads inside `[0, len)`.
#[inline]
fn valid_outputs(
    k: usize,
    pad_left: usize,
    stride: usize,
    len: usize,
    out_len: usize,
) -> (usize, usize) {
    // input index = o * stride + k - pad_left
    let lo = if pad_left > k {
        (pad_left - k).div_ceil(stride)
    } else {
        0
    };
    let limit = len + pad_left; // o * stride + k < limit
    let hi = if limit > k {
        ((limit - k - 1) / stride + 1).min(out_len)
    } else {
        0
    };
    (lo, hi.max(lo))
}

impl<T: Real> SepConvParams<T> {
    pub fn zeros(
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
    ) -> Self {
        Self {
            kernel_size,
            in_channels,
            out_channels,
            stride,
            depthwise: vec![T::zero(); kernel_size * in_channels],
            pointwise: vec![T::zero(); in_channels * out_channels],
            bias: vec![T::zero(); out_channels],
        }
    }

    /// Glorot-uniform kernels, zero bias. Depthwise fans follow the
    /// `(K, M, 1)` kernel shape.
    pub fn init<R: Rng + ?Sized>(
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(kernel_size, in_channels, out_channels, stride);
        glorot_uniform(
            &mut p.depthwise,
            kernel_size * in_channels,
            kernel_size,
            rng,
        );
        glorot_uniform(&mut p.pointwise, in_channels, out_channels, rng);
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(
            self.kernel_size,
            self.in_channels,
            self.out_channels,
            self.stride,
        )
    }

    pub fn validate(&self) -> Result<(), NnError> {
        check_geometry(
            self.kernel_size,
            self.in_channels,
            self.out_channels,
            self.stride,
        )?;
        if self.depthwise.len() != self.kernel_size * self.in_channels
            || self.pointwise.len() != self.in_channels * self.out_channels
            || self.bias.len() != self.out_channels
        {
            return Err(NnError::InvalidParams(
                "separable conv arrays disagree with declared geometry".into(),
            ));
        }
        Ok(())
    }
}

impl<T: Real> Conv1dParams<T> {
    pub fn zeros(
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
    ) -> Self {
        Self {
            kernel_size,
            in_channels,
            out_channels,
            stride,
            kernel: vec![T::zero(); kernel_size * in_channels * out_channels],
            bias: vec![T::zero(); out_channels],
        }
    }

    pub fn init<R: Rng + ?Sized>(
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(kernel_size, in_channels, out_channels, stride);
        glorot_uniform(
            &mut p.kernel,
            kernel_size * in_channels,
            kernel_size * out_channels,
            rng,
        );
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(
            self.kernel_size,
            self.in_channels,
            self.out_channels,
            self.stride,
        )
    }

    pub fn validate(&self) -> Result<(), NnError> {
        check_geometry(
            self.kernel_size,
            self.in_channels,
            self.out_channels,
            self.stride,
        )?;
        if self.kernel.len() != self.kernel_size * self.in_channels * self.out_channels
            || self.bias.len() != self.out_channels
        {
            return Err(NnError::InvalidParams(
                "conv arrays disagree with declared geometry".into(),
            ));
        }
        Ok(())
    }
}

fn check_input<T: Real>(x: &Tensor3<T>, in_channels: usize) -> Result<(), NnError> {
    if x.channels() != in_channels {
        return Err(NnError::ShapeMismatch(format!(
            "convolution expects {in_channels} input channels, got {}",
            x.channels()
        )));
    }
    if x.length() == 0 {
        return Err(NnError::ShapeMismatch(
            "convolution input has zero length".into(),
        ));
    }
    Ok(())
}

fn depthwise_forward<T: Real>(x: &Tensor3<T>, p: &SepConvParams<T>) -> Tensor3<T> {
    let (batch, m_ch, len) = x.shape();
    let k_size = p.kernel_size;
    let stride = p.stride;
    let out_len = same_out_len(len, stride);
    let pad = same_pad_left(len, k_size, stride);
    let mut out = Tensor3::zeros(batch, m_ch, out_len);
    for b in 0..batch {
        for m in 0..m_ch {
            let src = x.row(b, m);
            let dst = out.row_mut(b, m);
            for k in 0..k_size {
                let w = p.depthwise[k * m_ch + m];
                let (lo, hi) = valid_outputs(k, pad, stride, len, out_len);
                for (o, d) in dst.iter_mut().enumerate().take(hi).skip(lo) {
                    *d += w * src[o * stride + k - pad];
                }
            }
        }
    }
    out
}

fn pointwise_forward<T: Real>(d: &Tensor3<T>, p: &SepConvParams<T>) -> Tensor3<T> {
    let (batch, m_ch, len) = d.shape();
    let n_ch = p.out_channels;
    let mut out = Tensor3::zeros(batch, n_ch, len);
    for b in 0..batch {
        for n in 0..n_ch {
            let dst = out.row_mut(b, n);
            dst.fill(p.bias[n]);
            for m in 0..m_ch {
                let w = p.pointwise[m * n_ch + n];
                for (o, &v) in dst.iter_mut().zip(d.row(b, m)) {
                    *o += w * v;
                }
            }
        }
    }
    out
}

/// Depthwise stage (stride applied here) followed by the 1×1 pointwise mix.
pub fn sepconv1d_forward<T: Real>(
    x: &Tensor3<T>,
    p: &SepConvParams<T>,
) -> Result<(Tensor3<T>, SepConvCache<T>), NnError> {
    p.validate()?;
    check_input(x, p.in_channels)?;
    let d = depthwise_forward(x, p);
    let y = pointwise_forward(&d, p);
    Ok((
        y,
        SepConvCache {
            input: x.clone(),
            depthwise_out: d,
        },
    ))
}

pub fn sepconv1d_backward<T: Real>(
    p: &SepConvParams<T>,
    cache: &SepConvCache<T>,
    grad_out: &Tensor3<T>,
) -> Result<(Tensor3<T>, SepConvParams<T>), NnError> {
    let x = &cache.input;
    let d = &cache.depthwise_out;
    let (batch, m_ch, len) = x.shape();
    let n_ch = p.out_channels;
    let out_len = d.length();
    if grad_out.shape() != (batch, n_ch, out_len) {
        return Err(NnError::ShapeMismatch(format!(
            "separable conv backward expects gradient {:?}, got {:?}",
            (batch, n_ch, out_len),
            grad_out.shape()
        )));
    }
    let mut grads = p.zeros_like();

    // pointwise adjoint
    let mut grad_d = Tensor3::zeros(batch, m_ch, out_len);
    for b in 0..batch {
        for n in 0..n_ch {
            let g = grad_out.row(b, n);
            grads.bias[n] += g.iter().copied().sum::<T>();
            for m in 0..m_ch {
                let dm = d.row(b, m);
                let mut acc = T::zero();
                for (&gv, &dv) in g.iter().zip(dm) {
                    acc += gv * dv;
                }
                grads.pointwise[m * n_ch + n] += acc;
                let w = p.pointwise[m * n_ch + n];
                for (gd, &gv) in grad_d.row_mut(b, m).iter_mut().zip(g) {
                    *gd += w * gv;
                }
            }
        }
    }

    // depthwise adjoint
    let stride = p.stride;
    let pad = same_pad_left(len, p.kernel_size, stride);
    let mut grad_x = Tensor3::zeros(batch, m_ch, len);
    for b in 0..batch {
        for m in 0..m_ch {
            let src = x.row(b, m);
            let gd = grad_d.row(b, m);
            for k in 0..p.kernel_size {
                let (lo, hi) = valid_outputs(k, pad, stride, len, out_len);
                let w = p.depthwise[k * m_ch + m];
                let mut acc = T::zero();
                let gx = grad_x.row_mut(b, m);
                for (o, &g) in gd.iter().enumerate().take(hi).skip(lo) {
                    let i = o * stride + k - pad;
                    acc += g * src[i];
                    gx[i] += w * g;
                }
                grads.depthwise[k * m_ch + m] += acc;
            }
        }
    }
    Ok((grad_x, grads))
}

pub fn conv1d_forward<T: Real>(
    x: &Tensor3<T>,
    p: &Conv1dParams<T>,
) -> Result<(Tensor3<T>, Conv1dCache<T>), NnError> {
    p.validate()?;
    check_input(x, p.in_channels)?;
    let (batch, m_ch, len) = x.shape();
    let n_ch = p.out_channels;
    let stride = p.stride;
    let out_len = same_out_len(len, stride);
    let pad = same_pad_left(len, p.kernel_size, stride);
    let mut y = Tensor3::zeros(batch, n_ch, out_len);
    for b in 0..batch {
        for n in 0..n_ch {
            let dst = y.row_mut(b, n);
            dst.fill(p.bias[n]);
            for k in 0..p.kernel_size {
                let (lo, hi) = valid_outputs(k, pad, stride, len, out_len);
                for m in 0..m_ch {
                    let w = p.kernel[(k * m_ch + m) * n_ch + n];
                    let src = x.row(b, m);
                    for (o, v) in dst.iter_mut().enumerate().take(hi).skip(lo) {
                        *v += w * src[o * stride + k - pad];
                    }
                }
            }
        }
    }
    Ok((y, Conv1dCache { input: x.clone() }))
}

pub fn conv1d_backward<T: Real>(
    p: &Conv1dParams<T>,
    cache: &Conv1dCache<T>,
    grad_out: &Tensor3<T>,
) -> Result<(Tensor3<T>, Conv1dParams<T>), NnError> {
    let x = &cache.input;
    let (batch, m_ch, len) = x.shape();
    let n_ch = p.out_channels;
    let stride = p.stride;
    let out_len = same_out_len(len, stride);
    if grad_out.shape() != (batch, n_ch, out_len) {
        return Err(NnError::ShapeMismatch(format!(
            "conv backward expects gradient {:?}, got {:?}",
            (batch, n_ch, out_len),
            grad_out.shape()
        )));
    }
    let pad = same_pad_left(len, p.kernel_size, stride);
    let mut grads = p.zeros_like();
    let mut grad_x = Tensor3::zeros(batch, m_ch, len);
    for b in 0..batch {
        for n in 0..n_ch {
            let g = grad_out.row(b, n);
            grads.bias[n] += g.iter().copied().sum::<T>();
            for k in 0..p.kernel_size {
                let (lo, hi) = valid_outputs(k, pad, stride, len, out_len);
                for m in 0..m_ch {
                    let idx = (k * m_ch + m) * n_ch + n;
                    let w = p.kernel[idx];
                    let src = x.row(b, m);
                    let mut acc = T::zero();
                    let gx = grad_x.row_mut(b, m);
                    for (o, &gv) in g.iter().enumerate().take(hi).skip(lo) {
                        let i = o * stride + k - pad;
                        acc += gv * src[i];
                        gx[i] += w * gv;
                    }
                    grads.kernel[idx] += acc;
                }
            }
        }
    }
    Ok((grad_x, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(b: usize, c: usize, l: usize, v: &[f64]) -> Tensor3<f64> {
        Tensor3::from_vec(b, c, l, v.to_vec()).unwrap()
    }

    #[test]
    fn hand_convolution_then_pointwise_scale() {
        let mut p = SepConvParams::<f64>::zeros(3, 1, 1, 1);
        p.depthwise = vec![1.0, 1.0, 1.0];
        p.pointwise = vec![2.0];
        let (y, _) = sepconv1d_forward(&t(1, 1, 4, &[1.0, 2.0, 3.0, 4.0]), &p).unwrap();
        assert_eq!(y.data(), &[6.0, 12.0, 18.0, 14.0]);
    }

    #[test]
    fn identity_configuration_passes_input_through() {
        let m = 3;
        let mut p = SepConvParams::<f64>::zeros(3, m, m, 1);
        for ch in 0..m {
            p.depthwise[m + ch] = 1.0; // centre tap
            p.pointwise[ch * m + ch] = 1.0;
        }
        let x = t(
            2,
            3,
            5,
            &(0..30).map(|v| v as f64 - 7.5).collect::<Vec<_>>(),
        );
        let (y, cache) = sepconv1d_forward(&x, &p).unwrap();
        assert_eq!(y, x);
        let g = t(
            2,
            3,
            5,
            &(0..30).map(|v| (v as f64).sin()).collect::<Vec<_>>(),
        );
        let (gx, _) = sepconv1d_backward(&p, &cache, &g).unwrap();
        assert_eq!(gx, g);
    }

    #[test]
    fn strided_output_length_is_ceil() {
        let p = SepConvParams::<f64>::zeros(3, 1, 2, 2);
        let (y, _) = sepconv1d_forward(&Tensor3::zeros(1, 1, 5), &p).unwrap();
        assert_eq!(y.shape(), (1, 2, 3));
        let q = Conv1dParams::<f64>::zeros(1, 1, 2, 4);
        let (y, _) = conv1d_forward(&Tensor3::zeros(1, 1, 5), &q).unwrap();
        assert_eq!(y.length(), 2);
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_gradients() {
        let mut rng = rand::rngs::mock::StepRng::new(3, 7);
        let p = SepConvParams::<f64>::init(3, 2, 3, 2, &mut rng);
        let x = t(
            1,
            2,
            6,
            &[1.0, -2.0, 0.5, 3.0, -1.0, 2.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
        );
        let (y, cache) = sepconv1d_forward(&x, &p).unwrap();
        let (gx, gp) = sepconv1d_backward(&p, &cache, &Tensor3::zeros(1, 3, y.length())).unwrap();
        assert!(gx.data().iter().all(|&v| v == 0.0));
        assert!(gp
            .depthwise
            .iter()
            .chain(&gp.pointwise)
            .chain(&gp.bias)
            .all(|&v| v == 0.0));
    }

    #[test]
    fn standard_conv_hand_example() {
        let mut p = Conv1dParams::<f64>::zeros(3, 1, 1, 1);
        p.kernel = vec![1.0, 0.0, -1.0];
        let (y, _) = conv1d_forward(&t(1, 1, 3, &[1.0, 2.0, 3.0]), &p).unwrap();
        assert_eq!(y.data(), &[-2.0, -2.0, 2.0]);
    }

    #[test]
    fn width_one_standard_conv_equals_pointwise_only_separable() {
        let mut sep = SepConvParams::<f64>::zeros(1, 2, 3, 1);
        sep.depthwise = vec![1.0, 1.0];
        sep.pointwise = vec![0.5, -1.0, 2.0, 1.5, 0.25, -0.75];
        sep.bias = vec![0.1, 0.2, 0.3];
        let mut std = Conv1dParams::<f64>::zeros(1, 2, 3, 1);
        std.kernel = sep.pointwise.clone();
        std.bias = sep.bias.clone();
        let x = t(1, 2, 4, &[1.0, 2.0, 3.0, 4.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(
            sepconv1d_forward(&x, &sep).unwrap().0,
            conv1d_forward(&x, &std).unwrap().0
        );
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let p = SepConvParams::<f64>::zeros(3, 2, 2, 1);
        assert!(matches!(
            sepconv1d_forward(&Tensor3::zeros(1, 3, 4), &p),
            Err(NnError::ShapeMismatch(_))
        ));
    }
}
