use rand::Rng;

use super::init::glorot_uniform;
use super::tensor::{Matrix, Real};
use super::NnError;

/// Fully connected layer `y = xW + b` with `W` stored `[in * out_dim + out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> DenseParams<T> {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: vec![T::zero(); in_dim * out_dim],
            bias: vec![T::zero(); out_dim],
        }
    }

    pub fn init<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(in_dim, out_dim);
        glorot_uniform(&mut p.weight, in_dim, out_dim, rng);
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.in_dim, self.out_dim)
    }
}

pub fn dense_forward<T: Real>(x: &Matrix<T>, p: &DenseParams<T>) -> Result<Matrix<T>, NnError> {
    if x.cols() != p.in_dim {
        return Err(NnError::ShapeMismatch(format!(
            "dense layer expects {} inputs, got {}",
            p.in_dim,
            x.cols()
        )));
    }
    let mut y = Matrix::zeros(x.rows(), p.out_dim);
    for b in 0..x.rows() {
        let out = y.row_mut(b);
        out.copy_from_slice(&p.bias);
        for (i, &xv) in x.row(b).iter().enumerate() {
            let w = &p.weight[i * p.out_dim..(i + 1) * p.out_dim];
            for (o, &wv) in out.iter_mut().zip(w) {
                *o += xv * wv;
            }
        }
    }
    Ok(y)
}

/// Returns `(grad_x, grads)` given the forward input `x`.
pub fn dense_backward<T: Real>(
    p: &DenseParams<T>,
    x: &Matrix<T>,
    grad_out: &Matrix<T>,
) -> Result<(Matrix<T>, DenseParams<T>), NnError> {
    if grad_out.rows() != x.rows() || grad_out.cols() != p.out_dim || x.cols() != p.in_dim {
        return Err(NnError::ShapeMismatch(
            "dense backward shapes disagree".into(),
        ));
    }
    let mut grads = p.zeros_like();
    let mut gx = Matrix::zeros(x.rows(), p.in_dim);
    for b in 0..x.rows() {
        let g = grad_out.row(b);
        for (gb, &gv) in grads.bias.iter_mut().zip(g) {
            *gb += gv;
        }
        for i in 0..p.in_dim {
            let xv = x.get(b, i);
            let w = &p.weight[i * p.out_dim..(i + 1) * p.out_dim];
            let gw = &mut grads.weight[i * p.out_dim..(i + 1) * p.out_dim];
            let mut acc = T::zero();
            for ((gwv, &wv), &gv) in gw.iter_mut().zip(w).zip(g) {
                *gwv += xv * gv;
                acc += wv * gv;
            }
            gx.set(b, i, acc);
        }
    }
    Ok((gx, grads))
}
