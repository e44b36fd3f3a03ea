//! Dense row-major tensors used by every kernel.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

use super::NnError;

/// Scalar type accepted by the kernels. Training runs in `f32`; gradient
/// checks instantiate the same code with `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Default
    + Debug
    + Send
    + Sync
    + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal fits in scalar type")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("count fits in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Rank-3 array laid out as (batch, channels, length).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    batch: usize,
    channels: usize,
    length: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor3<T> {
    pub fn zeros(batch: usize, channels: usize, length: usize) -> Self {
        Self {
            batch,
            channels,
            length,
            data: vec![T::zero(); batch * channels * length],
        }
    }

    pub fn from_vec(
        batch: usize,
        channels: usize,
        length: usize,
        data: Vec<T>,
    ) -> Result<Self, NnError> {
        if data.len() != batch * channels * length {
            return Err(NnError::ShapeMismatch(format!(
                "buffer of {} values cannot be viewed as {batch}x{channels}x{length}",
                data.len()
            )));
        }
        Ok(Self {
            batch,
            channels,
            length,
            data,
        })
    }

    pub fn filled(batch: usize, channels: usize, length: usize, value: T) -> Self {
        Self {
            batch,
            channels,
            length,
            data: vec![value; batch * channels * length],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.batch, self.channels, self.length)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, b: usize, c: usize, l: usize) -> usize {
        (b * self.channels + c) * self.length + l
    }

    pub fn get(&self, b: usize, c: usize, l: usize) -> T {
        self.data[self.index(b, c, l)]
    }

    pub fn set(&mut self, b: usize, c: usize, l: usize, v: T) {
        let i = self.index(b, c, l);
        self.data[i] = v;
    }

    /// The `length`-long row for one (batch, channel) pair.
    pub fn row(&self, b: usize, c: usize) -> &[T] {
        let start = self.index(b, c, 0);
        &self.data[start..start + self.length]
    }

    pub fn row_mut(&mut self, b: usize, c: usize) -> &mut [T] {
        let start = self.index(b, c, 0);
        let len = self.length;
        &mut self.data[start..start + len]
    }

    /// Copies channel `c` of every batch item into a `B×1×L` tensor.
    pub fn select_channel(&self, c: usize) -> Tensor3<T> {
        let mut out = Tensor3::zeros(self.batch, 1, self.length);
        for b in 0..self.batch {
            out.row_mut(b, 0).copy_from_slice(self.row(b, c));
        }
        out
    }

    pub fn add_assign(&mut self, other: &Tensor3<T>) -> Result<(), NnError> {
        if self.shape() != other.shape() {
            return Err(NnError::ShapeMismatch(format!(
                "cannot add {:?} to {:?}",
                other.shape(),
                self.shape()
            )));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Tensor3<U> {
        Tensor3 {
            batch: self.batch,
            channels: self.channels,
            length: self.length,
            data: self
                .data
                .iter()
                .map(|v| U::from_f64(v.to_f64().unwrap_or(f64::NAN)).unwrap_or(U::nan()))
                .collect(),
        }
    }
}

/// Rank-2 array laid out as (rows, cols); used for pooled features,
/// dense activations and logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, NnError> {
        if data.len() != rows * cols {
            return Err(NnError::ShapeMismatch(format!(
                "buffer of {} values cannot be viewed as {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        let cols = self.cols;
        &mut self.data[r * cols..(r + 1) * cols]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Output length of a SAME-padded window with the given stride.
#[inline]
pub fn same_out_len(len: usize, stride: usize) -> usize {
    len.div_ceil(stride)
}

/// Leading pad for a SAME-padded window: total padding split evenly, the
/// odd sample going to the right.
#[inline]
pub fn same_pad_left(len: usize, window: usize, stride: usize) -> usize {
    let out = same_out_len(len, stride);
    let needed = (out.saturating_sub(1)) * stride + window;
    needed.saturating_sub(len) / 2
}
