use rand::Rng;

use super::tensor::Real;

/// Fills `buf` uniformly in `±sqrt(6 / (fan_in + fan_out))`.
///
/// Samples are drawn in `f64` and then cast, so `f32` and `f64` models built
/// from the same seed hold the same values up to rounding.
pub fn glorot_uniform<T: Real, R: Rng + ?Sized>(
    buf: &mut [T],
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in buf.iter_mut() {
        *v = T::lit(rng.gen_range(-limit..limit));
    }
}
