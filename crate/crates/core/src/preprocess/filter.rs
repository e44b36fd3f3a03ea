//! Butterworth band-pass design as cascaded second-order sections, and
//! zero-phase forward-backward filtering.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::PreprocessError;

/// `(b0, b1, b2, a1, a2)` with `a0 = 1`.
pub type Section = [f64; 5];

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub sections: Vec<Section>,
    pub low_hz: f64,
    pub high_hz: f64,
    pub order: usize,
    pub sample_rate_hz: f64,
}

impl FilterSpec {
    /// Complex response of the cascade at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        self.sections
            .iter()
            .map(|s| (s[0] + s[1] * z1 + s[2] * z2) / (1.0 + s[3] * z1 + s[4] * z2))
            .product()
    }

    /// Every section has both poles strictly inside the unit circle
    /// (Jury conditions for `z² + a1·z + a2`).
    pub fn is_stable(&self) -> bool {
        self.sections
            .iter()
            .all(|s| s[4].abs() < 1.0 && s[3].abs() < 1.0 + s[4])
    }

    /// Largest pole magnitude over all sections.
    pub fn pole_radius(&self) -> f64 {
        self.sections
            .iter()
            .map(|s| {
                let (a1, a2) = (s[3], s[4]);
                let disc = a1 * a1 - 4.0 * a2;
                if disc < 0.0 {
                    a2.sqrt()
                } else {
                    (a1.abs() + disc.sqrt()) / 2.0
                }
            })
            .fold(0.0, f64::max)
    }

    /// Samples until the slowest pole decays to `IMPULSE_DECAY`.
    pub fn impulse_len(&self) -> usize {
        let r = self.pole_radius();
        if r <= 0.0 {
            return 1;
        }
        (IMPULSE_DECAY.ln() / r.ln()).ceil().max(1.0) as usize
    }

    /// Edge-padding length used by [`filtfilt`]: three impulse lengths.
    pub fn pad_len(&self) -> usize {
        3 * self.impulse_len()
    }

    /// Shortest signal [`filtfilt`] accepts.
    pub fn min_len(&self) -> usize {
        3 * self.order + 1
    }
}

/// Envelope level that defines the impulse length.
const IMPULSE_DECAY: f64 = 1e-3;

/// Butterworth band-pass of the given prototype order: `order` conjugate
/// pole pairs, each section holding one zero at `z = 1` and one at `z = -1`.
/// Cutoffs are pre-warped before the bilinear transform, so the response is
/// exactly `1/√2` at both edges.
pub fn design_bandpass(
    low_hz: f64,
    high_hz: f64,
    sample_rate_hz: f64,
    order: usize,
) -> Result<FilterSpec, PreprocessError> {
    let nyquist = sample_rate_hz / 2.0;
    if !(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist) || order == 0 {
        return Err(PreprocessError::InvalidBand {
            low_hz,
            high_hz,
            sample_rate_hz,
        });
    }
    let fs2 = 2.0 * sample_rate_hz;
    let warp = |f: f64| fs2 * (PI * f / sample_rate_hz).tan();
    let (w_lo, w_hi) = (warp(low_hz), warp(high_hz));
    let bandwidth = w_hi - w_lo;
    let centre = (w_lo * w_hi).sqrt();

    // analog low-pass prototype poles, left half plane
    let n = order as f64;
    let mut poles = Vec::with_capacity(2 * order);
    for k in 0..order {
        let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
        let p = Complex64::from_polar(1.0, theta) * (bandwidth / 2.0);
        let root = (p * p - centre * centre).sqrt();
        for s in [p + root, p - root] {
            poles.push((fs2 + s) / (fs2 - s));
        }
    }

    // pair conjugates; leftover real poles are paired together
    let mut upper: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > 1e-12).collect();
    let mut real: Vec<f64> = poles
        .iter()
        .filter(|p| p.im.abs() <= 1e-12)
        .map(|p| p.re)
        .collect();
    upper.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    real.sort_by(f64::total_cmp);
    let mut denominators: Vec<(f64, f64)> =
        upper.iter().map(|p| (-2.0 * p.re, p.norm_sqr())).collect();
    for pair in real.chunks(2) {
        let (p1, p2) = (pair[0], *pair.get(1).unwrap_or(&0.0));
        denominators.push((-(p1 + p2), p1 * p2));
    }

    // unit gain per section at the digital image of the analog centre
    let f_centre = sample_rate_hz / PI * (centre / fs2).atan();
    let w = 2.0 * PI * f_centre / sample_rate_hz;
    let z1 = Complex64::from_polar(1.0, -w);
    let z2 = z1 * z1;
    let sections = denominators
        .into_iter()
        .map(|(a1, a2)| {
            let raw = (1.0 - z2) / (1.0 + a1 * z1 + a2 * z2);
            let g = 1.0 / raw.norm();
            [g, 0.0, -g, a1, a2]
        })
        .collect();
    let spec = FilterSpec {
        sections,
        low_hz,
        high_hz,
        order,
        sample_rate_hz,
    };
    debug_assert!(spec.is_stable());
    Ok(spec)
}

/// Transposed direct-form II cascade with initial state `zi` (two values
/// per section), updated in place.
fn sosfilt(sections: &[Section], x: &[f64], zi: &mut [[f64; 2]]) -> Vec<f64> {
    let mut y = x.to_vec();
    for (s, z) in sections.iter().zip(zi.iter_mut()) {
        let [b0, b1, b2, a1, a2] = *s;
        for v in y.iter_mut() {
            let input = *v;
            let out = b0 * input + z[0];
            z[0] = b1 * input - a1 * out + z[1];
            z[1] = b2 * input - a2 * out;
            *v = out;
        }
    }
    y
}

/// Per-section state that makes the cascade's response to a unit step start
/// in steady state.
fn step_initial_state(sections: &[Section]) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    sections
        .iter()
        .map(|s| {
            let [b0, b1, b2, a1, a2] = *s;
            let gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
            let z1 = b2 - a2 * gain;
            let z0 = b1 - a1 * gain + z1;
            let zi = [scale * z0, scale * z1];
            scale *= gain;
            zi
        })
        .collect()
}

/// Sample `j` of `x` extended past both ends by repeated odd reflection
/// about the end points. Needs at least two samples.
fn odd_extended(x: &[f64], mut j: isize) -> f64 {
    let last = x.len() as isize - 1;
    let (mut sign, mut offset) = (1.0, 0.0);
    loop {
        if j < 0 {
            offset += sign * 2.0 * x[0];
            sign = -sign;
            j = -j;
        } else if j > last {
            offset += sign * 2.0 * x[last as usize];
            sign = -sign;
            j = 2 * last - j;
        } else {
            return offset + sign * x[j as usize];
        }
    }
}

/// Zero-phase filtering: odd-reflection padding of three impulse lengths at
/// both ends, forward pass, backward pass, padding removed. Output length
/// equals input length. The long padding lets start-up transients die out
/// before they reach the signal, so the result commutes with time reversal.
pub fn filtfilt(signal: &[f64], spec: &FilterSpec) -> Result<Vec<f64>, PreprocessError> {
    let n = signal.len();
    let min = spec.min_len().max(2);
    if n < min {
        return Err(PreprocessError::SignalTooShort { len: n, min });
    }
    let pad = spec.pad_len();
    let ext: Vec<f64> = (-(pad as isize)..(n + pad) as isize)
        .map(|j| odd_extended(signal, j))
        .collect();

    let zi = step_initial_state(&spec.sections);
    let scaled = |v: f64| zi.iter().map(|z| [z[0] * v, z[1] * v]).collect::<Vec<_>>();

    let mut state = scaled(ext[0]);
    let mut y = sosfilt(&spec.sections, &ext, &mut state);
    y.reverse();
    let mut state = scaled(y[0]);
    let mut y = sosfilt(&spec.sections, &y, &mut state);
    y.reverse();
    Ok(y[pad..pad + n].to_vec())
}

/// Convenience wrapper for `f32` signals; arithmetic stays in `f64`.
pub fn filtfilt_f32(signal: &[f32], spec: &FilterSpec) -> Result<Vec<f32>, PreprocessError> {
    let wide: Vec<f64> = signal.iter().map(|&v| f64::from(v)).collect();
    Ok(filtfilt(&wide, spec)?
        .into_iter()
        .map(|v| v as f32)
        .collect())
}
