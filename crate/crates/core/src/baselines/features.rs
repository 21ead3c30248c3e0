use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::formula::Formula;
use crate::math;
use crate::robustness::{rho, DEFAULT_INF_SENTINEL};
use crate::signal::{ChannelKind, Signal};
use crate::Result;

pub const NUM_BINS: usize = 5;
pub const NUM_FEATURES: usize = NUM_BINS + 1;

pub type FeatureVector = [f64; NUM_FEATURES];

/// Five Fourier-magnitude bin means followed by the traditional robustness.
///
/// Magnitude spectra (divided by the trace length) are averaged over the
/// real channels; frequencies `0..=n/2` are split into five contiguous bins
/// of near-equal size. Infinite robustness is clamped to `±1e6`.
pub fn feature_vector(s: &Signal, phi_stl: &Formula) -> Result<FeatureVector> {
    let spectrum = mean_spectrum(s);
    let mut out = [0.0; NUM_FEATURES];
    let m = spectrum.len();
    for (b, slot) in out.iter_mut().take(NUM_BINS).enumerate() {
        let (lo, hi) = (b * m / NUM_BINS, (b + 1) * m / NUM_BINS);
        if hi > lo {
            *slot = spectrum[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        }
    }
    let r = rho(s, phi_stl, 0)?;
    out[NUM_BINS] = r.clamp(-DEFAULT_INF_SENTINEL, DEFAULT_INF_SENTINEL);
    Ok(out)
}

fn mean_spectrum(s: &Signal) -> Vec<f64> {
    let n = s.len();
    let m = n / 2 + 1;
    let mut acc = vec![0.0; m];
    let mut count = 0;
    for (i, ch) in s.channels().iter().enumerate() {
        if ch.kind != ChannelKind::Real {
            continue;
        }
        count += 1;
        let x = s.row(i);
        for (k, a) in acc.iter_mut().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &xj) in x.iter().enumerate() {
                // Reduce jk mod n first to keep the angle small.
                let angle = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                re += xj * math::cos(angle);
                im += xj * math::sin(angle);
            }
            *a += math::sqrt(re * re + im * im) / n as f64;
        }
    }
    if count > 0 {
        acc.iter_mut().for_each(|a| *a /= count as f64);
    }
    acc
}
