//! Log-sum-exp smoothing of `max` and `min`.

use crate::math;

/// `(1/β) · ln Σ exp(β·x_i)`, evaluated around the maximum so that large `β`
/// cannot overflow. A single element is returned unchanged.
///
/// # Panics
///
/// Panics if `xs` is empty.
pub fn soft_max(xs: &[f64], beta: f64) -> f64 {
    assert!(!xs.is_empty(), "soft_max of an empty set");
    if xs.len() == 1 {
        return xs[0];
    }
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = xs.iter().map(|&x| math::exp(beta * (x - m))).sum();
    m + math::ln(sum) / beta
}

/// `-soft_max(-xs)`.
pub fn soft_min(xs: &[f64], beta: f64) -> f64 {
    assert!(!xs.is_empty(), "soft_min of an empty set");
    if xs.len() == 1 {
        return xs[0];
    }
    let m = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let sum: f64 = xs.iter().map(|&x| math::exp(-beta * (x - m))).sum();
    m - math::ln(sum) / beta
}

/// Writes `∂ soft_max / ∂ x_i` (a probability vector) into `out`.
pub(crate) fn soft_max_weights(xs: &[f64], beta: f64, sign: f64, out: &mut [f64]) {
    if xs.len() == 1 {
        out[0] = 1.0;
        return;
    }
    let m = xs.iter().map(|&x| sign * x).fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &x) in out.iter_mut().zip(xs) {
        *o = math::exp(beta * (sign * x - m));
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}
