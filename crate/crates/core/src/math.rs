//! Float helpers that are not available in `core`.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Logistic `1 / (1 + e^z)` evaluated without overflow.
#[inline]
pub fn inv_one_plus_exp(z: f64) -> f64 {
    if z >= 0.0 {
        let e = exp(-z);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + exp(z))
    }
}
