//! Standard normal distribution function and quantile.

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{invalid, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// `Φ(x)`, computed through `erfc` so the lower tail keeps relative accuracy.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `Φ⁻¹(q)` for `q ∈ (0, 1)`.
pub fn normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid(format!("normal quantile needs q in (0, 1), got {q}")));
    }
    let x = -SQRT_2 * erfc_inv(2.0 * q);
    let density = normal_pdf(x);
    if density > 0.0 {
        Ok(x - (normal_cdf(x) - q) / density)
    } else {
        Ok(x)
    }
}
