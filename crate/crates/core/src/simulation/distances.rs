//! Distances between an empirical sample and the standard normal law.

use crate::error::{invalid, Result};
use crate::normal::{normal_cdf, normal_quantile};

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(invalid("distance to N(0,1) needs at least one sample"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite sample"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov–Smirnov statistic `sup_x |F̂(x) − Φ(x)|`.
pub fn ks_distance_normal(samples: &[f64]) -> Result<f64> {
    let v = sorted(samples)?;
    let r = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = normal_cdf(x);
        let above = (i + 1) as f64 / r - f;
        let below = f - i as f64 / r;
        d.max(above).max(below)
    }))
}

/// Wasserstein-1 distance to N(0,1), matching order statistics with the
/// normal quantiles at the midpoints `(i − 0.5)/R`.
pub fn wasserstein_normal(samples: &[f64]) -> Result<f64> {
    let v = sorted(samples)?;
    let r = v.len() as f64;
    let mut acc = 0.0;
    for (i, &x) in v.iter().enumerate() {
        acc += (x - normal_quantile((i as f64 + 0.5) / r)?).abs();
    }
    Ok(acc / r)
}
