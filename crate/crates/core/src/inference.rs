//! Hypothesis tests built on the studentized statistic, plus the
//! permutation baseline on the raw MMD U-statistic.

use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimators::{studentized_statistic, SplitEvaluator};
use crate::kernels::{gram_pooled, GramBundle, KernelFamily, ResolvedKernel};
use crate::matrix::DataMatrix;
use crate::normal::{normal_cdf, normal_quantile};
use crate::rng::stream_rng;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Asymptotic,
    Permutation,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Asymptotic => "asymptotic",
            Method::Permutation => "permutation",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "asymptotic" | "normal" => Ok(Method::Asymptotic),
            "permutation" | "perm" => Ok(Method::Permutation),
            other => Err(invalid(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub method: Method,
    pub kernel: Option<KernelFamily>,
    pub bandwidth: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// `T` for the asymptotic test, the MMD U-statistic for the permutation test.
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn describe_kernel<T: Scalar>(g: &GramBundle<T>) -> (Option<KernelFamily>, Option<f64>) {
    match g.kernel() {
        Some(k) => (Some(k.family()), k.bandwidth().map(Scalar::as_f64)),
        None => (None, None),
    }
}

/// One-sided normal calibration: `p = 1 − Φ(T)`, reject when `T > z_{1−α}`.
pub fn asymptotic_test<T: Scalar>(g: &GramBundle<T>, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let stat = studentized_statistic(g)?;
    let t = stat.t.as_f64();
    let critical = normal_quantile(1.0 - alpha)?;
    let (kernel, bandwidth) = describe_kernel(g);
    Ok(TestResult {
        method: Method::Asymptotic,
        kernel,
        bandwidth,
        n: g.n(),
        m: g.m(),
        p: g.dim(),
        statistic: t,
        p_value: normal_cdf(-t),
        alpha,
        reject: t > critical,
        permutations: None,
        seed: None,
    })
}

/// Permutation test on the MMD U-statistic.
///
/// The Gram matrix is built once (so a median-heuristic bandwidth is frozen
/// at its value on the original pooled sample) and each of the `b`
/// replicates relabels its rows. Replicate `i` draws its partition from the
/// stream `(seed, i)`. `p = (1 + #{E_b ≥ E_obs}) / (b + 1)`; reject when `p ≤ α`.
pub fn permutation_test<T: Scalar>(
    kernel: &ResolvedKernel<T>,
    x: &DataMatrix<T>,
    y: &DataMatrix<T>,
    permutations: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let g = gram_pooled(kernel, x, y)?;
    permutation_test_gram(&g, permutations, alpha, seed)
}

pub fn permutation_test_gram<T: Scalar>(
    g: &GramBundle<T>,
    permutations: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if permutations == 0 {
        return Err(invalid("permutation test needs at least one permutation"));
    }
    let eval = SplitEvaluator::new(g)?;
    let observed = eval.eval_original();
    let (n, size) = (g.n(), g.size());
    let exceed = (0..permutations as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            let mut idx: Vec<usize> = (0..size).collect();
            idx.partial_shuffle(&mut rng, n);
            let (xs, ys) = idx.split_at_mut(n);
            xs.sort_unstable();
            ys.sort_unstable();
            eval.eval(xs, ys) >= observed
        })
        .filter(|&hit| hit)
        .count();
    let p_value = (1 + exceed) as f64 / (permutations + 1) as f64;
    let (kernel, bandwidth) = describe_kernel(g);
    Ok(TestResult {
        method: Method::Permutation,
        kernel,
        bandwidth,
        n: g.n(),
        m: g.m(),
        p: g.dim(),
        statistic: observed.as_f64(),
        p_value,
        alpha,
        reject: p_value <= alpha,
        permutations: Some(permutations),
        seed: Some(seed),
    })
}
