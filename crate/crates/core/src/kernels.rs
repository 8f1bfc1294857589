//! Kernel functions, bandwidth selection and the pooled Gram matrix.
//!
//! The Gaussian and Laplacian kernels are stored negated,
//! `k(x, y) = -exp(-|x - y|² / (2γ²))` and `k(x, y) = -exp(-|x - y| / γ)`,
//! so that they sit in the same "distance-like" class as the `L2` and `L1`
//! norms. Every downstream formula is then family-agnostic; the only place the
//! family leaks through is the self-value `a0 = k(x, x)`, which is `0` for the
//! norms and `-1` for the exponential kernels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::DataMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    L2,
    L1,
    Gaussian,
    Laplacian,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 4] =
        [KernelFamily::L2, KernelFamily::L1, KernelFamily::Gaussian, KernelFamily::Laplacian];

    /// `k(x, x)`, fixed by the family.
    pub fn self_value(self) -> f64 {
        match self {
            KernelFamily::L2 | KernelFamily::L1 => 0.0,
            KernelFamily::Gaussian | KernelFamily::Laplacian => -1.0,
        }
    }

    pub fn uses_bandwidth(self) -> bool {
        matches!(self, KernelFamily::Gaussian | KernelFamily::Laplacian)
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::L2 => "l2",
            KernelFamily::L1 => "l1",
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplacian => "laplacian",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(KernelFamily::L2),
            "l1" => Ok(KernelFamily::L1),
            "gaussian" | "g" => Ok(KernelFamily::Gaussian),
            "laplacian" | "l" => Ok(KernelFamily::Laplacian),
            other => Err(invalid(format!("unknown kernel family '{other}'"))),
        }
    }
}

/// How the bandwidth γ of a Gaussian or Laplacian kernel is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    Fixed(f64),
    #[serde(alias = "median_heuristic")]
    Median,
}

impl FromStr for Bandwidth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("median") {
            return Ok(Bandwidth::Median);
        }
        let v: f64 =
            s.parse().map_err(|_| invalid(format!("bandwidth must be 'median' or a positive number, got '{s}'")))?;
        Ok(Bandwidth::Fixed(v))
    }
}

/// Declarative kernel choice. `bandwidth` must be absent for the norms and
/// defaults to the median heuristic for the exponential kernels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<Bandwidth>,
}

impl KernelSpec {
    pub fn l2() -> Self {
        Self { family: KernelFamily::L2, bandwidth: None }
    }

    pub fn l1() -> Self {
        Self { family: KernelFamily::L1, bandwidth: None }
    }

    pub fn gaussian(bandwidth: Bandwidth) -> Self {
        Self { family: KernelFamily::Gaussian, bandwidth: Some(bandwidth) }
    }

    pub fn laplacian(bandwidth: Bandwidth) -> Self {
        Self { family: KernelFamily::Laplacian, bandwidth: Some(bandwidth) }
    }

    /// Default spec for a family: the median heuristic where a bandwidth applies.
    pub fn with_default_bandwidth(family: KernelFamily) -> Self {
        Self { family, bandwidth: family.uses_bandwidth().then_some(Bandwidth::Median) }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.family.uses_bandwidth(), self.bandwidth) {
            (false, Some(_)) => Err(invalid(format!("{} kernel takes no bandwidth", self.family))),
            (true, Some(Bandwidth::Fixed(v))) if !(v > 0.0 && v.is_finite()) => {
                Err(invalid(format!("bandwidth must be positive and finite, got {v}")))
            }
            _ => Ok(()),
        }
    }

    pub fn effective_bandwidth(&self) -> Option<Bandwidth> {
        if self.family.uses_bandwidth() {
            Some(self.bandwidth.unwrap_or(Bandwidth::Median))
        } else {
            None
        }
    }

    /// Resolves the bandwidth policy against the pooled sample.
    pub fn resolve<T: Scalar>(&self, x: &DataMatrix<T>, y: &DataMatrix<T>) -> Result<ResolvedKernel<T>> {
        self.validate()?;
        match self.effective_bandwidth() {
            None => ResolvedKernel::new(self.family, None),
            Some(Bandwidth::Fixed(v)) => ResolvedKernel::new(self.family, Some(T::lit(v))),
            Some(Bandwidth::Median) => {
                let gamma = median_heuristic_bandwidth(self.family, x, y)?;
                ResolvedKernel::new(self.family, Some(gamma))
            }
        }
    }

    /// Resolves without data; fails for the median heuristic.
    pub fn resolve_fixed<T: Scalar>(&self) -> Result<ResolvedKernel<T>> {
        self.validate()?;
        match self.effective_bandwidth() {
            None => ResolvedKernel::new(self.family, None),
            Some(Bandwidth::Fixed(v)) => ResolvedKernel::new(self.family, Some(T::lit(v))),
            Some(Bandwidth::Median) => Err(invalid("median-heuristic bandwidth needs data; give a fixed bandwidth")),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.effective_bandwidth() {
            None => write!(f, "{}", self.family),
            Some(Bandwidth::Median) => write!(f, "{}(median)", self.family),
            Some(Bandwidth::Fixed(v)) => write!(f, "{}({v})", self.family),
        }
    }
}

/// A kernel with a concrete bandwidth, ready to evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedKernel<T> {
    family: KernelFamily,
    bandwidth: Option<T>,
    a0: T,
}

impl<T: Scalar> ResolvedKernel<T> {
    pub fn new(family: KernelFamily, bandwidth: Option<T>) -> Result<Self> {
        let bandwidth = match (family.uses_bandwidth(), bandwidth) {
            (false, None) => None,
            (false, Some(_)) => return Err(invalid(format!("{family} kernel takes no bandwidth"))),
            (true, None) => return Err(invalid(format!("{family} kernel needs a bandwidth"))),
            (true, Some(g)) if !(g > T::zero() && g.is_finite()) => {
                return Err(invalid(format!("bandwidth must be positive and finite, got {g}")))
            }
            (true, Some(g)) => Some(g),
        };
        Ok(Self { family, bandwidth, a0: T::lit(family.self_value()) })
    }

    pub fn l2() -> Self {
        Self { family: KernelFamily::L2, bandwidth: None, a0: T::zero() }
    }

    pub fn l1() -> Self {
        Self { family: KernelFamily::L1, bandwidth: None, a0: T::zero() }
    }

    pub fn gaussian(gamma: T) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, Some(gamma))
    }

    pub fn laplacian(gamma: T) -> Result<Self> {
        Self::new(KernelFamily::Laplacian, Some(gamma))
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> Option<T> {
        self.bandwidth
    }

    pub fn a0(&self) -> T {
        self.a0
    }

    /// The spec this kernel corresponds to, with its bandwidth frozen.
    pub fn spec(&self) -> KernelSpec {
        KernelSpec { family: self.family, bandwidth: self.bandwidth.map(|g| Bandwidth::Fixed(g.as_f64())) }
    }

    pub fn eval(&self, x: &[T], y: &[T]) -> Result<T> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
        }
        if x.is_empty() {
            return Err(invalid("kernel arguments must have dimension p >= 1"));
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// Evaluates without the length check; callers guarantee `x.len() == y.len()`.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[T], y: &[T]) -> T {
        match self.family {
            KernelFamily::L1 => l1_distance(x, y),
            KernelFamily::L2 => sq_distance(x, y).sqrt(),
            KernelFamily::Gaussian => {
                let g = self.bandwidth.unwrap_or_else(T::one);
                -(-sq_distance(x, y) / (T::lit(2.0) * g * g)).exp()
            }
            KernelFamily::Laplacian => {
                let g = self.bandwidth.unwrap_or_else(T::one);
                -(-sq_distance(x, y).sqrt() / g).exp()
            }
        }
    }
}

#[inline]
fn sq_distance<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| {
        let d = a - b;
        acc + d * d
    })
}

#[inline]
fn l1_distance<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + (a - b).abs())
}

/// Median-heuristic bandwidth over all pairs of distinct pooled rows.
///
/// For the Gaussian kernel γ² is the median squared distance; for the
/// Laplacian kernel γ is the median distance. The pair multiset covers
/// within-X, cross and within-Y pairs and excludes self-pairs. With an even
/// number of pairs the two central order statistics are averaged.
pub fn median_heuristic_bandwidth<T: Scalar>(family: KernelFamily, x: &DataMatrix<T>, y: &DataMatrix<T>) -> Result<T> {
    if !family.uses_bandwidth() {
        return Err(invalid(format!("{family} kernel has no bandwidth to select")));
    }
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch { expected: x.ncols(), found: y.ncols() });
    }
    let total = x.nrows() + y.nrows();
    if total < 2 {
        return Err(Error::TooFewSamples { what: "median heuristic", required: 2, got: total });
    }
    let pooled: Vec<&[T]> = x.rows().chain(y.rows()).collect();
    let mut values = Vec::with_capacity(total * (total - 1) / 2);
    for s in 0..total {
        for t in (s + 1)..total {
            let d2 = sq_distance(pooled[s], pooled[t]);
            values.push(match family {
                KernelFamily::Gaussian => d2,
                _ => d2.sqrt(),
            });
        }
    }
    let med = median(&mut values)?;
    if !(med > T::zero()) {
        return Err(Error::DegenerateBandwidth);
    }
    Ok(match family {
        KernelFamily::Gaussian => med.sqrt(),
        _ => med,
    })
}

fn median<T: Scalar>(values: &mut [T]) -> Result<T> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(invalid("NaN in pairwise distances"));
    }
    let len = values.len();
    let cmp = |a: &T, b: &T| a.partial_cmp(b).expect("NaN filtered above");
    let mid = len / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, cmp);
    let upper = *upper;
    if len % 2 == 1 {
        Ok(upper)
    } else {
        let lower_max = lower.iter().copied().fold(T::neg_infinity(), T::max);
        Ok((lower_max + upper) / T::lit(2.0))
    }
}

/// The pooled `(n+m) × (n+m)` kernel matrix of X rows followed by Y rows.
///
/// Every estimator reads from this one artifact; nothing downstream
/// re-evaluates the kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct GramBundle<T> {
    n: usize,
    m: usize,
    p: usize,
    kernel: Option<ResolvedKernel<T>>,
    a0: T,
    k: Vec<T>,
}

impl<T: Scalar> GramBundle<T> {
    /// Wraps an explicit matrix. `k` is row-major `N × N` with `N = n + m`; it
    /// must be symmetric with every diagonal entry equal to `a0`.
    pub fn from_matrix(n: usize, m: usize, k: Vec<T>, a0: T) -> Result<Self> {
        let size = n + m;
        if k.len() != size * size {
            return Err(Error::DimensionMismatch { expected: size * size, found: k.len() });
        }
        let mut worst = T::zero();
        for s in 0..size {
            if k[s * size + s] != a0 {
                return Err(invalid(format!("diagonal entry {s} differs from a0")));
            }
            for t in (s + 1)..size {
                worst = worst.max((k[s * size + t] - k[t * size + s]).abs());
            }
        }
        if worst > T::zero() {
            return Err(Error::NotSymmetric(worst.as_f64()));
        }
        Ok(Self { n, m, p: 0, kernel: None, a0, k })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    /// Pooled sample size `N = n + m`.
    #[inline]
    pub fn size(&self) -> usize {
        self.n + self.m
    }

    /// Data dimension; zero when built with [`GramBundle::from_matrix`].
    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn kernel(&self) -> Option<&ResolvedKernel<T>> {
        self.kernel.as_ref()
    }

    #[inline]
    pub fn a0(&self) -> T {
        self.a0
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize) -> T {
        self.k[s * self.size() + t]
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[T] {
        let size = self.size();
        &self.k[s * size..(s + 1) * size]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.k
    }

    /// Gram of the kernel `c · k`; `a0` scales with it.
    pub fn scaled(&self, c: T) -> Self {
        Self { k: self.k.iter().map(|&v| v * c).collect(), a0: self.a0 * c, kernel: None, ..self.clone() }
    }
}

/// Builds the pooled Gram matrix. Cost `O(N² p)`.
pub fn gram_pooled<T: Scalar>(
    kernel: &ResolvedKernel<T>,
    x: &DataMatrix<T>,
    y: &DataMatrix<T>,
) -> Result<GramBundle<T>> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch { expected: x.ncols(), found: y.ncols() });
    }
    if x.nrows() == 0 || y.nrows() == 0 {
        return Err(Error::TooFewSamples { what: "pooled Gram matrix", required: 1, got: x.nrows().min(y.nrows()) });
    }
    if x.ncols() == 0 {
        return Err(invalid("observations must have dimension p >= 1"));
    }
    let (n, m) = (x.nrows(), y.nrows());
    let size = n + m;
    let pooled: Vec<&[T]> = x.rows().chain(y.rows()).collect();
    let a0 = kernel.a0();
    let mut k = vec![T::zero(); size * size];
    for s in 0..size {
        k[s * size + s] = a0;
        for t in (s + 1)..size {
            let v = kernel.eval_unchecked(pooled[s], pooled[t]);
            k[s * size + t] = v;
            k[t * size + s] = v;
        }
    }
    Ok(GramBundle { n, m, p: x.ncols(), kernel: Some(*kernel), a0, k })
}
