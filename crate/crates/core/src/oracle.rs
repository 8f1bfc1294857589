//! Exact population quantities for finite-support distributions.
//!
//! These are computed by plain enumeration over atoms and serve as ground
//! truth for the estimator identities: unbiasedness of the MMD U-statistic
//! and of the pooled variance estimator, the null variance `c_{n,m} V_k²(Z)`,
//! and the fourth-order functional `E[g^k]`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::estimators::{mmd_usq, variance_estimator};
use crate::kernels::{GramBundle, ResolvedKernel};
use crate::matrix::DataMatrix;
use crate::scalar::Scalar;

/// Upper bound on enumerated configurations (joint sample realizations, or
/// `|support|⁵` for the fourth-order functional).
pub const MAX_ENUMERATIONS: u128 = 1_000_000;

/// A probability distribution on finitely many atoms in `R^p`. Duplicate
/// atoms are allowed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteDistribution<T> {
    atoms: DataMatrix<T>,
    probs: Vec<T>,
}

impl<T: Scalar> FiniteDistribution<T> {
    pub fn new(atoms: DataMatrix<T>, probs: Vec<T>) -> Result<Self> {
        if atoms.nrows() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} atoms but {} probabilities",
                atoms.nrows(),
                probs.len()
            )));
        }
        if atoms.nrows() == 0 || atoms.ncols() == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= T::zero()) || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!("invalid probability {p}")));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { atoms, probs })
    }

    pub fn point_mass(atom: &[T]) -> Result<Self> {
        Self::new(DataMatrix::from_rows(&[atom])?, vec![T::one()])
    }

    pub fn uniform(atoms: DataMatrix<T>) -> Result<Self> {
        let k = atoms.nrows();
        Self::new(atoms, vec![T::one() / T::count(k.max(1)); k])
    }

    pub fn atoms(&self) -> &DataMatrix<T> {
        &self.atoms
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn dim(&self) -> usize {
        self.atoms.ncols()
    }

    /// Same distribution with atoms listed in the given order.
    pub fn relabeled(&self, order: &[usize]) -> Self {
        Self { atoms: self.atoms.select_rows(order), probs: order.iter().map(|&i| self.probs[i]).collect() }
    }
}

/// Mixture drawing from `p` with probability `rho` and from `q` otherwise.
pub fn mixture<T: Scalar>(
    p: &FiniteDistribution<T>,
    q: &FiniteDistribution<T>,
    rho: T,
) -> Result<FiniteDistribution<T>> {
    if !(rho > T::zero() && rho < T::one()) {
        return Err(invalid(format!("mixing weight must lie in (0, 1), got {rho}")));
    }
    let atoms = p.atoms.vstack(&q.atoms)?;
    let probs = p.probs.iter().map(|&w| rho * w).chain(q.probs.iter().map(|&w| (T::one() - rho) * w)).collect();
    Ok(FiniteDistribution { atoms, probs })
}

fn kernel_table<T: Scalar>(k: &ResolvedKernel<T>, a: &DataMatrix<T>, b: &DataMatrix<T>) -> Result<Vec<Vec<T>>> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch { expected: a.ncols(), found: b.ncols() });
    }
    a.rows().map(|u| b.rows().map(|v| k.eval(u, v)).collect()).collect()
}

/// `E k` with both arguments drawn independently from `p` and `q`.
fn mean_kernel<T: Scalar>(table: &[Vec<T>], p: &[T], q: &[T]) -> T {
    let mut acc = T::zero();
    for (i, &wi) in p.iter().enumerate() {
        for (j, &wj) in q.iter().enumerate() {
            acc = acc + wi * wj * table[i][j];
        }
    }
    acc
}

/// `E^k(X, Y) = 2 E k(X, Y) − E k(X, X′) − E k(Y, Y′)`.
pub fn population_mmd_sq<T: Scalar>(
    k: &ResolvedKernel<T>,
    p: &FiniteDistribution<T>,
    q: &FiniteDistribution<T>,
) -> Result<T> {
    let pq = kernel_table(k, &p.atoms, &q.atoms)?;
    let pp = kernel_table(k, &p.atoms, &p.atoms)?;
    let qq = kernel_table(k, &q.atoms, &q.atoms)?;
    let cross = mean_kernel(&pq, &p.probs, &q.probs);
    Ok(T::lit(2.0) * cross - mean_kernel(&pp, &p.probs, &p.probs) - mean_kernel(&qq, &q.probs, &q.probs))
}

/// `V_k²(Z) = E k²(Z1, Z2) − 2 E[k(Z1, Z2) k(Z1, Z3)] + (E k(Z1, Z2))²`.
pub fn population_hsic_self<T: Scalar>(k: &ResolvedKernel<T>, z: &FiniteDistribution<T>) -> Result<T> {
    let table = kernel_table(k, &z.atoms, &z.atoms)?;
    let w = &z.probs;
    let s = w.len();
    let mut e_sq = T::zero();
    let mut e_k = T::zero();
    let mut e_pair = T::zero();
    for a in 0..s {
        for b in 0..s {
            let wab = w[a] * w[b];
            e_sq = e_sq + wab * table[a][b] * table[a][b];
            e_k = e_k + wab * table[a][b];
            for c in 0..s {
                e_pair = e_pair + wab * w[c] * table[a][b] * table[a][c];
            }
        }
    }
    Ok(e_sq - T::lit(2.0) * e_pair + e_k * e_k)
}

/// `E[g^k(Z1, Z2, Z3, Z4)]` two ways.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct G4Values<T> {
    /// Enumeration of `E[d(Z1,Z2) d(Z1,Z3) d(Z2,Z4) d(Z3,Z4)]` with the doubly
    /// centred kernel `d`.
    pub direct: T,
    /// Sum `G1 + G2 + G3 + G4` of raw-kernel moments, including the
    /// five-copy term `E[k(Z1,Z2) k(Z1,Z3) k(Z2,Z4) k(Z4,Z5)]`.
    pub prop7: T,
}

fn check_budget(required: u128) -> Result<()> {
    if required > MAX_ENUMERATIONS {
        return Err(Error::EnumerationTooLarge { required, limit: MAX_ENUMERATIONS });
    }
    Ok(())
}

pub fn population_g4<T: Scalar>(k: &ResolvedKernel<T>, z: &FiniteDistribution<T>) -> Result<G4Values<T>> {
    let s = z.support_size();
    check_budget((s as u128).pow(5))?;
    let kt = kernel_table(k, &z.atoms, &z.atoms)?;
    let w = &z.probs;

    // direct: doubly centred kernel d(x1, x2) = k − E[k | x1] − E[k | x2] + E k
    let cond: Vec<T> = (0..s).map(|a| (0..s).map(|b| w[b] * kt[a][b]).sum()).collect();
    let mean: T = (0..s).map(|a| w[a] * cond[a]).sum();
    let d: Vec<Vec<T>> = (0..s).map(|a| (0..s).map(|b| kt[a][b] - cond[a] - cond[b] + mean).collect()).collect();
    let mut direct = T::zero();
    for i1 in 0..s {
        for i2 in 0..s {
            for i3 in 0..s {
                for i4 in 0..s {
                    let wt = w[i1] * w[i2] * w[i3] * w[i4];
                    direct = direct + wt * d[i1][i2] * d[i1][i3] * d[i2][i4] * d[i3][i4];
                }
            }
        }
    }

    // computational formula from raw kernel moments, each by literal enumeration
    let mut e_k = T::zero();
    for i1 in 0..s {
        for i2 in 0..s {
            e_k = e_k + w[i1] * w[i2] * kt[i1][i2];
        }
    }
    let mut e_path2 = T::zero(); // E[k12 k13]
    for i1 in 0..s {
        for i2 in 0..s {
            for i3 in 0..s {
                e_path2 = e_path2 + w[i1] * w[i2] * w[i3] * kt[i1][i2] * kt[i1][i3];
            }
        }
    }
    let mut e_cycle = T::zero(); // E[k12 k13 k24 k34]
    let mut e_path3 = T::zero(); // E[k12 k13 k24]
    let mut e_path4 = T::zero(); // E[k12 k13 k24 k45]
    for i1 in 0..s {
        for i2 in 0..s {
            for i3 in 0..s {
                for i4 in 0..s {
                    let wt = w[i1] * w[i2] * w[i3] * w[i4];
                    let base = kt[i1][i2] * kt[i1][i3] * kt[i2][i4];
                    e_cycle = e_cycle + wt * base * kt[i3][i4];
                    e_path3 = e_path3 + wt * base;
                    for i5 in 0..s {
                        e_path4 = e_path4 + wt * w[i5] * base * kt[i4][i5];
                    }
                }
            }
        }
    }
    let (two, four) = (T::lit(2.0), T::lit(4.0));
    let g1 = e_cycle - four * e_path4 + two * e_path2 * e_path2;
    let g2 = four * e_k * e_path3;
    let g3 = -four * e_k * e_k * e_path2;
    let g4 = e_k * e_k * e_k * e_k;
    Ok(G4Values { direct, prop7: g1 + g2 + g3 + g4 })
}

/// Population quantities for a pair of distributions and their mixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PopulationSummary<T> {
    pub mmd_sq: T,
    pub hsic_self: T,
    pub g4: G4Values<T>,
}

/// `mmd_sq` of `(p, q)`; `hsic_self` and `g4` of the mixture with weight `rho` on `p`.
pub fn population_summary<T: Scalar>(
    k: &ResolvedKernel<T>,
    p: &FiniteDistribution<T>,
    q: &FiniteDistribution<T>,
    rho: T,
) -> Result<PopulationSummary<T>> {
    let z = mixture(p, q, rho)?;
    Ok(PopulationSummary {
        mmd_sq: population_mmd_sq(k, p, q)?,
        hsic_self: population_hsic_self(k, &z)?,
        g4: population_g4(k, &z)?,
    })
}

/// Exact finite-sample moments of the estimators under iid sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExactMoments<T> {
    pub mean_mmd: T,
    pub var_mmd: T,
    pub mean_varest: T,
}

/// Enumerates every iid realization of `n` draws from `p` and `m` draws from
/// `q`, weighting each by its probability.
pub fn exhaustive_moments<T: Scalar>(
    k: &ResolvedKernel<T>,
    p: &FiniteDistribution<T>,
    q: &FiniteDistribution<T>,
    n: usize,
    m: usize,
) -> Result<ExactMoments<T>> {
    if n < 2 || m < 2 {
        return Err(Error::TooFewSamples { what: "exhaustive moments", required: 2, got: n.min(m) });
    }
    let (sp, sq) = (p.support_size(), q.support_size());
    let required = (sp as u128).checked_pow(n as u32).zip((sq as u128).checked_pow(m as u32));
    match required.and_then(|(a, b)| a.checked_mul(b)) {
        Some(r) => check_budget(r)?,
        None => return Err(Error::EnumerationTooLarge { required: u128::MAX, limit: MAX_ENUMERATIONS }),
    }
    // Kernel over the pooled atom list; realized Gram matrices are gathered from it.
    let atoms = p.atoms.vstack(&q.atoms)?;
    let table = kernel_table(k, &atoms, &atoms)?;
    let size = n + m;
    let a0 = k.a0();

    let mut outcomes: Vec<(T, T, T)> = Vec::new();
    let mut digits = vec![0usize; size];
    loop {
        let mut prob = T::one();
        let mut idx = Vec::with_capacity(size);
        for (pos, &d) in digits.iter().enumerate() {
            if pos < n {
                prob = prob * p.probs[d];
                idx.push(d);
            } else {
                prob = prob * q.probs[d];
                idx.push(sp + d);
            }
        }
        let mut gram = vec![T::zero(); size * size];
        for s in 0..size {
            for t in 0..size {
                gram[s * size + t] = if s == t { a0 } else { table[idx[s]][idx[t]] };
            }
        }
        let g = GramBundle::from_matrix(n, m, gram, a0)?;
        outcomes.push((prob, mmd_usq(&g)?.value, variance_estimator(&g)?.value));

        // odometer over (support_p)^n × (support_q)^m
        let mut pos = 0;
        loop {
            if pos == size {
                return Ok(summarize(&outcomes));
            }
            let radix = if pos < n { sp } else { sq };
            digits[pos] += 1;
            if digits[pos] < radix {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

fn summarize<T: Scalar>(outcomes: &[(T, T, T)]) -> ExactMoments<T> {
    let mean_mmd: T = outcomes.iter().map(|&(w, e, _)| w * e).sum();
    let var_mmd: T = outcomes.iter().map(|&(w, e, _)| w * (e - mean_mmd) * (e - mean_mmd)).sum();
    let mean_varest: T = outcomes.iter().map(|&(w, _, v)| w * v).sum();
    ExactMoments { mean_mmd, var_mmd, mean_varest }
}
