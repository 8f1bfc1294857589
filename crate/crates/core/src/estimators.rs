//! Unbiased MMD² U-statistic, the pooled U-centred variance estimator and
//! the studentized statistic built from them.
//!
//! All estimators read the pooled [`GramBundle`]; the brute-force
//! representations used to check them live in [`enumeration`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::GramBundle;
use crate::matrix::DataMatrix;
use crate::scalar::Scalar;

/// `E^k_{n,m}(X, Y)`, the unbiased two-sample estimate of the kernel MMD².
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MmdEstimate<T> {
    pub value: T,
    pub n: usize,
    pub m: usize,
}

/// Pooled U-centred estimate of the HSIC self-term of the mixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VarianceEstimate<T> {
    pub value: T,
    pub n: usize,
    pub m: usize,
    pub a0: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StudentizedStatistic<T> {
    pub t: T,
    pub mmd: MmdEstimate<T>,
    pub variance: VarianceEstimate<T>,
    pub c_nm: T,
}

fn require_two_each(n: usize, m: usize, what: &'static str) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewSamples { what, required: 2, got: n });
    }
    if m < 2 {
        return Err(Error::TooFewSamples { what, required: 2, got: m });
    }
    Ok(())
}

/// `2/(nm) Σ k(X_i, Y_j) − C(n,2)⁻¹ Σ_{i1<i2} k(X_i1, X_i2) − C(m,2)⁻¹ Σ_{j1<j2} k(Y_j1, Y_j2)`.
pub fn mmd_usq<T: Scalar>(g: &GramBundle<T>) -> Result<MmdEstimate<T>> {
    let (n, m) = (g.n(), g.m());
    require_two_each(n, m, "MMD U-statistic")?;
    let size = n + m;
    let mut cross = T::zero();
    let mut within_x = T::zero();
    for i in 0..n {
        let row = g.row(i);
        within_x = within_x + row[(i + 1)..n].iter().copied().sum::<T>();
        cross = cross + row[n..size].iter().copied().sum::<T>();
    }
    let mut within_y = T::zero();
    for j in n..size {
        within_y = within_y + g.row(j)[(j + 1)..size].iter().copied().sum::<T>();
    }
    Ok(MmdEstimate { value: combine_mmd(cross, within_x, within_y, n, m), n, m })
}

#[inline]
fn combine_mmd<T: Scalar>(cross: T, within_x: T, within_y: T, n: usize, m: usize) -> T {
    let (nf, mf) = (T::count(n), T::count(m));
    let two = T::lit(2.0);
    two * cross / (nf * mf) - two * within_x / (nf * (nf - T::one())) - two * within_y / (mf * (mf - T::one()))
}

/// Re-evaluates the MMD U-statistic for arbitrary relabelings of the pooled
/// sample without touching the kernel.
///
/// Only within-group sums are accumulated; the cross sum follows from the
/// precomputed total over all distinct pairs.
pub struct SplitEvaluator<'a, T> {
    gram: &'a GramBundle<T>,
    upper_total: T,
}

impl<'a, T: Scalar> SplitEvaluator<'a, T> {
    pub fn new(gram: &'a GramBundle<T>) -> Result<Self> {
        require_two_each(gram.n(), gram.m(), "MMD U-statistic")?;
        let size = gram.size();
        let upper_total = (0..size).map(|s| gram.row(s)[(s + 1)..].iter().copied().sum::<T>()).sum();
        Ok(Self { gram, upper_total })
    }

    fn within(&self, idx: &[usize]) -> T {
        let mut acc = T::zero();
        for (a, &s) in idx.iter().enumerate() {
            let row = self.gram.row(s);
            for &t in &idx[(a + 1)..] {
                acc = acc + row[t];
            }
        }
        acc
    }

    /// MMD² of the split with first group `xs` and second group `ys`. The two
    /// index sets must partition `0..N` with sizes `n` and `m`; callers pass
    /// them sorted so equal splits give bit-identical values.
    pub fn eval(&self, xs: &[usize], ys: &[usize]) -> T {
        debug_assert_eq!(xs.len() + ys.len(), self.gram.size());
        let within_x = self.within(xs);
        let within_y = self.within(ys);
        let cross = self.upper_total - within_x - within_y;
        combine_mmd(cross, within_x, within_y, xs.len(), ys.len())
    }

    /// The statistic on the split the bundle was built with.
    pub fn eval_original(&self) -> T {
        let xs: Vec<usize> = (0..self.gram.n()).collect();
        let ys: Vec<usize> = (self.gram.n()..self.gram.size()).collect();
        self.eval(&xs, &ys)
    }
}

/// Two-sample kernel `h^k(X_i1, X_i2, Y_j1, Y_j2)`. `j1`, `j2` index into Y (0-based).
pub fn h_kernel<T: Scalar>(g: &GramBundle<T>, i1: usize, i2: usize, j1: usize, j2: usize) -> Result<T> {
    let (n, m) = (g.n(), g.m());
    for &i in &[i1, i2] {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
    }
    for &j in &[j1, j2] {
        if j >= m {
            return Err(Error::IndexOutOfRange { index: j, len: m });
        }
    }
    if i1 == i2 {
        return Err(Error::RepeatedIndex(i1));
    }
    if j1 == j2 {
        return Err(Error::RepeatedIndex(j1));
    }
    Ok(h_unchecked(g, i1, i2, n + j1, n + j2))
}

#[inline]
fn h_unchecked<T: Scalar>(g: &GramBundle<T>, i1: usize, i2: usize, t1: usize, t2: usize) -> T {
    let cross = g.get(i1, t1) + g.get(i1, t2) + g.get(i2, t1) + g.get(i2, t2);
    cross / T::lit(2.0) - g.get(i1, i2) - g.get(t1, t2)
}

/// `c_{n,m} = 2/(n(n−1)) + 4/(nm) + 2/(m(m−1))`, the null variance factor.
pub fn c_nm<T: Scalar>(n: usize, m: usize) -> Result<T> {
    require_two_each(n, m, "variance factor c_nm")?;
    let (nf, mf) = (T::count(n), T::count(m));
    let (two, four) = (T::lit(2.0), T::lit(4.0));
    Ok(two / (nf * (nf - T::one())) + four / (nf * mf) + two / (mf * (mf - T::one())))
}

/// The U-centred matrix `A*`. Row, column and grand sums run over every index
/// including the diagonal `a_{s,s} = a0`.
pub fn u_centered_matrix<T: Scalar>(g: &GramBundle<T>) -> Result<DataMatrix<T>> {
    let size = g.size();
    if size < 3 {
        return Err(Error::TooFewSamples { what: "U-centering", required: 3, got: size });
    }
    let nf = T::count(size);
    let two = T::lit(2.0);
    let row_sums: Vec<T> = (0..size).map(|s| g.row(s).iter().copied().sum()).collect();
    let col_sums: Vec<T> = (0..size).map(|t| (0..size).map(|s| g.get(s, t)).sum()).collect();
    let grand: T = row_sums.iter().copied().sum();
    let grand_mean = grand / ((nf - T::one()) * (nf - two));
    let mut out = DataMatrix::zeros(size, size);
    for s in 0..size {
        let row_mean = row_sums[s] / (nf - two);
        for t in 0..size {
            let col_mean = col_sums[t] / (nf - two);
            out[(s, t)] = g.get(s, t) - col_mean - row_mean + grand_mean;
        }
    }
    Ok(out)
}

/// `(N(N−3))⁻¹ Σ_{s≠t} (A*_{s,t})² − a0²/((N−1)(N−3))`.
///
/// The second term removes the bias introduced by a nonzero self-value; it
/// vanishes for the `L2`/`L1` norms.
pub fn variance_estimator<T: Scalar>(g: &GramBundle<T>) -> Result<VarianceEstimate<T>> {
    let size = g.size();
    if size < 4 {
        return Err(Error::TooFewSamples { what: "variance estimator", required: 4, got: size });
    }
    let nf = T::count(size);
    let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
    let row_means: Vec<T> = (0..size).map(|s| g.row(s).iter().copied().sum::<T>() / (nf - two)).collect();
    let grand_mean = row_means.iter().copied().sum::<T>() / (nf - one);
    let mut ss = T::zero();
    for s in 0..size {
        let row = g.row(s);
        let shift = grand_mean - row_means[s];
        let mut acc = T::zero();
        for t in 0..size {
            if t != s {
                let a = row[t] - row_means[t] + shift;
                acc = acc + a * a;
            }
        }
        ss = ss + acc;
    }
    let a0 = g.a0();
    let value = ss / (nf * (nf - three)) - a0 * a0 / ((nf - one) * (nf - three));
    Ok(VarianceEstimate { value, n: g.n(), m: g.m(), a0 })
}

/// `T = E^k_{n,m} / sqrt(c_{n,m} V*)`. A non-positive variance estimate is an error.
pub fn studentized_statistic<T: Scalar>(g: &GramBundle<T>) -> Result<StudentizedStatistic<T>> {
    let mmd = mmd_usq(g)?;
    let variance = variance_estimator(g)?;
    let c = c_nm::<T>(g.n(), g.m())?;
    if !(variance.value > T::zero()) {
        return Err(Error::DegenerateVariance { value: variance.value.as_f64() });
    }
    Ok(StudentizedStatistic { t: mmd.value / (c * variance.value).sqrt(), mmd, variance, c_nm: c })
}

/// `ψ` from the six pairwise kernel values of a four-tuple, ordered
/// `(k12, k13, k14, k23, k24, k34)`.
pub fn psi_from_pairs<T: Scalar>(k: [T; 6]) -> T {
    let [k12, k13, k14, k23, k24, k34] = k;
    let squares: T = k.iter().map(|&v| v * v).sum();
    let total: T = k.iter().copied().sum();
    let degrees = [k12 + k13 + k14, k12 + k23 + k24, k13 + k23 + k34, k14 + k24 + k34];
    let deg_sq: T = degrees.iter().map(|&d| d * d).sum();
    squares / T::lit(2.0) - deg_sq / T::lit(4.0) + total * total / T::lit(6.0)
}

/// `ψ(a1, a2, a3, a4) = ½Σ_{i<j} k² − ¼Σ_i (Σ_{j≠i} k)² + ⅙(Σ_{i<j} k)²`.
pub fn psi_four_tuple<T: Scalar>(kernel: &crate::kernels::ResolvedKernel<T>, a: [&[T]; 4]) -> Result<T> {
    let p = a[0].len();
    for v in &a[1..] {
        if v.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: v.len() });
        }
    }
    Ok(psi_from_pairs([
        kernel.eval(a[0], a[1])?,
        kernel.eval(a[0], a[2])?,
        kernel.eval(a[0], a[3])?,
        kernel.eval(a[1], a[2])?,
        kernel.eval(a[1], a[3])?,
        kernel.eval(a[2], a[3])?,
    ]))
}

/// Exhaustive four-tuple representations. These are `O(n²m²)` and `O(N⁴)`
/// and exist to check the fast estimators on small instances.
pub mod enumeration {
    use super::*;
    use crate::kernels::ResolvedKernel;

    /// Average of `h^k` over all pairs of X-pairs and Y-pairs.
    pub fn mmd_via_four_tuples<T: Scalar>(g: &GramBundle<T>) -> Result<T> {
        let (n, m) = (g.n(), g.m());
        require_two_each(n, m, "four-tuple MMD")?;
        let mut acc = T::zero();
        for i1 in 0..n {
            for i2 in (i1 + 1)..n {
                for j1 in 0..m {
                    for j2 in (j1 + 1)..m {
                        acc = acc + h_unchecked(g, i1, i2, n + j1, n + j2);
                    }
                }
            }
        }
        let pairs_x = T::count(n * (n - 1) / 2);
        let pairs_y = T::count(m * (m - 1) / 2);
        Ok(acc / (pairs_x * pairs_y))
    }

    /// `C(N,4)⁻¹ Σ ψ` over every 4-subset of the pooled sample, evaluating the
    /// kernel directly rather than reading a Gram matrix.
    pub fn variance_via_psi<T: Scalar>(kernel: &ResolvedKernel<T>, x: &DataMatrix<T>, y: &DataMatrix<T>) -> Result<T> {
        let pooled = x.vstack(y)?;
        let size = pooled.nrows();
        if size < 4 {
            return Err(Error::TooFewSamples { what: "psi representation", required: 4, got: size });
        }
        let mut acc = T::zero();
        let mut count = 0usize;
        for a in 0..size {
            for b in (a + 1)..size {
                for c in (b + 1)..size {
                    for d in (c + 1)..size {
                        let rows = [pooled.row(a), pooled.row(b), pooled.row(c), pooled.row(d)];
                        acc = acc + psi_four_tuple(kernel, rows)?;
                        count += 1;
                    }
                }
            }
        }
        Ok(acc / T::count(count))
    }
}

#[cfg(test)]
mod tests {
    use super::enumeration::*;
    use super::*;
    use crate::kernels::{gram_pooled, ResolvedKernel};

    fn col(v: &[f64]) -> DataMatrix<f64> {
        DataMatrix::column(v)
    }

    fn l2_gram(x: &[f64], y: &[f64]) -> GramBundle<f64> {
        gram_pooled(&ResolvedKernel::l2(), &col(x), &col(y)).unwrap()
    }

    #[test]
    fn mmd_examples() {
        assert_eq!(mmd_usq(&l2_gram(&[1.0, 1.0], &[1.0, 1.0])).unwrap().value, 0.0);
        let gauss = ResolvedKernel::gaussian(1.0).unwrap();
        let g = gram_pooled(&gauss, &col(&[1.0, 1.0]), &col(&[1.0, 1.0])).unwrap();
        assert_eq!(mmd_usq(&g).unwrap().value, 0.0);
        assert_eq!(mmd_usq(&l2_gram(&[0.0, 2.0], &[0.0, 2.0])).unwrap().value, -2.0);
        assert_eq!(mmd_usq(&l2_gram(&[0.0, 0.0], &[1.0, 1.0])).unwrap().value, 2.0);
    }

    #[test]
    fn mmd_needs_two_per_sample() {
        let g = l2_gram(&[0.0], &[1.0, 2.0, 3.0]);
        assert!(matches!(mmd_usq(&g), Err(Error::TooFewSamples { got: 1, .. })));
        assert!(mmd_via_four_tuples(&g).is_err());
        assert!(SplitEvaluator::new(&g).is_err());
    }

    #[test]
    fn h_kernel_examples() {
        let g = l2_gram(&[3.0, 3.0], &[3.0, 3.0]);
        assert_eq!(h_kernel(&g, 0, 1, 0, 1).unwrap(), 0.0);
        let g = l2_gram(&[0.0, 2.0], &[0.0, 2.0]);
        assert_eq!(h_kernel(&g, 0, 1, 0, 1).unwrap(), -2.0);
        assert_eq!(h_kernel(&g, 0, 0, 0, 1), Err(Error::RepeatedIndex(0)));
        assert_eq!(h_kernel(&g, 0, 1, 1, 1), Err(Error::RepeatedIndex(1)));
        assert!(matches!(h_kernel(&g, 0, 2, 0, 1), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn h_kernel_constant_kernel_limit() {
        let wide = ResolvedKernel::gaussian(1e8).unwrap();
        let g = gram_pooled(&wide, &col(&[0.0, 1.0]), &col(&[-3.0, 2.5])).unwrap();
        assert!(h_kernel(&g, 0, 1, 0, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn four_tuple_single_tuple_matches() {
        let gauss = ResolvedKernel::gaussian(0.7).unwrap();
        let g = gram_pooled(&gauss, &col(&[0.1, 1.3]), &col(&[-0.4, 2.2])).unwrap();
        let direct = mmd_usq(&g).unwrap().value;
        assert!((direct - mmd_via_four_tuples(&g).unwrap()).abs() < 1e-12);
        assert!((direct - h_kernel(&g, 0, 1, 0, 1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn c_nm_examples() {
        assert_eq!(c_nm::<f64>(2, 2).unwrap(), 3.0);
        assert!((c_nm::<f64>(4, 4).unwrap() - 7.0 / 12.0).abs() < 1e-15);
        assert!((c_nm::<f64>(2, 3).unwrap() - 2.0).abs() < 1e-15);
        assert!(c_nm::<f64>(1, 3).is_err());
    }

    #[test]
    fn u_centering_constant_kernel() {
        // a ≡ a0 gives A* ≡ a0 (1 − 2N/(N−2) + N²/((N−1)(N−2))) everywhere.
        let gauss = ResolvedKernel::gaussian(1.0).unwrap();
        let g = gram_pooled(&gauss, &col(&[2.0, 2.0]), &col(&[2.0, 2.0, 2.0])).unwrap();
        let nn = 5.0;
        let expected = -(1.0 - 2.0 * nn / (nn - 2.0) + nn * nn / ((nn - 1.0) * (nn - 2.0)));
        let a = u_centered_matrix(&g).unwrap();
        for v in a.as_slice() {
            assert!((v - expected).abs() < 1e-14);
        }
        let l2 = l2_gram(&[2.0, 2.0], &[2.0, 2.0, 2.0]);
        assert!(u_centered_matrix(&l2).unwrap().as_slice().iter().all(|&v| v == 0.0));
        assert!(u_centered_matrix(&l2_gram(&[0.0], &[1.0])).is_err());
    }

    #[test]
    fn u_centering_is_symmetric() {
        let g = l2_gram(&[0.3, -1.2, 2.5], &[0.9, 4.1]);
        let a = u_centered_matrix(&g).unwrap();
        for s in 0..5 {
            for t in 0..5 {
                assert!((a[(s, t)] - a[(t, s)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn variance_constant_samples() {
        assert_eq!(variance_estimator(&l2_gram(&[1.0, 1.0], &[1.0, 1.0])).unwrap().value, 0.0);

        let gauss = ResolvedKernel::gaussian(1.0).unwrap();
        let x = col(&[1.0, 1.0]);
        let g = gram_pooled(&gauss, &x, &x).unwrap();
        // N = 4: A* ≡ −(1 − 4 + 16/6) = 1/3, twelve off-diagonal cells.
        let a = 1.0 / 3.0;
        let expected = 12.0 * a * a / 4.0 - 1.0 / 3.0;
        let v = variance_estimator(&g).unwrap().value;
        assert!((v - expected).abs() < 1e-14);
        assert!(v.abs() < 1e-14);
        let psi = variance_via_psi(&gauss, &x, &x).unwrap();
        assert!((v - psi).abs() < 1e-14);
    }

    #[test]
    fn variance_needs_four_points() {
        let g = l2_gram(&[0.0, 1.0], &[2.0]);
        assert!(matches!(variance_estimator(&g), Err(Error::TooFewSamples { required: 4, .. })));
        assert!(variance_via_psi(&ResolvedKernel::l2(), &col(&[0.0]), &col(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn psi_examples() {
        let v = [0.5, -1.0];
        let l2 = ResolvedKernel::l2();
        assert_eq!(psi_four_tuple(&l2, [&v, &v, &v, &v]).unwrap(), 0.0);
        let gauss = ResolvedKernel::<f64>::gaussian(2.0).unwrap();
        assert!(psi_four_tuple(&gauss, [&v, &v, &v, &v]).unwrap().abs() < 1e-15);
        let w = [1.0];
        assert!(psi_four_tuple(&l2, [&v, &v, &w, &v]).is_err());
    }

    #[test]
    fn studentized_examples() {
        let g = l2_gram(&[4.0, 4.0], &[4.0, 4.0, 4.0]);
        assert!(matches!(studentized_statistic(&g), Err(Error::DegenerateVariance { .. })));

        let g = l2_gram(&[0.1, 0.7, -0.4, 1.9], &[2.2, 3.1, 1.4]);
        let s = studentized_statistic(&g).unwrap();
        let recomposed =
            mmd_usq(&g).unwrap().value / (c_nm::<f64>(4, 3).unwrap() * variance_estimator(&g).unwrap().value).sqrt();
        assert!((s.t - recomposed).abs() < 1e-12);
        let scaled = studentized_statistic(&g.scaled(7.5)).unwrap();
        assert!((s.t - scaled.t).abs() < 1e-12);
    }

    #[test]
    fn split_evaluator_matches_direct() {
        let g = l2_gram(&[0.1, 0.7, -0.4, 1.9], &[2.2, 3.1, 1.4]);
        let eval = SplitEvaluator::new(&g).unwrap();
        assert!((eval.eval_original() - mmd_usq(&g).unwrap().value).abs() < 1e-13);
        // regroup points 0,4 | rest and compare with a fresh Gram
        let x = col(&[0.1, 2.2]);
        let y = col(&[0.7, -0.4, 1.9, 3.1, 1.4]);
        let direct = mmd_usq(&gram_pooled(&ResolvedKernel::l2(), &x, &y).unwrap()).unwrap().value;
        assert!((eval.eval(&[0, 4], &[1, 2, 3, 5, 6]) - direct).abs() < 1e-13);
    }

    #[test]
    fn single_precision_estimators() {
        let x = DataMatrix::<f32>::column(&[0.0, 0.0]);
        let y = DataMatrix::<f32>::column(&[1.0, 1.0]);
        let g = gram_pooled(&ResolvedKernel::<f32>::l2(), &x, &y).unwrap();
        assert_eq!(mmd_usq(&g).unwrap().value, 2.0f32);
    }
}
