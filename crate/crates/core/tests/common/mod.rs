//! Reference implementations written directly from the definitions, sharing
//! no code with the library beyond its data types.

#![allow(dead_code)]

pub mod invariants;

use hdmmd::{KernelFamily, Matrix};
use rand::Rng;

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

pub fn kernel(family: KernelFamily, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    match family {
        KernelFamily::L2 => euclid(a, b),
        KernelFamily::L1 => a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum(),
        KernelFamily::Gaussian => -(-euclid(a, b).powi(2) / (2.0 * gamma * gamma)).exp(),
        KernelFamily::Laplacian => -(-euclid(a, b) / gamma).exp(),
    }
}

pub fn pooled(x: &Matrix, y: &Matrix) -> Vec<Vec<f64>> {
    x.rows().chain(y.rows()).map(<[f64]>::to_vec).collect()
}

/// Unbiased MMD² straight from the three double sums.
pub fn naive_mmd(family: KernelFamily, gamma: f64, x: &Matrix, y: &Matrix) -> f64 {
    let (n, m) = (x.nrows() as f64, y.nrows() as f64);
    let k = |a: &[f64], b: &[f64]| kernel(family, gamma, a, b);
    let mut cross = 0.0;
    for a in x.rows() {
        for b in y.rows() {
            cross += k(a, b);
        }
    }
    let within = |s: &Matrix| {
        let mut acc = 0.0;
        for i in 0..s.nrows() {
            for j in 0..s.nrows() {
                if i != j {
                    acc += k(s.row(i), s.row(j));
                }
            }
        }
        acc
    };
    2.0 * cross / (n * m) - within(x) / (n * (n - 1.0)) - within(y) / (m * (m - 1.0))
}

/// Pooled U-centred variance estimate with the `a0²` correction.
pub fn naive_variance(family: KernelFamily, gamma: f64, x: &Matrix, y: &Matrix) -> f64 {
    let z = pooled(x, y);
    let big_n = z.len();
    let nf = big_n as f64;
    let a: Vec<Vec<f64>> = z.iter().map(|u| z.iter().map(|v| kernel(family, gamma, u, v)).collect()).collect();
    let a0 = a[0][0];
    let col: Vec<f64> = (0..big_n).map(|t| (0..big_n).map(|i| a[i][t]).sum::<f64>() / (nf - 2.0)).collect();
    let total: f64 = a.iter().flatten().sum::<f64>() / ((nf - 1.0) * (nf - 2.0));
    let mut acc = 0.0;
    for s in 0..big_n {
        for t in 0..big_n {
            if s != t {
                let c = a[s][t] - col[t] - col[s] + total;
                acc += c * c;
            }
        }
    }
    acc / (nf * (nf - 3.0)) - a0 * a0 / ((nf - 1.0) * (nf - 3.0))
}

pub fn naive_t(family: KernelFamily, gamma: f64, x: &Matrix, y: &Matrix) -> f64 {
    let (n, m) = (x.nrows() as f64, y.nrows() as f64);
    let c = 2.0 / (n * (n - 1.0)) + 4.0 / (n * m) + 2.0 / (m * (m - 1.0));
    naive_mmd(family, gamma, x, y) / (c * naive_variance(family, gamma, x, y)).sqrt()
}

/// Median of all pooled pairwise distances (squared for the Gaussian kernel).
pub fn naive_median_bandwidth(family: KernelFamily, x: &Matrix, y: &Matrix) -> f64 {
    let z = pooled(x, y);
    let mut d = Vec::new();
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            let e = euclid(&z[i], &z[j]);
            d.push(if family == KernelFamily::Gaussian { e * e } else { e });
        }
    }
    d.sort_by(f64::total_cmp);
    let k = d.len();
    let med = if k % 2 == 1 { d[k / 2] } else { 0.5 * (d[k / 2 - 1] + d[k / 2]) };
    if family == KernelFamily::Gaussian {
        med.sqrt()
    } else {
        med
    }
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

/// Applies `x ↦ H x + shift` to every row, with `H` a product of Householder
/// reflections (an orthogonal map).
pub fn isometry(z: &Matrix, reflections: &[Vec<f64>], shift: &[f64]) -> Matrix {
    let mut out = z.clone();
    for i in 0..out.nrows() {
        let row = out.row_mut(i);
        for v in reflections {
            let vv: f64 = v.iter().map(|a| a * a).sum();
            if vv < 1e-12 {
                continue;
            }
            let dot: f64 = v.iter().zip(row.iter()).map(|(a, b)| a * b).sum();
            for (r, a) in row.iter_mut().zip(v) {
                *r -= 2.0 * dot / vv * a;
            }
        }
        for (r, s) in row.iter_mut().zip(shift) {
            *r += s;
        }
    }
    out
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
