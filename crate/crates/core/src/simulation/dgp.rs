//! Data-generating processes for the size, power and null-distribution
//! experiments.
//!
//! Rows are drawn as `(D Σ D)^{1/2} z + shift`, where `Σ_ij = ρ^{|i−j|}`,
//! `D` is a diagonal scale matrix (the square root of the variance
//! multipliers) and `z` has iid standard Gaussian or centred Exp(1)
//! coordinates. Mean and variance shifts act on the second sample only and
//! touch the first `⌊β p⌋` coordinates.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::DataMatrix;
use crate::rng::stream_rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Innovation {
    #[default]
    Gaussian,
    /// `z − 1` with `z ~ Exp(1)`.
    CenteredExponential,
}

/// Diagonal of `D = V^{1/2}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VDiag {
    #[default]
    Identity,
    /// Entries drawn once from Uniform(1, 5) using `seed`, then held fixed.
    #[serde(rename = "uniform_1_5")]
    Uniform15 { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanShift {
    pub delta: f64,
    pub beta: f64,
}

/// Multiplies the scale `D_ii` of the first `⌊β p⌋` coordinates of the second
/// sample by `factor`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarShift {
    pub factor: f64,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub p: usize,
    pub rho: f64,
    #[serde(default)]
    pub innovation: Innovation,
    #[serde(default)]
    pub v_diag: VDiag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_shift: Option<MeanShift>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_shift: Option<VarShift>,
}

impl DgpSpec {
    /// Gaussian AR(ρ) design with identity scaling and no shift.
    pub fn null(p: usize, rho: f64) -> Self {
        Self { p, rho, innovation: Innovation::Gaussian, v_diag: VDiag::Identity, mean_shift: None, var_shift: None }
    }

    pub fn with_innovation(mut self, innovation: Innovation) -> Self {
        self.innovation = innovation;
        self
    }

    pub fn with_mean_shift(mut self, delta: f64, beta: f64) -> Self {
        self.mean_shift = Some(MeanShift { delta, beta });
        self
    }

    pub fn with_var_shift(mut self, factor: f64, beta: f64) -> Self {
        self.var_shift = Some(VarShift { factor, beta });
        self
    }

    /// The same design with both shifts removed.
    pub fn without_shifts(mut self) -> Self {
        self.mean_shift = None;
        self.var_shift = None;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(invalid("p must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(invalid(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if let Some(s) = self.mean_shift {
            check_fraction(s.beta, "mean_shift.beta")?;
            if !s.delta.is_finite() {
                return Err(invalid("mean_shift.delta must be finite"));
            }
        }
        if let Some(s) = self.var_shift {
            check_fraction(s.beta, "var_shift.beta")?;
            if !(s.factor > 0.0 && s.factor.is_finite()) {
                return Err(invalid("var_shift.factor must be positive"));
            }
        }
        Ok(())
    }
}

fn check_fraction(beta: f64, name: &str) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0, 1], got {beta}")))
    }
}

/// `⌊β p⌋`, tolerant of representation error in β (`0.7 · 100` is 70).
pub fn shifted_count(beta: f64, p: usize) -> usize {
    let raw = beta * p as f64;
    ((raw + 1e-9).floor() as usize).min(p)
}

/// `Σ_ij = ρ^{|i−j|}`.
pub fn ar_covariance(p: usize, rho: f64) -> Result<DataMatrix<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(invalid(format!("rho must lie in [0, 1), got {rho}")));
    }
    let mut out = DataMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            out[(i, j)] = rho.powi(i.abs_diff(j) as i32);
        }
    }
    Ok(out)
}

/// Symmetric PSD square root through the eigendecomposition. Eigenvalues in
/// `[−1e−10, 0)` are clamped to zero.
pub fn psd_sqrt(m: &DataMatrix<f64>) -> Result<DataMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    let p = m.nrows();
    let asym = m.max_abs_diff(&m.transpose())?;
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }
    let dm = DMatrix::from_row_slice(p, p, m.as_slice());
    let eig = dm.symmetric_eigen();
    if let Some(&worst) = eig.eigenvalues.iter().find(|&&l| l < -1e-10) {
        return Err(invalid(format!("matrix is not positive semidefinite (eigenvalue {worst:e})")));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    let s = q * DMatrix::from_diagonal(&roots) * q.transpose();
    let mut out = DataMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            out[(i, j)] = 0.5 * (s[(i, j)] + s[(j, i)]);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    X,
    Y,
}

/// A [`DgpSpec`] with its coloring matrices computed once.
#[derive(Clone, Debug)]
pub struct PreparedDgp {
    spec: DgpSpec,
    color_x: Option<DataMatrix<f64>>,
    color_y: Option<DataMatrix<f64>>,
    shift_y: Vec<f64>,
}

fn scale_diagonal(spec: &DgpSpec) -> Vec<f64> {
    match spec.v_diag {
        VDiag::Identity => vec![1.0; spec.p],
        VDiag::Uniform15 { seed } => {
            let mut rng = stream_rng(seed, u64::MAX);
            (0..spec.p).map(|_| rng.random_range(1.0..5.0)).collect()
        }
    }
}

/// `(D Σ D)^{1/2}`, or `None` when that is exactly the identity.
fn coloring(sigma: &DataMatrix<f64>, scale: &[f64], rho: f64) -> Result<Option<DataMatrix<f64>>> {
    if rho == 0.0 && scale.iter().all(|&d| d == 1.0) {
        return Ok(None);
    }
    let p = scale.len();
    let mut m = sigma.clone();
    for i in 0..p {
        for j in 0..p {
            m[(i, j)] *= scale[i] * scale[j];
        }
    }
    psd_sqrt(&m).map(Some)
}

impl PreparedDgp {
    pub fn new(spec: &DgpSpec) -> Result<Self> {
        spec.validate()?;
        let p = spec.p;
        let sigma = ar_covariance(p, spec.rho)?;
        let scale = scale_diagonal(spec);
        let color_x = coloring(&sigma, &scale, spec.rho)?;
        let color_y = match spec.var_shift {
            Some(vs) if shifted_count(vs.beta, p) > 0 && vs.factor != 1.0 => {
                let mut scale_y = scale.clone();
                for d in scale_y.iter_mut().take(shifted_count(vs.beta, p)) {
                    *d *= vs.factor;
                }
                coloring(&sigma, &scale_y, spec.rho)?
            }
            _ => color_x.clone(),
        };
        let mut shift_y = vec![0.0; p];
        if let Some(ms) = spec.mean_shift {
            for v in shift_y.iter_mut().take(shifted_count(ms.beta, p)) {
                *v = ms.delta;
            }
        }
        Ok(Self { spec: *spec, color_x, color_y, shift_y })
    }

    pub fn spec(&self) -> &DgpSpec {
        &self.spec
    }

    /// Mean of the second sample (zero for the first).
    pub fn shift_y(&self) -> &[f64] {
        &self.shift_y
    }

    pub fn draw<R: Rng + ?Sized>(&self, n: usize, role: Role, rng: &mut R) -> DataMatrix<f64> {
        let p = self.spec.p;
        let mut z = DataMatrix::zeros(n, p);
        for i in 0..n {
            for v in z.row_mut(i) {
                *v = match self.spec.innovation {
                    Innovation::Gaussian => StandardNormal.sample(rng),
                    Innovation::CenteredExponential => {
                        let e: f64 = Exp1.sample(rng);
                        e - 1.0
                    }
                };
            }
        }
        let color = match role {
            Role::X => &self.color_x,
            Role::Y => &self.color_y,
        };
        // rows are z^T S^T = z^T S since S is symmetric
        let mut out = match color {
            Some(s) => z.matmul(s).expect("coloring matrix is p x p"),
            None => z,
        };
        if role == Role::Y && self.shift_y.iter().any(|&d| d != 0.0) {
            for i in 0..n {
                for (v, &d) in out.row_mut(i).iter_mut().zip(&self.shift_y) {
                    *v += d;
                }
            }
        }
        out
    }
}

/// Draws `n` rows for `role`. Prefer [`PreparedDgp`] in loops; this recomputes
/// the matrix square root on every call.
pub fn draw_sample<R: Rng + ?Sized>(dgp: &DgpSpec, n: usize, role: Role, rng: &mut R) -> Result<DataMatrix<f64>> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    Ok(PreparedDgp::new(dgp)?.draw(n, role, rng))
}
