//! Two-sample testing with the squared maximum mean discrepancy in high
//! dimension.
//!
//! The studentized statistic `T = MMD² / sqrt(c_nm · V*)` is asymptotically
//! standard normal under the null as both the sample sizes and the dimension
//! grow, which gives a test with no resampling. A permutation test on the
//! same statistic is provided for comparison.
//!
//! ```
//! use hdmmd::{asymptotic_test, gram_pooled, KernelSpec, Matrix};
//!
//! let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.5], [0.3, 0.2], [0.9, 0.9]]).unwrap();
//! let y = Matrix::from_rows(&[[2.0, 1.5], [1.7, 2.2], [2.4, 2.0], [1.9, 1.1]]).unwrap();
//! let kernel = KernelSpec::l2().resolve(&x, &y).unwrap();
//! let gram = gram_pooled(&kernel, &x, &y).unwrap();
//! let result = asymptotic_test(&gram, 0.05).unwrap();
//! assert!(result.p_value >= 0.0 && result.p_value <= 1.0);
//! ```
//!
//! Kernels, estimators and the population oracle are generic over
//! [`Scalar`] (`f32` or `f64`). The aliases below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod inference;
pub mod kernels;
pub mod matrix;
pub mod normal;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod simulation;

pub use error::{Error, Result};
pub use estimators::{
    c_nm, h_kernel, mmd_usq, psi_four_tuple, psi_from_pairs, studentized_statistic, u_centered_matrix,
    variance_estimator, MmdEstimate, SplitEvaluator, StudentizedStatistic, VarianceEstimate,
};
pub use inference::{asymptotic_test, permutation_test, permutation_test_gram, Method, TestResult};
pub use kernels::{
    gram_pooled, median_heuristic_bandwidth, Bandwidth, GramBundle, KernelFamily, KernelSpec, ResolvedKernel,
};
pub use matrix::DataMatrix;
pub use normal::{normal_cdf, normal_pdf, normal_quantile};
pub use oracle::{
    exhaustive_moments, mixture, population_g4, population_hsic_self, population_mmd_sq, population_summary,
    ExactMoments, FiniteDistribution, G4Values, PopulationSummary,
};
pub use rng::{cell_stream, stream_rng, StreamRng};
pub use scalar::Scalar;

/// Crate version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Matrix = DataMatrix<f64>;
pub type Gram = GramBundle<f64>;
pub type Kernel = ResolvedKernel<f64>;
pub type Distribution = FiniteDistribution<f64>;
pub type Summary = PopulationSummary<f64>;
pub type Moments = ExactMoments<f64>;
pub type Statistic = StudentizedStatistic<f64>;

pub type Matrix32 = DataMatrix<f32>;
pub type Gram32 = GramBundle<f32>;
pub type Kernel32 = ResolvedKernel<f32>;
