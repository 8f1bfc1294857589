//! Invariance checks shared by the property tests and the acceptance runner.

use hdmmd::simulation::{run_size_experiment, CellSpec, DgpSpec, SizeCellResult, SizeConfig};
use hdmmd::{
    gram_pooled, permutation_test, stream_rng, studentized_statistic, Error, Kernel, KernelFamily, KernelSpec, Matrix,
    Method, ResolvedKernel,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{isometry, random_matrix, rel_close};

pub type Check = Result<(), TestCaseError>;

pub fn family() -> impl Strategy<Value = KernelFamily> {
    prop::sample::select(KernelFamily::ALL.to_vec())
}

pub fn kernel_for(family: KernelFamily, gamma: f64) -> Kernel {
    ResolvedKernel::new(family, family.uses_bandwidth().then_some(gamma)).unwrap()
}

pub fn sample(seed: u64, n: usize, m: usize, p: usize) -> (Matrix, Matrix) {
    let mut rng = stream_rng(seed, 0);
    (random_matrix(&mut rng, n, p, 2.0), random_matrix(&mut rng, m, p, 2.0))
}

/// `T`, or `None` when the variance estimate is not positive.
pub fn t_value(kernel: &Kernel, x: &Matrix, y: &Matrix) -> Option<f64> {
    let g = gram_pooled(kernel, x, y).unwrap();
    match studentized_statistic(&g) {
        Ok(s) => Some(s.t),
        Err(Error::DegenerateVariance { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

fn t_spec(spec: &KernelSpec, x: &Matrix, y: &Matrix) -> Option<f64> {
    t_value(&spec.resolve(x, y).unwrap(), x, y)
}

/// `(seed, n, m, p, family, c)`.
pub fn scaling_input() -> impl Strategy<Value = (u64, usize, usize, usize, KernelFamily, f64)> {
    (any::<u64>(), 2usize..=10, 2usize..=10, 1usize..=6, family(), 0.01f64..100.0)
}

pub fn kernel_scaling((seed, n, m, p, fam, c): (u64, usize, usize, usize, KernelFamily, f64)) -> Check {
    let (x, y) = sample(seed, n, m, p);
    let g = gram_pooled(&kernel_for(fam, 1.3), &x, &y).unwrap();
    if let Ok(s) = studentized_statistic(&g) {
        let scaled = studentized_statistic(&g.scaled(c)).unwrap();
        prop_assert!(rel_close(s.t, scaled.t, 1e-9), "{} vs {}", s.t, scaled.t);
    }
    Ok(())
}

/// `(seed, n, m, p, family)`.
pub fn sample_input() -> impl Strategy<Value = (u64, usize, usize, usize, KernelFamily)> {
    (any::<u64>(), 2usize..=10, 2usize..=10, 1usize..=6, family())
}

pub fn sample_swap((seed, n, m, p, fam): (u64, usize, usize, usize, KernelFamily)) -> Check {
    let (x, y) = sample(seed, n, m, p);
    let spec = KernelSpec::with_default_bandwidth(fam);
    match (t_spec(&spec, &x, &y), t_spec(&spec, &y, &x)) {
        (Some(a), Some(b)) => prop_assert!(rel_close(a, b, 1e-10), "{a} vs {b}"),
        (None, None) => {}
        _ => prop_assert!(false, "degeneracy differs after swap"),
    }
    Ok(())
}

pub fn within_sample_order((seed, n, m, p, fam): (u64, usize, usize, usize, KernelFamily)) -> Check {
    let (x, y) = sample(seed, n, m, p);
    let mut rng = stream_rng(seed, 2);
    let mut ix: Vec<usize> = (0..n).collect();
    let mut iy: Vec<usize> = (0..m).collect();
    ix.shuffle(&mut rng);
    iy.shuffle(&mut rng);
    let (x2, y2) = (x.select_rows(&ix), y.select_rows(&iy));
    let spec = KernelSpec::with_default_bandwidth(fam);
    match (t_spec(&spec, &x, &y), t_spec(&spec, &x2, &y2)) {
        (Some(a), Some(b)) => prop_assert!(rel_close(a, b, 1e-10), "{a} vs {b}"),
        (None, None) => {}
        _ => prop_assert!(false, "degeneracy differs after reordering"),
    }
    Ok(())
}

pub fn isometry_input() -> impl Strategy<Value = (u64, usize, usize, usize, KernelFamily)> {
    (
        any::<u64>(),
        3usize..=10,
        3usize..=10,
        1usize..=6,
        prop::sample::select(vec![KernelFamily::L2, KernelFamily::Gaussian, KernelFamily::Laplacian]),
    )
}

/// Rotations (products of reflections) plus translation, with the bandwidth
/// re-selected by the median heuristic on the moved data.
pub fn isometry_invariance((seed, n, m, p, fam): (u64, usize, usize, usize, KernelFamily)) -> Check {
    let (x, y) = sample(seed, n, m, p);
    let mut rng = stream_rng(seed, 3);
    let reflections: Vec<Vec<f64>> = (0..3).map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let shift: Vec<f64> = (0..p).map(|_| rng.random_range(-5.0..5.0)).collect();
    let (x2, y2) = (isometry(&x, &reflections, &shift), isometry(&y, &reflections, &shift));
    let spec = KernelSpec::with_default_bandwidth(fam);
    if let (Some(a), Some(b)) = (t_spec(&spec, &x, &y), t_spec(&spec, &x2, &y2)) {
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
    }
    Ok(())
}

/// `(seed, n, m, B, family)`.
pub fn permutation_input() -> impl Strategy<Value = (u64, usize, usize, usize, KernelFamily)> {
    (any::<u64>(), 2usize..=8, 2usize..=8, 1usize..=60, family())
}

pub fn permutation_seeded((seed, n, m, b, fam): (u64, usize, usize, usize, KernelFamily)) -> Check {
    let (x, y) = sample(seed, n, m, 2);
    let k = kernel_for(fam, 1.0);
    let r = permutation_test(&k, &x, &y, b, 0.05, seed).unwrap();
    let scaled = r.p_value * (b + 1) as f64;
    prop_assert!(r.p_value >= 1.0 / (b + 1) as f64 && r.p_value <= 1.0);
    prop_assert!((scaled - scaled.round()).abs() < 1e-9);
    prop_assert_eq!(r.reject, r.p_value <= 0.05);
    let again = permutation_test(&k, &x, &y, b, 0.05, seed).unwrap();
    prop_assert_eq!(r, again);
    Ok(())
}

fn untimed(v: Vec<SizeCellResult>) -> Vec<SizeCellResult> {
    v.into_iter()
        .map(|mut c| {
            c.seconds = 0.0;
            c
        })
        .collect()
}

/// Two runs of a small size experiment with the same seed agree exactly; a
/// different seed changes the outcome.
pub fn experiment_seeded(seed: u64) -> Check {
    let config = SizeConfig {
        cells: vec![CellSpec { n: 12, m: 9, dgp: DgpSpec::null(7, 0.3) }],
        kernels: KernelFamily::ALL.iter().map(|&f| KernelSpec::with_default_bandwidth(f)).collect(),
        methods: vec![Method::Asymptotic, Method::Permutation],
        replications: 40,
        permutation_replications: Some(10),
        permutations: 30,
        alpha: 0.1,
        seed,
    };
    let a = untimed(run_size_experiment(&config).unwrap());
    let b = untimed(run_size_experiment(&config).unwrap());
    prop_assert_eq!(&a, &b);
    Ok(())
}
