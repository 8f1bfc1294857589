//! Seeded Monte Carlo drivers for the size, power and null-distribution
//! experiments.
//!
//! Replication `r` of grid cell `c` draws all of its randomness from the
//! stream [`cell_stream`]`(c, r)` of the experiment seed, so reports are
//! identical however the replications are scheduled. Within a replication
//! every kernel and method sees the same data.

use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::estimators::studentized_statistic;
use crate::inference::{permutation_test_gram, Method};
use crate::kernels::{gram_pooled, KernelSpec};
use crate::normal::normal_quantile;
use crate::rng::{cell_stream, stream_rng};
use crate::simulation::config::{CellSpec, DiagnosticsConfig, ExperimentConfig, PowerConfig, SizeConfig};
use crate::simulation::dgp::{shifted_count, PreparedDgp, Role};
use crate::simulation::distances::{ks_distance_normal, wasserstein_normal};

/// Outcome of one statistic on one replication.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Outcome {
    /// `score` is `T` for the asymptotic test and the p-value for the permutation test.
    Done {
        score: f64,
        reject: bool,
    },
    Degenerate,
    Skipped,
}

#[derive(Clone, Debug)]
struct KernelRun {
    asymptotic: Outcome,
    permutation: Outcome,
    asymptotic_secs: f64,
    permutation_secs: f64,
}

struct Plan<'a> {
    kernels: &'a [KernelSpec],
    methods: &'a [Method],
    alpha: f64,
    critical: f64,
    permutations: usize,
    permutation_replications: usize,
}

impl<'a> Plan<'a> {
    fn new(
        kernels: &'a [KernelSpec],
        methods: &'a [Method],
        alpha: f64,
        permutations: usize,
        permutation_replications: usize,
    ) -> Result<Self> {
        Ok(Self {
            kernels,
            methods,
            alpha,
            critical: normal_quantile(1.0 - alpha)?,
            permutations,
            permutation_replications,
        })
    }
}

fn run_replication(
    plan: &Plan<'_>,
    dgp: &PreparedDgp,
    n: usize,
    m: usize,
    seed: u64,
    cell: u32,
    rep: u32,
) -> Result<Vec<KernelRun>> {
    let mut rng = stream_rng(seed, cell_stream(cell, rep));
    let x = dgp.draw(n, Role::X, &mut rng);
    let y = dgp.draw(m, Role::Y, &mut rng);
    let perm_seed = rng.next_u64();
    let want_asym = plan.methods.contains(&Method::Asymptotic);
    let want_perm = plan.methods.contains(&Method::Permutation) && (rep as usize) < plan.permutation_replications;

    plan.kernels
        .iter()
        .map(|spec| {
            let start = Instant::now();
            let kernel = spec.resolve(&x, &y)?;
            let gram = gram_pooled(&kernel, &x, &y)?;
            let setup = start.elapsed().as_secs_f64();

            let mut run = KernelRun {
                asymptotic: Outcome::Skipped,
                permutation: Outcome::Skipped,
                asymptotic_secs: 0.0,
                permutation_secs: 0.0,
            };
            if want_asym {
                let start = Instant::now();
                run.asymptotic = match studentized_statistic(&gram) {
                    Ok(s) => Outcome::Done { score: s.t, reject: s.t > plan.critical },
                    Err(Error::DegenerateVariance { .. }) => Outcome::Degenerate,
                    Err(e) => return Err(e),
                };
                run.asymptotic_secs = setup + start.elapsed().as_secs_f64();
            }
            if want_perm {
                let start = Instant::now();
                let r = permutation_test_gram(&gram, plan.permutations, plan.alpha, perm_seed)?;
                run.permutation = Outcome::Done { score: r.p_value, reject: r.reject };
                run.permutation_secs = setup + start.elapsed().as_secs_f64();
            }
            Ok(run)
        })
        .collect()
}

fn run_cell(
    plan: &Plan<'_>,
    dgp: &PreparedDgp,
    n: usize,
    m: usize,
    replications: usize,
    seed: u64,
    cell: u32,
) -> Result<Vec<Vec<KernelRun>>> {
    let reps = u32::try_from(replications).map_err(|_| invalid("too many replications"))?;
    (0..reps).into_par_iter().map(|r| run_replication(plan, dgp, n, m, seed, cell, r)).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Tally {
    /// Replications in which this method was run.
    pub replications: usize,
    /// Replications with a usable statistic; the rate denominator.
    pub valid: usize,
    pub degenerate: usize,
    pub rejections: usize,
    /// `rejections / valid`, absent when nothing was valid.
    pub rejection_rate: Option<f64>,
}

fn tally<'a>(outcomes: impl Iterator<Item = &'a Outcome>) -> Tally {
    let mut t = Tally::default();
    for o in outcomes {
        match o {
            Outcome::Done { reject, .. } => {
                t.replications += 1;
                t.valid += 1;
                t.rejections += usize::from(*reject);
            }
            Outcome::Degenerate => {
                t.replications += 1;
                t.degenerate += 1;
            }
            Outcome::Skipped => {}
        }
    }
    t.rejection_rate = (t.valid > 0).then(|| t.rejections as f64 / t.valid as f64);
    t
}

fn outcome_of(run: &KernelRun, method: Method) -> &Outcome {
    match method {
        Method::Asymptotic => &run.asymptotic,
        Method::Permutation => &run.permutation,
    }
}

fn seconds_of(runs: &[Vec<KernelRun>], kernel: usize, method: Method) -> f64 {
    runs.iter()
        .map(|r| match method {
            Method::Asymptotic => r[kernel].asymptotic_secs,
            Method::Permutation => r[kernel].permutation_secs,
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeCellResult {
    pub cell: usize,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub kernel: KernelSpec,
    pub method: Method,
    #[serde(flatten)]
    pub tally: Tally,
    /// Summed wall-clock of kernel resolution, Gram construction and the test.
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerCellResult {
    pub beta: f64,
    pub shifted_coordinates: usize,
    pub kernel: KernelSpec,
    pub method: Method,
    #[serde(flatten)]
    pub tally: Tally,
    /// Rejection rate against the empirical null critical value; asymptotic test only.
    pub size_adjusted_power: Option<f64>,
    pub critical_value: Option<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsResult {
    pub kernel: KernelSpec,
    pub replications: usize,
    pub valid: usize,
    pub degenerate: usize,
    pub ks: f64,
    pub wasserstein: f64,
    pub mean: f64,
    pub sd: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentResults {
    Size(Vec<SizeCellResult>),
    Power(Vec<PowerCellResult>),
    Diagnostics(Vec<DiagnosticsResult>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub version: &'static str,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub results: ExperimentResults,
}

impl ExperimentReport {
    /// Copy with every wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        match &mut out.results {
            ExperimentResults::Size(v) => v.iter_mut().for_each(|c| c.seconds = 0.0),
            ExperimentResults::Power(v) => v.iter_mut().for_each(|c| c.seconds = 0.0),
            ExperimentResults::Diagnostics(v) => v.iter_mut().for_each(|c| c.seconds = 0.0),
        }
        out
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if let Err(problems) = config.validate() {
        return Err(invalid(problems.join("; ")));
    }
    let results = match config {
        ExperimentConfig::Size(c) => ExperimentResults::Size(run_size_experiment(c)?),
        ExperimentConfig::Power(c) => ExperimentResults::Power(run_power_curve(c)?),
        ExperimentConfig::Diagnostics(c) => ExperimentResults::Diagnostics(null_distribution_diagnostics(c)?),
    };
    Ok(ExperimentReport { version: crate::VERSION, seed: config.seed(), config: config.clone(), results })
}

fn validated<C: Clone>(c: &C, wrap: impl Fn(C) -> ExperimentConfig) -> Result<()> {
    wrap(c.clone()).validate().map_err(|problems| invalid(problems.join("; ")))
}

/// Empirical rejection rates per cell, kernel and method.
pub fn run_size_experiment(config: &SizeConfig) -> Result<Vec<SizeCellResult>> {
    validated(config, ExperimentConfig::Size)?;
    let perm_reps = config.permutation_replications.unwrap_or(config.replications);
    let plan = Plan::new(&config.kernels, &config.methods, config.alpha, config.permutations, perm_reps)?;
    let mut out = Vec::new();
    for (ci, CellSpec { n, m, dgp }) in config.cells.iter().enumerate() {
        let prepared = PreparedDgp::new(dgp)?;
        let runs = run_cell(&plan, &prepared, *n, *m, config.replications, config.seed, ci as u32)?;
        for (ki, kernel) in config.kernels.iter().enumerate() {
            for &method in &config.methods {
                out.push(SizeCellResult {
                    cell: ci,
                    n: *n,
                    m: *m,
                    p: dgp.p,
                    kernel: *kernel,
                    method,
                    tally: tally(runs.iter().map(|r| outcome_of(&r[ki], method))),
                    seconds: seconds_of(&runs, ki, method),
                });
            }
        }
    }
    Ok(out)
}

/// Upper `α` critical value from null draws: the `⌈(1−α)R⌉`-th order statistic.
pub fn empirical_critical_value(null_scores: &[f64], alpha: f64) -> Option<f64> {
    if null_scores.is_empty() {
        return None;
    }
    let mut v = null_scores.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((1.0 - alpha) * v.len() as f64 - 1e-9).ceil() as usize;
    Some(v[rank.clamp(1, v.len()) - 1])
}

fn scores(runs: &[Vec<KernelRun>], kernel: usize, method: Method) -> Vec<f64> {
    runs.iter()
        .filter_map(|r| match outcome_of(&r[kernel], method) {
            Outcome::Done { score, .. } => Some(*score),
            _ => None,
        })
        .collect()
}

/// Raw and size-adjusted power along a grid of shift fractions β.
///
/// The size adjustment applies to the asymptotic test only: its critical
/// value is the empirical `1 − α` quantile of `T` over `replications` draws
/// of the matched null design (β = 0). A β = 0 grid point reuses those null
/// draws.
pub fn run_power_curve(config: &PowerConfig) -> Result<Vec<PowerCellResult>> {
    validated(config, ExperimentConfig::Power)?;
    let perm_reps = config.permutation_replications.unwrap_or(config.replications);
    let plan = Plan::new(&config.kernels, &config.methods, config.alpha, config.permutations, perm_reps)?;
    let (n, m, p) = (config.n, config.m, config.base.p);

    let null_dgp = PreparedDgp::new(&config.base.without_shifts())?;
    let null_runs = run_cell(&plan, &null_dgp, n, m, config.replications, config.seed, 0)?;
    let critical: Vec<Option<f64>> = (0..config.kernels.len())
        .map(|ki| {
            if config.methods.contains(&Method::Asymptotic) {
                empirical_critical_value(&scores(&null_runs, ki, Method::Asymptotic), config.alpha)
            } else {
                None
            }
        })
        .collect();

    let mut out = Vec::new();
    for (bi, &beta) in config.beta_grid.iter().enumerate() {
        let spec = config.shift.apply(config.base, beta);
        let shifted = shifted_count(beta, p);
        let fresh;
        let runs = if shifted == 0 {
            &null_runs
        } else {
            let prepared = PreparedDgp::new(&spec)?;
            fresh = run_cell(&plan, &prepared, n, m, config.replications, config.seed, bi as u32 + 1)?;
            &fresh
        };
        for (ki, kernel) in config.kernels.iter().enumerate() {
            for &method in &config.methods {
                let (size_adjusted_power, critical_value) = match (method, critical[ki]) {
                    (Method::Asymptotic, Some(cv)) => {
                        let s = scores(runs, ki, method);
                        let rate =
                            (!s.is_empty()).then(|| s.iter().filter(|&&t| t > cv).count() as f64 / s.len() as f64);
                        (rate, Some(cv))
                    }
                    _ => (None, None),
                };
                out.push(PowerCellResult {
                    beta,
                    shifted_coordinates: shifted,
                    kernel: *kernel,
                    method,
                    tally: tally(runs.iter().map(|r| outcome_of(&r[ki], method))),
                    size_adjusted_power,
                    critical_value,
                    seconds: seconds_of(runs, ki, method),
                });
            }
        }
    }
    Ok(out)
}

/// Realizations of `T` under a null design and their KS and Wasserstein-1
/// distances to N(0, 1).
pub fn null_distribution_diagnostics(config: &DiagnosticsConfig) -> Result<Vec<DiagnosticsResult>> {
    validated(config, ExperimentConfig::Diagnostics)?;
    let plan = Plan::new(&config.kernels, &[Method::Asymptotic], 0.05, 1, 0)?;
    let prepared = PreparedDgp::new(&config.dgp)?;
    let runs = run_cell(&plan, &prepared, config.n, config.m, config.replications, config.seed, 0)?;
    config
        .kernels
        .iter()
        .enumerate()
        .map(|(ki, kernel)| {
            let t = scores(&runs, ki, Method::Asymptotic);
            let valid = t.len();
            if valid == 0 {
                return Err(invalid(format!("{kernel}: every replication was degenerate")));
            }
            let mean = t.iter().sum::<f64>() / valid as f64;
            let sd = if valid > 1 {
                (t.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (valid - 1) as f64).sqrt()
            } else {
                0.0
            };
            Ok(DiagnosticsResult {
                kernel: *kernel,
                replications: config.replications,
                valid,
                degenerate: config.replications - valid,
                ks: ks_distance_normal(&t)?,
                wasserstein: wasserstein_normal(&t)?,
                mean,
                sd,
                seconds: seconds_of(&runs, ki, Method::Asymptotic),
                samples: config.keep_samples.then_some(t),
            })
        })
        .collect()
}
