//! JSON experiment configurations.
//!
//! A config is one object whose `"experiment"` key selects the design:
//!
//! ```json
//! {
//!   "experiment": "size",
//!   "cells": [{"n": 50, "m": 50, "dgp": {"p": 50, "rho": 0.4}}],
//!   "kernels": [{"family": "l2"}, {"family": "gaussian", "bandwidth": "median"}],
//!   "methods": ["asymptotic", "permutation"],
//!   "replications": 2000,
//!   "permutation_replications": 500,
//!   "permutations": 300,
//!   "alpha": 0.05,
//!   "seed": 1
//! }
//! ```
//!
//! `"power"` replaces `cells` with `n`, `m`, a null `base` design, a `shift`
//! (`{"mean": {"delta": 0.15}}` or `{"variance": {"factor": 1.2}}`) and a
//! `beta_grid`. `"diagnostics"` takes `n`, `m`, `dgp`, `kernels`,
//! `replications`, `seed` and an optional `keep_samples` flag.

use serde::{Deserialize, Serialize};

use crate::inference::Method;
use crate::kernels::KernelSpec;
use crate::simulation::dgp::DgpSpec;

fn default_alpha() -> f64 {
    0.05
}

fn default_permutations() -> usize {
    300
}

fn default_methods() -> Vec<Method> {
    vec![Method::Asymptotic]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub n: usize,
    pub m: usize,
    pub dgp: DgpSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeConfig {
    pub cells: Vec<CellSpec>,
    pub kernels: Vec<KernelSpec>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub replications: usize,
    /// Replications that also run the permutation test; defaults to `replications`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation_replications: Option<usize>,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ShiftKind {
    /// Adds `delta` to the first `⌊βp⌋` coordinates of Y.
    Mean { delta: f64 },
    /// Multiplies the scale of the first `⌊βp⌋` coordinates of Y by `factor`.
    Variance { factor: f64 },
}

impl ShiftKind {
    pub fn apply(self, base: DgpSpec, beta: f64) -> DgpSpec {
        let base = base.without_shifts();
        match self {
            ShiftKind::Mean { delta } => base.with_mean_shift(delta, beta),
            ShiftKind::Variance { factor } => base.with_var_shift(factor, beta),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub n: usize,
    pub m: usize,
    pub base: DgpSpec,
    pub shift: ShiftKind,
    pub beta_grid: Vec<f64>,
    pub kernels: Vec<KernelSpec>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub replications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation_replications: Option<usize>,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub n: usize,
    pub m: usize,
    pub dgp: DgpSpec,
    pub kernels: Vec<KernelSpec>,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Include every realized statistic in the report.
    #[serde(default)]
    pub keep_samples: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "lowercase")]
pub enum ExperimentConfig {
    Size(SizeConfig),
    Power(PowerConfig),
    Diagnostics(DiagnosticsConfig),
}

impl ExperimentConfig {
    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::Size(c) => c.seed,
            ExperimentConfig::Power(c) => c.seed,
            ExperimentConfig::Diagnostics(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Size(c) => c.seed = seed,
            ExperimentConfig::Power(c) => c.seed = seed,
            ExperimentConfig::Diagnostics(c) => c.seed = seed,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Size(_) => "size",
            ExperimentConfig::Power(_) => "power",
            ExperimentConfig::Diagnostics(_) => "diagnostics",
        }
    }

    /// Semantic checks beyond what the JSON schema enforces. Returns one
    /// message per offending key.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        match self {
            ExperimentConfig::Size(c) => {
                if c.cells.is_empty() {
                    problems.push("cells: must not be empty".to_string());
                }
                for (i, cell) in c.cells.iter().enumerate() {
                    check_sizes(&mut problems, &format!("cells[{i}]"), cell.n, cell.m);
                    check_dgp(&mut problems, &format!("cells[{i}].dgp"), &cell.dgp);
                }
                check_common(&mut problems, &c.kernels, &c.methods, c.replications, c.alpha);
                check_permutations(
                    &mut problems,
                    &c.methods,
                    c.permutations,
                    c.permutation_replications,
                    c.replications,
                );
            }
            ExperimentConfig::Power(c) => {
                check_sizes(&mut problems, "", c.n, c.m);
                check_dgp(&mut problems, "base", &c.base);
                if c.beta_grid.is_empty() {
                    problems.push("beta_grid: must not be empty".to_string());
                }
                if c.beta_grid.iter().any(|b| !(0.0..=1.0).contains(b)) {
                    problems.push("beta_grid: values must lie in [0, 1]".to_string());
                }
                match c.shift {
                    ShiftKind::Mean { delta } if !delta.is_finite() => {
                        problems.push("shift.mean.delta: must be finite".to_string())
                    }
                    ShiftKind::Variance { factor } if !(factor > 0.0 && factor.is_finite()) => {
                        problems.push("shift.variance.factor: must be positive".to_string())
                    }
                    _ => {}
                }
                check_common(&mut problems, &c.kernels, &c.methods, c.replications, c.alpha);
                check_permutations(
                    &mut problems,
                    &c.methods,
                    c.permutations,
                    c.permutation_replications,
                    c.replications,
                );
            }
            ExperimentConfig::Diagnostics(c) => {
                check_sizes(&mut problems, "", c.n, c.m);
                check_dgp(&mut problems, "dgp", &c.dgp);
                check_common(&mut problems, &c.kernels, &[Method::Asymptotic], c.replications, 0.05);
                if c.replications < 100 {
                    problems.push("replications: diagnostics need at least 100".to_string());
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }
}

fn key(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn check_sizes(problems: &mut Vec<String>, prefix: &str, n: usize, m: usize) {
    if n < 2 {
        problems.push(format!("{}: must be at least 2", key(prefix, "n")));
    }
    if m < 2 {
        problems.push(format!("{}: must be at least 2", key(prefix, "m")));
    }
}

fn check_dgp(problems: &mut Vec<String>, prefix: &str, dgp: &DgpSpec) {
    if let Err(e) = dgp.validate() {
        problems.push(format!("{prefix}: {e}"));
    }
}

fn check_common(
    problems: &mut Vec<String>,
    kernels: &[KernelSpec],
    methods: &[Method],
    replications: usize,
    alpha: f64,
) {
    if kernels.is_empty() {
        problems.push("kernels: must not be empty".to_string());
    }
    for (i, k) in kernels.iter().enumerate() {
        if let Err(e) = k.validate() {
            problems.push(format!("kernels[{i}]: {e}"));
        }
    }
    if methods.is_empty() {
        problems.push("methods: must not be empty".to_string());
    }
    if replications == 0 {
        problems.push("replications: must be at least 1".to_string());
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        problems.push("alpha: must lie in (0, 1)".to_string());
    }
}

fn check_permutations(
    problems: &mut Vec<String>,
    methods: &[Method],
    permutations: usize,
    permutation_replications: Option<usize>,
    replications: usize,
) {
    if !methods.contains(&Method::Permutation) {
        return;
    }
    if permutations == 0 {
        problems.push("permutations: must be at least 1".to_string());
    }
    if let Some(r) = permutation_replications {
        if r == 0 || r > replications {
            problems.push("permutation_replications: must lie in 1..=replications".to_string());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_size_config() {
        let json = r#"{
            "experiment": "size",
            "cells": [{"n": 50, "m": 50, "dgp": {"p": 50, "rho": 0.4}}],
            "kernels": [{"family": "l2"}, {"family": "gaussian", "bandwidth": "median"}],
            "methods": ["asymptotic", "permutation"],
            "replications": 20,
            "seed": 3
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.name(), "size");
        assert_eq!(cfg.seed(), 3);
        assert!(cfg.validate().is_ok());
        let ExperimentConfig::Size(size) = &cfg else { panic!() };
        assert_eq!(size.permutations, 300);
        assert_eq!(size.alpha, 0.05);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn empty_beta_grid_is_rejected() {
        let json = r#"{
            "experiment": "power", "n": 20, "m": 20,
            "base": {"p": 10, "rho": 0.5}, "shift": {"mean": {"delta": 0.15}},
            "beta_grid": [], "kernels": [{"family": "l2"}], "replications": 10
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        let problems = cfg.validate().unwrap_err();
        assert!(problems.iter().any(|p| p.starts_with("beta_grid")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let json = r#"{"experiment": "diagnostics", "n": 20, "m": 20,
            "dgp": {"p": 10, "rho": 0.5}, "kernels": [{"family": "l2"}],
            "replications": 100, "colour": "blue"}"#;
        let err = serde_json::from_str::<ExperimentConfig>(json).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn collects_several_problems() {
        let cfg = ExperimentConfig::Diagnostics(DiagnosticsConfig {
            n: 1,
            m: 20,
            dgp: DgpSpec::null(10, 1.5),
            kernels: vec![],
            replications: 10,
            seed: 0,
            keep_samples: false,
        });
        let problems = cfg.validate().unwrap_err();
        assert!(problems.len() >= 4, "{problems:?}");
    }
}
