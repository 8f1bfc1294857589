//! `hdmmd`: studentized MMD two-sample tests from the command line.

mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hdmmd::simulation::{
    DgpSpec, DiagnosticsConfig, ExperimentConfig, ExperimentReport, ExperimentResults, Innovation,
};
use hdmmd::{
    asymptotic_test, gram_pooled, permutation_test_gram, population_summary, Bandwidth, Distribution, KernelFamily,
    KernelSpec, Matrix, Method, Summary, TestResult, VERSION,
};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "hdmmd", version, about = "Studentized MMD two-sample tests for high-dimensional data")]
struct Cli {
    /// Worker threads for permutation and Monte Carlo loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test equality of the distributions behind two CSV samples.
    Test(TestArgs),
    /// Run a size, power or diagnostics experiment described by a JSON config.
    Simulate(SimulateArgs),
    /// Null-distribution diagnostics of the studentized statistic.
    Diagnose(DiagnoseArgs),
    /// Exact population quantities for finitely supported distributions.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct TestArgs {
    /// First sample; rows are observations.
    x: PathBuf,
    /// Second sample, same number of columns.
    y: PathBuf,
    #[arg(long, default_value = "l2")]
    kernel: KernelFamily,
    /// `median` or a positive number; Gaussian and Laplacian only.
    #[arg(long)]
    bandwidth: Option<Bandwidth>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "asymptotic")]
    method: Method,
    #[arg(long, default_value_t = 300)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the first row of each CSV.
    #[arg(long)]
    header: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Also write every realized statistic (diagnostics experiments only).
    #[arg(long)]
    raw: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    p: usize,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    innovation: InnovationArg,
    #[arg(long, value_delimiter = ',', default_value = "l2,gaussian,laplacian")]
    kernels: Vec<KernelFamily>,
    #[arg(long, default_value_t = 500)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Also write every realized statistic as CSV.
    #[arg(long)]
    raw: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InnovationArg {
    Gaussian,
    CenteredExponential,
}

#[derive(Args)]
struct OracleArgs {
    /// JSON with `kernel`, `p`, `q` and optional `rho`.
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionJson {
    atoms: Vec<Vec<f64>>,
    /// Uniform over the atoms when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<f64>>,
}

impl DistributionJson {
    fn build(&self, key: &str) -> Result<Distribution> {
        let atoms = Matrix::from_rows(&self.atoms).with_context(|| format!("{key}.atoms"))?;
        let dist = match &self.probs {
            Some(p) => Distribution::new(atoms, p.clone()),
            None => Distribution::uniform(atoms),
        };
        dist.with_context(|| key.to_string())
    }
}

fn default_rho() -> f64 {
    0.5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleConfig {
    kernel: KernelSpec,
    p: DistributionJson,
    q: DistributionJson,
    /// Weight of `p` in the mixture.
    #[serde(default = "default_rho")]
    rho: f64,
}

#[derive(Serialize)]
struct TestOutput<'a> {
    version: &'static str,
    x: &'a Path,
    y: &'a Path,
    #[serde(flatten)]
    result: TestResult,
}

#[derive(Serialize)]
struct OracleOutput {
    version: &'static str,
    config: OracleConfig,
    summary: Summary,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<hdmmd::Error>() {
                Some(hdmmd::Error::DegenerateVariance { .. }) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Oracle(args) => cmd_oracle(args),
    }
}

fn cmd_test(args: TestArgs) -> Result<()> {
    let spec = KernelSpec { family: args.kernel, bandwidth: args.bandwidth };
    spec.validate()?;
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        bail!("--alpha must lie in (0, 1)");
    }
    if args.method == Method::Permutation && args.permutations == 0 {
        bail!("--permutations must be at least 1");
    }
    let x = io::read_matrix(&args.x, args.header)?;
    let y = io::read_matrix(&args.y, args.header)?;
    if x.ncols() != y.ncols() {
        bail!("{} has {} columns but {} has {}", args.x.display(), x.ncols(), args.y.display(), y.ncols());
    }
    let kernel = spec.resolve(&x, &y)?;
    let gram = gram_pooled(&kernel, &x, &y)?;
    let result = match args.method {
        Method::Asymptotic => asymptotic_test(&gram, args.alpha)?,
        Method::Permutation => permutation_test_gram(&gram, args.permutations, args.alpha, args.seed)?,
    };
    io::write_json(args.out.as_deref(), &TestOutput { version: VERSION, x: &args.x, y: &args.y, result })
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))?;
    if let Err(problems) = config.validate() {
        bail!("{}: invalid config:\n  {}", path.display(), problems.join("\n  "));
    }
    Ok(config)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut config = read_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.set_seed(seed);
    }
    if args.raw.is_some() {
        match &mut config {
            ExperimentConfig::Diagnostics(c) => c.keep_samples = true,
            _ => bail!("--raw applies to diagnostics experiments only"),
        }
    }
    report(&config, args.out.as_deref(), args.format, args.raw.as_deref())
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<()> {
    let innovation = match args.innovation {
        InnovationArg::Gaussian => Innovation::Gaussian,
        InnovationArg::CenteredExponential => Innovation::CenteredExponential,
    };
    let config = ExperimentConfig::Diagnostics(DiagnosticsConfig {
        n: args.n,
        m: args.m,
        dgp: DgpSpec::null(args.p, args.rho).with_innovation(innovation),
        kernels: args.kernels.iter().map(|&f| KernelSpec::with_default_bandwidth(f)).collect(),
        replications: args.replications,
        seed: args.seed,
        keep_samples: args.raw.is_some(),
    });
    if let Err(problems) = config.validate() {
        bail!("invalid arguments:\n  {}", problems.join("\n  "));
    }
    report(&config, args.out.as_deref(), args.format, args.raw.as_deref())
}

fn report(config: &ExperimentConfig, out: Option<&Path>, format: Format, raw: Option<&Path>) -> Result<()> {
    let mut report = hdmmd::simulation::run_experiment(config)?;
    if let Some(raw) = raw {
        write_raw(&report, raw)?;
        if let ExperimentResults::Diagnostics(d) = &mut report.results {
            d.iter_mut().for_each(|r| r.samples = None);
        }
    }
    match format {
        Format::Json => io::write_json(out, &report),
        Format::Csv => write_report_csv(&report, out),
    }
}

fn write_raw(report: &ExperimentReport, path: &Path) -> Result<()> {
    let ExperimentResults::Diagnostics(results) = &report.results else {
        bail!("raw statistics are only kept for diagnostics experiments");
    };
    let mut rows = Vec::new();
    for r in results {
        for (i, t) in r.samples.iter().flatten().enumerate() {
            rows.push(vec![r.kernel.to_string(), i.to_string(), t.to_string()]);
        }
    }
    io::write_csv(Some(path), &preamble(report)?, &["kernel", "index", "statistic"], &rows)
}

fn preamble(report: &ExperimentReport) -> Result<Vec<(&'static str, String)>> {
    Ok(vec![
        ("version", report.version.to_string()),
        ("seed", report.seed.to_string()),
        ("config", serde_json::to_string(&report.config)?),
    ])
}

fn write_report_csv(report: &ExperimentReport, out: Option<&Path>) -> Result<()> {
    let (header, rows): (&[&str], Vec<Vec<String>>) = match &report.results {
        ExperimentResults::Size(cells) => (
            &[
                "cell",
                "n",
                "m",
                "p",
                "kernel",
                "method",
                "replications",
                "valid",
                "degenerate",
                "rejections",
                "rejection_rate",
                "seconds",
            ],
            cells
                .iter()
                .map(|c| {
                    vec![
                        c.cell.to_string(),
                        c.n.to_string(),
                        c.m.to_string(),
                        c.p.to_string(),
                        c.kernel.to_string(),
                        c.method.to_string(),
                        c.tally.replications.to_string(),
                        c.tally.valid.to_string(),
                        c.tally.degenerate.to_string(),
                        c.tally.rejections.to_string(),
                        io::opt(c.tally.rejection_rate),
                        c.seconds.to_string(),
                    ]
                })
                .collect(),
        ),
        ExperimentResults::Power(cells) => (
            &[
                "beta",
                "shifted_coordinates",
                "kernel",
                "method",
                "replications",
                "valid",
                "degenerate",
                "rejections",
                "raw_power",
                "size_adjusted_power",
                "critical_value",
                "seconds",
            ],
            cells
                .iter()
                .map(|c| {
                    vec![
                        c.beta.to_string(),
                        c.shifted_coordinates.to_string(),
                        c.kernel.to_string(),
                        c.method.to_string(),
                        c.tally.replications.to_string(),
                        c.tally.valid.to_string(),
                        c.tally.degenerate.to_string(),
                        c.tally.rejections.to_string(),
                        io::opt(c.tally.rejection_rate),
                        io::opt(c.size_adjusted_power),
                        io::opt(c.critical_value),
                        c.seconds.to_string(),
                    ]
                })
                .collect(),
        ),
        ExperimentResults::Diagnostics(results) => (
            &["kernel", "replications", "valid", "degenerate", "ks", "wasserstein", "mean", "sd", "seconds"],
            results
                .iter()
                .map(|r| {
                    vec![
                        r.kernel.to_string(),
                        r.replications.to_string(),
                        r.valid.to_string(),
                        r.degenerate.to_string(),
                        r.ks.to_string(),
                        r.wasserstein.to_string(),
                        r.mean.to_string(),
                        r.sd.to_string(),
                        r.seconds.to_string(),
                    ]
                })
                .collect(),
        ),
    };
    io::write_csv(out, &preamble(report)?, header, &rows)
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let text =
        std::fs::read_to_string(&args.config).with_context(|| format!("{}: cannot read", args.config.display()))?;
    let config: OracleConfig =
        serde_json::from_str(&text).with_context(|| format!("{}: invalid oracle config", args.config.display()))?;
    let kernel = config.kernel.resolve_fixed::<f64>().context("kernel")?;
    let p = config.p.build("p")?;
    let q = config.q.build("q")?;
    if p.dim() != q.dim() {
        bail!("p has dimension {} but q has dimension {}", p.dim(), q.dim());
    }
    let summary = population_summary(&kernel, &p, &q, config.rho)?;
    io::write_json(args.out.as_deref(), &OracleOutput { version: VERSION, config, summary })
}
