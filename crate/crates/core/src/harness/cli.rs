//! Command-line front end: `synth`, `simulate`, `complexity`, `exponents`.
//!
//! Exit codes: 0 success, 1 domain or runtime error, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use super::{
    exponent_plot_script, geometric_budgets, parse_config_file, regret_plot_script, resolve_out_dir, run_sweep,
    ExperimentConfig, Strategy, VERSION,
};
use crate::baselines::GpUcbConfig;
use crate::bead::BeadConfig;
use crate::complexity::{
    default_grid_per_axis, exponent_table_text, exponents, lipschitz_complexity, lower_complexity,
    min_queries_diagnostic, upper_complexity, ComplexityReport, GapGrid, UpperParams,
};
use crate::error::{Error, Result};
use crate::gp::BetaMode;
use crate::instance::{
    default_bump_grid, estimate_bump_norm, fit_growth, format, holder_witness, synth_expansion,
    synth_growth_instance, RkhsFunction, GROWTH_FIT_RADII,
};
use crate::kernel::KernelSpec;
use crate::tree::TreeGeometry;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Random pairs used for the Hölder witness printed by `synth` and `complexity`.
const HOLDER_PAIRS: usize = 4000;

#[derive(Parser, Debug)]
#[command(name = "bead", version, about = "Adaptive-discretization kernel bandits: synthesis, simulation and analysis")]
pub struct Cli {
    /// Output directory (default: $BEAD_OUT_DIR, else ./bead-out).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize an RKHS test instance.
    Synth(SynthArgs),
    /// Run a regret sweep over strategies, budgets and seeds.
    Simulate(SimulateArgs),
    /// Compute lower, upper and Lipschitz complexity reports.
    Complexity(ComplexityArgs),
    /// Tabulate regret exponents against dimension.
    Exponents(ExponentsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Matern,
    #[value(name = "squared-exponential", alias = "se")]
    SquaredExponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Bead,
    #[value(name = "gp-ucb")]
    GpUcb,
    Random,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Bead => Strategy::Bead,
            StrategyArg::GpUcb => Strategy::GpUcb,
            StrategyArg::Random => Strategy::Random,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BetaModeArg {
    #[value(name = "algorithm-text")]
    AlgorithmText,
    #[value(name = "lemma-concentration")]
    LemmaConcentration,
}

impl From<BetaModeArg> for BetaMode {
    fn from(b: BetaModeArg) -> Self {
        match b {
            BetaModeArg::AlgorithmText => BetaMode::AlgorithmText,
            BetaModeArg::LemmaConcentration => BetaMode::LemmaConcentration,
        }
    }
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "matern")]
    pub kernel: KernelArg,
    /// Matérn smoothness.
    #[arg(long, default_value_t = 1.5)]
    pub nu: f64,
    /// Lengthscale.
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// RKHS norm of the instance.
    #[arg(long, default_value_t = 1.0)]
    pub norm: f64,
    /// Number of kernel sections in a random expansion.
    #[arg(long, default_value_t = 8)]
    pub centers: usize,
    /// Build a growth-`b` instance instead of a random expansion.
    #[arg(long)]
    pub growth_b: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Set the norm budget so that the norm is `(1 − λ)M`.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Instance file (default: <out-dir>/instance.txt).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// `key = value` file with any of the flags below; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Strategy to run; repeat for several (default: bead, gp-ucb, random).
    #[arg(long = "strategy", value_enum)]
    pub strategies: Vec<StrategyArg>,
    /// Comma-separated budgets (default: 128,256,...,4096).
    #[arg(long, value_delimiter = ',')]
    pub budgets: Vec<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Oracle noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Sub-Gaussian parameter assumed by the algorithms.
    #[arg(long)]
    pub sigma_bound: Option<f64>,
    /// BEAD regularizer τ.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_enum)]
    pub beta_mode: Option<BetaModeArg>,
    /// GP-UCB candidate grid per axis.
    #[arg(long)]
    pub grid_per_axis: Option<usize>,
    /// Write one trace file per run.
    #[arg(long)]
    pub write_traces: bool,
}

#[derive(Args, Debug)]
pub struct ComplexityArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Comma-separated gap scales Δ.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.02, 0.05, 0.1])]
    pub delta: Vec<f64>,
    /// Norm split λ; the budget M is set so that the norm is `(1 − λ)M`.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// Grid per axis for the bump-norm estimate.
    #[arg(long)]
    pub bump_grid: Option<usize>,
    /// Region grid per axis.
    #[arg(long)]
    pub grid_per_axis: Option<usize>,
    /// Budget n in `L = M ln n`.
    #[arg(long, default_value_t = 1024)]
    pub budget: usize,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    /// Perturbation constant c for the query diagnostic.
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    /// Noise level for the query diagnostic.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
}

#[derive(Args, Debug)]
pub struct ExponentsArgs {
    #[arg(long, default_value_t = 1.1)]
    pub nu: f64,
    #[arg(long, default_value_t = 1.2)]
    pub b: f64,
    /// Dimensions as `lo..hi`, a single value or a comma list.
    #[arg(long, default_value = "1..10")]
    pub d: String,
    /// Also write a matplotlib script for the table.
    #[arg(long)]
    pub plot_script: bool,
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    run(std::env::args_os())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for an error: usage errors for bad input, domain errors otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::Parse { .. } => EXIT_USAGE,
        _ => EXIT_DOMAIN,
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let out_dir = resolve_out_dir(cli.out_dir.as_deref());
    match &cli.command {
        Command::Synth(a) => synth(a, &out_dir),
        Command::Simulate(a) => simulate(a, &out_dir),
        Command::Complexity(a) => complexity(a, &out_dir),
        Command::Exponents(a) => exponents_cmd(a, &out_dir),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))
}

/// Inserts `# key = value` lines after the first line of `text`.
fn with_header(text: &str, header: &[(String, String)]) -> String {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let mut s = String::with_capacity(text.len() + 64 * header.len());
    s.push_str(first);
    s.push('\n');
    for (k, v) in header {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s.push_str(rest);
    s
}

fn tool_header(command: &str) -> Vec<(String, String)> {
    vec![
        ("tool".into(), "bead".into()),
        ("version".into(), VERSION.into()),
        ("command".into(), command.into()),
    ]
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn synth(a: &SynthArgs, out_dir: &Path) -> Result<()> {
    let kernel = match a.kernel {
        KernelArg::Matern => KernelSpec::matern(a.nu, a.theta, a.d)?,
        KernelArg::SquaredExponential => KernelSpec::squared_exponential(a.theta, a.d)?,
    };
    if !(a.norm.is_finite() && a.norm > 0.0) {
        return Err(Error::invalid(format!("--norm must be positive, got {}", a.norm)));
    }
    let mut f = match a.growth_b {
        Some(b) => {
            if a.d > 3 {
                return Err(Error::invalid("growth instances are limited to d ≤ 3"));
            }
            synth_growth_instance(kernel, b, a.seed)?.scaled(a.norm)?
        }
        None => synth_expansion(kernel, a.centers, a.norm, a.seed)?,
    };
    if let Some(l) = a.lambda {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::invalid(format!("--lambda must lie in (0, 1), got {l}")));
        }
        f = f.with_budget_for_lambda(l);
    }
    let path = a.out.clone().unwrap_or_else(|| out_dir.join("instance.txt"));
    let mut header = tool_header("synth");
    header.push(kv("kernel_arg", format!("{:?}", a.kernel).to_lowercase()));
    header.push(kv("recipe", match a.growth_b {
        Some(b) => format!("growth b={b}"),
        None => format!("expansion centers={}", a.centers),
    }));
    header.push(kv("requested_norm", a.norm));
    if let Some(l) = a.lambda {
        header.push(kv("lambda", l));
    }
    write_file(&path, &with_header(&format::write_instance(&f), &header))?;

    let b_hat = f
        .growth()
        .map(|g| g.b_hat)
        .or_else(|| fit_growth(&f, GROWTH_FIT_RADII.0, GROWTH_FIT_RADII.1).map(|g| g.b_hat));
    let holder = holder_witness(&f, HOLDER_PAIRS, a.seed);
    println!("instance: {}", path.display());
    println!("norm: {}", f.norm_estimate());
    println!("norm_budget: {}", f.norm_budget());
    println!("argmax: {:?}", f.argmax());
    println!("fmax: {}", f.fmax());
    match b_hat {
        Some(b) => println!("b_hat: {b}"),
        None => println!("b_hat: NA"),
    }
    println!("holder_witness: {holder}");
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| Error::invalid(format!("config key {key}: {e}")))
}

/// Merges flags over an optional config file into an experiment configuration
/// and the instance path.
pub fn resolve_simulate(a: &SimulateArgs) -> Result<(PathBuf, ExperimentConfig, bool)> {
    let file: BTreeMap<String, String> = match &a.config {
        Some(p) => parse_config_file(&read_file(p)?)?,
        None => BTreeMap::new(),
    };
    const KEYS: [&str; 11] = [
        "instance", "strategies", "budgets", "replications", "seed", "noise", "sigma-bound", "tau", "beta-mode",
        "grid-per-axis", "write-traces",
    ];
    if let Some(k) = file.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(Error::invalid(format!("unknown config key {k:?}")));
    }
    let get = |k: &str| file.get(k).map(String::as_str);

    let instance = match (&a.instance, get("instance")) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(Error::invalid("--instance is required")),
    };
    let strategies: Vec<Strategy> = if !a.strategies.is_empty() {
        a.strategies.iter().map(|&s| s.into()).collect()
    } else if let Some(v) = get("strategies") {
        v.split(',')
            .map(|t| Strategy::parse(t.trim()).ok_or_else(|| Error::invalid(format!("unknown strategy {t:?}"))))
            .collect::<Result<_>>()?
    } else {
        vec![Strategy::Bead, Strategy::GpUcb, Strategy::Random]
    };
    let budgets: Vec<usize> = if !a.budgets.is_empty() {
        a.budgets.clone()
    } else if let Some(v) = get("budgets") {
        v.split(',').map(|t| parse_num("budgets", t.trim())).collect::<Result<_>>()?
    } else {
        geometric_budgets(7, 12)
    };
    let pick = |flag: Option<String>, key: &str| flag.or_else(|| get(key).map(str::to_string));
    let replications = match pick(a.replications.map(|v| v.to_string()), "replications") {
        Some(v) => parse_num("replications", &v)?,
        None => 5,
    };
    let seed = match pick(a.seed.map(|v| v.to_string()), "seed") {
        Some(v) => parse_num("seed", &v)?,
        None => 0,
    };
    let mut cfg = ExperimentConfig::new(strategies, budgets, replications, seed);
    if let Some(v) = pick(a.noise.map(|v| v.to_string()), "noise") {
        cfg.noise = parse_num("noise", &v)?;
    }
    if let Some(v) = pick(a.sigma_bound.map(|v| v.to_string()), "sigma-bound") {
        cfg.sigma_bound = parse_num("sigma-bound", &v)?;
    }
    if let Some(v) = pick(a.tau.map(|v| v.to_string()), "tau") {
        cfg.bead_tau = parse_num("tau", &v)?;
    }
    cfg.beta_mode = match (a.beta_mode, get("beta-mode")) {
        (Some(m), _) => m.into(),
        (None, Some(v)) => BetaModeArg::from_str(v, false)
            .map_err(|e| Error::invalid(format!("config key beta-mode: {e}")))?
            .into(),
        (None, None) => BetaMode::LemmaConcentration,
    };
    cfg.gp = GpUcbConfig::default();
    if let Some(v) = pick(a.grid_per_axis.map(|v| v.to_string()), "grid-per-axis") {
        cfg.gp.grid_per_axis = parse_num("grid-per-axis", &v)?;
    }
    let write_traces = a.write_traces
        || match get("write-traces") {
            Some(v) => parse_num::<bool>("write-traces", v)?,
            None => false,
        };
    cfg.validate()?;
    Ok((instance, cfg, write_traces))
}

fn load_instance(path: &Path) -> Result<RkhsFunction> {
    format::parse_instance(&read_file(path)?)
}

fn simulate(a: &SimulateArgs, out_dir: &Path) -> Result<()> {
    let (instance_path, cfg, write_traces) = resolve_simulate(a)?;
    let f = load_instance(&instance_path)?;
    if cfg.strategies.contains(&Strategy::Bead) {
        let l_hat = holder_witness(&f, HOLDER_PAIRS, 0);
        let mut bc = BeadConfig::new(cfg.budgets[0], f.dim())?;
        bc.norm_bound = f.norm_budget();
        let l = bc.lipschitz();
        if l < l_hat {
            warn!("BEAD Hölder constant L = {l:.4} at n = {} is below the measured witness {l_hat:.4}", cfg.budgets[0]);
        }
    }
    let mut header = tool_header("simulate");
    header.push(kv("instance", instance_path.display()));
    let trace_dir = out_dir.join("traces");
    let mut trace_paths = Vec::new();
    let mut result = run_sweep(&f, &cfg, |cell, trace| {
        if write_traces {
            let mut t = trace.clone();
            t.metadata.extend(header.iter().cloned());
            t.metadata.push(kv("budget", cell.budget));
            t.metadata.push(kv("replicate", cell.replicate));
            t.metadata.push(kv("seed", cell.seed));
            let path = trace_dir.join(format!("{}_n{}_r{}.txt", cell.strategy.name(), cell.budget, cell.replicate));
            write_file(&path, &t.to_text())?;
            trace_paths.push(path);
        }
        Ok(())
    })?;
    header.extend(std::mem::take(&mut result.header));
    result.header = header;
    let summary = out_dir.join("summary.txt");
    write_file(&summary, &result.to_text())?;
    write_file(&out_dir.join("plot_regret.py"), &regret_plot_script("summary.txt"))?;
    println!("summary: {}", summary.display());
    if write_traces {
        println!("traces: {} files in {}", trace_paths.len(), trace_dir.display());
    }
    for fit in &result.fits {
        println!(
            "{}: slope {:.4} ± {:.4} over {} budgets ({} zero-regret runs excluded)",
            fit.strategy.name(),
            fit.slope,
            fit.stderr,
            fit.budgets_used,
            fit.zero_regret_excluded
        );
    }
    Ok(())
}

fn complexity(a: &ComplexityArgs, out_dir: &Path) -> Result<()> {
    if !(a.lambda > 0.0 && a.lambda < 1.0) {
        return Err(Error::invalid(format!("--lambda must lie in (0, 1), got {}", a.lambda)));
    }
    if a.delta.is_empty() || a.delta.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(Error::invalid("every Δ must lie in (0, 1)"));
    }
    if a.budget < 2 {
        return Err(Error::invalid("--budget must be at least 2"));
    }
    let f = load_instance(&a.instance)?.with_budget_for_lambda(a.lambda);
    let d = f.dim();
    let gpa = a.grid_per_axis.unwrap_or_else(|| default_grid_per_axis(d));
    let grid = GapGrid::new(&f, gpa)?;
    let bump_grid = a.bump_grid.unwrap_or_else(|| default_bump_grid(d));
    let bump_norm = estimate_bump_norm(f.kernel(), bump_grid)?;
    let geom = TreeGeometry::new(d)?;
    let xi = f.kernel().holder_exponent();
    let lipschitz = f.norm_budget() * (a.budget as f64).ln();
    let l_hat = holder_witness(&f, HOLDER_PAIRS, 0);
    if lipschitz < l_hat {
        warn!("L = M ln n = {lipschitz:.4} is below the measured Hölder witness {l_hat:.4}");
    }
    let mut params = UpperParams::defaults(&geom, lipschitz, xi);
    if let Some(r) = a.rho {
        params.rho = r;
    }
    if let Some(c) = a.c1 {
        params.c1 = c;
    }
    if let Some(c) = a.c2 {
        params.c2 = c;
    }
    let mut header = tool_header("complexity");
    header.push(kv("instance", a.instance.display()));
    header.push(kv("norm_budget", f.norm_budget()));
    header.push(kv("budget", a.budget));
    header.push(kv("bump_grid", bump_grid));
    header.push(kv("perturbation_c", a.c));
    header.push(kv("sigma", a.sigma));

    println!("delta lower upper lipschitz m0 min_queries");
    for &delta in &a.delta {
        let lower = lower_complexity(&f, &grid, delta, a.lambda, bump_norm)?;
        let upper = upper_complexity(&grid, delta, params)?;
        let lip = match lipschitz_complexity(&grid, delta, lipschitz, a.lambda) {
            Ok(r) => Some(r),
            Err(Error::Precondition(msg)) => {
                warn!("Lipschitz report skipped at Δ = {delta}: {msg}");
                None
            }
            Err(e) => return Err(e),
        };
        let min_q = min_queries_diagnostic(delta, a.c, a.sigma);
        let mut h = header.clone();
        h.push(kv("min_queries", min_q));
        let emit = |r: &ComplexityReport| -> Result<()> {
            let name = format!("complexity_{}_delta{delta}.txt", r.kind.name());
            write_file(&out_dir.join(name), &with_header(&r.to_text(), &h))
        };
        emit(&lower)?;
        emit(&upper)?;
        if let Some(r) = &lip {
            emit(r)?;
        }
        println!(
            "{delta} {} {} {} {} {min_q}",
            lower.total,
            upper.total,
            lip.as_ref().map(|r| r.total.to_string()).unwrap_or_else(|| "NA".into()),
            lower.m0()
        );
    }
    println!("reports: {}", out_dir.display());
    Ok(())
}

/// Parses `lo..hi`, `lo..=hi`, a single dimension or a comma list.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::invalid(format!("cannot parse dimension range {s:?}"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let dims: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        (num(lo)?..=num(hi)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if dims.is_empty() || dims.contains(&0) {
        return Err(bad());
    }
    Ok(dims)
}

fn exponents_cmd(a: &ExponentsArgs, out_dir: &Path) -> Result<()> {
    let dims = parse_dims(&a.d)?;
    let tables = dims.iter().map(|&d| exponents(d, a.nu, a.b)).collect::<Result<Vec<_>>>()?;
    if a.b <= a.nu {
        eprintln!("notice: b = {} ≤ ν = {}, lower-bound curves omitted", a.b, a.nu);
    }
    let mut header = tool_header("exponents");
    header.push(kv("nu", a.nu));
    header.push(kv("b", a.b));
    header.push(kv("d", &a.d));
    let path = out_dir.join("exponents.txt");
    write_file(&path, &with_header(&exponent_table_text(&tables), &header))?;
    println!("table: {}", path.display());
    if a.plot_script {
        let script = out_dir.join("plot_exponents.py");
        write_file(&script, &exponent_plot_script("exponents.txt"))?;
        println!("plot script: {}", script.display());
    }
    println!("identity check: {}", tables.iter().all(|t| t.identity_ok || a.b <= a.nu));
    Ok(())
}
