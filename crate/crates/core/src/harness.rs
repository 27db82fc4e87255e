//! Sweeps over strategies, budgets and seeds, with regression of regret
//! exponents and line-oriented text outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::baselines::{run_gp_ucb, run_random, GpUcbConfig};
use crate::bead::{run_bead, BeadConfig};
use crate::error::{Error, Result};
use crate::gp::BetaMode;
use crate::instance::RkhsFunction;
use crate::oracle::NoisyOracle;
use crate::stats::{median, ols};
use crate::trace::RegretTrace;

pub mod cli;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BEAD_OUT_DIR";
/// Output directory used when neither a flag nor the environment set one.
pub const DEFAULT_OUT_DIR: &str = "bead-out";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output directory from an explicit choice, then [`OUT_DIR_ENV`], then
/// [`DEFAULT_OUT_DIR`].
pub fn resolve_out_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Bead,
    GpUcb,
    Random,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Bead => "bead",
            Strategy::GpUcb => "gp-ucb",
            Strategy::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bead" => Some(Strategy::Bead),
            "gp-ucb" => Some(Strategy::GpUcb),
            "random" => Some(Strategy::Random),
            _ => None,
        }
    }

    fn id(self) -> u64 {
        match self {
            Strategy::Bead => 1,
            Strategy::GpUcb => 2,
            Strategy::Random => 3,
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one sweep cell, a hash of `(base_seed, strategy, budget, replicate)`.
pub fn cell_seed(base_seed: u64, strategy: Strategy, budget: usize, replicate: usize) -> u64 {
    let mut h = splitmix(base_seed);
    h = splitmix(h ^ strategy.id());
    h = splitmix(h ^ budget as u64);
    splitmix(h ^ replicate as u64)
}

/// A geometric budget list `2^lo, …, 2^hi`.
pub fn geometric_budgets(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|e| 1usize << e).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub strategies: Vec<Strategy>,
    pub budgets: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    /// Oracle noise standard deviation.
    pub noise: f64,
    /// Sub-Gaussian parameter assumed by the algorithms (≥ `noise`).
    pub sigma_bound: f64,
    pub bead_tau: f64,
    pub beta_mode: BetaMode,
    pub gp: GpUcbConfig,
}

impl ExperimentConfig {
    pub fn new(strategies: Vec<Strategy>, budgets: Vec<usize>, replications: usize, base_seed: u64) -> Self {
        Self {
            strategies,
            budgets,
            replications,
            base_seed,
            noise: 0.1,
            sigma_bound: 0.1,
            bead_tau: 4.0,
            beta_mode: BetaMode::LemmaConcentration,
            gp: GpUcbConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::invalid("at least one strategy is required"));
        }
        if self.budgets.is_empty() || self.budgets[0] == 0 || self.budgets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("budgets must be positive and strictly increasing"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if !(self.noise >= 0.0 && self.sigma_bound > 0.0 && self.sigma_bound >= self.noise) {
            return Err(Error::invalid("need 0 ≤ noise ≤ sigma_bound and sigma_bound > 0"));
        }
        Ok(())
    }

    /// `(key, value)` lines recorded in output headers.
    pub fn describe(&self) -> Vec<(String, String)> {
        let join = |v: Vec<String>| v.join(",");
        vec![
            ("strategies".into(), join(self.strategies.iter().map(|s| s.name().to_string()).collect())),
            ("budgets".into(), join(self.budgets.iter().map(|b| b.to_string()).collect())),
            ("replications".into(), self.replications.to_string()),
            ("seed".into(), self.base_seed.to_string()),
            ("noise".into(), self.noise.to_string()),
            ("sigma_bound".into(), self.sigma_bound.to_string()),
            ("bead_tau".into(), self.bead_tau.to_string()),
            ("beta_mode".into(), self.beta_mode.name().into()),
            ("gp_grid_per_axis".into(), self.gp.grid_per_axis.to_string()),
            ("gp_tau".into(), self.gp.tau.to_string()),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub strategy: Strategy,
    pub budget: usize,
    pub replicate: usize,
    pub seed: u64,
    pub final_regret: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub strategy: Strategy,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub budgets_used: usize,
    /// Zero-regret runs left out of the medians.
    pub zero_regret_excluded: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub header: Vec<(String, String)>,
    pub cells: Vec<CellResult>,
    pub fits: Vec<SlopeFit>,
}

/// Runs one strategy for one budget with its own seeded oracle.
pub fn run_cell(
    f: &RkhsFunction,
    config: &ExperimentConfig,
    strategy: Strategy,
    budget: usize,
    seed: u64,
) -> Result<RegretTrace> {
    let mut oracle = NoisyOracle::new(f, config.noise, seed);
    match strategy {
        Strategy::Bead => {
            let mut cfg = BeadConfig::new(budget, f.dim())?;
            cfg.tau = config.bead_tau;
            cfg.norm_bound = f.norm_budget().max(f64::MIN_POSITIVE);
            cfg.sigma = config.sigma_bound;
            cfg.beta_mode = config.beta_mode;
            Ok(run_bead(&cfg, &mut oracle)?.trace)
        }
        Strategy::GpUcb => {
            let cfg = GpUcbConfig {
                norm_bound: f.norm_budget(),
                noise_sd: config.sigma_bound,
                ..config.gp
            };
            run_gp_ucb(&cfg, &mut oracle, budget)
        }
        Strategy::Random => Ok(run_random(&mut oracle, budget, splitmix(seed ^ 0x5EED))),
    }
}

/// Runs every `(strategy, budget, replicate)` cell in parallel. Traces are
/// passed to `keep_trace` in cell order.
pub fn run_sweep(
    f: &RkhsFunction,
    config: &ExperimentConfig,
    mut keep_trace: impl FnMut(&CellResult, &RegretTrace) -> Result<()>,
) -> Result<SweepResult> {
    config.validate()?;
    let mut jobs = Vec::new();
    for &s in &config.strategies {
        for &b in &config.budgets {
            for r in 0..config.replications {
                jobs.push((s, b, r, cell_seed(config.base_seed, s, b, r)));
            }
        }
    }
    let outcomes: Vec<Result<(CellResult, RegretTrace)>> = jobs
        .par_iter()
        .map(|&(s, b, r, seed)| {
            let trace = run_cell(f, config, s, b, seed)?;
            let cell = CellResult {
                strategy: s,
                budget: b,
                replicate: r,
                seed,
                final_regret: trace.final_regret(),
            };
            Ok((cell, trace))
        })
        .collect();
    let mut cells = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let (cell, trace) = o?;
        keep_trace(&cell, &trace)?;
        cells.push(cell);
    }
    let fits = config
        .strategies
        .iter()
        .filter_map(|&s| fit_slope(&cells, s))
        .collect();
    Ok(SweepResult {
        header: config.describe(),
        cells,
        fits,
    })
}

/// Median final regret per budget over positive-regret replicates, with the
/// number of zero-regret runs left out.
pub fn medians(cells: &[CellResult], strategy: Strategy) -> (Vec<(usize, f64)>, usize) {
    let mut by_budget: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut zeros = 0;
    for c in cells.iter().filter(|c| c.strategy == strategy) {
        let entry = by_budget.entry(c.budget).or_default();
        if c.final_regret > 0.0 {
            entry.push(c.final_regret);
        } else {
            zeros += 1;
        }
    }
    let meds = by_budget
        .into_iter()
        .filter_map(|(b, v)| median(&v).map(|m| (b, m)))
        .collect();
    (meds, zeros)
}

/// OLS of `ln R_n` on `ln n` over per-budget medians; needs three budgets.
pub fn fit_slope(cells: &[CellResult], strategy: Strategy) -> Option<SlopeFit> {
    let (meds, zeros) = medians(cells, strategy);
    if meds.len() < 3 {
        return None;
    }
    let pts: Vec<(f64, f64)> = meds.iter().map(|&(b, m)| ((b as f64).ln(), m.ln())).collect();
    let (slope, intercept, stderr) = ols(&pts)?;
    Some(SlopeFit {
        strategy,
        slope,
        intercept,
        stderr,
        budgets_used: meds.len(),
        zero_regret_excluded: zeros,
    })
}

pub const SUMMARY_HEADER: &str = "# bead sweep v1";

impl SweepResult {
    /// Summary text: header lines, one `cell` row per run, one `fit` row per
    /// strategy and one `median` row per (strategy, budget).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{SUMMARY_HEADER}");
        for (k, v) in &self.header {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let _ = writeln!(s, "# columns: cell strategy budget replicate seed final_regret");
        for c in &self.cells {
            let _ = writeln!(s, "cell {} {} {} {} {}", c.strategy.name(), c.budget, c.replicate, c.seed, c.final_regret);
        }
        let _ = writeln!(s, "# columns: fit strategy slope intercept stderr budgets_used zero_regret_excluded");
        for f in &self.fits {
            let _ = writeln!(
                s,
                "fit {} {} {} {} {} {}",
                f.strategy.name(),
                f.slope,
                f.intercept,
                f.stderr,
                f.budgets_used,
                f.zero_regret_excluded
            );
        }
        let _ = writeln!(s, "# columns: median strategy budget median_regret");
        let mut strategies: Vec<Strategy> = self.cells.iter().map(|c| c.strategy).collect();
        strategies.dedup();
        for st in strategies {
            for (b, m) in medians(&self.cells, st).0 {
                let _ = writeln!(s, "median {} {b} {m}", st.name());
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == SUMMARY_HEADER => {}
            _ => return Err(Error::parse(1, "missing sweep header")),
        }
        let mut out = SweepResult {
            header: Vec::new(),
            cells: Vec::new(),
            fits: Vec::new(),
        };
        for (i, raw) in lines {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with("# columns:") {
                continue;
            }
            if let Some(meta) = body.strip_prefix('#') {
                let (k, v) = meta
                    .split_once('=')
                    .ok_or_else(|| Error::parse(line, "expected `# key = value`"))?;
                out.header.push((k.trim().to_string(), v.trim().to_string()));
                continue;
            }
            let f: Vec<&str> = body.split_whitespace().collect();
            let strategy = |t: &str| Strategy::parse(t).ok_or_else(|| Error::parse(line, format!("unknown strategy {t:?}")));
            let num = |t: &str| t.parse::<f64>().map_err(|e| Error::parse(line, format!("{e}")));
            let int = |t: &str| t.parse::<u64>().map_err(|e| Error::parse(line, format!("{e}")));
            match (f[0], f.len()) {
                ("cell", 6) => out.cells.push(CellResult {
                    strategy: strategy(f[1])?,
                    budget: int(f[2])? as usize,
                    replicate: int(f[3])? as usize,
                    seed: int(f[4])?,
                    final_regret: num(f[5])?,
                }),
                ("fit", 7) => out.fits.push(SlopeFit {
                    strategy: strategy(f[1])?,
                    slope: num(f[2])?,
                    intercept: num(f[3])?,
                    stderr: num(f[4])?,
                    budgets_used: int(f[5])? as usize,
                    zero_regret_excluded: int(f[6])? as usize,
                }),
                ("median", 4) => {}
                _ => return Err(Error::parse(line, format!("unrecognized row {body:?}"))),
            }
        }
        Ok(out)
    }
}

/// Parses a `key = value` config file (`#` comments). Later keys win.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, "expected `key = value`"))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

/// Python script plotting the median-regret rows of a sweep summary.
pub fn regret_plot_script(summary_file: &str) -> String {
    format!(
        r##"# Plots median cumulative regret against budget on log-log axes.
import collections
import matplotlib.pyplot as plt

series = collections.defaultdict(list)
with open("{summary_file}") as fh:
    for line in fh:
        parts = line.split()
        if parts and parts[0] == "median":
            series[parts[1]].append((int(parts[2]), float(parts[3])))

for name, pts in sorted(series.items()):
    pts.sort()
    plt.loglog([p[0] for p in pts], [p[1] for p in pts], marker="o", label=name)
plt.xlabel("budget n")
plt.ylabel("median cumulative regret")
plt.legend()
plt.savefig("regret.png", dpi=150)
"##
    )
}

/// Python script plotting exponent curves against dimension, dashed for
/// upper and solid for lower exponents.
pub fn exponent_plot_script(table_file: &str) -> String {
    format!(
        r##"# Plots regret exponents against dimension.
import collections
import matplotlib.pyplot as plt

upper = collections.defaultdict(list)
lower = collections.defaultdict(list)
with open("{table_file}") as fh:
    for line in fh:
        parts = line.split()
        if not parts or parts[0].startswith("#") or parts[0] == "algorithm":
            continue
        name, d = parts[0], int(parts[1])
        upper[name].append((d, float(parts[5])))
        if parts[6] != "NA":
            lower[name].append((d, float(parts[6])))

colors = {{"supkernelucb": "tab:blue", "gp-ucb": "tab:orange", "pi-gp-ucb": "tab:green", "bead": "tab:red"}}
for name, pts in upper.items():
    plt.plot(*zip(*pts), linestyle="--", color=colors.get(name), label=name + " upper")
for name, pts in lower.items():
    if name != "bead":
        plt.plot(*zip(*pts), linestyle="-", color=colors.get(name), label=name + " lower")
plt.xlabel("dimension d")
plt.ylabel("regret exponent")
plt.legend()
plt.savefig("exponents.png", dpi=150)
"##
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::synth_expansion;
    use crate::kernel::KernelSpec;

    #[test]
    fn cell_seeds_differ_and_repeat() {
        let a = cell_seed(1, Strategy::Bead, 128, 0);
        assert_eq!(a, cell_seed(1, Strategy::Bead, 128, 0));
        assert_ne!(a, cell_seed(1, Strategy::Bead, 128, 1));
        assert_ne!(a, cell_seed(1, Strategy::Random, 128, 0));
        assert_ne!(a, cell_seed(2, Strategy::Bead, 128, 0));
    }

    #[test]
    fn summary_round_trips() {
        let f = synth_expansion(KernelSpec::matern(1.5, 1.0, 1).unwrap(), 1, 1.0, 1).unwrap();
        let cfg = ExperimentConfig::new(vec![Strategy::Random, Strategy::Bead], vec![16, 32, 64], 2, 3);
        let res = run_sweep(&f, &cfg, |_, _| Ok(())).unwrap();
        assert_eq!(res.cells.len(), 12);
        assert_eq!(res.fits.len(), 2);
        let text = res.to_text();
        let back = SweepResult::parse(&text).unwrap();
        assert_eq!(back, res);
        let again = run_sweep(&f, &cfg, |_, _| Ok(())).unwrap();
        assert_eq!(again.to_text(), text);
    }

    #[test]
    fn zero_regret_runs_are_excluded() {
        let mk = |b, r: f64| CellResult { strategy: Strategy::Random, budget: b, replicate: 0, seed: 0, final_regret: r };
        let cells = vec![mk(8, 0.0), mk(8, 1.0), mk(16, 2.0), mk(32, 4.0)];
        let fit = fit_slope(&cells, Strategy::Random).unwrap();
        assert_eq!(fit.zero_regret_excluded, 1);
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!(fit_slope(&cells[..2], Strategy::Random).is_none());
    }

    #[test]
    fn config_file_keys() {
        let m = parse_config_file("# sweep\nreplications = 5\nbase_seed=7 # note\n").unwrap();
        assert_eq!(m["replications"], "5");
        assert_eq!(m["base-seed"], "7");
        assert!(parse_config_file("oops").is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = ExperimentConfig::new(vec![Strategy::Random], vec![32, 16], 1, 0);
        assert!(cfg.validate().is_err());
        cfg.budgets = vec![16, 32];
        cfg.noise = 0.5;
        assert!(cfg.validate().is_err());
    }
}
