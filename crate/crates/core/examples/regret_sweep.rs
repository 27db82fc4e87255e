//! Runs a small parallel regret sweep and fits log–log slopes of median
//! cumulative regret against the budget.

use bead::harness::{geometric_budgets, run_sweep, ExperimentConfig, Strategy};
use bead::instance::synth_growth_instance;
use bead::kernel::KernelSpec;

fn main() -> bead::Result<()> {
    let f = synth_growth_instance(KernelSpec::matern(1.5, 1.0, 1)?, 2.0, 5)?;
    let cfg = ExperimentConfig::new(vec![Strategy::Bead, Strategy::Random], geometric_budgets(7, 11), 5, 2024);
    let result = run_sweep(&f, &cfg, |_, _| Ok(()))?;
    for fit in &result.fits {
        println!("{:>7}: slope {:.3} ± {:.3}", fit.strategy.name(), fit.slope, fit.stderr);
    }
    Ok(())
}
