//! Runs the adaptive-discretization algorithm on a noisy one-dimensional
//! instance and prints its refinement history and structural checks.

use bead::bead::{check_batch_purity, check_suboptimality_bound, run_bead, BeadConfig};
use bead::instance::synth_expansion;
use bead::kernel::KernelSpec;
use bead::oracle::NoisyOracle;

fn main() -> bead::Result<()> {
    let f = synth_expansion(KernelSpec::matern(1.5, 1.0, 1)?, 1, 1.0, 4)?;
    let cfg = BeadConfig::new(2048, 1)?;
    let mut oracle = NoisyOracle::new(&f, 0.1, 42);
    let run = run_bead(&cfg, &mut oracle)?;
    println!("L = {:.4}, ξ = {}, final depth {}", run.lipschitz, run.xi, run.final_depth);
    for e in &run.trace.refine_events {
        println!(
            "after {:>5} queries: depth {} -> {}, {} survivors, {} active",
            e.query_index,
            e.old_depth,
            e.old_depth + 1,
            e.survivors,
            e.new_active
        );
    }
    let worst = run.batches.iter().map(|b| b.max_count as f64 / b.cap).fold(0.0, f64::max);
    println!("largest per-point count / cap over batches: {worst:.3}");
    check_batch_purity(&run.trace, &cfg.geometry)?;
    let report = check_suboptimality_bound(&run.trace, &f, &cfg);
    println!("suboptimality bound: {} checked, {} violations", report.checked, report.violations.len());
    println!("queries {}, cumulative regret {:.4}", oracle.query_count(), run.trace.final_regret());
    Ok(())
}
