//! Compares cumulative regret of BEAD, grid GP-UCB and random search on one
//! instance and budget.

use bead::baselines::{run_gp_ucb, run_random, GpUcbConfig};
use bead::bead::{run_bead, BeadConfig};
use bead::instance::synth_expansion;
use bead::kernel::KernelSpec;
use bead::oracle::NoisyOracle;

fn main() -> bead::Result<()> {
    let f = synth_expansion(KernelSpec::matern(1.5, 1.0, 1)?, 3, 1.0, 9)?;
    let n = 1024;
    let bead = run_bead(&BeadConfig::new(n, 1)?, &mut NoisyOracle::new(&f, 0.1, 1))?.trace;
    let gp = run_gp_ucb(&GpUcbConfig::default(), &mut NoisyOracle::new(&f, 0.1, 1), n)?;
    let random = run_random(&mut NoisyOracle::new(&f, 0.1, 1), n, 2);
    for t in [&bead, &gp, &random] {
        let checkpoints: Vec<String> = [127, 255, 511, 1023].iter().map(|&i| format!("{:8.3}", t.cumulative[i])).collect();
        println!("{:>8}: {}", t.strategy, checkpoints.join(" "));
    }
    Ok(())
}
