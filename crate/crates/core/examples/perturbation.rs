//! Builds bump perturbations of an instance that move its maximizer into a
//! small ball, then verifies them on a grid.

use bead::instance::{estimate_bump_norm, sample_perturbation, synth_expansion, validate_perturbation};
use bead::kernel::KernelSpec;

fn main() -> bead::Result<()> {
    let kernel = KernelSpec::matern(1.1, 1.0, 1)?;
    let lambda = 0.5;
    let bump_norm = estimate_bump_norm(&kernel, 256)?;
    println!("bump norm estimate {bump_norm:.6}");
    for seed in 0..6 {
        let f = synth_expansion(kernel, 4, 0.5, seed)?.with_budget_for_lambda(lambda);
        let p = match sample_perturbation(&f, 0.05, 3.0, lambda, bump_norm, seed, 24) {
            Ok(p) => p,
            Err(e) => {
                println!("seed {seed}: no site ({e})");
                continue;
            }
        };
        let check = validate_perturbation(&p, 2000);
        println!(
            "seed {seed}: z {:?} w {:.4} Δ {:.4} max dev {:.2e} ≤ {:.2e}, new argmax inside {}, passes {}",
            p.center,
            p.radius,
            p.delta,
            check.max_dev_inside,
            check.deviation_bound,
            check.perturbed_argmax_inside,
            check.passes(1e-9)
        );
    }
    Ok(())
}
