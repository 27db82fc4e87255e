//! Computes lower, upper and Lipschitz complexity terms of an instance at a
//! few gap scales, with a packing-number sanity check.

use bead::complexity::{
    default_grid_per_axis, lipschitz_complexity, lower_complexity, packing_number, upper_complexity, GapGrid,
    PackingMode, UpperParams,
};
use bead::instance::{estimate_bump_norm, synth_expansion};
use bead::kernel::KernelSpec;
use bead::tree::TreeGeometry;

fn main() -> bead::Result<()> {
    // [0, 1] with separation 0.25 packs ⌊1/0.25⌋ + 1 points
    println!("packing of [0,1] at 0.25: {}", packing_number(|_| true, 1, 0.25, 101, PackingMode::Greedy)?);

    let kernel = KernelSpec::matern(1.1, 1.0, 1)?;
    let lambda = 0.5;
    let f = synth_expansion(kernel, 6, 1.0, 3)?.with_budget_for_lambda(lambda);
    let grid = GapGrid::new(&f, default_grid_per_axis(1))?;
    let bump_norm = estimate_bump_norm(&kernel, 256)?;
    let lipschitz = f.norm_budget() * 1024f64.ln();
    let params = UpperParams::defaults(&TreeGeometry::new(1)?, lipschitz, kernel.holder_exponent());
    for delta in [0.02, 0.05, 0.1] {
        let lower = lower_complexity(&f, &grid, delta, lambda, bump_norm)?;
        let upper = upper_complexity(&grid, delta, params)?;
        let lip = lipschitz_complexity(&grid, delta, lipschitz, lambda).map(|r| r.total);
        println!(
            "Δ = {delta}: lower {:.2} (m0 {}), upper {:.2}, lipschitz {:?}",
            lower.total,
            lower.m0(),
            upper.total,
            lip.ok()
        );
    }
    print!("{}", lower_complexity(&f, &grid, 0.05, lambda, bump_norm)?.to_text());
    Ok(())
}
