//! Computes the kernel posterior over a small active set from repeated
//! observations and checks it against the dense-inverse reference.

use bead::gp::{compute_posterior, posterior_oracle, BetaMode, BetaParams};
use bead::kernel::KernelSpec;

fn main() -> bead::Result<()> {
    let kernel = KernelSpec::matern(1.5, 0.3, 1)?;
    let points: Vec<Vec<f64>> = (0..5).map(|i| vec![0.1 + 0.2 * i as f64]).collect();
    let evidence_x = vec![points[1].clone(), points[1].clone(), points[3].clone()];
    let evidence_y = vec![0.4, 0.6, -0.2];
    let tau = 1.0;
    let beta = BetaParams::new(BetaMode::LemmaConcentration, 256, 0.1);
    let post = compute_posterior(&kernel, &points, &evidence_x, &evidence_y, tau, &beta)?;
    let (mu, sigma) = posterior_oracle(&kernel, &points, &evidence_x, &evidence_y, tau)?;
    println!("beta {:.4}", post.beta);
    for i in 0..points.len() {
        println!(
            "x {:.1}: mu {:+.6} (ref {:+.6})  sigma {:.6} (ref {:.6})  ucb {:+.4}",
            points[i][0],
            post.mu[i],
            mu[i],
            post.sigma[i],
            sigma[i],
            post.ucb(i)
        );
    }
    // s coincident observations give σ² = 1/(s + τ)
    for s in [1, 2, 5, 10] {
        let ex = vec![vec![0.5]; s];
        let ey = vec![0.0; s];
        let p = compute_posterior(&kernel, &[vec![0.5]], &ex, &ey, tau, &beta)?;
        println!("s = {s}: sigma² = {:.12}, 1/(s+τ) = {:.12}", p.sigma[0].powi(2), 1.0 / (s as f64 + tau));
    }
    Ok(())
}
