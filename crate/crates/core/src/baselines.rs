//! Comparison strategies under the same oracle and trace contract as BEAD.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gp::{argmax_first, ActiveSetModel};
use crate::instance::grid_points;
use crate::kernel::Point;
use crate::oracle::NoisyOracle;
use crate::trace::RegretTrace;

/// Largest number of distinct evaluated points GP-UCB will condition on.
pub const GP_UCB_EVIDENCE_CAP: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BetaSchedule {
    /// `β_t = B + σ√(2(Î_t + 1 + ln(1/δ)))`.
    SqrtLog,
    Constant(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpUcbConfig {
    pub grid_per_axis: usize,
    pub tau: f64,
    pub beta_schedule: BetaSchedule,
    pub delta: f64,
    /// RKHS norm bound B.
    pub norm_bound: f64,
    /// Noise level σ used in β_t and in the information-gain proxy.
    pub noise_sd: f64,
}

impl Default for GpUcbConfig {
    fn default() -> Self {
        Self {
            grid_per_axis: 101,
            tau: 1.0,
            beta_schedule: BetaSchedule::SqrtLog,
            delta: 0.05,
            norm_bound: 1.0,
            noise_sd: 0.1,
        }
    }
}

impl GpUcbConfig {
    fn validate(&self) -> Result<()> {
        if self.grid_per_axis < 2 {
            return Err(Error::invalid("grid_per_axis must be at least 2"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.tau > 0.0 && self.noise_sd > 0.0) {
            return Err(Error::invalid("tau and noise_sd must be positive"));
        }
        Ok(())
    }
}

/// GP-UCB over a fixed grid with the full history as evidence.
///
/// `Î_t = ½ Σ_s ln(1 + σ_noise⁻² τ σ_s(x_s)²)` accumulates online; `τσ²` is
/// the unscaled posterior variance at the queried point.
pub fn run_gp_ucb(config: &GpUcbConfig, oracle: &mut NoisyOracle<'_>, n: usize) -> Result<RegretTrace> {
    config.validate()?;
    let target = oracle.target();
    let kernel = *target.kernel();
    let grid: Vec<Point> = grid_points(kernel.dim(), config.grid_per_axis - 1);
    let g = grid.len();
    let model = ActiveSetModel::new(&kernel, grid.clone(), config.tau)?;
    let mut counts = vec![0usize; g];
    let mut sums = vec![0.0; g];
    let mut distinct = 0usize;
    let mut info = 0.0;
    let log_inv_delta = (1.0 / config.delta).ln();
    let mut trace = RegretTrace::new("gp-ucb", kernel.dim());
    for _ in 0..n {
        let (mu, sigma) = model.posterior(&counts, &sums)?;
        let beta = match config.beta_schedule {
            BetaSchedule::SqrtLog => {
                config.norm_bound + config.noise_sd * (2.0 * (info + 1.0 + log_inv_delta)).sqrt()
            }
            BetaSchedule::Constant(b) => b,
        };
        let ucb: Vec<f64> = mu.iter().zip(&sigma).map(|(m, s)| m + beta * s).collect();
        let i = argmax_first(&ucb).expect("grid is nonempty");
        let var = config.tau * sigma[i] * sigma[i];
        info += 0.5 * (1.0 + var / (config.noise_sd * config.noise_sd)).ln();
        if counts[i] == 0 {
            distinct += 1;
            if distinct > GP_UCB_EVIDENCE_CAP {
                return Err(Error::SizeCap(format!(
                    "GP-UCB evidence exceeds {GP_UCB_EVIDENCE_CAP} distinct points"
                )));
            }
        }
        let x = grid[i].clone();
        let y = oracle.observe(&x);
        counts[i] += 1;
        sums[i] += y;
        trace.push(x.clone(), y, target.gap(&x), 0, 0);
    }
    Ok(trace)
}

/// Uniform random search.
pub fn run_random(oracle: &mut NoisyOracle<'_>, n: usize, seed: u64) -> RegretTrace {
    let target = oracle.target();
    let d = target.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = RegretTrace::new("random", d);
    for _ in 0..n {
        let x: Point = (0..d).map(|_| rng.random::<f64>()).collect();
        let y = oracle.observe(&x);
        trace.push(x.clone(), y, target.gap(&x), 0, 0);
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{synth_expansion, RkhsFunction};
    use crate::kernel::KernelSpec;

    fn instance(seed: u64) -> RkhsFunction {
        synth_expansion(KernelSpec::matern(1.5, 1.0, 1).unwrap(), 3, 1.0, seed).unwrap()
    }

    #[test]
    fn first_query_is_lowest_grid_index() {
        let f = instance(1);
        let t = run_gp_ucb(&GpUcbConfig::default(), &mut NoisyOracle::new(&f, 0.0, 0), 1).unwrap();
        assert_eq!(t.queried_points, vec![vec![0.0]]);
    }

    #[test]
    fn zero_beta_exploits_posterior_mean() {
        let f = instance(2);
        let cfg = GpUcbConfig {
            grid_per_axis: 3,
            beta_schedule: BetaSchedule::Constant(0.0),
            ..Default::default()
        };
        let t = run_gp_ucb(&cfg, &mut NoisyOracle::new(&f, 0.0, 0), 3).unwrap();
        let grid = grid_points(1, 2);
        assert_eq!(t.queried_points[0], vec![0.0]);
        // one observation y₀ at 0 gives μ(x) = k(x, 0)·y₀/(1 + τ)
        let y0 = f.eval(&[0.0]);
        let k = f.kernel();
        let mu: Vec<f64> = grid.iter().map(|x| k.eval(x, &[0.0]).unwrap() * y0 / 2.0).collect();
        let want = argmax_first(&mu).unwrap();
        assert_eq!(t.queried_points[1], grid[want]);
        assert!(t.queried_points.len() == 3);
    }

    #[test]
    fn noiseless_run_finds_best_cell() {
        let f = synth_expansion(KernelSpec::matern(1.5, 1.0, 1).unwrap(), 1, 1.0, 4).unwrap();
        let cfg = GpUcbConfig::default();
        let t = run_gp_ucb(&cfg, &mut NoisyOracle::new(&f, 0.0, 0), 200).unwrap();
        t.check_invariants().unwrap();
        let best_cell = grid_points(1, cfg.grid_per_axis - 1)
            .into_iter()
            .map(|x| f.gap(&x))
            .fold(f64::INFINITY, f64::min);
        assert!(t.instant_regret.contains(&best_cell));
        let mean = |r: &[f64]| r.iter().sum::<f64>() / r.len() as f64;
        assert!(mean(&t.instant_regret[100..]) < mean(&t.instant_regret[..100]));
    }

    #[test]
    fn random_is_deterministic() {
        let f = instance(3);
        let a = run_random(&mut NoisyOracle::new(&f, 0.1, 1), 50, 9);
        let b = run_random(&mut NoisyOracle::new(&f, 0.1, 1), 50, 9);
        assert_eq!(a, b);
        a.check_invariants().unwrap();
    }
}
