//! Seeded noisy zeroth-order oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::instance::RkhsFunction;

/// Returns `f(x) + η` with `η ~ N(0, σ²)` drawn from a seeded stream.
#[derive(Clone, Debug)]
pub struct NoisyOracle<'a> {
    target: &'a RkhsFunction,
    sigma: f64,
    seed: u64,
    rng: ChaCha8Rng,
    query_count: u64,
}

impl<'a> NoisyOracle<'a> {
    pub fn new(target: &'a RkhsFunction, sigma: f64, seed: u64) -> Self {
        Self {
            target,
            sigma,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            query_count: 0,
        }
    }

    pub fn observe(&mut self, x: &[f64]) -> f64 {
        self.query_count += 1;
        let fx = self.target.eval(x);
        if self.sigma == 0.0 {
            return fx;
        }
        let eta: f64 = self.rng.sample(StandardNormal);
        fx + self.sigma * eta
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn target(&self) -> &'a RkhsFunction {
        self.target
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::synth_expansion;
    use crate::kernel::KernelSpec;

    fn instance() -> RkhsFunction {
        synth_expansion(KernelSpec::matern(1.5, 1.0, 1).unwrap(), 3, 1.0, 5).unwrap()
    }

    #[test]
    fn noiseless_is_exact() {
        let f = instance();
        let mut o = NoisyOracle::new(&f, 0.0, 1);
        assert_eq!(o.observe(&[0.3]), f.eval(&[0.3]));
        assert_eq!(o.query_count(), 1);
    }

    #[test]
    fn seeded_streams_repeat() {
        let f = instance();
        let xs: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let run = || {
            let mut o = NoisyOracle::new(&f, 0.1, 42);
            xs.iter().map(|&x| o.observe(&[x]).to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn sample_mean_concentrates() {
        let f = instance();
        let sigma = 0.5;
        let mut o = NoisyOracle::new(&f, sigma, 7);
        let n = 100_000;
        let mean = (0..n).map(|_| o.observe(&[0.4])).sum::<f64>() / n as f64;
        assert!((mean - f.eval(&[0.4])).abs() <= 4.0 * sigma / (n as f64).sqrt());
        assert_eq!(o.query_count(), n);
    }
}
