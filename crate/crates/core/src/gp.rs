//! Batch-local GP posterior over a finite active set.
//!
//! Evidence is a multiset of active points. Coincident observations are
//! folded into per-point sufficient statistics: `s` observations with mean
//! `ȳ` at a point are equivalent to a single observation `ȳ` with noise
//! `τ/s`. The posterior is therefore solved on the distinct evaluated points
//! only, so the cost depends on the active-set size rather than on the batch
//! length.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{factorize, gram_unchecked, KernelSpec, Point};

/// Variances in `[-VARIANCE_CLAMP, 0)` are rounding noise and become zero.
pub const VARIANCE_CLAMP: f64 = 1e-12;

/// Which confidence-width formula to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaMode {
    /// `√(2 log(|P_t| n³) / t)`, without a noise factor.
    AlgorithmText,
    /// `√(2σ² log(|P_t| π² t² / (3δ)))`, the concentration width.
    LemmaConcentration,
}

impl BetaMode {
    pub fn name(self) -> &'static str {
        match self {
            BetaMode::AlgorithmText => "algorithm-text",
            BetaMode::LemmaConcentration => "lemma-concentration",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "algorithm-text" => Some(BetaMode::AlgorithmText),
            "lemma-concentration" => Some(BetaMode::LemmaConcentration),
            _ => None,
        }
    }
}

/// Inputs to the confidence width β_t.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaParams {
    pub mode: BetaMode,
    /// Query budget n.
    pub budget: usize,
    /// Failure probability; `None` means `1/n`.
    pub delta: Option<f64>,
    /// Sub-Gaussian noise parameter σ.
    pub sigma: f64,
}

impl BetaParams {
    pub fn new(mode: BetaMode, budget: usize, sigma: f64) -> Self {
        Self {
            mode,
            budget,
            delta: None,
            sigma,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(1.0 / self.budget.max(1) as f64)
    }

    /// β for an active set of `active` points and batch-local time `t ≥ 1`.
    pub fn beta(&self, active: usize, t: usize) -> f64 {
        let p = active.max(1) as f64;
        let t = t.max(1) as f64;
        let n = self.budget.max(1) as f64;
        match self.mode {
            BetaMode::AlgorithmText => (2.0 * (p.ln() + 3.0 * n.ln()) / t).max(0.0).sqrt(),
            BetaMode::LemmaConcentration => {
                let pi2 = std::f64::consts::PI * std::f64::consts::PI;
                let arg = p * pi2 * t * t / (3.0 * self.delta());
                (2.0 * self.sigma * self.sigma * arg.ln()).max(0.0).sqrt()
            }
        }
    }
}

/// Posterior mean and standard deviation over the active points.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSummary {
    pub active_points: Vec<Point>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub beta: f64,
    pub tau: f64,
    pub batch_size: usize,
}

impl PosteriorSummary {
    /// Index of the largest σ, lowest index on ties.
    pub fn argmax_sigma(&self) -> Option<usize> {
        argmax_first(&self.sigma)
    }

    pub fn max_sigma(&self) -> f64 {
        self.sigma.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn ucb(&self, i: usize) -> f64 {
        self.mu[i] + self.beta * self.sigma[i]
    }

    pub fn lcb(&self, i: usize) -> f64 {
        self.mu[i] - self.beta * self.sigma[i]
    }
}

pub(crate) fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Posterior machinery for a fixed active set: the kernel matrix among the
/// active points is computed once and reused for every evidence update.
#[derive(Clone, Debug)]
pub struct ActiveSetModel {
    points: Vec<Point>,
    gram: DMatrix<f64>,
    tau: f64,
}

impl ActiveSetModel {
    pub fn new(kernel: &KernelSpec, points: Vec<Point>, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("regularizer must be positive, got {tau}")));
        }
        for p in &points {
            kernel.eval(p, p)?;
        }
        let gram = gram_unchecked(kernel, &points);
        Ok(Self { points, gram, tau })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Posterior `(μ, σ)` from per-point observation counts and sums.
    pub fn posterior(&self, counts: &[usize], sums: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.points.len();
        if counts.len() != n || sums.len() != n {
            return Err(Error::invalid("evidence tallies do not match the active set"));
        }
        let prior_sd = self.tau.powf(-0.5);
        let observed: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
        if observed.is_empty() {
            return Ok((vec![0.0; n], vec![prior_sd; n]));
        }
        let m = observed.len();
        let mut system = DMatrix::zeros(m, m);
        let mut ybar = DVector::zeros(m);
        for (a, &i) in observed.iter().enumerate() {
            for (b, &j) in observed.iter().enumerate() {
                system[(a, b)] = self.gram[(i, j)];
            }
            system[(a, a)] += self.tau / counts[i] as f64;
            ybar[a] = sums[i] / counts[i] as f64;
        }
        let chol = factorize(system)?;
        let weights = chol.solve(&ybar);
        let cross = DMatrix::from_fn(m, n, |a, j| self.gram[(observed[a], j)]);
        let whitened = chol
            .l_dirty()
            .solve_lower_triangular(&cross)
            .ok_or_else(|| Error::Numerical {
                message: "singular triangular factor".into(),
                condition: f64::INFINITY,
            })?;
        let mut mu = Vec::with_capacity(n);
        let mut sigma = Vec::with_capacity(n);
        for j in 0..n {
            mu.push(cross.column(j).dot(&weights));
            let var = clamp_variance(self.gram[(j, j)] - whitened.column(j).norm_squared())?;
            sigma.push(prior_sd * var.sqrt());
        }
        Ok((mu, sigma))
    }
}

pub(crate) fn clamp_variance(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -VARIANCE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Numerical {
            message: format!("negative posterior variance {v:.3e}"),
            condition: f64::NAN,
        })
    }
}

/// Maps every evidence point to the index of the identical active point.
pub(crate) fn evidence_indices(points: &[Point], evidence_x: &[Point]) -> Result<Vec<usize>> {
    evidence_x
        .iter()
        .map(|x| {
            points.iter().position(|p| p == x).ok_or_else(|| {
                Error::Contract(format!("evidence point {x:?} is not in the active set"))
            })
        })
        .collect()
}

/// Posterior over `points` given the batch evidence `(evidence_x, evidence_y)`.
///
/// `μ_t(x) = k_t(x)ᵀ(K_t + τI)⁻¹y_t` and
/// `σ_t(x) = τ^{-1/2} √(k(x,x) − k_t(x)ᵀ(K_t + τI)⁻¹k_t(x))`; β uses the batch
/// time `t = |E_t| + 1`.
pub fn compute_posterior(
    kernel: &KernelSpec,
    points: &[Point],
    evidence_x: &[Point],
    evidence_y: &[f64],
    tau: f64,
    beta: &BetaParams,
) -> Result<PosteriorSummary> {
    if evidence_x.len() != evidence_y.len() {
        return Err(Error::invalid("evidence locations and values differ in length"));
    }
    let idx = evidence_indices(points, evidence_x)?;
    let model = ActiveSetModel::new(kernel, points.to_vec(), tau)?;
    let mut counts = vec![0usize; points.len()];
    let mut sums = vec![0.0; points.len()];
    for (&i, &y) in idx.iter().zip(evidence_y) {
        counts[i] += 1;
        sums[i] += y;
    }
    let (mu, sigma) = model.posterior(&counts, &sums)?;
    Ok(PosteriorSummary {
        active_points: points.to_vec(),
        mu,
        sigma,
        beta: beta.beta(points.len(), evidence_x.len() + 1),
        tau,
        batch_size: evidence_x.len(),
    })
}

/// Brute-force reference: explicit dense inverse of `K_t + τI` over the full
/// evidence multiset. Intended for cross-checking [`compute_posterior`].
pub fn posterior_oracle(
    kernel: &KernelSpec,
    points: &[Point],
    evidence_x: &[Point],
    evidence_y: &[f64],
    tau: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    evidence_indices(points, evidence_x)?;
    let prior_sd = tau.powf(-0.5);
    if evidence_x.is_empty() {
        return Ok((vec![0.0; points.len()], vec![prior_sd; points.len()]));
    }
    let t = evidence_x.len();
    let k_t = DMatrix::from_fn(t, t, |i, j| kernel.eval_unchecked(&evidence_x[i], &evidence_x[j]));
    let inv = (k_t + DMatrix::identity(t, t) * tau)
        .try_inverse()
        .ok_or_else(|| Error::Numerical {
            message: "dense inverse failed".into(),
            condition: f64::INFINITY,
        })?;
    let y = DVector::from_column_slice(evidence_y);
    let inv_y = &inv * y;
    let mut mu = Vec::new();
    let mut sigma = Vec::new();
    for x in points {
        let kx = DVector::from_fn(t, |i, _| kernel.eval_unchecked(x, &evidence_x[i]));
        mu.push(kx.dot(&inv_y));
        let var = kernel.eval_unchecked(x, x) - kx.dot(&(&inv * &kx));
        sigma.push(prior_sd * clamp_variance(var)?.sqrt());
    }
    Ok((mu, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kernel() -> KernelSpec {
        KernelSpec::matern(1.5, 0.5, 1).unwrap()
    }

    fn beta() -> BetaParams {
        BetaParams::new(BetaMode::LemmaConcentration, 100, 0.1)
    }

    #[test]
    fn empty_evidence_is_prior() {
        let pts = vec![vec![0.1], vec![0.7]];
        let post = compute_posterior(&kernel(), &pts, &[], &[], 4.0, &beta()).unwrap();
        assert_eq!(post.mu, vec![0.0, 0.0]);
        assert_eq!(post.sigma, vec![0.5, 0.5]);
        let (mu, sigma) = posterior_oracle(&kernel(), &pts, &[], &[], 4.0).unwrap();
        assert_eq!((mu, sigma), (post.mu, post.sigma));
    }

    #[test]
    fn single_observation_closed_form() {
        let pts = vec![vec![0.3]];
        let post =
            compute_posterior(&kernel(), &pts, &[vec![0.3]], &[2.0], 1.0, &beta()).unwrap();
        assert!((post.mu[0] - 1.0).abs() < 1e-15);
        assert!((post.sigma[0] - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn repeated_sampling_law() {
        let pts = vec![vec![0.3], vec![0.9]];
        for tau in [0.1, 1.0, 3.0] {
            for s in [1usize, 2, 5, 10] {
                let ex = vec![vec![0.3]; s];
                let ey = vec![1.0; s];
                let post = compute_posterior(&kernel(), &pts, &ex, &ey, tau, &beta()).unwrap();
                let want = 1.0 / (s as f64 + tau);
                assert!((post.sigma[0].powi(2) - want).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn duplicates_agree_with_oracle() {
        let pts = vec![vec![0.1], vec![0.4], vec![0.8]];
        let ex = vec![vec![0.4], vec![0.4], vec![0.1], vec![0.4]];
        let ey = vec![0.3, 0.5, -0.2, 0.1];
        let post = compute_posterior(&kernel(), &pts, &ex, &ey, 0.5, &beta()).unwrap();
        let (mu, sigma) = posterior_oracle(&kernel(), &pts, &ex, &ey, 0.5).unwrap();
        for i in 0..3 {
            assert!((post.mu[i] - mu[i]).abs() < 1e-12);
            assert!((post.sigma[i] - sigma[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn foreign_evidence_is_a_contract_violation() {
        let pts = vec![vec![0.1]];
        let err = compute_posterior(&kernel(), &pts, &[vec![0.2]], &[1.0], 1.0, &beta());
        assert!(matches!(err, Err(Error::Contract(_))));
        assert!(matches!(
            posterior_oracle(&kernel(), &pts, &[vec![0.2]], &[1.0], 1.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn variance_clamp() {
        assert_eq!(clamp_variance(-5e-13).unwrap(), 0.0);
        assert!(clamp_variance(-1e-9).is_err());
    }

    #[test]
    fn mean_is_linear_in_observations() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Point> = (0..8).map(|i| vec![i as f64 / 8.0]).collect();
        let ex: Vec<Point> = (0..12).map(|_| pts[rng.random_range(0..8)].clone()).collect();
        let ey: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ey2: Vec<f64> = ey.iter().map(|y| 2.0 * y).collect();
        let a = compute_posterior(&kernel(), &pts, &ex, &ey, 1.0, &beta()).unwrap();
        let b = compute_posterior(&kernel(), &pts, &ex, &ey2, 1.0, &beta()).unwrap();
        for i in 0..8 {
            assert!((2.0 * a.mu[i] - b.mu[i]).abs() < 1e-12);
            assert_eq!(a.sigma[i], b.sigma[i]);
        }
    }

    #[test]
    fn beta_modes() {
        let text = BetaParams::new(BetaMode::AlgorithmText, 8, 1.0);
        let want = (2.0 * (4f64.ln() + 3.0 * 8f64.ln()) / 3.0).sqrt();
        assert!((text.beta(4, 3) - want).abs() < 1e-15);
        assert!(text.beta(4, 5) < text.beta(4, 3));

        let lemma = BetaParams::new(BetaMode::LemmaConcentration, 10, 0.5);
        let pi2 = std::f64::consts::PI.powi(2);
        let want = (2.0 * 0.25 * (4.0 * pi2 * 9.0 / 0.3f64).ln()).sqrt();
        assert!((lemma.beta(4, 3) - want).abs() < 1e-14);
        assert!(lemma.beta(4, 5) > lemma.beta(4, 3));
        assert_eq!(BetaParams::new(BetaMode::LemmaConcentration, 10, 0.0).beta(4, 3), 0.0);
    }
}
