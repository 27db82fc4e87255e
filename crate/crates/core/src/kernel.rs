//! Kernel definitions and the regularized Gram-system contract shared by all
//! posterior computations.
//!
//! Kernels are isotropic, unit-variance and defined on `[0,1]^d`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use statrs::function::gamma::ln_gamma;

use crate::bessel::pow_times_bessel_k;
use crate::error::{Error, Result};

/// A point of the domain `[0,1]^d`.
pub type Point = Vec<f64>;

/// Distances below this are treated as exactly zero.
pub const ZERO_DISTANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelFamily {
    /// Matérn family with smoothness `nu`.
    Matern { nu: f64 },
    SquaredExponential,
}

/// A positive-definite isotropic kernel on `[0,1]^dim`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    theta: f64,
    dim: usize,
}

impl KernelSpec {
    pub fn matern(nu: f64, theta: f64, dim: usize) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::invalid(format!("Matérn smoothness must be positive, got {nu}")));
        }
        Self::checked(KernelFamily::Matern { nu }, theta, dim)
    }

    pub fn squared_exponential(theta: f64, dim: usize) -> Result<Self> {
        Self::checked(KernelFamily::SquaredExponential, theta, dim)
    }

    fn checked(family: KernelFamily, theta: f64, dim: usize) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::invalid(format!("lengthscale must be positive, got {theta}")));
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        Ok(Self { family, theta, dim })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smoothness ν; the squared-exponential kernel is treated as ν = ∞.
    pub fn nu(&self) -> f64 {
        match self.family {
            KernelFamily::Matern { nu } => nu,
            KernelFamily::SquaredExponential => f64::INFINITY,
        }
    }

    /// Hölder exponent ξ = min{1, ν} of the RKHS members.
    pub fn holder_exponent(&self) -> f64 {
        self.nu().min(1.0)
    }

    /// k(x, z). Fails on non-finite coordinates or a dimension mismatch.
    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        if x.len() != self.dim || z.len() != self.dim {
            return Err(Error::invalid(format!(
                "point dimension {}/{} does not match kernel dimension {}",
                x.len(),
                z.len(),
                self.dim
            )));
        }
        if x.iter().chain(z).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite coordinate"));
        }
        Ok(self.eval_unchecked(x, z))
    }

    /// k(x, z) without input validation.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        self.at_distance(distance(x, z))
    }

    /// Kernel value as a function of the Euclidean distance `r ≥ 0`.
    pub fn at_distance(&self, r: f64) -> f64 {
        if r < ZERO_DISTANCE {
            return 1.0;
        }
        let s = r / self.theta;
        match self.family {
            KernelFamily::SquaredExponential => (-0.5 * s * s).exp(),
            KernelFamily::Matern { nu } => {
                if nu == 0.5 {
                    (-s).exp()
                } else if nu == 1.5 {
                    let a = 3f64.sqrt() * s;
                    (1.0 + a) * (-a).exp()
                } else if nu == 2.5 {
                    let a = 5f64.sqrt() * s;
                    (1.0 + a + a * a / 3.0) * (-a).exp()
                } else {
                    matern_bessel(nu, s)
                }
            }
        }
    }
}

/// General-order Matérn correlation at scaled distance `s = r/θ`, through the
/// Bessel function regardless of ν.
pub fn matern_bessel(nu: f64, s: f64) -> f64 {
    if s < ZERO_DISTANCE {
        return 1.0;
    }
    let z = (2.0 * nu).sqrt() * s;
    let log_norm = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu);
    (log_norm.exp() * pow_times_bessel_k(nu, z)).min(1.0)
}

pub fn distance(x: &[f64], z: &[f64]) -> f64 {
    x.iter()
        .zip(z)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Symmetric Gram matrix `[k(x_i, x_j)]` with unit diagonal.
pub fn gram_matrix(spec: &KernelSpec, points: &[Point]) -> Result<DMatrix<f64>> {
    for p in points {
        spec.eval(p, p)?;
    }
    Ok(gram_unchecked(spec, points))
}

pub(crate) fn gram_unchecked(spec: &KernelSpec, points: &[Point]) -> DMatrix<f64> {
    let n = points.len();
    let mut gram = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = spec.eval_unchecked(&points[i], &points[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    gram
}

/// `gram + τ·I` together with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct GramSystem {
    points: Vec<Point>,
    gram: DMatrix<f64>,
    tau: f64,
    factor: Cholesky<f64, Dyn>,
}

impl GramSystem {
    pub fn new(spec: &KernelSpec, points: Vec<Point>, tau: f64) -> Result<Self> {
        let gram = gram_matrix(spec, &points)?;
        Self::with_gram(points, gram, tau)
    }

    /// Builds the system from a precomputed Gram matrix.
    pub fn with_gram(points: Vec<Point>, gram: DMatrix<f64>, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("regularizer must be positive, got {tau}")));
        }
        if gram.nrows() != gram.ncols() {
            return Err(Error::invalid("Gram matrix must be square"));
        }
        let mut shifted = gram.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += tau;
        }
        let factor = factorize(shifted)?;
        Ok(Self {
            points,
            gram,
            tau,
            factor,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.gram.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lower-triangular factor `L` with `L Lᵀ = gram + τI`.
    pub fn factor(&self) -> DMatrix<f64> {
        self.factor.l()
    }

    /// Solves `(gram + τI) v = rhs`.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        regularized_solve(self, rhs)
    }
}

/// Solves `(gram + τI) v = rhs` using the cached factorization.
pub fn regularized_solve(sys: &GramSystem, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if rhs.len() != sys.len() {
        return Err(Error::invalid(format!(
            "right-hand side has length {}, system has {} rows",
            rhs.len(),
            sys.len()
        )));
    }
    Ok(sys.factor.solve(rhs))
}

/// Cholesky factorization with a condition diagnostic on failure.
pub(crate) fn factorize(matrix: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let diag_ratio = diagonal_ratio(&matrix);
    Cholesky::new(matrix).ok_or_else(|| Error::Numerical {
        message: "matrix is not positive definite after regularization".into(),
        condition: diag_ratio,
    })
}

/// Crude conditioning indicator: ratio of largest to smallest diagonal entry.
fn diagonal_ratio(m: &DMatrix<f64>) -> f64 {
    let d = m.diagonal();
    let max = d.iter().cloned().fold(f64::MIN, f64::max);
    let min = d.iter().cloned().fold(f64::MAX, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(nu: f64) -> KernelSpec {
        KernelSpec::matern(nu, 1.0, 1).unwrap()
    }

    #[test]
    fn zero_distance_is_one() {
        assert_eq!(m(0.5).eval(&[0.3], &[0.3]).unwrap(), 1.0);
        assert_eq!(m(1.1).eval(&[0.3], &[0.3 + 1e-15]).unwrap(), 1.0);
    }

    #[test]
    fn closed_forms() {
        let k = m(0.5).eval(&[0.0], &[1.0]).unwrap();
        assert!((k - (-1f64).exp()).abs() < 1e-15);
        assert!((k - 0.367879).abs() < 1e-6);
        let k = m(1.5).eval(&[0.0], &[1.0]).unwrap();
        let want = (1.0 + 3f64.sqrt()) * (-(3f64.sqrt())).exp();
        assert!((k - want).abs() < 1e-15);
        assert!((k - 0.4833577245965077).abs() < 1e-12);
    }

    #[test]
    fn half_integer_closed_forms_agree_with_bessel_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for nu in [0.5, 1.5, 2.5] {
            let spec = m(nu);
            for _ in 0..100 {
                let r: f64 = rng.random_range(0.0..3.0);
                let closed = spec.at_distance(r);
                let general = matern_bessel(nu, r);
                assert!((closed - general).abs() < 1e-9, "nu={nu} r={r}");
            }
        }
    }

    #[test]
    fn general_order_matches_reference() {
        // scipy: 2^(1-ν)/Γ(ν) z^ν K_ν(z), z = √(2ν) r
        let cases = [
            (1.1, 0.01, 0.9996606052311046),
            (1.1, 0.5, 0.7458819594148405),
            (1.1, 1.0, 0.4539799794214783),
            (1.1, 5.0, 0.0026140295675621305),
            (0.7, 0.1, 0.9486956293720854),
            (0.7, 2.0, 0.13828069713920702),
            (3.3, 1.0, 0.5416150825506013),
        ];
        for (nu, r, want) in cases {
            let got = m(nu).at_distance(r);
            assert!((got - want).abs() < 1e-12, "nu={nu} r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn squared_exponential() {
        let k = KernelSpec::squared_exponential(0.5, 2).unwrap();
        let v = k.eval(&[0.0, 0.0], &[0.3, 0.4]).unwrap();
        assert!((v - (-0.25f64 / 0.5).exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(KernelSpec::matern(0.0, 1.0, 1).is_err());
        assert!(KernelSpec::matern(1.0, -1.0, 1).is_err());
        assert!(KernelSpec::matern(1.0, 1.0, 0).is_err());
        assert!(m(1.5).eval(&[f64::NAN], &[0.0]).is_err());
        assert!(m(1.5).eval(&[0.0, 0.0], &[0.0]).is_err());
    }

    #[test]
    fn monotone_in_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for spec in [m(0.5), m(1.1), m(2.5), KernelSpec::squared_exponential(0.3, 1).unwrap()] {
            for _ in 0..1000 {
                let a: f64 = rng.random_range(0.0..2.0);
                let b: f64 = rng.random_range(0.0..2.0);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                assert!(spec.at_distance(lo) >= spec.at_distance(hi));
            }
        }
    }

    #[test]
    fn gram_examples() {
        let spec = m(0.5);
        let g = gram_matrix(&spec, &[vec![0.4]]).unwrap();
        assert_eq!(g, DMatrix::from_element(1, 1, 1.0));
        let g = gram_matrix(&spec, &[vec![0.4], vec![0.4]]).unwrap();
        assert_eq!(g, DMatrix::from_element(2, 2, 1.0));
        let g = gram_matrix(&spec, &[vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        assert!((g[(0, 1)] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((g[(1, 2)] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((g[(0, 2)] - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(g, g.transpose());
    }

    #[test]
    fn scalar_and_diagonal_solves() {
        let sys = GramSystem::with_gram(vec![vec![0.0]], DMatrix::from_element(1, 1, 1.0), 1.0)
            .unwrap();
        let v = sys.solve(&DVector::from_element(1, 2.0)).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);

        let sys = GramSystem::with_gram(vec![vec![0.0]; 4], DMatrix::identity(4, 4), 0.5).unwrap();
        let v = sys.solve(&DVector::from_element(4, 1.0)).unwrap();
        for x in v.iter() {
            assert!((x - 1.0 / 1.5).abs() < 1e-15);
        }
        assert!(sys.solve(&DVector::from_element(3, 1.0)).is_err());
    }

    #[test]
    fn random_spd_matches_dense_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let a = DMatrix::from_fn(20, 20, |_, _| rng.random_range(-1.0..1.0));
        let gram = &a * a.transpose();
        let sys = GramSystem::with_gram(vec![vec![0.0]; 20], gram.clone(), 0.3).unwrap();
        let rhs = DVector::from_fn(20, |i, _| (i as f64).sin());
        let got = sys.solve(&rhs).unwrap();
        let inv = (gram + DMatrix::identity(20, 20) * 0.3).try_inverse().unwrap();
        let want = inv * &rhs;
        assert!((got - want).amax() < 1e-8);
    }

    #[test]
    fn factor_reproduces_system() {
        let spec = KernelSpec::matern(1.1, 0.4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point> = (0..200)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let sys = GramSystem::new(&spec, pts, 1e-2).unwrap();
        let l = sys.factor();
        let mut target = sys.gram().clone();
        for i in 0..target.nrows() {
            target[(i, i)] += 1e-2;
        }
        let rel = (&l * l.transpose() - &target).norm() / target.norm();
        assert!(rel <= 1e-10, "relative reconstruction error {rel}");
    }

    #[test]
    fn non_spd_reports_condition() {
        let gram = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 1.0]);
        let err = GramSystem::with_gram(vec![vec![0.0]; 2], gram, 0.1).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }
}
