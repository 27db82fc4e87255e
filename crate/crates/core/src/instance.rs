//! Synthetic objectives in a kernel's RKHS with known maximizer and norm.
//!
//! Instances are finite kernel expansions `Σ αᵢ k(·, cᵢ)`, optionally plus
//! compactly supported bump terms. The expansion part has an exact RKHS norm
//! `√(αᵀKα)`; the bump part carries a numerical norm estimate.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernel::{distance, factorize, gram_unchecked, KernelFamily, KernelSpec, Point};

/// Regularizer of the minimum-norm interpolant used for bump norms.
pub const INTERPOLANT_EPS: f64 = 1e-8;

/// Frozen bump-norm estimate for Matérn ν = 0.5, θ = 1, d = 1 at 256 intervals.
pub const BUMP_NORM_NU05_D1_G256: f64 = 1.4158742631976864;

/// Default per-axis grid size for [`estimate_bump_norm`].
pub fn default_bump_grid(dim: usize) -> usize {
    match dim {
        1 => 256,
        2 => 32,
        _ => 8,
    }
}

/// Smooth bump supported on the open ball `B(center, radius)`.
///
/// `g(u) = exp(1 − 1/(1 − ‖u‖²))` for `‖u‖ < 1` and zero elsewhere, with
/// `u = (x − center)/radius`, so that `g(0) = 1`.
pub fn bump(x: &[f64], center: &[f64], radius: f64) -> f64 {
    let r2 = x
        .iter()
        .zip(center)
        .map(|(a, b)| {
            let u = (a - b) / radius;
            u * u
        })
        .sum::<f64>();
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BumpTerm {
    pub amplitude: f64,
    pub center: Point,
    pub radius: f64,
}

impl BumpTerm {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.amplitude * bump(x, &self.center, self.radius)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        distance(x, &self.center) < self.radius
    }
}

/// Measured local growth `c̲ r^b ≤ f* − f(x) ≤ c̄ r^b` for `r ≤ radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthFit {
    pub b_target: f64,
    pub b_hat: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RkhsFunction {
    kernel: KernelSpec,
    centers: Vec<Point>,
    weights: Vec<f64>,
    bumps: Vec<BumpTerm>,
    norm_expansion: f64,
    norm_bump_estimate: f64,
    argmax: Point,
    fmax: f64,
    argmax_resolution: f64,
    norm_budget: f64,
    seed: u64,
    growth: Option<GrowthFit>,
}

impl RkhsFunction {
    /// Builds an expansion `Σ wᵢ k(·, cᵢ)`, computing its norm and locating the
    /// maximizer. The norm budget defaults to the norm itself.
    pub fn from_expansion(
        kernel: KernelSpec,
        centers: Vec<Point>,
        weights: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        if centers.len() != weights.len() {
            return Err(Error::invalid("centers and weights differ in length"));
        }
        for c in &centers {
            if c.len() != kernel.dim() || c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid(format!("center {c:?} is not in the unit cube")));
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("non-finite weight"));
        }
        let norm = quadratic_form(&kernel, &centers, &weights).max(0.0).sqrt();
        let mut f = Self {
            kernel,
            centers,
            weights,
            bumps: Vec::new(),
            norm_expansion: norm,
            norm_bump_estimate: 0.0,
            argmax: vec![0.0; kernel.dim()],
            fmax: 0.0,
            argmax_resolution: 0.0,
            norm_budget: norm,
            seed,
            growth: None,
        };
        f.relocate_argmax(&[]);
        Ok(f)
    }

    /// The zero function.
    pub fn zero(kernel: KernelSpec) -> Self {
        Self::from_expansion(kernel, Vec::new(), Vec::new(), 0)
            .expect("empty expansion is always valid")
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bumps(&self) -> &[BumpTerm] {
        &self.bumps
    }

    pub fn norm_expansion(&self) -> f64 {
        self.norm_expansion
    }

    pub fn norm_bump_estimate(&self) -> f64 {
        self.norm_bump_estimate
    }

    /// Norm of the expansion plus the bump estimate (triangle inequality).
    pub fn norm_estimate(&self) -> f64 {
        self.norm_expansion + self.norm_bump_estimate
    }

    pub fn argmax(&self) -> &[f64] {
        &self.argmax
    }

    pub fn fmax(&self) -> f64 {
        self.fmax
    }

    /// Grid spacing used by the argmax scan.
    pub fn argmax_resolution(&self) -> f64 {
        self.argmax_resolution
    }

    /// Declared norm budget M.
    pub fn norm_budget(&self) -> f64 {
        self.norm_budget
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn growth(&self) -> Option<&GrowthFit> {
        self.growth.as_ref()
    }

    pub fn with_norm_budget(mut self, budget: f64) -> Self {
        self.norm_budget = budget;
        self
    }

    /// Multiplies the function by `factor > 0`, scaling norms, budget,
    /// maximum value and growth constants with it.
    pub fn scaled(mut self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::invalid(format!("scale factor must be positive, got {factor}")));
        }
        for w in &mut self.weights {
            *w *= factor;
        }
        for b in &mut self.bumps {
            b.amplitude *= factor;
        }
        self.norm_expansion *= factor;
        self.norm_bump_estimate *= factor;
        self.norm_budget *= factor;
        self.fmax *= factor;
        if let Some(g) = &mut self.growth {
            g.c_lower *= factor;
            g.c_upper *= factor;
        }
        Ok(self)
    }

    /// Sets the budget so that `‖f‖ = (1 − λ)M`.
    pub fn with_budget_for_lambda(self, lambda: f64) -> Self {
        let m = self.norm_estimate() / (1.0 - lambda);
        self.with_norm_budget(m)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        for (c, w) in self.centers.iter().zip(&self.weights) {
            v += w * self.kernel.eval_unchecked(x, c);
        }
        for b in &self.bumps {
            v += b.value(x);
        }
        v
    }

    /// Suboptimality `f(x*) − f(x)`.
    pub fn gap(&self, x: &[f64]) -> f64 {
        self.fmax - self.eval(x)
    }

    /// RKHS inner product of the expansion parts of two functions sharing a kernel.
    pub fn inner_product(&self, other: &RkhsFunction) -> Result<f64> {
        if self.kernel != other.kernel {
            return Err(Error::invalid("inner product needs a shared kernel"));
        }
        let mut s = 0.0;
        for (ci, wi) in self.centers.iter().zip(&self.weights) {
            for (cj, wj) in other.centers.iter().zip(&other.weights) {
                s += wi * wj * self.kernel.eval_unchecked(ci, cj);
            }
        }
        Ok(s)
    }

    fn relocate_argmax(&mut self, extra_starts: &[Point]) {
        let mut starts: Vec<Point> = extra_starts.to_vec();
        if self.centers.len() <= 64 {
            starts.extend(self.centers.iter().cloned());
        }
        let (x, v, res) = locate_argmax(|x| self.eval(x), self.dim(), &starts);
        self.argmax = x;
        self.fmax = v;
        self.argmax_resolution = res;
    }
}

fn quadratic_form(kernel: &KernelSpec, centers: &[Point], weights: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, (ci, wi)) in centers.iter().zip(weights).enumerate() {
        s += wi * wi;
        for (cj, wj) in centers[..i].iter().zip(weights) {
            s += 2.0 * wi * wj * kernel.eval_unchecked(ci, cj);
        }
    }
    s
}

/// Intervals per axis of the argmax scan grid.
pub fn argmax_grid_intervals(dim: usize) -> usize {
    match dim {
        1 => 512,
        2 => 128,
        3 => 32,
        _ => 8,
    }
}

/// Regular grid with `intervals + 1` points per axis, lexicographic order
/// (last axis fastest).
pub fn grid_points(dim: usize, intervals: usize) -> Vec<Point> {
    let per_axis = intervals + 1;
    let total = per_axis.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        out.push(idx.iter().map(|&i| i as f64 / intervals as f64).collect());
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < per_axis {
                break;
            }
            idx[a] = 0;
        }
    }
    out
}

/// Grid scan followed by coordinate refinement from the best grid points
/// and any extra starts. Returns `(argmax, max, grid spacing)`.
pub fn locate_argmax<F: Fn(&[f64]) -> f64>(
    f: F,
    dim: usize,
    extra_starts: &[Point],
) -> (Point, f64, f64) {
    let intervals = argmax_grid_intervals(dim);
    let spacing = 1.0 / intervals as f64;
    let mut scored: Vec<(f64, Point)> = grid_points(dim, intervals)
        .into_iter()
        .map(|p| (f(&p), p))
        .collect();
    // stable: earlier grid points win ties
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut starts: Vec<(f64, Point)> = scored.into_iter().take(8).collect();
    for s in extra_starts {
        starts.push((f(s), s.clone()));
    }
    let mut best = starts[0].clone();
    for (v0, p0) in starts {
        let (p, v) = coordinate_ascent(&f, p0, v0, spacing);
        if v > best.0 {
            best = (v, p);
        }
    }
    (best.1, best.0, spacing)
}

fn coordinate_ascent<F: Fn(&[f64]) -> f64>(f: &F, mut x: Point, mut fx: f64, step0: f64) -> (Point, f64) {
    let mut step = step0;
    let mut iters = 0;
    while step > 1e-13 && iters < 20_000 {
        iters += 1;
        let mut improved = false;
        for a in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[a] = (y[a] + dir * step).clamp(0.0, 1.0);
                let fy = f(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Random expansion with exactly the requested RKHS norm.
///
/// Centers are uniform in the cube, weights standard normal with the first
/// weight made positive, then rescaled. A numerically singular Gram matrix
/// (coincident centers) triggers a re-draw with jittered centers, up to ten
/// times.
pub fn synth_expansion(
    kernel: KernelSpec,
    n_centers: usize,
    target_norm: f64,
    seed: u64,
) -> Result<RkhsFunction> {
    if n_centers == 0 {
        return Err(Error::invalid("at least one center is required"));
    }
    if !(target_norm.is_finite() && target_norm > 0.0) {
        return Err(Error::invalid(format!("target norm must be positive, got {target_norm}")));
    }
    let d = kernel.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Point> = (0..n_centers)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut weights: Vec<f64> = (0..n_centers).map(|_| rng.sample(StandardNormal)).collect();
    weights[0] = weights[0].abs();
    if n_centers == 1 {
        weights[0] = 1.0;
    }
    let mut attempt = 0;
    while factorize(gram_unchecked(&kernel, &centers)).is_err() {
        attempt += 1;
        if attempt > 10 {
            return Err(Error::Synthesis(
                "Gram matrix of the centers stayed singular after 10 jitter retries".into(),
            ));
        }
        for c in centers.iter_mut() {
            for v in c.iter_mut() {
                *v = (*v + rng.random_range(-1e-3..1e-3)).clamp(0.0, 1.0);
            }
        }
    }
    let norm = quadratic_form(&kernel, &centers, &weights).sqrt();
    let weights = weights.into_iter().map(|w| w * target_norm / norm).collect();
    RkhsFunction::from_expansion(kernel, centers, weights, seed)
}

/// Minimum-norm interpolant estimate `√(vᵀ(K + εI)⁻¹v)` of the RKHS norm of a
/// function with values `values` at `points`.
pub fn interpolant_norm(kernel: &KernelSpec, points: &[Point], values: &[f64], eps: f64) -> Result<f64> {
    if values.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut k = gram_unchecked(kernel, points);
    for i in 0..k.nrows() {
        k[(i, i)] += eps;
    }
    let chol = factorize(k)?;
    let v = DVector::from_column_slice(values);
    let a = chol.solve(&v);
    Ok(v.dot(&a).max(0.0).sqrt())
}

/// Numerical estimate of the RKHS norm `M_ν` of the unit bump `g`.
///
/// `g` is sampled on a regular grid over `[−1, 1]^d` with `grid_n` intervals
/// per axis. Grids with `grid_n` and `2·grid_n` intervals are nested, and the
/// estimate is nondecreasing along nested grids.
pub fn estimate_bump_norm(kernel: &KernelSpec, grid_n: usize) -> Result<f64> {
    let d = kernel.dim();
    if grid_n < 16 {
        return Err(Error::invalid(format!("bump-norm grid needs at least 16 intervals, got {grid_n}")));
    }
    if d > 2 && grid_n > 16 {
        return Err(Error::invalid("bump-norm grids above 16 intervals are limited to d ≤ 2"));
    }
    let points: Vec<Point> = grid_points(d, grid_n)
        .into_iter()
        .map(|p| p.into_iter().map(|v| 2.0 * v - 1.0).collect())
        .collect();
    let origin = vec![0.0; d];
    let values: Vec<f64> = points.iter().map(|p| bump(p, &origin, 1.0)).collect();
    interpolant_norm(kernel, &points, &values, INTERPOLANT_EPS)
}

/// A bump perturbation of an instance together with the data needed to
/// validate it.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub original: RkhsFunction,
    pub perturbed: RkhsFunction,
    pub center: Point,
    pub radius: f64,
    pub delta: f64,
    pub c: f64,
    pub lambda: f64,
    pub bump_norm: f64,
}

impl Perturbation {
    pub fn amplitude(&self) -> f64 {
        (self.c + 1.0) * self.delta
    }

    /// Whether `x` lies in the perturbed region `E = B(z, w)`.
    pub fn in_region(&self, x: &[f64]) -> bool {
        distance(x, &self.center) < self.radius
    }
}

/// `f + (c+1)Δ·g((· − z)/w)` with `w = ((c+1)Δ M_ν/(λM))^{1/ν}`, estimating
/// `M_ν` on the default grid.
pub fn perturb(f: &RkhsFunction, z: &[f64], delta: f64, c: f64, lambda: f64) -> Result<Perturbation> {
    let m_nu = estimate_bump_norm(f.kernel(), default_bump_grid(f.dim()))?;
    perturb_with_bump_norm(f, z, delta, c, lambda, m_nu)
}

/// As [`perturb`] with an explicit bump norm `M_ν`.
pub fn perturb_with_bump_norm(
    f: &RkhsFunction,
    z: &[f64],
    delta: f64,
    c: f64,
    lambda: f64,
    bump_norm: f64,
) -> Result<Perturbation> {
    let nu = match f.kernel().family() {
        KernelFamily::Matern { nu } => nu,
        KernelFamily::SquaredExponential => {
            return Err(Error::invalid("perturbations need a Matérn kernel"))
        }
    };
    if !(delta > 0.0 && c > 1.0 && lambda > 0.0 && lambda < 1.0 && bump_norm > 0.0) {
        return Err(Error::Precondition(format!(
            "need Δ > 0, c > 1, 0 < λ < 1 and M_ν > 0 (got Δ={delta}, c={c}, λ={lambda}, M_ν={bump_norm})"
        )));
    }
    let m = f.norm_budget();
    let used = f.norm_estimate();
    if (used - (1.0 - lambda) * m).abs() > 1e-9 * m.max(1.0) {
        return Err(Error::Precondition(format!(
            "norm {used} is not (1 − λ)M = {}",
            (1.0 - lambda) * m
        )));
    }
    let gap_z = f.gap(z);
    if !(delta <= gap_z && gap_z <= c * delta) {
        return Err(Error::Precondition(format!(
            "z has suboptimality {gap_z}, outside [Δ, cΔ] = [{delta}, {}]",
            c * delta
        )));
    }
    let amplitude = (c + 1.0) * delta;
    let radius = (amplitude * bump_norm / (lambda * m)).powf(1.0 / nu);
    check_ball_in_annulus(f, z, radius, delta, c)?;

    let mut perturbed = f.clone();
    perturbed.bumps.push(BumpTerm {
        amplitude,
        center: z.to_vec(),
        radius,
    });
    // ‖a·g((·−z)/w)‖ ≤ a·M_ν·w^{−ν} = λM by the choice of w
    perturbed.norm_bump_estimate += amplitude * bump_norm * radius.powf(-nu);
    perturbed.growth = None;
    perturbed.relocate_argmax(&[z.to_vec()]);
    Ok(Perturbation {
        original: f.clone(),
        perturbed,
        center: z.to_vec(),
        radius,
        delta,
        c,
        lambda,
        bump_norm,
    })
}

/// Points of `B(z, w) ∩ [0,1]^d` used for region checks: a local grid plus
/// points just inside the sphere.
pub fn ball_samples(z: &[f64], w: f64, per_axis: usize) -> Vec<Point> {
    let d = z.len();
    let mut out = Vec::new();
    for p in grid_points(d, per_axis) {
        let q: Point = p.iter().zip(z).map(|(u, c)| c + w * (2.0 * u - 1.0)).collect();
        if distance(&q, z) < w {
            out.push(q);
        }
    }
    let dirs: Vec<Point> = if d == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        (0..64)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / 64.0;
                let mut v = vec![0.0; d];
                v[0] = t.cos();
                v[1] = t.sin();
                v
            })
            .collect()
    };
    for u in dirs {
        out.push(z.iter().zip(&u).map(|(c, e)| c + e * w * (1.0 - 1e-9)).collect());
    }
    out.retain(|q| q.iter().all(|v| (0.0..=1.0).contains(v)));
    out
}

fn check_ball_in_annulus(f: &RkhsFunction, z: &[f64], w: f64, delta: f64, c: f64) -> Result<()> {
    let per_axis = if z.len() == 1 { 2000 } else { 60 };
    for q in ball_samples(z, w, per_axis) {
        let g = f.gap(&q);
        if g < delta || g > c * delta {
            return Err(Error::Containment {
                radius: w,
                detail: format!("suboptimality {g:.6e} at {q:?} is outside [{delta:.3e}, {:.3e}]", c * delta),
            });
        }
    }
    Ok(())
}

/// Outcome of checking the perturbation properties on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationCheck {
    pub grid_points: usize,
    pub region_points: usize,
    /// max |f̃ − f| outside E (P1).
    pub max_diff_outside: f64,
    /// f's maximizer lies outside E (P2).
    pub original_argmax_outside: bool,
    /// f̃'s maximizer lies inside E (P2).
    pub perturbed_argmax_inside: bool,
    /// max |f − f̃| on E, to be compared with the deviation bound.
    pub max_dev_inside: f64,
    /// Deviation bound: the bump amplitude `(c+1)Δ`.
    pub deviation_bound: f64,
    /// min over E of `f* − f(x)` (must be ≥ Δ).
    pub min_gap_inside: f64,
    /// min outside E of `f̃* − f̃(x)` (must be ≥ Δ).
    pub min_perturbed_gap_outside: f64,
    pub delta: f64,
}

impl PerturbationCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_diff_outside <= tol
            && self.original_argmax_outside
            && self.perturbed_argmax_inside
            && self.max_dev_inside <= self.deviation_bound + tol
            && self.min_gap_inside >= self.delta - tol
            && self.min_perturbed_gap_outside >= self.delta - tol
    }
}

/// Checks the perturbation properties on a regular grid of at least
/// `min_points` points plus a dense sample of the region E.
pub fn validate_perturbation(p: &Perturbation, min_points: usize) -> PerturbationCheck {
    let d = p.original.dim();
    let mut intervals = 1;
    while (intervals + 1usize).pow(d as u32) < min_points {
        intervals += 1;
    }
    let grid = grid_points(d, intervals);
    let local = ball_samples(&p.center, p.radius, if d == 1 { 2000 } else { 60 });
    let f = &p.original;
    let g = &p.perturbed;
    let mut check = PerturbationCheck {
        grid_points: grid.len(),
        region_points: 0,
        max_diff_outside: 0.0,
        original_argmax_outside: !p.in_region(f.argmax()),
        perturbed_argmax_inside: p.in_region(g.argmax()),
        max_dev_inside: 0.0,
        deviation_bound: p.amplitude(),
        min_gap_inside: f64::INFINITY,
        min_perturbed_gap_outside: f64::INFINITY,
        delta: p.delta,
    };
    for x in grid.iter().chain(&local) {
        let (fx, gx) = (f.eval(x), g.eval(x));
        if p.in_region(x) {
            check.region_points += 1;
            check.max_dev_inside = check.max_dev_inside.max((gx - fx).abs());
            check.min_gap_inside = check.min_gap_inside.min(f.fmax() - fx);
        } else {
            check.max_diff_outside = check.max_diff_outside.max((gx - fx).abs());
            check.min_perturbed_gap_outside = check.min_perturbed_gap_outside.min(g.fmax() - gx);
        }
    }
    check
}

/// A point with suboptimality `target` found by bisection along the ray from
/// the maximizer in direction `dir`; `None` if the ray leaves the cube first.
pub fn point_at_gap(f: &RkhsFunction, dir: &[f64], target: f64) -> Option<Point> {
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let at = |r: f64| -> Point {
        f.argmax().iter().zip(dir).map(|(c, u)| c + r * u / norm).collect()
    };
    let inside = |p: &Point| p.iter().all(|v| (0.0..=1.0).contains(v));
    let step = 1e-3;
    let mut lo = 0.0;
    let mut hi = step;
    loop {
        let p = at(hi);
        if !inside(&p) {
            return None;
        }
        if f.gap(&p) >= target {
            break;
        }
        lo = hi;
        hi += step;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f.gap(&at(mid)) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(at(0.5 * (lo + hi)))
}

/// Draws a perturbation of `f` with `E` placed on a random ray from the
/// maximizer at suboptimality `(1 + c)Δ/2`. Starting from `delta`, Δ is halved
/// until `B(z, w)` fits inside the annulus, for at most `max_halvings` steps.
pub fn sample_perturbation(
    f: &RkhsFunction,
    delta: f64,
    c: f64,
    lambda: f64,
    bump_norm: f64,
    seed: u64,
    max_halvings: usize,
) -> Result<Perturbation> {
    let d = f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delta = delta;
    let mut last = Error::Synthesis("no perturbation site found".into());
    for _ in 0..=max_halvings {
        for _ in 0..8 {
            let dir: Point = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let Some(z) = point_at_gap(f, &dir, 0.5 * (1.0 + c) * delta) else {
                continue;
            };
            match perturb_with_bump_norm(f, &z, delta, c, lambda, bump_norm) {
                Ok(p) => return Ok(p),
                Err(e @ (Error::Containment { .. } | Error::Precondition(_))) => last = e,
                Err(e) => return Err(e),
            }
        }
        delta *= 0.5;
    }
    Err(last)
}

/// Natural local growth exponent of a single kernel section.
fn section_exponent(kernel: &KernelSpec) -> f64 {
    (2.0 * kernel.nu()).min(2.0)
}

/// Log–log fit of the local growth around the maximizer over radii in
/// `[r_min, r_max]`.
pub fn fit_growth(f: &RkhsFunction, r_min: f64, r_max: f64) -> Option<GrowthFit> {
    let d = f.dim();
    let mut dirs: Vec<Point> = Vec::new();
    for a in 0..d {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[a] = s;
            dirs.push(v);
        }
    }
    if d >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6a09e667);
        for _ in 0..8 {
            let v: Point = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let n = v.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
            dirs.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    let steps = 24;
    let mut logs = Vec::new();
    let mut samples = Vec::new();
    for j in 0..steps {
        let r = r_min * (r_max / r_min).powf(j as f64 / (steps - 1) as f64);
        let mut sum = 0.0;
        let mut count = 0;
        for u in &dirs {
            let x: Point = f.argmax().iter().zip(u).map(|(c, e)| c + r * e).collect();
            if x.iter().all(|v| (0.0..=1.0).contains(v)) {
                let g = f.gap(&x);
                sum += g;
                count += 1;
                samples.push((r, g));
            }
        }
        if count > 0 && sum > 0.0 {
            logs.push((r.ln(), (sum / count as f64).ln()));
        }
    }
    if logs.len() < 3 {
        return None;
    }
    let (slope, _, _) = crate::stats::ols(&logs)?;
    let ratios = samples.iter().map(|(r, g)| g / r.powf(slope));
    let (lo, hi) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), q| (lo.min(q), hi.max(q)));
    Some(GrowthFit {
        b_target: f64::NAN,
        b_hat: slope,
        c_lower: lo,
        c_upper: hi,
        radius: r_max,
    })
}

/// Radius range of the growth-exponent fit.
pub const GROWTH_FIT_RADII: (f64, f64) = (0.01, 0.1);
/// Accepted deviation between the fitted and target growth exponents.
pub const GROWTH_TOLERANCE: f64 = 0.25;

/// An instance with local growth `f* − f(x) ≈ ‖x − x*‖^b` near its maximizer.
///
/// When `b` is the natural exponent of a kernel section (`min{2ν, 2}`) the
/// instance is a single section at `x*`. Otherwise the profile
/// `1 − ‖x − x*‖^b` is interpolated by kernel sections on a local grid around
/// `x*`, refining the grid on failure. The result is scaled to unit norm.
pub fn synth_growth_instance(kernel: KernelSpec, b: f64, seed: u64) -> Result<RkhsFunction> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::invalid(format!("growth exponent must be positive, got {b}")));
    }
    let d = kernel.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xstar: Point = (0..d).map(|_| rng.random_range(0.4..0.6)).collect();
    let (r_min, r_max) = GROWTH_FIT_RADII;
    let mut best_b_hat = f64::NAN;

    let accept = |mut f: RkhsFunction| -> std::result::Result<RkhsFunction, f64> {
        match fit_growth(&f, r_min, r_max) {
            Some(mut fit) => {
                fit.b_target = b;
                if (fit.b_hat - b).abs() <= GROWTH_TOLERANCE {
                    f.growth = Some(fit);
                    Ok(f)
                } else {
                    Err(fit.b_hat)
                }
            }
            None => Err(f64::NAN),
        }
    };

    if (section_exponent(&kernel) - b).abs() <= GROWTH_TOLERANCE / 2.0 {
        let f = RkhsFunction::from_expansion(kernel, vec![xstar.clone()], vec![1.0], seed)?;
        match accept(f) {
            Ok(f) => return Ok(f),
            Err(b_hat) => best_b_hat = b_hat,
        }
    }

    let base_spacing = match d {
        1 => 1.0 / 256.0,
        2 => 1.0 / 48.0,
        _ => 1.0 / 12.0,
    };
    for attempt in 0..3 {
        let spacing = base_spacing / 2f64.powi(attempt);
        let centers = local_grid(&xstar, 0.25, spacing);
        if centers.len() > 3000 {
            break;
        }
        let values: Vec<f64> = centers
            .iter()
            .map(|c| 1.0 - distance(c, &xstar).powf(b))
            .collect();
        let mut k = gram_unchecked(&kernel, &centers);
        for i in 0..k.nrows() {
            k[(i, i)] += 1e-9;
        }
        let chol = factorize(k)?;
        let alpha = chol.solve(&DVector::from_column_slice(&values));
        let norm = quadratic_form(&kernel, &centers, alpha.as_slice()).sqrt();
        let weights: Vec<f64> = alpha.iter().map(|a| a / norm).collect();
        let f = RkhsFunction::from_expansion(kernel, centers, weights, seed)?;
        match accept(f) {
            Ok(f) => return Ok(f),
            Err(b_hat) => best_b_hat = b_hat,
        }
    }
    Err(Error::Synthesis(format!(
        "could not reach growth exponent {b} within ±{GROWTH_TOLERANCE}; best fit b̂ = {best_b_hat:.4}"
    )))
}

fn local_grid(center: &[f64], radius: f64, spacing: f64) -> Vec<Point> {
    let d = center.len();
    let n = (1.0 / spacing).round() as usize;
    let lo: Vec<usize> = center
        .iter()
        .map(|c| ((c - radius).max(0.0) * n as f64).floor() as usize)
        .collect();
    let hi: Vec<usize> = center
        .iter()
        .map(|c| ((c + radius).min(1.0) * n as f64).ceil() as usize)
        .collect();
    let mut out = Vec::new();
    let mut idx = lo.clone();
    loop {
        let p: Point = idx.iter().map(|&i| i as f64 / n as f64).collect();
        if distance(&p, center) <= radius {
            out.push(p);
        }
        let mut a = d;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] <= hi[a] {
                break;
            }
            idx[a] = lo[a];
        }
    }
}

/// Empirical Hölder constant `max |f(x) − f(z)| / ‖x − z‖^ξ` over random
/// pairs, half of them at short range.
pub fn holder_witness(f: &RkhsFunction, pairs: usize, seed: u64) -> f64 {
    let xi = f.kernel().holder_exponent();
    let d = f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for j in 0..pairs {
        let x: Point = (0..d).map(|_| rng.random::<f64>()).collect();
        let z: Point = if j % 2 == 0 {
            (0..d).map(|_| rng.random::<f64>()).collect()
        } else {
            x.iter()
                .map(|v| (v + rng.random_range(-0.01..0.01)).clamp(0.0, 1.0))
                .collect()
        };
        let r = distance(&x, &z);
        if r > 1e-9 {
            best = best.max((f.eval(&x) - f.eval(&z)).abs() / r.powf(xi));
        }
    }
    best
}

/// Text serialization of instances: one `key = value` pair per line, `#`
/// comments, vectors as whitespace-separated numbers.
///
/// ```text
/// kernel = matern | squared-exponential
/// nu = <real>                      (matern only)
/// theta = <real>
/// dim = <int>
/// seed = <int>
/// norm_budget = <real>
/// norm_expansion = <real>
/// norm_bump_estimate = <real>
/// fmax = <real>
/// argmax = <d reals>
/// argmax_resolution = <real>
/// growth = <b_target> <b_hat> <c_lower> <c_upper> <radius>   (optional)
/// term = <weight> <d center coordinates>                      (repeated)
/// bump = <amplitude> <radius> <d center coordinates>          (repeated)
/// ```
///
/// Reals are written in shortest round-trip form, so parsing restores every
/// value bit for bit.
pub mod format {
    use super::*;

    pub const HEADER: &str = "# bead instance v1";

    fn join(values: &[f64]) -> String {
        values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
    }

    pub fn write_instance(f: &RkhsFunction) -> String {
        let mut s = String::new();
        s.push_str(HEADER);
        s.push('\n');
        let k = f.kernel();
        match k.family() {
            KernelFamily::Matern { nu } => {
                s.push_str("kernel = matern\n");
                s.push_str(&format!("nu = {nu}\n"));
            }
            KernelFamily::SquaredExponential => s.push_str("kernel = squared-exponential\n"),
        }
        s.push_str(&format!("theta = {}\n", k.theta()));
        s.push_str(&format!("dim = {}\n", k.dim()));
        s.push_str(&format!("seed = {}\n", f.seed));
        s.push_str(&format!("norm_budget = {}\n", f.norm_budget));
        s.push_str(&format!("norm_expansion = {}\n", f.norm_expansion));
        s.push_str(&format!("norm_bump_estimate = {}\n", f.norm_bump_estimate));
        s.push_str(&format!("fmax = {}\n", f.fmax));
        s.push_str(&format!("argmax = {}\n", join(&f.argmax)));
        s.push_str(&format!("argmax_resolution = {}\n", f.argmax_resolution));
        if let Some(g) = &f.growth {
            s.push_str(&format!(
                "growth = {}\n",
                join(&[g.b_target, g.b_hat, g.c_lower, g.c_upper, g.radius])
            ));
        }
        for (c, w) in f.centers.iter().zip(&f.weights) {
            s.push_str(&format!("term = {w} {}\n", join(c)));
        }
        for b in &f.bumps {
            s.push_str(&format!("bump = {} {} {}\n", b.amplitude, b.radius, join(&b.center)));
        }
        s
    }

    fn reals(line: usize, v: &str) -> Result<Vec<f64>> {
        v.split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::parse(line, format!("bad number {t:?}: {e}"))))
            .collect()
    }

    pub fn parse_instance(text: &str) -> Result<RkhsFunction> {
        let mut kind = None;
        let mut nu = None;
        let mut theta = None;
        let mut dim = None;
        let mut seed = 0u64;
        let mut budget = None;
        let mut norm_exp = None;
        let mut norm_bump = 0.0;
        let mut fmax = None;
        let mut argmax = None;
        let mut resolution = 0.0;
        let mut growth = None;
        let mut terms: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut bumps: Vec<(usize, Vec<f64>)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| Error::parse(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let one = |v: &str| -> Result<f64> {
                v.parse::<f64>().map_err(|e| Error::parse(line, format!("bad number {v:?}: {e}")))
            };
            match key {
                "kernel" => kind = Some(value.to_string()),
                "nu" => nu = Some(one(value)?),
                "theta" => theta = Some(one(value)?),
                "dim" => {
                    dim = Some(value.parse::<usize>().map_err(|e| Error::parse(line, e.to_string()))?)
                }
                "seed" => seed = value.parse::<u64>().map_err(|e| Error::parse(line, e.to_string()))?,
                "norm_budget" => budget = Some(one(value)?),
                "norm_expansion" => norm_exp = Some(one(value)?),
                "norm_bump_estimate" => norm_bump = one(value)?,
                "fmax" => fmax = Some(one(value)?),
                "argmax" => argmax = Some(reals(line, value)?),
                "argmax_resolution" => resolution = one(value)?,
                "growth" => {
                    let g = reals(line, value)?;
                    if g.len() != 5 {
                        return Err(Error::parse(line, "growth needs five numbers"));
                    }
                    growth = Some(GrowthFit {
                        b_target: g[0],
                        b_hat: g[1],
                        c_lower: g[2],
                        c_upper: g[3],
                        radius: g[4],
                    });
                }
                "term" => terms.push((line, reals(line, value)?)),
                "bump" => bumps.push((line, reals(line, value)?)),
                other => return Err(Error::parse(line, format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::parse(0, format!("missing key {k:?}"));
        let theta = theta.ok_or_else(|| missing("theta"))?;
        let dim = dim.ok_or_else(|| missing("dim"))?;
        let kernel = match kind.as_deref() {
            Some("matern") => KernelSpec::matern(nu.ok_or_else(|| missing("nu"))?, theta, dim)?,
            Some("squared-exponential") => KernelSpec::squared_exponential(theta, dim)?,
            Some(k) => return Err(Error::parse(0, format!("unknown kernel {k:?}"))),
            None => return Err(missing("kernel")),
        };
        let mut centers = Vec::new();
        let mut weights = Vec::new();
        for (line, t) in terms {
            if t.len() != dim + 1 {
                return Err(Error::parse(line, format!("term needs {} numbers", dim + 1)));
            }
            weights.push(t[0]);
            centers.push(t[1..].to_vec());
        }
        let mut bump_terms = Vec::new();
        for (line, b) in bumps {
            if b.len() != dim + 2 {
                return Err(Error::parse(line, format!("bump needs {} numbers", dim + 2)));
            }
            bump_terms.push(BumpTerm {
                amplitude: b[0],
                radius: b[1],
                center: b[2..].to_vec(),
            });
        }
        let argmax = argmax.ok_or_else(|| missing("argmax"))?;
        if argmax.len() != dim {
            return Err(Error::parse(0, "argmax has the wrong dimension"));
        }
        Ok(RkhsFunction {
            kernel,
            centers,
            weights,
            bumps: bump_terms,
            norm_expansion: norm_exp.ok_or_else(|| missing("norm_expansion"))?,
            norm_bump_estimate: norm_bump,
            argmax,
            fmax: fmax.ok_or_else(|| missing("fmax"))?,
            argmax_resolution: resolution,
            norm_budget: budget.ok_or_else(|| missing("norm_budget"))?,
            seed,
            growth,
        })
    }
}

/// Sample matrix helper used by tests that need the Gram of an instance.
pub fn center_gram(f: &RkhsFunction) -> DMatrix<f64> {
    gram_unchecked(f.kernel(), f.centers())
}
