//! Instance-dependent complexity terms and closed-form regret exponents.
//!
//! Near-optimal regions are represented by membership on a regular grid over
//! the cube; packing numbers are computed over the grid points in a region.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{argmax_grid_intervals, grid_points, RkhsFunction};
use crate::kernel::{distance, Point};
use crate::tree::TreeGeometry;

/// Largest candidate set accepted by [`PackingMode::BruteForce`].
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Relative slack when comparing a distance with the separation.
const SEPARATION_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PackingMode {
    /// Lexicographic scan keeping every point at least the separation away
    /// from all kept points. A valid packing, so a lower bound.
    Greedy,
    /// Exact maximum by branch and bound.
    BruteForce,
}

fn separated(a: &[f64], b: &[f64], sep: f64) -> bool {
    distance(a, b) >= sep * (1.0 - SEPARATION_TOLERANCE)
}

/// Packing number of a finite point set with the given separation.
pub fn packing_of_points(points: &[Point], separation: f64, mode: PackingMode) -> Result<usize> {
    if !(separation > 0.0) {
        return Err(Error::invalid(format!("separation must be positive, got {separation}")));
    }
    if points.is_empty() {
        return Ok(0);
    }
    match mode {
        PackingMode::Greedy => Ok(greedy(points, separation)),
        PackingMode::BruteForce => {
            if points.len() > BRUTE_FORCE_LIMIT {
                return Err(Error::SizeCap(format!(
                    "brute-force packing takes at most {BRUTE_FORCE_LIMIT} candidates, got {}",
                    points.len()
                )));
            }
            Ok(brute_force(points, separation))
        }
    }
}

fn greedy(points: &[Point], sep: f64) -> usize {
    let d = points[0].len();
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|v| (v / sep).floor() as i64).collect() };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut kept: Vec<usize> = Vec::new();
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let o = (code % 3) as i64 - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect();
    for (i, p) in points.iter().enumerate() {
        let k = key(p);
        let clash = offsets.iter().any(|o| {
            let nk: Vec<i64> = k.iter().zip(o).map(|(a, b)| a + b).collect();
            buckets
                .get(&nk)
                .is_some_and(|v| v.iter().any(|&j| !separated(p, &points[j], sep)))
        });
        if !clash {
            buckets.entry(k).or_default().push(i);
            kept.push(i);
        }
    }
    kept.len()
}

fn brute_force(points: &[Point], sep: f64) -> usize {
    let n = points.len();
    let mut conflict = vec![0u32; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && !separated(&points[i], &points[j], sep) {
                conflict[i] |= 1 << j;
            }
        }
    }
    fn search(remaining: u32, size: usize, conflict: &[u32], best: &mut usize) {
        if remaining == 0 {
            *best = (*best).max(size);
            return;
        }
        if size + remaining.count_ones() as usize <= *best {
            return;
        }
        let v = remaining.trailing_zeros() as usize;
        search(remaining & !(1 << v) & !conflict[v], size + 1, conflict, best);
        search(remaining & !(1 << v), size, conflict, best);
    }
    let mut best = 0;
    let all = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    search(all, 0, &conflict, &mut best);
    best
}

/// Regular grid with `grid_per_axis` points per axis (spacing
/// `1/(grid_per_axis − 1)`).
pub fn region_grid(dim: usize, grid_per_axis: usize) -> Result<Vec<Point>> {
    if grid_per_axis < 2 {
        return Err(Error::invalid("grid needs at least two points per axis"));
    }
    Ok(grid_points(dim, grid_per_axis - 1))
}

/// Packing number of `{x in grid : region(x)}`.
pub fn packing_number<F: Fn(&[f64]) -> bool>(
    region: F,
    dim: usize,
    separation: f64,
    grid_per_axis: usize,
    mode: PackingMode,
) -> Result<usize> {
    let pts: Vec<Point> = region_grid(dim, grid_per_axis)?
        .into_iter()
        .filter(|p| region(p))
        .collect();
    packing_of_points(&pts, separation, mode)
}

/// Default region grid: 513 points per axis in one dimension, 129 in two,
/// 33 in three.
pub fn default_grid_per_axis(dim: usize) -> usize {
    argmax_grid_intervals(dim) + 1
}

/// Suboptimality `f* − f(x)` of an instance on a regular grid.
#[derive(Clone, Debug)]
pub struct GapGrid {
    pub dim: usize,
    pub grid_per_axis: usize,
    pub points: Vec<Point>,
    pub gaps: Vec<f64>,
}

impl GapGrid {
    pub fn new(f: &RkhsFunction, grid_per_axis: usize) -> Result<Self> {
        if f.dim() > 3 {
            return Err(Error::invalid("complexity grids are limited to d ≤ 3"));
        }
        let points = region_grid(f.dim(), grid_per_axis)?;
        let gaps = points.iter().map(|p| f.gap(p)).collect();
        Ok(Self {
            dim: f.dim(),
            grid_per_axis,
            points,
            gaps,
        })
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().cloned().fold(0.0, f64::max)
    }

    fn select(&self, keep: impl Fn(f64) -> bool) -> Vec<Point> {
        self.points
            .iter()
            .zip(&self.gaps)
            .filter(|(_, &g)| keep(g))
            .map(|(p, _)| p.clone())
            .collect()
    }

    /// Largest difference quotient between axis-neighbouring grid points.
    pub fn lipschitz_witness(&self) -> f64 {
        let m = self.grid_per_axis;
        let h = 1.0 / (m - 1) as f64;
        let mut best = 0.0f64;
        let mut stride = 1;
        for _ in 0..self.dim {
            for i in 0..self.points.len() {
                if (i / stride) % m + 1 < m {
                    best = best.max((self.gaps[i] - self.gaps[i + stride]).abs() / h);
                }
            }
            stride *= m;
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnnulusKind {
    /// `Z_k = {2^kΔ ≤ f* − f < 2^{k+1}Δ}`.
    Annular,
    /// `Z̃_k = {f* − f ≤ c₁(1/ρ)^{kξ}Δ}`.
    Sublevel { c1: f64, rho: f64, xi: f64 },
}

/// One near-optimal set of a complexity sum, as a condition on the gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusSpec {
    pub kind: AnnulusKind,
    pub k: usize,
    pub delta: f64,
}

impl AnnulusSpec {
    /// Gap scale of the set: `2^kΔ` or `(1/ρ)^{kξ}Δ`.
    pub fn scale(&self) -> f64 {
        match self.kind {
            AnnulusKind::Annular => 2f64.powi(self.k as i32) * self.delta,
            AnnulusKind::Sublevel { rho, xi, .. } => rho.powf(-(self.k as f64) * xi) * self.delta,
        }
    }

    pub fn contains(&self, gap: f64) -> bool {
        let s = self.scale();
        match self.kind {
            AnnulusKind::Annular => s <= gap && gap < 2.0 * s,
            AnnulusKind::Sublevel { c1, .. } => gap <= c1 * s,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComplexityKind {
    Lower,
    Upper,
    Lipschitz,
}

impl ComplexityKind {
    pub fn name(self) -> &'static str {
        match self {
            ComplexityKind::Lower => "lower",
            ComplexityKind::Upper => "upper",
            ComplexityKind::Lipschitz => "lipschitz",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityRow {
    pub k: usize,
    pub radius: f64,
    pub count: usize,
    pub term: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityReport {
    pub kind: ComplexityKind,
    pub delta: f64,
    pub rows: Vec<ComplexityRow>,
    /// Closed-form sum of the terms beyond the last row (upper report only).
    pub tail: f64,
    pub total: f64,
    /// First k from which every region is empty (lower reports) or from which
    /// the tail is summed in closed form (upper report).
    pub k_cutoff: usize,
    pub grid_per_axis: usize,
    /// Parameters used, as `(name, value)` pairs.
    pub parameters: Vec<(String, f64)>,
}

impl ComplexityReport {
    pub fn m0(&self) -> usize {
        self.rows.first().map(|r| r.count).unwrap_or(0)
    }

    /// Columnar text: a parameter header, one `k radius count term` row per
    /// index and a `total` summary row.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# bead complexity v1");
        let _ = writeln!(s, "# kind = {}", self.kind.name());
        let _ = writeln!(s, "# delta = {}", self.delta);
        let _ = writeln!(s, "# grid_per_axis = {}", self.grid_per_axis);
        for (k, v) in &self.parameters {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let _ = writeln!(s, "k radius count term");
        for r in &self.rows {
            let _ = writeln!(s, "{} {} {} {}", r.k, r.radius, r.count, r.term);
        }
        let _ = writeln!(s, "tail {}", self.tail);
        let _ = writeln!(s, "total {} k_cutoff {}", self.total, self.k_cutoff);
        s
    }
}

fn check_norm_split(f: &RkhsFunction, lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Precondition(format!("λ must lie in (0, 1), got {lambda}")));
    }
    let m = f.norm_budget();
    if (f.norm_estimate() - (1.0 - lambda) * m).abs() > 1e-9 * m.max(1.0) {
        return Err(Error::Precondition(format!(
            "instance norm {} is not (1 − λ)M = {}",
            f.norm_estimate(),
            (1.0 - lambda) * m
        )));
    }
    Ok(())
}

/// Upper bound `⌈log₂(2M·k(0,0)/Δ)⌉` on the last nonempty annulus.
pub fn annulus_index_bound(norm_bound: f64, delta: f64) -> usize {
    (2.0 * norm_bound / delta).log2().ceil().max(0.0) as usize
}

fn annular_sum(
    kind: ComplexityKind,
    grid: &GapGrid,
    delta: f64,
    radius: impl Fn(usize) -> f64,
    k_bound: usize,
    parameters: Vec<(String, f64)>,
) -> Result<ComplexityReport> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("Δ must be positive, got {delta}")));
    }
    let max_gap = grid.max_gap();
    let mut rows = Vec::new();
    let mut k = 0usize;
    while k <= k_bound && 2f64.powi(k as i32) * delta <= max_gap {
        let set = AnnulusSpec { kind: AnnulusKind::Annular, k, delta };
        let region = grid.select(|g| set.contains(g));
        let w = radius(k);
        let count = packing_of_points(&region, 2.0 * w, PackingMode::Greedy)?;
        rows.push(ComplexityRow {
            k,
            radius: w,
            count,
            term: count as f64 / (4.0 * set.scale()),
        });
        k += 1;
    }
    let total = rows.iter().map(|r| r.term).fold(0.0, |a, b| a + b);
    Ok(ComplexityReport {
        kind,
        delta,
        rows,
        tail: 0.0,
        total,
        k_cutoff: k,
        grid_per_axis: grid.grid_per_axis,
        parameters,
    })
}

/// Lower complexity `Σ_k m_k / (2^{k+2} Δ)` over the annuli
/// `Z_k = {2^kΔ ≤ f* − f < 2^{k+1}Δ}`, with `m_k` the `2w_k`-packing number
/// of `Z_k` and `w_k = (3·2^kΔ M_ν/(λM))^{1/ν}`.
pub fn lower_complexity(
    f: &RkhsFunction,
    grid: &GapGrid,
    delta: f64,
    lambda: f64,
    bump_norm: f64,
) -> Result<ComplexityReport> {
    check_norm_split(f, lambda)?;
    let nu = f.kernel().nu();
    let m = f.norm_budget();
    let radius = |k: usize| (3.0 * 2f64.powi(k as i32) * delta * bump_norm / (lambda * m)).powf(1.0 / nu);
    annular_sum(
        ComplexityKind::Lower,
        grid,
        delta,
        radius,
        annulus_index_bound(m, delta),
        vec![
            ("lambda".into(), lambda),
            ("norm_bound".into(), m),
            ("bump_norm".into(), bump_norm),
            ("nu".into(), nu),
        ],
    )
}

/// Lower complexity for a `(1 − λ)L`-Lipschitz instance:
/// `w_k = 3·2^kΔ/(λL)`.
pub fn lipschitz_complexity(
    grid: &GapGrid,
    delta: f64,
    lipschitz: f64,
    lambda: f64,
) -> Result<ComplexityReport> {
    if !(lambda > 0.0 && lambda < 1.0 && lipschitz >= 0.0) {
        return Err(Error::Precondition("need L ≥ 0 and λ in (0, 1)".into()));
    }
    let witness = grid.lipschitz_witness();
    if witness > (1.0 - lambda) * lipschitz {
        return Err(Error::Precondition(format!(
            "measured Lipschitz constant {witness:.4e} exceeds (1 − λ)L = {:.4e}",
            (1.0 - lambda) * lipschitz
        )));
    }
    let radius = |k: usize| 3.0 * 2f64.powi(k as i32) * delta / (lambda * lipschitz);
    annular_sum(
        ComplexityKind::Lipschitz,
        grid,
        delta,
        radius,
        usize::MAX,
        vec![
            ("lambda".into(), lambda),
            ("lipschitz".into(), lipschitz),
            ("lipschitz_witness".into(), witness),
        ],
    )
}

/// Constants of the upper complexity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperParams {
    pub rho: f64,
    pub c1: f64,
    pub c2: f64,
    pub xi: f64,
}

impl UpperParams {
    /// `ρ` of the tree, `c₁ = 7·L·v_inner^ξ/ρ^ξ` and `c₂ = v_outer`.
    pub fn defaults(geom: &TreeGeometry, lipschitz: f64, xi: f64) -> Self {
        Self {
            rho: geom.rho,
            c1: 7.0 * lipschitz * geom.v_inner.powf(xi) / geom.rho.powf(xi),
            c2: geom.v_outer,
            xi,
        }
    }
}

/// Upper complexity `Σ_k m̃_k / ((1/ρ)^{kξ} Δ)` over the sublevel sets
/// `Z̃_k = {f* − f ≤ c₁(1/ρ)^{kξ}Δ}`, with `m̃_k` the `2w̃_k`-packing number
/// and `w̃_k = c₂((1/ρ)^{kξ}Δ)^{1/ξ}`.
///
/// Once `Z̃_k` is the whole grid and `2w̃_k` exceeds the cube's diameter every
/// later packing number is 1 and the remaining geometric series is added in
/// closed form. A constant instance has no suboptimal point and gets an
/// empty report with total 0.
pub fn upper_complexity(grid: &GapGrid, delta: f64, params: UpperParams) -> Result<ComplexityReport> {
    let UpperParams { rho, c1, c2, xi } = params;
    let max_gap = grid.max_gap();
    let parameters = vec![("rho".into(), rho), ("c1".into(), c1), ("c2".into(), c2), ("xi".into(), xi)];
    if max_gap == 0.0 && delta > 0.0 {
        return Ok(ComplexityReport {
            kind: ComplexityKind::Upper,
            delta,
            rows: Vec::new(),
            tail: 0.0,
            total: 0.0,
            k_cutoff: 0,
            grid_per_axis: grid.grid_per_axis,
            parameters,
        });
    }
    if !(delta > 0.0 && delta < 1.0 && rho > 0.0 && rho < 1.0 && c1 > 0.0 && c2 > 0.0 && xi > 0.0) {
        return Err(Error::invalid("upper complexity needs Δ, ρ in (0, 1) and c₁, c₂, ξ > 0"));
    }
    let diameter = (grid.dim as f64).sqrt();
    let mut rows = Vec::new();
    let mut k = 0usize;
    loop {
        let set = AnnulusSpec { kind: AnnulusKind::Sublevel { c1, rho, xi }, k, delta };
        let scale = set.scale();
        let w = c2 * scale.powf(1.0 / xi);
        if c1 * scale >= max_gap && 2.0 * w > diameter {
            break;
        }
        let region = grid.select(|g| set.contains(g));
        let count = packing_of_points(&region, 2.0 * w, PackingMode::Greedy)?;
        rows.push(ComplexityRow {
            k,
            radius: w,
            count,
            term: count as f64 / scale,
        });
        k += 1;
    }
    let tail = rho.powf(k as f64 * xi) / (delta * (1.0 - rho.powf(xi)));
    let total = rows.iter().map(|r| r.term).sum::<f64>() + tail;
    Ok(ComplexityReport {
        kind: ComplexityKind::Upper,
        delta,
        rows,
        tail,
        total,
        k_cutoff: k,
        grid_per_axis: grid.grid_per_axis,
        parameters,
    })
}

/// Minimum expected number of queries in one perturbation ball:
/// `(7 ln 2 / 4)·σ²/(c²Δ²)`.
pub fn min_queries_diagnostic(delta: f64, c: f64, sigma: f64) -> f64 {
    7.0 * std::f64::consts::LN_2 / 4.0 * sigma * sigma / (c * c * delta * delta)
}

/// Largest `H` with `Σ_{h ≤ H} ρ^{−2hξ} m_h ≤ n`, or `None` if already the
/// first term exceeds `n`.
pub fn horizon_depth(m: &[usize], rho: f64, xi: f64, n: f64) -> Option<usize> {
    let mut total = 0.0;
    let mut last = None;
    for (h, &mh) in m.iter().enumerate() {
        total += rho.powf(-2.0 * h as f64 * xi) * mh as f64;
        if total > n {
            break;
        }
        last = Some(h);
    }
    last
}

/// Algorithms with encoded uniform exponents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    SupKernelUcb,
    GpUcb,
    PiGpUcb,
    Bead,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::SupKernelUcb, Algorithm::GpUcb, Algorithm::PiGpUcb, Algorithm::Bead];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SupKernelUcb => "supkernelucb",
            Algorithm::GpUcb => "gp-ucb",
            Algorithm::PiGpUcb => "pi-gp-ucb",
            Algorithm::Bead => "bead",
        }
    }

    /// Uniform exponent a₀. BEAD's uniform rate is the minimax rate.
    pub fn uniform_exponent(self, d: f64, nu: f64) -> f64 {
        match self {
            Algorithm::SupKernelUcb | Algorithm::Bead => (nu + d) / (2.0 * nu + d),
            Algorithm::GpUcb => ((nu + 1.5 * d) / (2.0 * nu + d)).min(1.0),
            Algorithm::PiGpUcb => (d * (2.0 * d + 3.0) + 2.0 * nu) / (d * (2.0 * d + 4.0) + 4.0 * nu),
        }
    }

    /// Specialized lower exponent of each algorithm, with the
    /// condition under which it holds.
    pub fn specialized_lower(self, d: f64, nu: f64, b: f64) -> (f64, bool) {
        let core = nu + d * (1.0 - nu / b);
        match self {
            Algorithm::SupKernelUcb | Algorithm::Bead => (core / (2.0 * nu + d), nu > 1.0),
            Algorithm::GpUcb => ((1.0 - d / (2.0 * nu)) * core / (2.0 * nu + d), nu > d / 2.0),
            Algorithm::PiGpUcb => ((1.0 + d / (2.0 * nu)) * core / (2.0 * nu + d * (d + 2.0)), nu > 1.0),
        }
    }
}

/// Instance-dependent lower exponent `(1 − a₀)(1 + (d/ν)(1 − ν/b))`.
pub fn general_lower_exponent(a0: f64, d: f64, nu: f64, b: f64) -> f64 {
    (1.0 - a0) * (1.0 + d / nu * (1.0 - nu / b))
}

/// Instance-dependent upper exponent of BEAD:
/// `min{(d+ν)/(d+2ν), (d(1−ξ/b)⁺ + ξ)/(d(1−ξ/b)⁺ + 2ξ)}`.
pub fn bead_upper_exponent(d: f64, nu: f64, b: f64) -> f64 {
    let xi = nu.min(1.0);
    let e = d * (1.0 - xi / b).max(0.0);
    ((d + nu) / (d + 2.0 * nu)).min((e + xi) / (e + 2.0 * xi))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentEntry {
    pub algorithm: Algorithm,
    /// Uniform exponent a₀.
    pub uniform: f64,
    /// Upper exponent on growth-`b` instances (differs from a₀ for BEAD).
    pub upper: f64,
    /// Paired lower exponent; `None` when `b ≤ ν`.
    pub lower: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentTable {
    pub d: usize,
    pub nu: f64,
    pub b: f64,
    pub xi: f64,
    pub entries: Vec<ExponentEntry>,
    pub identity_ok: bool,
}

impl ExponentTable {
    pub fn entry(&self, a: Algorithm) -> &ExponentEntry {
        self.entries.iter().find(|e| e.algorithm == a).expect("all algorithms present")
    }
}

pub fn exponents(d: usize, nu: f64, b: f64) -> Result<ExponentTable> {
    if d == 0 || !(nu > 0.0) || !(b > 0.0) {
        return Err(Error::invalid("exponents need d ≥ 1, ν > 0 and b > 0"));
    }
    let df = d as f64;
    let entries = Algorithm::ALL
        .iter()
        .map(|&a| {
            let uniform = a.uniform_exponent(df, nu);
            let upper = if a == Algorithm::Bead { bead_upper_exponent(df, nu, b) } else { uniform };
            let lower = (b > nu).then(|| general_lower_exponent(uniform, df, nu, b));
            ExponentEntry { algorithm: a, uniform, upper, lower }
        })
        .collect();
    Ok(ExponentTable {
        d,
        nu,
        b,
        xi: nu.min(1.0),
        entries,
        identity_ok: b > nu && exponent_identity_check(df, nu, b),
    })
}

/// Tolerance of [`exponent_identity_check`].
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Checks that every specialized lower exponent equals the general form
/// `(1 − a₀)(1 + (d/ν)(1 − ν/b))`. The GP-UCB form is only checked when
/// `ν > d/2`, where its a₀ is below one.
pub fn exponent_identity_check(d: f64, nu: f64, b: f64) -> bool {
    Algorithm::ALL.iter().all(|&a| {
        if a == Algorithm::GpUcb && nu <= d / 2.0 {
            return true;
        }
        let (special, _) = a.specialized_lower(d, nu, b);
        let general = general_lower_exponent(a.uniform_exponent(d, nu), d, nu, b);
        (special - general).abs() <= IDENTITY_TOLERANCE
    })
}

/// Columnar exponent table keyed by `(algorithm, d, nu, b)`.
pub fn exponent_table_text(tables: &[ExponentTable]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# bead exponents v1");
    let _ = writeln!(s, "algorithm d nu b uniform upper lower identity");
    for t in tables {
        for e in &t.entries {
            let lower = e.lower.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
            let _ = writeln!(
                s,
                "{} {} {} {} {} {} {} {}",
                e.algorithm.name(),
                t.d,
                t.nu,
                t.b,
                e.uniform,
                e.upper,
                lower,
                t.identity_ok
            );
        }
    }
    s
}
