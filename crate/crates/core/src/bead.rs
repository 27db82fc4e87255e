//! Breadthwise exploration with adaptive discretization.
//!
//! The algorithm keeps a set of active cells of one dyadic depth. Each step it
//! computes the batch-local posterior over the active centers. If the largest
//! posterior standard deviation `U` is below the cell-scale threshold
//! `L·(v_inner ρ^h)^ξ` (and above the noise floor `1/√n`) the partition is
//! refined; otherwise the center with largest σ is queried.

use crate::error::{Error, Result};
use crate::gp::{argmax_first, ActiveSetModel, BetaMode, BetaParams, PosteriorSummary};
use crate::instance::RkhsFunction;
use crate::kernel::{KernelSpec, Point};
use crate::oracle::NoisyOracle;
use crate::trace::{RefineEvent, RegretTrace};
use crate::tree::{cell_center, CellId, TreeGeometry};

/// How the Hölder constant L is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LRule {
    /// `L = M·ln n`.
    MLogN,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeadConfig {
    /// Query budget n.
    pub budget: usize,
    pub tau: f64,
    /// RKHS norm bound M.
    pub norm_bound: f64,
    /// Sub-Gaussian noise parameter used in β.
    pub sigma: f64,
    pub beta_mode: BetaMode,
    /// Failure probability; `None` means `1/n`.
    pub delta: Option<f64>,
    pub geometry: TreeGeometry,
    pub l_rule: LRule,
}

impl BeadConfig {
    /// Defaults: `τ = 4`, `M = 1`, `σ = 0.1`, concentration-lemma β, `L = M ln n`.
    ///
    /// The per-batch evaluation cap holds whenever `β_n·τ ≥ 1`; `τ = 4` keeps
    /// that true for `σ = 0.1` and budgets from about 100 upward.
    pub fn new(budget: usize, dim: usize) -> Result<Self> {
        Ok(Self {
            budget,
            tau: 4.0,
            norm_bound: 1.0,
            sigma: 0.1,
            beta_mode: BetaMode::LemmaConcentration,
            delta: None,
            geometry: TreeGeometry::new(dim)?,
            l_rule: LRule::MLogN,
        })
    }

    pub fn lipschitz(&self) -> f64 {
        match self.l_rule {
            LRule::MLogN => self.norm_bound * (self.budget.max(1) as f64).ln(),
            LRule::Fixed(l) => l,
        }
    }

    pub fn beta_params(&self) -> BetaParams {
        BetaParams {
            mode: self.beta_mode,
            budget: self.budget,
            delta: self.delta,
            sigma: self.sigma,
        }
    }

    /// Refinement threshold `L·(v_inner ρ^h)^ξ`.
    pub fn threshold(&self, depth: u32, xi: f64) -> f64 {
        self.lipschitz() * self.geometry.inner_radius(depth).powf(xi)
    }

    /// Per-point evaluation cap within one batch:
    /// `⌈β_n² τ² / (L² v_inner^{2ξ} ρ^{2hξ})⌉ + 1`, with β_n the width at
    /// `t = n` for the batch's active-set size.
    pub fn evaluation_cap(&self, depth: u32, active: usize, xi: f64) -> f64 {
        let beta_n = self.beta_params().beta(active, self.budget);
        let thr = self.threshold(depth, xi);
        (beta_n * beta_n * self.tau * self.tau / (thr * thr)).ceil() + 1.0
    }

    fn validate(&self, kernel: &KernelSpec) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::invalid("budget must be at least 1"));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.sigma >= 0.0 && self.norm_bound > 0.0) {
            return Err(Error::invalid("sigma must be nonnegative and M positive"));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::invalid(format!("delta must lie in (0, 1), got {d}")));
            }
        }
        if let LRule::Fixed(l) = self.l_rule {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::invalid(format!("L must be nonnegative, got {l}")));
            }
        }
        if kernel.dim() != self.geometry.dim {
            return Err(Error::invalid("kernel and tree dimensions differ"));
        }
        Ok(())
    }
}

/// Active cells of one depth plus the current batch of evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionState {
    pub active: Vec<CellId>,
    pub depth: u32,
    pub centers: Vec<Point>,
    pub evidence_x: Vec<Point>,
    pub evidence_y: Vec<f64>,
    pub eval_counts: Vec<usize>,
    pub eval_sums: Vec<f64>,
}

impl PartitionState {
    pub fn root(geom: &TreeGeometry) -> Result<Self> {
        Self::from_cells(geom, vec![CellId::ROOT])
    }

    pub fn from_cells(geom: &TreeGeometry, active: Vec<CellId>) -> Result<Self> {
        let depth = active.first().map(|c| c.depth).unwrap_or(0);
        if active.iter().any(|c| c.depth != depth) {
            return Err(Error::Contract("active cells must share one depth".into()));
        }
        let centers = active
            .iter()
            .map(|&c| cell_center(geom, c))
            .collect::<Result<Vec<_>>>()?;
        let m = active.len();
        Ok(Self {
            active,
            depth,
            centers,
            evidence_x: Vec::new(),
            evidence_y: Vec::new(),
            eval_counts: vec![0; m],
            eval_sums: vec![0.0; m],
        })
    }

    pub fn batch_size(&self) -> usize {
        self.evidence_x.len()
    }

    fn record(&mut self, i: usize, y: f64) {
        self.evidence_x.push(self.centers[i].clone());
        self.evidence_y.push(y);
        self.eval_counts[i] += 1;
        self.eval_sums[i] += y;
    }
}

/// Replaces every survivor by its two children and clears the evidence.
///
/// Survivors are the cells with `μ + βσ > max(μ − βσ)`. If the strict test
/// leaves none, the cell with the largest upper bound (lowest index on ties)
/// is kept.
pub fn refine_partition(
    geom: &TreeGeometry,
    state: &PartitionState,
    posterior: &PosteriorSummary,
) -> Result<(PartitionState, usize)> {
    let m = state.active.len();
    if posterior.mu.len() != m || posterior.sigma.len() != m {
        return Err(Error::Contract("posterior does not match the active set".into()));
    }
    let lower = (0..m).map(|i| posterior.lcb(i)).fold(f64::NEG_INFINITY, f64::max);
    let mut survivors: Vec<usize> = (0..m).filter(|&i| posterior.ucb(i) > lower).collect();
    if survivors.is_empty() {
        let ucb: Vec<f64> = (0..m).map(|i| posterior.ucb(i)).collect();
        survivors.push(argmax_first(&ucb).expect("active set is nonempty"));
    }
    if state.depth + 1 > geom.h_max {
        return Err(Error::Stall(format!(
            "refinement would exceed h_max = {} ({} survivors of {m} active cells)",
            geom.h_max,
            survivors.len()
        )));
    }
    let children: Vec<CellId> = survivors.iter().flat_map(|&i| state.active[i].children()).collect();
    Ok((PartitionState::from_cells(geom, children)?, survivors.len()))
}

/// Evaluation counts of one batch against the per-point cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchDiagnostic {
    pub depth: u32,
    pub active: usize,
    pub queries: usize,
    pub max_count: usize,
    pub cap: f64,
}

impl BatchDiagnostic {
    pub fn within_cap(&self) -> bool {
        self.max_count as f64 <= self.cap
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeadRun {
    pub trace: RegretTrace,
    pub batches: Vec<BatchDiagnostic>,
    pub final_depth: u32,
    pub lipschitz: f64,
    pub xi: f64,
}

/// Runs the algorithm for exactly `config.budget` oracle queries.
pub fn run_bead(config: &BeadConfig, oracle: &mut NoisyOracle<'_>) -> Result<BeadRun> {
    let target: &RkhsFunction = oracle.target();
    let kernel = *target.kernel();
    config.validate(&kernel)?;
    let geom = config.geometry;
    let n = config.budget;
    let xi = kernel.holder_exponent();
    let noise_floor = 1.0 / (n as f64).sqrt();
    let params = config.beta_params();
    let mut trace = RegretTrace::new("bead", kernel.dim());
    let mut batches = Vec::new();

    let mut state = PartitionState::root(&geom)?;
    let mut model = ActiveSetModel::new(&kernel, state.centers.clone(), config.tau)?;
    let mut consecutive_refines = 0usize;

    let close_batch = |state: &PartitionState, batches: &mut Vec<BatchDiagnostic>| {
        if state.batch_size() > 0 {
            batches.push(BatchDiagnostic {
                depth: state.depth,
                active: state.active.len(),
                queries: state.batch_size(),
                max_count: state.eval_counts.iter().copied().max().unwrap_or(0),
                cap: config.evaluation_cap(state.depth, state.active.len(), xi),
            });
        }
    };

    while trace.len() < n {
        let (mu, sigma) = model.posterior(&state.eval_counts, &state.eval_sums)?;
        let beta = params.beta(state.active.len(), state.batch_size() + 1);
        let posterior = PosteriorSummary {
            active_points: state.centers.clone(),
            mu,
            sigma,
            beta,
            tau: config.tau,
            batch_size: state.batch_size(),
        };
        let i = posterior.argmax_sigma().expect("active set is nonempty");
        let u = posterior.sigma[i];
        if noise_floor < u && u < config.threshold(state.depth, xi) {
            consecutive_refines += 1;
            if consecutive_refines > 10 * n {
                return Err(Error::Stall(format!(
                    "{consecutive_refines} consecutive refinements at depth {} with {} active cells",
                    state.depth,
                    state.active.len()
                )));
            }
            let (next, survivors) = refine_partition(&geom, &state, &posterior)?;
            close_batch(&state, &mut batches);
            trace.refine_events.push(RefineEvent {
                query_index: trace.len(),
                old_depth: state.depth,
                survivors,
                new_active: next.active.len(),
            });
            state = next;
            model = ActiveSetModel::new(&kernel, state.centers.clone(), config.tau)?;
            continue;
        }
        consecutive_refines = 0;
        let x = state.centers[i].clone();
        let y = oracle.observe(&x);
        let regret = target.gap(&x);
        state.record(i, y);
        trace.push(x, y, regret, state.depth, state.active.len());
    }
    close_batch(&state, &mut batches);
    Ok(BeadRun {
        trace,
        batches,
        final_depth: state.depth,
        lipschitz: config.lipschitz(),
        xi,
    })
}

/// Bound `7·L·v_inner^ξ·ρ^{(h−1)ξ}` on the suboptimality of a depth-`h` query.
pub fn suboptimality_bound(config: &BeadConfig, depth: u32, xi: f64) -> f64 {
    let g = &config.geometry;
    7.0 * config.lipschitz() * g.v_inner.powf(xi) * g.rho.powf((depth as f64 - 1.0) * xi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuboptimalityReport {
    pub checked: usize,
    pub exempt: usize,
    /// Steps (1-based) whose regret exceeds the bound.
    pub violations: Vec<usize>,
}

/// Flags queries at depth `h ≥ 1` whose suboptimality exceeds
/// [`suboptimality_bound`]. Depth-0 queries are exempt.
pub fn check_suboptimality_bound(
    trace: &RegretTrace,
    instance: &RkhsFunction,
    config: &BeadConfig,
) -> SuboptimalityReport {
    let xi = instance.kernel().holder_exponent();
    let mut report = SuboptimalityReport {
        checked: 0,
        exempt: 0,
        violations: Vec::new(),
    };
    for (t, (x, &h)) in trace.queried_points.iter().zip(&trace.depths).enumerate() {
        if h == 0 {
            report.exempt += 1;
            continue;
        }
        report.checked += 1;
        if instance.gap(x) > suboptimality_bound(config, h, xi) {
            report.violations.push(t + 1);
        }
    }
    report
}

/// Checks that every batch only queried centers of its own active set:
/// between refine events all queries share one depth, and each queried point
/// is the center of a depth-`h` cell.
pub fn check_batch_purity(trace: &RegretTrace, geom: &TreeGeometry) -> Result<()> {
    let mut bounds: Vec<usize> = trace.refine_events.iter().map(|e| e.query_index).collect();
    bounds.push(trace.len());
    let mut start = 0;
    for end in bounds {
        let span = start..end;
        if let Some(&h) = trace.depths.get(start) {
            for t in span {
                if trace.depths[t] != h {
                    return Err(Error::Contract(format!("step {} spans two depths", t + 1)));
                }
                let x = &trace.queried_points[t];
                let cell = crate::tree::locate(geom, x, h)?;
                if cell_center(geom, cell)? != *x {
                    return Err(Error::Contract(format!("step {} is not a depth-{h} center", t + 1)));
                }
            }
        }
        start = end;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::synth_expansion;

    fn section(nu: f64, seed: u64) -> RkhsFunction {
        synth_expansion(KernelSpec::matern(nu, 1.0, 1).unwrap(), 1, 1.0, seed).unwrap()
    }

    #[test]
    fn single_query_budget() {
        let f = section(1.5, 1);
        let cfg = BeadConfig::new(1, 1).unwrap();
        let mut o = NoisyOracle::new(&f, 0.0, 0);
        let run = run_bead(&cfg, &mut o).unwrap();
        assert_eq!(run.trace.len(), 1);
        assert_eq!(run.trace.queried_points[0], vec![0.5]);
        assert_eq!(o.query_count(), 1);
    }

    #[test]
    fn noiseless_run_structure() {
        let f = section(1.5, 2);
        let cfg = BeadConfig::new(64, 1).unwrap();
        let mut o = NoisyOracle::new(&f, 0.0, 0);
        let run = run_bead(&cfg, &mut o).unwrap();
        let t = &run.trace;
        assert_eq!(t.len(), 64);
        t.check_invariants().unwrap();
        check_batch_purity(t, &cfg.geometry).unwrap();
        assert!(run.final_depth >= 1);
        let worst = f.fmax() - f.eval(&[0.0]).min(f.eval(&[1.0]));
        assert!(t.final_regret() < 64.0 * worst);
        assert!(run.batches.iter().all(|b| b.within_cap()), "{:?}", run.batches);
        assert!(check_suboptimality_bound(t, &f, &cfg).violations.is_empty());
    }

    #[test]
    fn deterministic_under_seed() {
        let f = section(1.5, 3);
        let cfg = BeadConfig::new(200, 1).unwrap();
        let a = run_bead(&cfg, &mut NoisyOracle::new(&f, 0.1, 9)).unwrap();
        let b = run_bead(&cfg, &mut NoisyOracle::new(&f, 0.1, 9)).unwrap();
        assert_eq!(a.trace.to_text(), b.trace.to_text());
    }

    fn summary(mu: Vec<f64>, sigma: Vec<f64>, beta: f64) -> PosteriorSummary {
        PosteriorSummary {
            active_points: vec![],
            mu,
            sigma,
            beta,
            tau: 1.0,
            batch_size: 0,
        }
    }

    #[test]
    fn refine_symmetric_survival() {
        let geom = TreeGeometry::new(1).unwrap();
        let state = PartitionState::from_cells(&geom, CellId::ROOT.children().to_vec()).unwrap();
        let (next, s) = refine_partition(&geom, &state, &summary(vec![0.0; 2], vec![1.0; 2], 1.0)).unwrap();
        assert_eq!(s, 2);
        assert_eq!(next.active.len(), 4);
        assert_eq!(next.depth, 2);
        assert!(next.active.iter().all(|c| c.depth == 2));
        assert_eq!(next.batch_size(), 0);
    }

    #[test]
    fn refine_discards_dominated_cell() {
        let geom = TreeGeometry::new(1).unwrap();
        let state = PartitionState::from_cells(&geom, CellId::ROOT.children().to_vec()).unwrap();
        let (next, s) = refine_partition(&geom, &state, &summary(vec![1.0, 0.0], vec![0.1, 0.1], 1.0)).unwrap();
        assert_eq!(s, 1);
        assert_eq!(next.active, CellId::new(1, 1).unwrap().children().to_vec());
    }

    #[test]
    fn refine_keeps_argmax_when_strict_test_is_empty() {
        let geom = TreeGeometry::new(1).unwrap();
        let state = PartitionState::from_cells(&geom, CellId::ROOT.children().to_vec()).unwrap();
        let (next, s) = refine_partition(&geom, &state, &summary(vec![0.0, 0.0], vec![0.5, 0.5], 0.0)).unwrap();
        assert_eq!(s, 1);
        assert_eq!(next.active[0], CellId::new(2, 1).unwrap());
    }

    #[test]
    fn bound_decreases_with_depth() {
        let cfg = BeadConfig::new(1024, 1).unwrap();
        let b: Vec<f64> = (1..10).map(|h| suboptimality_bound(&cfg, h, 1.0)).collect();
        assert!(b.windows(2).all(|w| w[1] < w[0]));
    }
}
