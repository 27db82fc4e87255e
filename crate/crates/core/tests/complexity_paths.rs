//! Recomputes the lower complexity of a single-section instance along a
//! separate path from raw function values.

use bead::complexity::{lower_complexity, GapGrid};
use bead::instance::{estimate_bump_norm, synth_expansion};
use bead::kernel::KernelSpec;

/// Greedy lexicographic packing of sorted 1-D points.
fn packing_1d(xs: &[f64], sep: f64) -> usize {
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for &x in xs {
        if x - last >= sep * (1.0 - 1e-12) {
            count += 1;
            last = x;
        }
    }
    count
}

#[test]
fn lower_complexity_matches_direct_sum() {
    let k = KernelSpec::matern(1.1, 1.0, 1).unwrap();
    let f = synth_expansion(k, 1, 1.0, 4).unwrap().with_budget_for_lambda(0.5);
    let m = f.norm_budget();
    let bump_norm = estimate_bump_norm(&k, 256).unwrap();
    let delta = 0.05;
    let grid = GapGrid::new(&f, 513).unwrap();
    let report = lower_complexity(&f, &grid, delta, 0.5, bump_norm).unwrap();

    let xs: Vec<f64> = (0..513).map(|i| i as f64 / 512.0).collect();
    let fstar = f.fmax();
    let mut total = 0.0;
    let mut counts = Vec::new();
    for kk in 0..64 {
        let lo = delta * (1u64 << kk) as f64;
        let members: Vec<f64> = xs.iter().copied().filter(|&x| {
            let g = fstar - f.eval(&[x]);
            g >= lo && g < 2.0 * lo
        }).collect();
        if members.is_empty() && lo > 2.0 * m {
            break;
        }
        let w = (3.0 * lo * bump_norm / (0.5 * m)).powf(1.0 / 1.1);
        let mk = packing_1d(&members, 2.0 * w);
        counts.push(mk);
        total += mk as f64 / (4.0 * lo);
    }
    let reported: Vec<usize> = report.rows.iter().map(|r| r.count).collect();
    assert_eq!(&counts[..reported.len()], &reported[..]);
    assert!(counts[reported.len()..].iter().all(|&c| c == 0));
    assert!((total - report.total).abs() <= 1e-12 * total.max(1.0));
    assert!(report.m0() >= 1);
}
