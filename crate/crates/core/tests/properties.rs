//! Randomized properties of the geometry, posterior, packing and trace
//! formats.

use proptest::prelude::*;

use bead::complexity::{packing_of_points, PackingMode};
use bead::gp::{compute_posterior, BetaMode, BetaParams};
use bead::kernel::{distance, KernelSpec};
use bead::trace::RegretTrace;
use bead::tree::{cell_region, locate, TreeGeometry};

proptest! {
    #[test]
    fn located_cell_contains_point(d in 1usize..4, depth in 0u32..20, x in prop::collection::vec(0.0f64..1.0, 3)) {
        let g = TreeGeometry::new(d).unwrap();
        let x = &x[..d];
        let id = locate(&g, x, depth).unwrap();
        let b = cell_region(&g, id).unwrap();
        prop_assert!(b.contains(x));
        let c = b.center();
        prop_assert!(distance(&c, x) <= g.outer_radius(depth) + 1e-12);
    }

    #[test]
    fn posterior_sd_shrinks_with_evidence(nu in prop::sample::select(vec![0.5, 1.5, 2.5]), s in 1usize..20, tau in 0.05f64..2.0) {
        let k = KernelSpec::matern(nu, 0.4, 1).unwrap();
        let pts = vec![vec![0.2], vec![0.5], vec![0.8]];
        let beta = BetaParams::new(BetaMode::LemmaConcentration, 100, 0.1);
        let few = compute_posterior(&k, &pts, &vec![vec![0.5]; s], &vec![0.0; s], tau, &beta).unwrap();
        let more = compute_posterior(&k, &pts, &vec![vec![0.5]; s + 1], &vec![0.0; s + 1], tau, &beta).unwrap();
        for i in 0..3 {
            prop_assert!(more.sigma[i] <= few.sigma[i] + 1e-12);
            prop_assert!(few.sigma[i] <= tau.powf(-0.5) + 1e-12);
        }
    }

    #[test]
    fn greedy_packing_is_half_optimal_on_a_line(xs in prop::collection::vec(0.0f64..1.0, 1..10), sep in 0.05f64..0.7) {
        let pts: Vec<Vec<f64>> = xs.into_iter().map(|x| vec![x]).collect();
        let greedy = packing_of_points(&pts, sep, PackingMode::Greedy).unwrap();
        let exact = packing_of_points(&pts, sep, PackingMode::BruteForce).unwrap();
        prop_assert!(greedy >= 1 && greedy <= exact && 2 * greedy >= exact);
    }

    /// In the plane at most five points with mutual distance ≥ sep lie within
    /// sep of one point.
    #[test]
    fn greedy_packing_is_fifth_optimal_in_the_plane(pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 1..10), sep in 0.05f64..0.7) {
        let greedy = packing_of_points(&pts, sep, PackingMode::Greedy).unwrap();
        let exact = packing_of_points(&pts, sep, PackingMode::BruteForce).unwrap();
        prop_assert!(greedy >= 1 && greedy <= exact && 5 * greedy >= exact);
    }

    #[test]
    fn trace_text_round_trips(rows in prop::collection::vec((0.0f64..1.0, -2.0f64..2.0, 0.0f64..1.0, 0u32..30, 0usize..100), 0..40)) {
        let mut t = RegretTrace::new("random", 1);
        for (x, y, r, h, a) in rows {
            t.push(vec![x], y, r, h, a);
        }
        let back = RegretTrace::parse(&t.to_text()).unwrap();
        prop_assert_eq!(back, t);
    }
}

#[test]
fn greedy_can_be_below_half_in_the_plane() {
    let pts = vec![vec![0.41, 0.73], vec![0.0, 0.88], vec![0.2, 0.3], vec![0.88, 0.81]];
    let greedy = packing_of_points(&pts, 0.55, PackingMode::Greedy).unwrap();
    let exact = packing_of_points(&pts, 0.55, PackingMode::BruteForce).unwrap();
    assert_eq!((greedy, exact), (1, 3));
}
