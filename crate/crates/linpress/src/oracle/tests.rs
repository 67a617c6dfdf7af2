use super::*;
use crate::potential::parse_potential;
use crate::reachability::tests::saddle_system;
use crate::reachability::trajectory;

fn saddle_q() -> ConvexPolytope {
    ConvexPolytope::box_from_bounds(&[-1.0, -2.0], &[1.0, 2.0]).unwrap()
}

fn small_k() -> ConvexPolytope {
    ConvexPolytope::box_from_bounds(&[-0.25, -0.5], &[0.25, 0.5]).unwrap()
}

fn origin_k() -> ConvexPolytope {
    crate::geometry::convex_hull(&[DVector::zeros(2)], 2).unwrap()
}

#[test]
fn admissible_zero_control_keeps_origin() {
    let sys = saddle_system();
    let cfg = OracleConfig::new(1, 3, 1, saddle_q(), origin_k());
    let cover = admissible_controls(&sys, &cfg).unwrap();
    assert_eq!(cover.k_points.len(), 1);
    assert_eq!(cover.grid.len(), 3);
    // u = 0 keeps the origin; the grid is {-1, 0, 1} and every value keeps
    // the origin inside Q at tau = 1.
    assert_eq!(cover.candidates.len(), 3);
    for c in &cover.candidates {
        assert_eq!(c.covered_points(), vec![0]);
    }
}

/// With an unstable mode and a tight confinement box, only near-cancelling
/// control sequences survive.
#[test]
fn tight_confinement_filters_controls() {
    let sys = saddle_system();
    let q = ConvexPolytope::box_from_bounds(&[-0.1, -0.1], &[0.1, 0.1]).unwrap();
    let cfg = OracleConfig::new(4, 5, 1, q, origin_k());
    let cover = admissible_controls(&sys, &cfg).unwrap();
    // From the origin the first control must satisfy |u0| <= 0.1, which on
    // the grid {-1,-0.5,0,0.5,1} forces u = 0; by induction every step does.
    assert_eq!(cover.candidates.len(), 1);
    assert!(cover.candidates[0].control_indices.iter().all(|&i| cover.grid[i].norm() == 0.0));
}

#[test]
fn k_point_outside_q_is_rejected() {
    let sys = saddle_system();
    let k = ConvexPolytope::box_from_bounds(&[-3.0, -0.5], &[3.0, 0.5]).unwrap();
    let cfg = OracleConfig::new(1, 3, 3, saddle_q(), k);
    match admissible_controls(&sys, &cfg) {
        Err(OracleError::GridPointOutsideQ { .. }) => {}
        other => panic!("expected GridPointOutsideQ, got {other:?}"),
    }
}

#[test]
fn budget_guard_triggers() {
    let sys = saddle_system();
    let mut cfg = OracleConfig::new(10, 9, 9, saddle_q(), small_k());
    cfg.budget = 1e6;
    match admissible_controls(&sys, &cfg) {
        Err(OracleError::BudgetExceeded { .. }) => {}
        other => panic!("expected BudgetExceeded, got {other:?}"),
    }
}

fn synthetic_cover(covers: &[(Vec<usize>, usize)], n_points: usize, tau: usize) -> CoverMap {
    // Build a CoverMap with fake one-dimensional controls.
    let grid = vec![DVector::from_vec(vec![0.0])];
    let k_points = (0..n_points).map(|i| DVector::from_vec(vec![i as f64])).collect();
    let candidates = covers
        .iter()
        .map(|(pts, _)| {
            let mut covered = BitSet::zeros(n_points);
            for &p in pts {
                covered.set(p);
            }
            CoverCandidate { control_indices: vec![0; tau], covered }
        })
        .collect();
    CoverMap { tau, grid, k_points, candidates }
}

#[test]
fn cover_single_candidate() {
    let cover = synthetic_cover(&[(vec![0, 1, 2], 0)], 3, 4);
    let est = min_weight_cover(&cover, &[1.0]).unwrap();
    assert_eq!(est.a_tau, 1.0);
    assert_eq!(est.rate, 0.0);
    assert_eq!(est.spanning_cardinality, 1);
    assert_eq!(est.cover_gap, 1.0);
}

#[test]
fn cover_two_disjoint_halves() {
    let e1 = 1.0f64.exp();
    let e2 = 2.0f64.exp();
    let cover = synthetic_cover(&[(vec![0, 1], 0), (vec![2, 3], 0)], 4, 2);
    let est = min_weight_cover(&cover, &[e1, e2]).unwrap();
    assert!((est.a_tau - (e1 + e2)).abs() < 1e-12);
    assert_eq!(est.spanning_cardinality, 2);
}

#[test]
fn cover_prefers_cheap_combination() {
    // One expensive cover-all candidate vs two cheap halves.
    let cover =
        synthetic_cover(&[(vec![0, 1, 2, 3], 0), (vec![0, 1], 0), (vec![2, 3], 0)], 4, 1);
    let est = min_weight_cover(&cover, &[10.0, 1.0, 1.0]).unwrap();
    assert!((est.a_tau - 2.0).abs() < 1e-12);
    assert_eq!(est.spanning_cardinality, 2);
}

#[test]
fn cover_unspannable_point_reported() {
    let cover = synthetic_cover(&[(vec![0, 1], 0)], 3, 1);
    match min_weight_cover(&cover, &[1.0]) {
        Err(OracleError::UnspannableGrid { index: 2 }) => {}
        other => panic!("expected UnspannableGrid(2), got {other:?}"),
    }
}

#[test]
fn estimate_zero_potential_counts_cardinality() {
    let sys = saddle_system();
    let cfg = OracleConfig::new(2, 3, 3, saddle_q(), small_k());
    let p = parse_potential("0", 2, 1).unwrap();
    let est = estimate_pressure(&sys, &cfg, &p).unwrap();
    assert!((est.a_tau - est.spanning_cardinality as f64).abs() < 1e-12);
    assert!((est.rate - (est.spanning_cardinality as f64).ln() / 2.0).abs() < 1e-12);
    assert_eq!(est.cover_gap, 1.0, "9 candidates stay in exact-cover mode");
}

/// Soundness: re-simulate every covered point of the chosen set.
#[test]
fn chosen_cover_passes_resimulation() {
    let sys = saddle_system();
    let cfg = OracleConfig::new(2, 3, 3, saddle_q(), small_k());
    let p = parse_potential("0", 2, 1).unwrap();
    let cover = admissible_controls(&sys, &cfg).unwrap();
    let est = estimate_pressure(&sys, &cfg, &p).unwrap();
    let q_hs = cfg.q.halfspaces().unwrap();
    let mut covered_any = vec![false; cover.k_points.len()];
    for seq in &est.chosen_set.controls {
        for (pi, point) in cover.k_points.iter().enumerate() {
            let traj = trajectory(&sys, point, seq).unwrap();
            let confined =
                traj.states[1..].iter().all(|s| q_hs.iter().all(|h| h.margin(s) >= -1e-9));
            if confined {
                covered_any[pi] = true;
            }
        }
    }
    assert!(covered_any.iter().all(|&c| c), "some K point not confined by the chosen set");
}

/// A finer control grid can only lower the exact-cover optimum.
#[test]
fn finer_grid_lowers_a_tau() {
    let sys = saddle_system();
    let p = parse_potential("u0 + 2", 2, 1).unwrap();
    let coarse = OracleConfig::new(1, 3, 3, saddle_q(), small_k());
    let fine = OracleConfig::new(1, 5, 3, saddle_q(), small_k());
    let a_coarse = estimate_pressure(&sys, &coarse, &p).unwrap().a_tau;
    let a_fine = estimate_pressure(&sys, &fine, &p).unwrap().a_tau;
    assert!(a_fine <= a_coarse + 1e-12, "finer grid raised the optimum");
}

/// Fewer K points can only lower the exact-cover optimum.
#[test]
fn smaller_k_grid_lowers_a_tau() {
    let sys = saddle_system();
    let p = parse_potential("u0 + 2", 2, 1).unwrap();
    let big = OracleConfig::new(2, 3, 3, saddle_q(), small_k());
    let small = OracleConfig::new(2, 3, 2, saddle_q(), small_k());
    let a_big = estimate_pressure(&sys, &big, &p).unwrap().a_tau;
    let a_small = estimate_pressure(&sys, &small, &p).unwrap().a_tau;
    assert!(a_small <= a_big + 1e-12);
}

#[test]
fn rate_is_finite_and_positive_weighted() {
    let sys = saddle_system();
    let cfg = OracleConfig::new(2, 3, 3, saddle_q(), small_k());
    let p = parse_potential("u0 - 3", 2, 1).unwrap();
    let est = estimate_pressure(&sys, &cfg, &p).unwrap();
    assert!(est.a_tau > 0.0);
    assert!(est.rate.is_finite());
}

/// Exact-mode constant shift: weights scale by e^{c tau}.
#[test]
fn constant_shift_exact() {
    let sys = saddle_system();
    let cfg = OracleConfig::new(2, 3, 3, saddle_q(), small_k());
    for c in [-1.0, 0.5, 3.0] {
        let f = parse_potential("u0 + 2", 2, 1).unwrap();
        let g = parse_potential(&format!("u0 + 2 + {c}"), 2, 1).unwrap();
        let rf = estimate_pressure(&sys, &cfg, &f).unwrap().rate;
        let rg = estimate_pressure(&sys, &cfg, &g).unwrap().rate;
        assert!(
            (rg - (rf + c)).abs() <= 1e-12 * (1.0 + c.abs()),
            "shift {c}: {rg} vs {}",
            rf + c
        );
    }
}

/// Total mode with a state-independent potential coincides exactly with the
/// control-only estimate.
#[test]
fn total_mode_collapses_for_state_independent_potentials() {
    let sys = saddle_system();
    let mut cfg = OracleConfig::new(2, 3, 3, saddle_q(), small_k());
    let p = parse_potential("u0^2", 2, 1).unwrap();
    let plain = estimate_pressure(&sys, &cfg, &p).unwrap();
    cfg.total_mode = true;
    let total = estimate_pressure(&sys, &cfg, &p).unwrap();
    assert_eq!(plain.a_tau, total.a_tau);
    assert_eq!(plain.spanning_cardinality, total.spanning_cardinality);
}

#[test]
fn state_dependent_needs_total_mode() {
    let sys = saddle_system();
    let cfg = OracleConfig::new(2, 3, 3, saddle_q(), small_k());
    let p = parse_potential("x0^2 + u0", 2, 1).unwrap();
    match estimate_pressure(&sys, &cfg, &p) {
        Err(OracleError::StateDependentPotential) => {}
        other => panic!("expected StateDependentPotential, got {other:?}"),
    }
    let mut cfg = cfg;
    cfg.total_mode = true;
    let est = estimate_pressure(&sys, &cfg, &p).unwrap();
    assert!(est.rate.is_finite());
}

/// Total-mode weights use the covered point minimizing the Birkhoff sum.
#[test]
fn total_mode_picks_minimizing_state() {
    let sys = saddle_system();
    let mut cfg = OracleConfig::new(2, 3, 3, saddle_q(), small_k());
    cfg.total_mode = true;
    let p = parse_potential("x0^2", 2, 1).unwrap();
    let cover = admissible_controls(&sys, &cfg).unwrap();
    let weights = candidate_weights(&sys, &cover, &p, true).unwrap();
    for (c, w) in cover.candidates.iter().zip(&weights) {
        let controls = c.controls(&cover.grid);
        let best = c
            .covered_points()
            .iter()
            .map(|&pi| {
                crate::potential::birkhoff_sum(&p, &sys, &cover.k_points[pi], &controls).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((w - best.exp()).abs() <= 1e-12 * best.exp());
    }
}

/// Stable systems have entropy zero; the estimated rates decay toward it.
#[test]
fn sweep_rates_decay_for_stable_system() {
    let a = nalgebra::DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
    let b = nalgebra::DMatrix::identity(2, 2);
    let u = ConvexPolytope::box_from_bounds(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let sys = LinearSystem::new(a, b, u).unwrap();
    let q = ConvexPolytope::box_from_bounds(&[-2.0, -2.0], &[2.0, 2.0]).unwrap();
    let k = ConvexPolytope::box_from_bounds(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let mut cfg = OracleConfig::new(1, 3, 3, q, k);
    cfg.budget = 1e9;
    let p = parse_potential("0", 2, 2).unwrap();
    let taus = [1usize, 2, 3];
    let ests = discretization_sweep(&sys, &cfg, &p, &taus).unwrap();
    let rates: Vec<f64> = ests.iter().map(|e| e.rate).collect();
    for w in rates.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "rates failed to decay: {rates:?}");
    }
}

#[test]
fn sweep_single_tau_matches_estimate() {
    let sys = saddle_system();
    let cfg = OracleConfig::new(2, 3, 3, saddle_q(), small_k());
    let p = parse_potential("abs(u0)", 2, 1).unwrap();
    let direct = estimate_pressure(&sys, &cfg, &p).unwrap();
    let swept = discretization_sweep(&sys, &cfg, &p, &[2]).unwrap();
    assert_eq!(swept.len(), 1);
    assert_eq!(swept[0].a_tau, direct.a_tau);
    assert_eq!(swept[0].spanning_cardinality, direct.spanning_cardinality);
}
