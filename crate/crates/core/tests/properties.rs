//! Cross-module invariants on the three built-in scenarios.

use std::f64::consts::PI;

use spectral_scales::cli::config::scenario_potentials;
use spectral_scales::manifolds::{center_trajectory_backward, unstable_trajectory, ManifoldOptions, SEED_HALVING_TOL};
use spectral_scales::odeflow::{AngularFlow, FlowParams, StepControl};
use spectral_scales::oracle::{oracle_count, OracleOptions};
use spectral_scales::potentials::{CompositePotential, Operator};
use spectral_scales::spectrum::{
    count_positive_eigenvalues, match_curve, uniform_grid, verify_sum_rule, CountOptions, SolverOptions, Thresholds,
};

fn scenario(id: u8, eps: f64) -> CompositePotential {
    let (v0, v1) = scenario_potentials(id).unwrap();
    CompositePotential::new(v0, v1, eps).unwrap()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn winding_counts_are_monotone_in_the_floor_and_match_the_oracle() {
    for id in 1..=3 {
        let p = scenario(id, 0.1);
        let mut previous = usize::MAX;
        for lambda in log_grid(1e-4, 3.0, 16) {
            let opts = CountOptions { eigen_floor: lambda, halvings: 0, ..CountOptions::default() };
            let m = count_positive_eigenvalues(&p, Operator::Full, &opts).unwrap().m;
            assert!(m <= previous, "scenario {id}: count rises to {m} at lambda = {lambda}");
            previous = m;
            let fd = oracle_count(&p, Operator::Full, lambda, &OracleOptions::for_small_eigenvalues(lambda)).unwrap();
            assert_eq!(m, fd.count, "scenario {id}, lambda = {lambda}");
        }
        assert_eq!(previous, 0, "nothing lies above sup V0");
    }
}

#[test]
fn branch_shift_is_exactly_pi() {
    for id in 1..=3 {
        let p = scenario(id, 0.1);
        let th = Thresholds::new(0.1, -0.45).unwrap();
        for pt in match_curve(&p, &uniform_grid(0.0, 30.0, 24), &th, &SolverOptions::default()) {
            let pt = pt.unwrap();
            for k in -3..3 {
                let d = pt.sigma_k(k + 1) - pt.sigma_k(k);
                assert!((d - PI).abs() < 1e-12, "scenario {id}, mu = {}: {d}", pt.mu);
            }
        }
    }
}

#[test]
fn section_angles_are_insensitive_to_seed_halving() {
    let ctl = StepControl::default();
    for id in 1..=3 {
        let p = scenario(id, 0.1);
        let th = Thresholds::new(0.1, -0.45).unwrap();
        for mu in [0.25, 0.75, 5.0] {
            let inner = AngularFlow::new(FlowParams::full_inner(0.01 * mu, 0.1), &p).unwrap();
            let base = ManifoldOptions::default();
            let half = ManifoldOptions { seed_offset: 0.5 * base.seed_offset, ..base };
            let a = unstable_trajectory(&inner, 0.99, &[th.sigma_eps], &base, &ctl).unwrap();
            let b = unstable_trajectory(&inner, 0.99, &[th.sigma_eps], &half, &ctl).unwrap();
            let change = (a.event_at(th.sigma_eps).unwrap().state.angle - b.event_at(th.sigma_eps).unwrap().state.angle).abs();
            assert!(change < SEED_HALVING_TOL, "scenario {id}, mu = {mu}: {change:e}");

            // Paranoid mode runs the same comparison internally on both manifolds.
            let paranoid = ManifoldOptions { paranoid: true, ..base };
            unstable_trajectory(&inner, th.sigma_eps, &[], &paranoid, &ctl).unwrap();
            let outer = AngularFlow::new(FlowParams::full_outer(mu, 0.1), &p).unwrap();
            center_trajectory_backward(&outer, th.tau_match, &[], &paranoid, &ctl).unwrap();
        }
    }
}

#[test]
fn oracle_ladder_agrees_on_every_level() {
    for id in 1..=3 {
        let p = scenario(id, 0.1);
        for op in Operator::ALL {
            let c = oracle_count(&p, op, 0.0, &OracleOptions::for_small_eigenvalues(1e-4)).unwrap();
            assert_eq!(c.ladder.len(), 3);
            assert!(c.ladder.iter().all(|&(_, n)| n == c.count), "scenario {id}, {}: {:?}", op.label(), c.ladder);
            let ns: Vec<usize> = c.ladder.iter().map(|(g, _)| g.n).collect();
            assert_eq!(ns[1], 2 * ns[0] + 1);
            assert_eq!(ns[2], 2 * ns[1] + 1);
        }
    }
}

#[test]
fn counts_are_stable_under_numerical_settings() {
    for id in 1..=3 {
        let p = scenario(id, 0.1);
        let base = CountOptions::default();
        let tight = CountOptions {
            solver: SolverOptions { step: base.solver.step.tightened(0.5), ..base.solver },
            ..base
        };
        let half_seed = CountOptions {
            solver: SolverOptions {
                manifold: ManifoldOptions { seed_offset: 0.5 * base.solver.manifold.seed_offset, ..base.solver.manifold },
                ..base.solver
            },
            ..base
        };
        let far_end = CountOptions { end_offset: 1e-7, ..base };
        for op in Operator::ALL {
            let reference = count_positive_eigenvalues(&p, op, &base).unwrap();
            assert!(reference.stable, "scenario {id}, {}: {:?}", op.label(), reference.floor_counts);
            for variant in [&tight, &half_seed, &far_end] {
                assert_eq!(count_positive_eigenvalues(&p, op, variant).unwrap().m, reference.m, "scenario {id}, {}", op.label());
            }
        }
    }
}

#[test]
fn weak_separation_regression() {
    // Scale separation is lost at ε = 0.9; frozen values of the current solver.
    let s = verify_sum_rule(&scenario(1, 0.9), &CountOptions::default()).unwrap();
    assert_eq!((s.m_v0, s.m_v1, s.m_w), (1, 2, 2));
    assert!(s.v0.stable && s.v1.stable && s.w.stable);
    let fd = oracle_count(&scenario(1, 0.9), Operator::Full, 0.0, &OracleOptions::for_small_eigenvalues(1e-3)).unwrap();
    assert_eq!(fd.count, 2);
}

#[test]
fn shallow_inner_state_needs_smaller_epsilon() {
    // V₀ of scenario 1 binds at λ ≈ 1.5e-3 only, far beyond the threshold
    // radius; its eigenvalue joins the count of W once ε ≈ 0.02.
    let p = scenario(1, 0.02);
    let s = verify_sum_rule(&p, &CountOptions::default()).unwrap();
    assert_eq!((s.m_v0, s.m_v1, s.m_w), (1, 2, 3));
    assert!(s.equal && s.w.stable);
    let fd = oracle_count(&p, Operator::Full, 0.0, &OracleOptions::for_small_eigenvalues(1e-5)).unwrap();
    assert_eq!(fd.count, 3);
}
