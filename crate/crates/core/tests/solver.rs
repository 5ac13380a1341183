use wban_core::solver::{residual, solve_with, SolverOptions};
use wban_core::{solve_fixed_point, Mechanism, Scenario, Traffic, NUM_UPS};

#[test]
fn saturated_symmetric_network_orders_tau_by_priority() {
    for mechanism in [Mechanism::Basic, Mechanism::RtsCts] {
        let sc = Scenario { mechanism, ..Scenario::default() };
        let sol = solve_fixed_point(&sc).unwrap();
        let tau: Vec<f64> = sol.ups.iter().map(|u| u.tau).collect();
        assert!(tau.windows(2).all(|w| w[1] >= w[0]), "{mechanism}: {tau:?}");
    }
}

// Collision probability is one minus the node's share of busy slots, so a
// second UP7 node can nudge UP7's own value down under light load.
#[test]
fn collision_probability_grows_with_node_count() {
    for traffic in [Traffic::Saturated, Traffic::NonSaturated] {
        let mut last = [0.0; NUM_UPS];
        for n in 1..=8 {
            let sc = Scenario { traffic, ..Scenario::default() }.with_nodes_per_up(n);
            let sol = solve_fixed_point(&sc).unwrap();
            for (up, prev) in last.iter_mut().enumerate() {
                let p = sol.ups[up].p_coll;
                if traffic == Traffic::Saturated || up < 7 {
                    assert!(p > *prev, "{traffic} n={n} UP{up}: {p} <= {prev}");
                } else {
                    assert!(p > *prev - 1e-3, "{traffic} n={n} UP{up}: {p} << {prev}");
                }
                *prev = p;
            }
        }
    }
}

#[test]
fn fixed_point_does_not_depend_on_the_starting_point() {
    let sc = Scenario { traffic: Traffic::NonSaturated, eap1_len: 0.1, ..Scenario::default() }.with_arrival_rate(3.0);
    let reference = solve_fixed_point(&sc).unwrap();
    for tau_init in [1e-4, 0.05, 0.5, 0.95] {
        let sol = solve_with(&sc, &SolverOptions { tau_init, ..SolverOptions::default() }).unwrap();
        for (a, b) in sol.ups.iter().zip(&reference.ups) {
            assert!((a.tau - b.tau).abs() < 1e-8, "tau_init {tau_init}");
            assert!((a.rho - b.rho).abs() < 1e-8, "tau_init {tau_init}");
        }
    }
}

#[test]
fn reported_residual_matches_a_fresh_evaluation() {
    let sc = Scenario::default();
    let sol = solve_fixed_point(&sc).unwrap();
    let r = residual(&sc, &sol).unwrap();
    assert!(r < 1e-9, "{r}");
}

#[test]
fn lower_priorities_fail_more_often() {
    let sol = solve_fixed_point(&Scenario::default()).unwrap();
    let p_fail: Vec<f64> = sol.ups.iter().map(|u| u.p_fail).collect();
    assert!(p_fail[..7].windows(2).all(|w| w[0] >= w[1]), "{p_fail:?}");
}
