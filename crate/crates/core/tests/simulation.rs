use wban_core::sim::{self, run_replications, run_simulation, run_simulation_traced, sim_metrics, summarize};
use wban_core::{Mechanism, Scenario, Traffic, NUM_UPS};

fn only(up: usize, n: u32) -> Scenario {
    let mut node_counts = [0; NUM_UPS];
    node_counts[up] = n;
    Scenario { node_counts, ..Scenario::default() }
}

#[test]
fn lone_emergency_node_never_fails_on_clean_channel() {
    let sc = Scenario { ber: 0.0, ..only(7, 1) };
    let stats = run_simulation(&sc, 3, 20.0).unwrap();
    let c = &stats.ups[7];
    assert!(c.successes > 1000);
    assert_eq!(c.collisions, 0);
    assert_eq!(c.drops, 0);
    assert_eq!(c.attempts, c.successes);
    assert_eq!(sim_metrics(&stats, &sc)[7].reliability, Some(1.0));
}

#[test]
fn certain_bit_errors_drop_every_frame_after_all_attempts() {
    let sc = Scenario { ber: 1.0, ..only(3, 1) };
    let stats = run_simulation(&sc, 11, 20.0).unwrap();
    let c = &stats.ups[3];
    assert_eq!(c.successes, 0);
    assert!(c.drops > 10);
    let attempts_per_frame = sc.up_table[3].attempts() as u64;
    // A frame born before the horizon may still be in flight at the end.
    assert!(c.attempts >= c.drops * attempts_per_frame);
    assert!(c.attempts < (c.drops + 1) * attempts_per_frame);
    assert_eq!(sim_metrics(&stats, &sc)[3].reliability, Some(0.0));
}

#[test]
fn same_seed_gives_identical_stats() {
    let sc = Scenario::default();
    let a = run_simulation(&sc, 42, 12.0).unwrap();
    let b = run_simulation(&sc, 42, 12.0).unwrap();
    assert_eq!(a, b);
    let c = run_simulation(&sc, 43, 12.0).unwrap();
    assert_ne!(a, c);
}

#[test]
fn replications_do_not_depend_on_thread_count() {
    let sc = Scenario::default();
    let serial = run_replications(&sc, 5, 9.0, 4, 1).unwrap();
    let parallel = run_replications(&sc, 5, 9.0, 4, 4).unwrap();
    assert_eq!(serial, parallel);
    assert_ne!(serial[0], serial[1]);
}

#[test]
fn audits_stay_clean_and_channel_time_balances() {
    for mechanism in [Mechanism::Basic, Mechanism::RtsCts] {
        for traffic in [Traffic::Saturated, Traffic::NonSaturated] {
            let sc = Scenario { mechanism, traffic, eap1_len: 0.05, rap1_len: 0.2, ..Scenario::default() }
                .with_nodes_per_up(4);
            let stats = run_simulation(&sc, 9, 10.0).unwrap();
            assert_eq!(stats.audit.total(), 0, "{mechanism} {traffic}: {:?}", stats.audit);
            let diff = (stats.channel.total() - stats.simulated_time).abs();
            assert!(diff < 1e-9 * stats.simulated_time.max(1.0), "{mechanism} {traffic}: off by {diff}");
        }
    }
}

#[test]
fn frame_accounting_is_consistent() {
    let sc = Scenario { traffic: Traffic::NonSaturated, ..Scenario::default() }.with_arrival_rate(20.0);
    let stats = run_simulation(&sc, 1, 20.0).unwrap();
    for c in stats.ups.iter() {
        assert!(c.resolved() <= c.frames_generated);
        assert!(c.frames_generated - c.resolved() <= 2, "at most one frame in flight per node");
        assert_eq!(c.attempts, c.successes + c.collisions + c.error_transmissions);
    }
    assert!(stats.ups.iter().any(|c| c.suppressed_arrivals > 0));
}

#[test]
fn lower_priorities_never_transmit_outside_rap() {
    let sc = Scenario { eap1_len: 0.4, rap1_len: 0.1, ..Scenario::default() };
    let mut trace = Vec::new();
    run_simulation_traced(&sc, 2, 5.0, &mut trace).unwrap();
    let text = String::from_utf8(trace).unwrap();
    let mut tx = 0;
    for line in text.lines().filter(|l| l.contains(" tx ")) {
        let mut f = line.split_whitespace();
        let t: f64 = f.next().unwrap().parse().unwrap();
        let up = f.nth(1).unwrap();
        let offset = t % 0.5;
        if up != "UP7" {
            assert!(offset >= 0.4 - 1e-9, "{line}");
        }
        tx += 1;
    }
    assert!(tx > 100);
}

#[test]
fn basic_access_spends_more_time_colliding_in_large_networks() {
    let mk = |mechanism| Scenario { mechanism, ..Scenario::default() }.with_nodes_per_up(8);
    let coll_time = |sc: &Scenario| {
        let d = wban_core::model::exchange_durations(&sc.phy, sc.mechanism, sc.payload_bytes);
        let stats = run_simulation(sc, 4, 30.0).unwrap();
        stats.ups.iter().map(|c| c.collisions).sum::<u64>() as f64 * d.t_coll / stats.simulated_time
    };
    assert!(coll_time(&mk(Mechanism::Basic)) > coll_time(&mk(Mechanism::RtsCts)));
}

#[test]
fn summary_reports_intervals_for_active_priorities_only() {
    let sc = only(7, 2);
    let runs = run_replications(&sc, 8, 10.0, 5, 0).unwrap();
    let s = summarize(&runs, &sc);
    let r = s[7].reliability.unwrap();
    assert_eq!(r.samples, 5);
    assert!(r.half_width.is_finite() && r.half_width >= 0.0);
    assert!(s[0].reliability.is_none());
    assert!(s[0].throughput.is_none());
}

#[test]
fn warmup_is_excluded() {
    let sc = Scenario::default();
    let stats = run_simulation(&sc, 6, 9.0).unwrap();
    let expected = 9.0 - sim::WARMUP_SUPERFRAMES as f64 * sc.superframe_len();
    assert!((stats.simulated_time - expected).abs() < 1e-9);
    assert_eq!(stats.superframes_elapsed, 8);
}
