//! Per-priority performance metrics of a converged solution.

use crate::error::{Error, Result};
use crate::model::{self, ExchangeDurations};
use crate::params::{Mechanism, PhyMacConfig, Scenario, UserPriorityParams, NUM_UPS, UP_EMERGENCY};
use crate::solver::SolutionState;

/// Metrics of one priority. `None` marks a metric that is unavailable, e.g.
/// for a priority without nodes or a simulation without resolved frames.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpMetrics {
    pub priority: usize,
    pub reliability: Option<f64>,
    pub throughput: Option<f64>,
    /// Mean energy per expected state, joules.
    pub energy: Option<f64>,
    /// Mean power, energy per state divided by the state duration (W).
    pub energy_rate: Option<f64>,
    /// Average access delay, seconds.
    pub delay: Option<f64>,
}

/// Metrics for all eight priorities plus the shared intermediates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub ups: [UpMetrics; NUM_UPS],
    /// Average number of states in EAP1 and RAP1.
    pub x_eap: f64,
    pub x_rap: f64,
    /// Per-priority waiting time for a permitted phase, seconds.
    pub t_wait: [f64; NUM_UPS],
    pub energy: [EnergyBreakdown; NUM_UPS],
}

/// Probability that a frame is delivered within `m + x + 1` attempts.
pub fn reliability(up: &UserPriorityParams, p_fail: f64) -> f64 {
    1.0 - drop_probability(up, p_fail)
}

pub fn drop_probability(up: &UserPriorityParams, p_fail: f64) -> f64 {
    p_fail.powi(up.attempts() as i32)
}

/// Mean number of states in EAP1 and RAP1, `(x_eap, x_rap)`.
pub fn phase_state_counts(solution: &SolutionState, scenario: &Scenario) -> (f64, f64) {
    let slot = scenario.phy.csma_slot;
    (
        scenario.eap_slots() as f64 / (solution.t_e_eap / slot),
        scenario.rap_slots() as f64 / (solution.t_e_rap / slot),
    )
}

/// Share of superframe time carrying payload delivered by each priority.
pub fn normalized_throughput(solution: &SolutionState, scenario: &Scenario) -> Result<[f64; NUM_UPS]> {
    let total_slots = (scenario.eap_slots() + scenario.rap_slots()) as f64;
    if total_slots <= 0.0 || scenario.rap_slots() == 0 {
        return Err(Error::validation("normalized throughput needs a RAP of at least one slot"));
    }
    let (x_eap, x_rap) = phase_state_counts(solution, scenario);
    let payload_slots = model::payload_duration(&scenario.phy, scenario.payload_bytes) / scenario.phy.csma_slot;
    let ch = &solution.channel;
    let mut s = [0.0; NUM_UPS];
    for (i, out) in s.iter_mut().enumerate() {
        let u = &solution.ups[i];
        if !u.active {
            continue;
        }
        let busy_states = if i == UP_EMERGENCY {
            ch.p_tran_eap * x_eap + ch.p_tran_rap * x_rap
        } else {
            ch.p_tran_rap * x_rap
        };
        *out = u.p_succ * busy_states * payload_slots / total_slots;
    }
    Ok(s)
}

/// Stage-wise energy of one priority per expected state, joules.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub idle: f64,
    pub succ: f64,
    pub coll: f64,
    pub error: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.idle + self.succ + self.coll + self.error
    }
}

/// Outcome probabilities that drive the energy model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OutcomeProbs {
    pub succ: f64,
    pub coll: f64,
    pub error: f64,
}

/// Energy of a node given its own outcome probabilities, the totals over
/// all priorities (for overheard exchanges), its sensed idle probability and
/// the busy probability of its permitted phases.
pub fn energy_breakdown(
    phy: &PhyMacConfig,
    mechanism: Mechanism,
    d: &ExchangeDurations,
    p_idle: f64,
    p_tran: f64,
    own: OutcomeProbs,
    all: OutcomeProbs,
) -> EnergyBreakdown {
    let t_ctrl = d.t_ctrl;
    let (own_succ, own_coll) = match mechanism {
        Mechanism::Basic => {
            let e = d.t_data * phy.p_tx + t_ctrl * phy.p_rx + phy.sifs * phy.p_idle;
            (e, e)
        }
        Mechanism::RtsCts => (
            t_ctrl * phy.p_tx + t_ctrl * phy.p_rx + d.t_data * phy.p_tx + t_ctrl * phy.p_rx + 3.0 * phy.sifs * phy.p_idle,
            t_ctrl * phy.p_tx + t_ctrl * phy.p_rx + phy.sifs * phy.p_idle,
        ),
    };
    EnergyBreakdown {
        idle: phy.csma_slot * phy.p_idle * p_idle,
        succ: own_succ * p_tran * own.succ + d.t_succ * phy.p_idle * p_tran * (all.succ - own.succ),
        coll: own_coll * p_tran * own.coll + d.t_coll * phy.p_idle * p_tran * (all.coll - own.coll),
        error: own_succ * p_tran * own.error + d.t_succ * phy.p_idle * p_tran * (all.error - own.error),
    }
}

/// Energy per expected state for every active priority.
pub fn energy_consumption(solution: &SolutionState, scenario: &Scenario) -> [EnergyBreakdown; NUM_UPS] {
    let mut all = OutcomeProbs::default();
    for u in solution.ups.iter().filter(|u| u.active) {
        all.succ += u.p_succ;
        all.coll += u.p_coll;
        all.error += u.p_error;
    }
    let ch = &solution.channel;
    let (w_eap, w_rap) = solution.weights;
    let mut out = [EnergyBreakdown::default(); NUM_UPS];
    for (i, e) in out.iter_mut().enumerate() {
        let u = &solution.ups[i];
        if !u.active {
            continue;
        }
        let p_tran = if i == UP_EMERGENCY { w_eap * ch.p_tran_eap + w_rap * ch.p_tran_rap } else { ch.p_tran_rap };
        let own = OutcomeProbs { succ: u.p_succ, coll: u.p_coll, error: u.p_error };
        *e = energy_breakdown(&scenario.phy, scenario.mechanism, &solution.durations, u.p_idle, p_tran, own, all);
    }
    out
}

/// Time a newly generated frame waits for a permitted phase: half of EAP1
/// for priorities barred from it, nothing for UP7.
pub fn waiting_time(priority: usize, eap1_len: f64) -> f64 {
    if priority == UP_EMERGENCY {
        0.0
    } else {
        eap1_len / 2.0
    }
}

/// Mean access delay: waiting time plus the backoff time accumulated over the
/// stages a frame visits before success or drop.
pub fn access_delay(up: &UserPriorityParams, p_fail: f64, t_e: f64, t_wait: f64) -> f64 {
    let mut delay = t_wait;
    let mut cumulative = 0.0;
    let mut pow = 1.0;
    for w in model::windows(up) {
        cumulative += (w as f64 + 1.0) / 2.0 * t_e;
        delay += pow * (1.0 - p_fail) * cumulative;
        pow *= p_fail;
    }
    // After the last stage `pow` is p_fail^(m+x+1): the drop path.
    delay + pow * cumulative
}

pub fn average_access_delay(solution: &SolutionState, scenario: &Scenario) -> [f64; NUM_UPS] {
    let mut d = [0.0; NUM_UPS];
    for (i, out) in d.iter_mut().enumerate() {
        let u = &solution.ups[i];
        if u.active {
            *out = access_delay(&scenario.up_table[i], u.p_fail, u.t_e, waiting_time(i, scenario.eap1_len));
        }
    }
    d
}

/// All four metrics for every active priority.
pub fn evaluate(solution: &SolutionState, scenario: &Scenario) -> Result<MetricsReport> {
    if !solution.converged {
        return Err(Error::StaleState);
    }
    let throughput = normalized_throughput(solution, scenario)?;
    let energy = energy_consumption(solution, scenario);
    let delay = average_access_delay(solution, scenario);
    let (x_eap, x_rap) = phase_state_counts(solution, scenario);
    let mut report = MetricsReport { x_eap, x_rap, energy, ..Default::default() };
    for i in 0..NUM_UPS {
        report.t_wait[i] = waiting_time(i, scenario.eap1_len);
        let u = &solution.ups[i];
        report.ups[i].priority = i;
        if !u.active {
            continue;
        }
        let e = energy[i].total();
        report.ups[i] = UpMetrics {
            priority: i,
            reliability: Some(reliability(&scenario.up_table[i], u.p_fail)),
            throughput: Some(throughput[i]),
            energy: Some(e),
            energy_rate: Some(e / u.t_e),
            delay: Some(delay[i]),
        };
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DEFAULT_UP_TABLE;
    use crate::solver::solve_fixed_point;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn reliability_examples() {
        let up = DEFAULT_UP_TABLE[3];
        assert_eq!(reliability(&up, 0.0), 1.0);
        assert_eq!(reliability(&up, 1.0), 0.0);
        assert_eq!(reliability(&up, 0.5), 0.99609375);
    }

    #[test]
    fn energy_idle_only() {
        let phy = PhyMacConfig::default();
        let d = model::exchange_durations(&phy, Mechanism::RtsCts, 100);
        let e = energy_breakdown(&phy, Mechanism::RtsCts, &d, 1.0, 0.0, OutcomeProbs::default(), OutcomeProbs::default());
        assert_relative_eq!(e.total(), 0.625e-9, max_relative = 1e-12);

        let silent = PhyMacConfig { p_tx: 0.0, p_rx: 0.0, p_idle: 0.0, ..phy };
        let busy = OutcomeProbs { succ: 0.3, coll: 0.5, error: 0.2 };
        let e = energy_breakdown(&silent, Mechanism::Basic, &d, 0.7, 0.4, busy, busy);
        assert_eq!(e.total(), 0.0);
    }

    #[test]
    fn energy_own_terms_by_mechanism() {
        let phy = PhyMacConfig::default();
        let own = OutcomeProbs { succ: 1.0, coll: 0.0, error: 0.0 };
        let d = model::exchange_durations(&phy, Mechanism::Basic, 100);
        let e = energy_breakdown(&phy, Mechanism::Basic, &d, 0.0, 1.0, own, own);
        let expect = d.t_data * 27e-3 + d.t_ctrl * 1.8e-3 + 75e-6 * 5e-6;
        assert_relative_eq!(e.succ, expect, max_relative = 1e-12);

        let d = model::exchange_durations(&phy, Mechanism::RtsCts, 100);
        let own = OutcomeProbs { succ: 0.0, coll: 1.0, error: 0.0 };
        let e = energy_breakdown(&phy, Mechanism::RtsCts, &d, 0.0, 1.0, own, own);
        let expect = d.t_ctrl * 27e-3 + d.t_ctrl * 1.8e-3 + 75e-6 * 5e-6;
        assert_relative_eq!(e.coll, expect, max_relative = 1e-12);
    }

    #[test]
    fn delay_examples() {
        let up3 = DEFAULT_UP_TABLE[3];
        assert_relative_eq!(access_delay(&up3, 0.4, 0.0, 0.05), 0.05);
        let up7 = DEFAULT_UP_TABLE[7];
        assert_relative_eq!(access_delay(&up7, 0.0, 2e-3, 0.0), 2e-3);
        let full: f64 = model::windows(&up3).iter().map(|&w| (w as f64 + 1.0) / 2.0).sum();
        assert_relative_eq!(access_delay(&up3, 1.0, 1e-3, 0.05), 0.05 + full * 1e-3, max_relative = 1e-12);
        assert_eq!(waiting_time(7, 0.1), 0.0);
        assert_eq!(waiting_time(0, 0.1), 0.05);
    }

    #[test]
    fn throughput_zero_cases() {
        let s = Scenario { payload_bytes: 0, ..Scenario::default() };
        let sol = solve_fixed_point(&s).unwrap();
        assert!(normalized_throughput(&sol, &s).unwrap().iter().all(|&v| v == 0.0));

        let s = Scenario::default();
        let mut sol = solve_fixed_point(&s).unwrap();
        for u in sol.ups.iter_mut() {
            u.p_succ = 0.0;
        }
        assert!(normalized_throughput(&sol, &s).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn report_on_base_scenario() {
        let s = Scenario::default();
        let sol = solve_fixed_point(&s).unwrap();
        let r = evaluate(&sol, &s).unwrap();
        let total: f64 = r.ups.iter().map(|u| u.throughput.unwrap()).sum();
        assert!(total <= 1.0);
        for (i, u) in r.ups.iter().enumerate() {
            let rel = u.reliability.unwrap();
            assert_eq!(rel, 1.0 - sol.ups[i].p_fail.powi(8));
            assert!(u.energy.unwrap() >= 0.0 && u.delay.unwrap() >= 0.0);
        }
        assert_eq!(r.t_wait[7], 0.0);
        assert!(r.t_wait[..7].iter().all(|&t| t == 0.05));
    }

    #[test]
    fn throughput_linear_in_payload_slots() {
        // Same fixed point, two payload sizes: only the payload factor changes.
        let s = Scenario::default();
        let sol = solve_fixed_point(&s).unwrap();
        let a = normalized_throughput(&sol, &s).unwrap();
        let s2 = Scenario { payload_bytes: 300, ..s.clone() };
        let b = normalized_throughput(&sol, &s2).unwrap();
        for i in 0..NUM_UPS {
            assert_relative_eq!(b[i], 3.0 * a[i], max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn reliability_decreasing(i in 0usize..8, p in 0.001f64..0.998, dp in 0.0005f64..0.001) {
            let up = DEFAULT_UP_TABLE[i];
            prop_assert!(reliability(&up, p + dp) <= reliability(&up, p));
            prop_assert!(drop_probability(&up, p + dp) > drop_probability(&up, p));
        }

        #[test]
        fn delay_nondecreasing(i in 0usize..8, p in 0.0f64..0.99, dp in 0.0f64..0.01, t in 1e-4f64..1e-2, dt in 0.0f64..1e-3) {
            let up = DEFAULT_UP_TABLE[i];
            let base = access_delay(&up, p, t, 0.05);
            prop_assert!(access_delay(&up, p + dp, t, 0.05) >= base - 1e-15);
            prop_assert!(access_delay(&up, p, t + dt, 0.05) >= base - 1e-15);
        }

        #[test]
        fn metrics_well_conditioned(i in 0usize..8, p in 0.01f64..0.99, t in 1e-4f64..1e-2) {
            let up = DEFAULT_UP_TABLE[i];
            let eps = 1e-12;
            let r0 = reliability(&up, p);
            let r1 = reliability(&up, p + eps);
            prop_assert!((r1 - r0).abs() / r0.abs() < 1e-6);
            let d0 = access_delay(&up, p, t, 0.05);
            let d1 = access_delay(&up, p + eps, t, 0.05);
            prop_assert!((d1 - d0).abs() / d0 < 1e-6);
        }
    }
}
