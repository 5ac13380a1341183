//! Coupled probability system of the per-priority Markov chains and its
//! damped fixed-point solution.
//!
//! The iterated state per active priority is `(tau, rho, p_fail, p_idle)`
//! plus the per-phase expected state times. Every other probability is a
//! closed-form function of those and is rebuilt once the iteration settles.

use crate::error::{Error, Result};
use crate::model::{self, ExchangeDurations};
use crate::params::{Scenario, Traffic, UserPriorityParams, NUM_UPS, UP_EMERGENCY};

/// Moves larger than this when clamping a probability are counted.
const CLAMP_REPORT_THRESHOLD: f64 = 1e-9;

fn clamp_prob(v: f64, clamped: &mut u32) -> f64 {
    let c = v.clamp(0.0, 1.0);
    if (c - v).abs() > CLAMP_REPORT_THRESHOLD {
        *clamped += 1;
    }
    c
}

/// Channel-level busy/idle probabilities of a CSMA slot in each phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelProbs {
    pub p_tran_eap: f64,
    pub p_tran_rap: f64,
    pub p_idle_eap: f64,
    pub p_idle_rap: f64,
}

/// Probability that at least one node transmits in a slot of each phase.
/// Priorities without nodes do not enter the products.
pub fn phase_transmission_probs(taus: &[f64; NUM_UPS], node_counts: &[u32; NUM_UPS]) -> ChannelProbs {
    // Sums of n*ln(1 - tau) keep p_tran accurate when every tau is small.
    let log_idle = |i: usize| node_counts[i] as f64 * (-taus[i]).ln_1p();
    let eap = if node_counts[UP_EMERGENCY] > 0 { log_idle(UP_EMERGENCY) } else { 0.0 };
    let rap: f64 = (0..NUM_UPS).filter(|&i| node_counts[i] > 0).map(log_idle).sum();
    ChannelProbs {
        p_tran_eap: -eap.exp_m1(),
        p_tran_rap: -rap.exp_m1(),
        p_idle_eap: eap.exp(),
        p_idle_rap: rap.exp(),
    }
}

/// Conditional outcome probabilities seen by one priority within one phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseProbs {
    /// Slot idle as sensed by a node of this priority (own transmission excluded).
    pub p_idle: f64,
    /// A busy slot is a lone transmission from this priority.
    pub p_acce: f64,
    pub p_succ: f64,
    pub p_coll: f64,
    pub p_error: f64,
}

impl PhaseProbs {
    pub fn p_fail(&self) -> f64 {
        self.p_coll + self.p_error
    }
}

/// Phase-mixed conditional probabilities of one priority.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeProbs {
    pub p_idle: f64,
    pub p_acce: f64,
    pub p_succ: f64,
    pub p_coll: f64,
    pub p_error: f64,
    pub p_fail: f64,
    pub rap: PhaseProbs,
    /// Present for the emergency priority only.
    pub eap: Option<PhaseProbs>,
    /// Values moved by more than 1e-9 when clamped to [0,1].
    pub clamped: u32,
    /// Phases where no transmission was possible and access was taken as 0.
    pub zero_tran_phases: u32,
}

/// Phase weights `(eap, rap)`, proportional to phase lengths.
pub type PhaseWeights = (f64, f64);

fn phase_probs(
    n: u32,
    tau: f64,
    others_idle: f64,
    p_tran: f64,
    per: f64,
    clamped: &mut u32,
    zero_tran: &mut u32,
) -> PhaseProbs {
    let p_idle = clamp_prob(others_idle, clamped);
    let p_acce = if p_tran > 0.0 {
        clamp_prob(n as f64 * tau * others_idle / p_tran, clamped)
    } else {
        *zero_tran += 1;
        0.0
    };
    PhaseProbs {
        p_idle,
        p_acce,
        p_succ: p_acce * (1.0 - per),
        p_coll: 1.0 - p_acce,
        p_error: p_acce * per,
    }
}

/// Conditional idle/access/success/collision/error/failure probabilities of
/// priority `up_index`, with the counter-lock factor applied to `p_idle`.
pub fn node_conditional_probs(
    up_index: usize,
    taus: &[f64; NUM_UPS],
    node_counts: &[u32; NUM_UPS],
    per: f64,
    p_lock: f64,
    weights: PhaseWeights,
) -> Result<NodeProbs> {
    let tau_i = taus[up_index];
    if tau_i >= 1.0 {
        return Err(Error::DegenerateTau { priority: up_index });
    }
    let channel = phase_transmission_probs(taus, node_counts);
    let n_i = node_counts[up_index];
    let own_dividend = |n: u32| if n == 0 { 1.0 } else { (1.0 - tau_i).powi(n as i32 - 1) };

    // Idle probability of everyone except the observing node, with the
    // node's own factor divided out exactly.
    let rap_others: f64 = (0..NUM_UPS)
        .filter(|&j| node_counts[j] > 0)
        .map(|j| {
            if j == up_index {
                own_dividend(node_counts[j])
            } else {
                (1.0 - taus[j]).powi(node_counts[j] as i32)
            }
        })
        .product();

    let mut clamped = 0;
    let mut zero_tran = 0;
    let rap = phase_probs(n_i, tau_i, rap_others, channel.p_tran_rap, per, &mut clamped, &mut zero_tran);
    let eap = if up_index == UP_EMERGENCY {
        let eap_others = own_dividend(n_i);
        Some(phase_probs(n_i, tau_i, eap_others, channel.p_tran_eap, per, &mut clamped, &mut zero_tran))
    } else {
        None
    };

    let (w_eap, w_rap) = weights;
    let mix = |f: fn(&PhaseProbs) -> f64| match &eap {
        Some(e) => w_eap * f(e) + w_rap * f(&rap),
        None => f(&rap),
    };
    let sensed_idle = mix(|p| p.p_idle);
    let p_acce = mix(|p| p.p_acce);
    let p_succ = mix(|p| p.p_succ);
    let p_coll = mix(|p| p.p_coll);
    let p_error = mix(|p| p.p_error);
    let p_fail = mix(PhaseProbs::p_fail);

    Ok(NodeProbs {
        p_idle: clamp_prob(sensed_idle * (1.0 - p_lock), &mut clamped),
        p_acce,
        p_succ,
        p_coll,
        p_error,
        p_fail: clamp_prob(p_fail, &mut clamped),
        rap,
        eap,
        clamped,
        zero_tran_phases: zero_tran,
    })
}

/// Expected duration of one chain state, per phase and per priority.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateTimes {
    pub t_e_eap: f64,
    pub t_e_rap: f64,
    pub per_up: [f64; NUM_UPS],
}

/// Expected state duration: one slot when idle, else the exchange duration
/// weighted by the outcome probabilities summed over priorities.
pub fn expected_state_time(
    channel: &ChannelProbs,
    nodes: &[Option<NodeProbs>; NUM_UPS],
    durations: &ExchangeDurations,
    csma_slot: f64,
    weights: PhaseWeights,
) -> StateTimes {
    let (mut succ, mut coll, mut err) = (0.0, 0.0, 0.0);
    for p in nodes.iter().flatten() {
        succ += p.rap.p_succ;
        coll += p.rap.p_coll;
        err += p.rap.p_error;
    }
    let t_e_rap = csma_slot * (1.0 - channel.p_tran_rap)
        + channel.p_tran_rap * (durations.t_succ * succ + durations.t_coll * coll + durations.t_error * err);

    let t_e_eap = match nodes[UP_EMERGENCY].as_ref().and_then(|p| p.eap) {
        Some(e) => {
            csma_slot * (1.0 - channel.p_tran_eap)
                + channel.p_tran_eap
                    * (durations.t_succ * e.p_succ + durations.t_coll * e.p_coll + durations.t_error * e.p_error)
        }
        None => csma_slot,
    };

    let mut per_up = [t_e_rap; NUM_UPS];
    per_up[UP_EMERGENCY] = weights.0 * t_e_eap + weights.1 * t_e_rap;
    StateTimes { t_e_eap, t_e_rap, per_up }
}

/// Probability that a node's queue holds a frame (Poisson arrivals over one state).
pub fn queue_nonempty_prob(lambda: f64, t_e: f64, traffic: Traffic) -> f64 {
    match traffic {
        Traffic::Saturated => 1.0,
        Traffic::NonSaturated => -(-lambda * t_e).exp_m1(),
    }
}

/// `sum_{j=0}^{n-1} p^j`, exact at `p = 1`.
fn geometric_sum(p: f64, n: usize) -> f64 {
    let mut acc = 0.0;
    let mut pow = 1.0;
    for _ in 0..n {
        acc += pow;
        pow *= p;
    }
    acc
}

/// Stationary probability of state `(i,0,0)` and the resulting per-slot
/// transmission probability. Returns `(b000, tau)`.
pub fn tau_from_state(up: &UserPriorityParams, p_fail: f64, p_idle: f64, rho: f64) -> Result<(f64, f64)> {
    if rho <= 0.0 {
        return Ok((0.0, 0.0));
    }
    if p_idle <= 0.0 {
        return Err(Error::BlockedChannel { priority: up.priority });
    }
    let k = up.attempts();
    let attempts = geometric_sum(p_fail, k);
    let mut backoff = 0.0;
    let mut pow = 1.0;
    for w in model::windows(up) {
        backoff += (w as f64 + 1.0) / 2.0 * pow;
        pow *= p_fail;
    }
    let b000 = 1.0 / (attempts + backoff / p_idle + (1.0 - rho) / rho);
    Ok((b000, b000 * attempts))
}

/// Per-priority part of a converged solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpSolution {
    pub priority: usize,
    pub active: bool,
    pub tau: f64,
    pub rho: f64,
    pub b000: f64,
    pub p_lock: f64,
    pub p_idle: f64,
    pub p_acce: f64,
    pub p_succ: f64,
    pub p_coll: f64,
    pub p_error: f64,
    pub p_fail: f64,
    pub rap: PhaseProbs,
    pub eap: Option<PhaseProbs>,
    pub t_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub residual: f64,
    pub final_damping: f64,
    /// Probability evaluations that needed clamping by more than 1e-9.
    pub clamp_events: u64,
    pub zero_tran_events: u64,
}

/// The converged fixed point of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionState {
    pub ups: [UpSolution; NUM_UPS],
    pub channel: ChannelProbs,
    pub t_e_eap: f64,
    pub t_e_rap: f64,
    pub per: f64,
    pub durations: ExchangeDurations,
    pub weights: PhaseWeights,
    pub converged: bool,
    pub diagnostics: SolverDiagnostics,
}

impl SolutionState {
    pub fn up(&self, i: usize) -> &UpSolution {
        &self.ups[i]
    }

    pub fn taus(&self) -> [f64; NUM_UPS] {
        self.ups.map(|u| u.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tau_init: f64,
    pub damping: f64,
    pub min_damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Iterations between oscillation checks.
    pub oscillation_window: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tau_init: 1e-2,
            damping: 0.1,
            min_damping: 1e-3,
            tolerance: 1e-10,
            max_iterations: 200_000,
            oscillation_window: 1_000,
        }
    }
}

/// Iterated variables. Times are held in slot units so the residual treats
/// every component on a comparable scale.
#[derive(Debug, Clone, Copy, PartialEq)]
struct IterState {
    tau: [f64; NUM_UPS],
    rho: [f64; NUM_UPS],
    p_fail: [f64; NUM_UPS],
    p_idle: [f64; NUM_UPS],
    t_e_eap: f64,
    t_e_rap: f64,
}

impl IterState {
    fn distance(&self, other: &IterState, active: &[usize]) -> f64 {
        let mut d = (self.t_e_eap - other.t_e_eap).abs().max((self.t_e_rap - other.t_e_rap).abs());
        for &i in active {
            d = d
                .max((self.tau[i] - other.tau[i]).abs())
                .max((self.rho[i] - other.rho[i]).abs())
                .max((self.p_fail[i] - other.p_fail[i]).abs())
                .max((self.p_idle[i] - other.p_idle[i]).abs());
        }
        d
    }

    fn blend(&mut self, target: &IterState, gamma: f64, active: &[usize]) {
        let mix = |a: &mut f64, b: f64| *a += gamma * (b - *a);
        for &i in active {
            mix(&mut self.tau[i], target.tau[i]);
            mix(&mut self.rho[i], target.rho[i]);
            mix(&mut self.p_fail[i], target.p_fail[i]);
            mix(&mut self.p_idle[i], target.p_idle[i]);
        }
        mix(&mut self.t_e_eap, target.t_e_eap);
        mix(&mut self.t_e_rap, target.t_e_rap);
    }
}

/// Scenario constants shared by every evaluation of the self-map.
struct System<'a> {
    scenario: &'a Scenario,
    active: Vec<usize>,
    per: f64,
    durations: ExchangeDurations,
    p_lock: [f64; NUM_UPS],
    weights: PhaseWeights,
}

struct Evaluation {
    next: IterState,
    channel: ChannelProbs,
    nodes: [Option<NodeProbs>; NUM_UPS],
    times: StateTimes,
    clamped: u64,
    zero_tran: u64,
}

impl<'a> System<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let per = model::packet_error_rate(scenario.ber, scenario.mechanism, &scenario.phy, scenario.payload_bytes)?;
        let durations = model::exchange_durations(&scenario.phy, scenario.mechanism, scenario.payload_bytes);
        let active: Vec<usize> = scenario.active_ups().collect();
        let mut p_lock = [0.0; NUM_UPS];
        for &i in &active {
            let up = &scenario.up_table[i];
            p_lock[i] = model::lock_probability(
                up,
                scenario.eap_slots(),
                scenario.rap_slots(),
                durations.l_succ_slots,
                model::mean_backoff(up),
            )?;
        }
        Ok(Self { scenario, active, per, durations, p_lock, weights: scenario.phase_weights() })
    }

    fn initial(&self, tau_init: f64) -> IterState {
        let mut tau = [0.0; NUM_UPS];
        let mut rho = [0.0; NUM_UPS];
        let mut p_idle = [1.0; NUM_UPS];
        for &i in &self.active {
            tau[i] = tau_init;
            rho[i] = 1.0;
            p_idle[i] = 1.0;
        }
        IterState { tau, rho, p_fail: [0.0; NUM_UPS], p_idle, t_e_eap: 1.0, t_e_rap: 1.0 }
    }

    /// One application of the self-map. All new values are computed from `z`.
    fn evaluate(&self, z: &IterState) -> Result<Evaluation> {
        let slot = self.scenario.phy.csma_slot;
        let counts = &self.scenario.node_counts;
        let channel = phase_transmission_probs(&z.tau, counts);
        let mut nodes: [Option<NodeProbs>; NUM_UPS] = [None; NUM_UPS];
        let mut clamped = 0u64;
        let mut zero_tran = 0u64;
        for &i in &self.active {
            let p = node_conditional_probs(i, &z.tau, counts, self.per, self.p_lock[i], self.weights)?;
            clamped += p.clamped as u64;
            zero_tran += p.zero_tran_phases as u64;
            nodes[i] = Some(p);
        }
        let times = expected_state_time(&channel, &nodes, &self.durations, slot, self.weights);

        let mut next = *z;
        next.t_e_eap = times.t_e_eap / slot;
        next.t_e_rap = times.t_e_rap / slot;
        let (w_eap, w_rap) = self.weights;
        for &i in &self.active {
            let up = &self.scenario.up_table[i];
            let node = nodes[i].expect("active priority evaluated");
            let t_e_slots = if i == UP_EMERGENCY { w_eap * z.t_e_eap + w_rap * z.t_e_rap } else { z.t_e_rap };
            let rho = queue_nonempty_prob(self.scenario.arrival_rates[i], t_e_slots * slot, self.scenario.traffic);
            let (_, tau) = tau_from_state(up, z.p_fail[i], z.p_idle[i], z.rho[i])?;
            let mut c = 0;
            next.tau[i] = clamp_prob(tau, &mut c);
            next.rho[i] = clamp_prob(rho, &mut c);
            next.p_fail[i] = node.p_fail;
            next.p_idle[i] = node.p_idle;
            clamped += c as u64;
        }
        Ok(Evaluation { next, channel, nodes, times, clamped, zero_tran })
    }

    fn assemble(&self, z: &IterState, eval: &Evaluation, diagnostics: SolverDiagnostics, converged: bool) -> Result<SolutionState> {
        let mut ups = [UpSolution::default(); NUM_UPS];
        for (i, u) in ups.iter_mut().enumerate() {
            u.priority = i;
        }
        for &i in &self.active {
            let up = &self.scenario.up_table[i];
            let node = eval.nodes[i].expect("active priority evaluated");
            let (b000, _) = tau_from_state(up, z.p_fail[i], z.p_idle[i], z.rho[i])?;
            ups[i] = UpSolution {
                priority: i,
                active: true,
                tau: z.tau[i],
                rho: z.rho[i],
                b000,
                p_lock: self.p_lock[i],
                p_idle: z.p_idle[i],
                p_acce: node.p_acce,
                p_succ: node.p_succ,
                p_coll: node.p_coll,
                p_error: node.p_error,
                p_fail: z.p_fail[i],
                rap: node.rap,
                eap: node.eap,
                t_e: eval.times.per_up[i],
            };
        }
        Ok(SolutionState {
            ups,
            channel: eval.channel,
            t_e_eap: eval.times.t_e_eap,
            t_e_rap: eval.times.t_e_rap,
            per: self.per,
            durations: self.durations,
            weights: self.weights,
            converged,
            diagnostics,
        })
    }
}

/// Solves the coupled system with default options.
pub fn solve_fixed_point(scenario: &Scenario) -> Result<SolutionState> {
    solve_with(scenario, &SolverOptions::default())
}

/// Damped fixed-point iteration `z <- z + gamma (F(z) - z)`. The damping is
/// halved whenever the residual fails to drop across one oscillation window.
pub fn solve_with(scenario: &Scenario, opts: &SolverOptions) -> Result<SolutionState> {
    let system = System::new(scenario)?;
    let mut z = system.initial(opts.tau_init);
    let mut gamma = opts.damping;
    let mut checkpoint = f64::INFINITY;
    let mut diag = SolverDiagnostics::default();

    for iter in 1..=opts.max_iterations {
        let eval = system.evaluate(&z)?;
        diag.clamp_events += eval.clamped;
        diag.zero_tran_events += eval.zero_tran;
        let residual = eval.next.distance(&z, &system.active);
        diag.iterations = iter;
        diag.residual = residual;
        diag.final_damping = gamma;
        if residual < opts.tolerance {
            // Rebuild derived probabilities at the accepted point itself.
            return system.assemble(&z, &eval, diag, true);
        }
        if !residual.is_finite() {
            return Err(Error::Convergence { iterations: iter, residual });
        }
        if iter % opts.oscillation_window == 0 {
            if residual >= checkpoint && gamma > opts.min_damping {
                gamma = (gamma / 2.0).max(opts.min_damping);
                log::debug!("residual stalled at {residual:e}; damping -> {gamma}");
            }
            checkpoint = residual;
        }
        z.blend(&eval.next, gamma, &system.active);
    }
    Err(Error::Convergence { iterations: diag.iterations, residual: diag.residual })
}

/// Residual of a solution under one more application of the self-map.
pub fn residual(scenario: &Scenario, solution: &SolutionState) -> Result<f64> {
    let system = System::new(scenario)?;
    let slot = scenario.phy.csma_slot;
    let mut z = system.initial(0.0);
    for &i in &system.active {
        let u = &solution.ups[i];
        z.tau[i] = u.tau;
        z.rho[i] = u.rho;
        z.p_fail[i] = u.p_fail;
        z.p_idle[i] = u.p_idle;
    }
    z.t_e_eap = solution.t_e_eap / slot;
    z.t_e_rap = solution.t_e_rap / slot;
    let eval = system.evaluate(&z)?;
    Ok(eval.next.distance(&z, &system.active))
}

/// Stationary distribution of one priority's chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    /// `stages[j][k]` is `b_{i,j,k}` for `k` in `0..=W_j`.
    pub stages: Vec<Vec<f64>>,
    pub empty: f64,
}

impl StationaryDistribution {
    pub fn total(&self) -> f64 {
        self.stages.iter().flatten().sum::<f64>() + self.empty
    }

    pub fn get(&self, stage: usize, counter: usize) -> Option<f64> {
        self.stages.get(stage).and_then(|s| s.get(counter)).copied()
    }
}

/// Rebuilds every `b_{i,j,k}` and `b_{i,empty}` from a converged solution.
pub fn stationary_distribution(up: &UserPriorityParams, solution: &SolutionState) -> Result<StationaryDistribution> {
    if !solution.converged {
        return Err(Error::StaleState);
    }
    let s = &solution.ups[up.priority];
    if !s.active || s.rho <= 0.0 {
        // Inactive or never loaded: all mass sits in the empty state.
        let stages = model::windows(up).iter().map(|&w| vec![0.0; w as usize + 1]).collect();
        return Ok(StationaryDistribution { stages, empty: 1.0 });
    }
    let (b000, _) = tau_from_state(up, s.p_fail, s.p_idle, s.rho)?;
    let mut stages = Vec::with_capacity(up.attempts());
    let mut pow = 1.0;
    for w in model::windows(up) {
        let wf = w as f64;
        let mut row = Vec::with_capacity(w as usize + 1);
        row.push(pow * b000);
        for k in 1..=w {
            row.push((wf - k as f64 + 1.0) / wf * pow / s.p_idle * b000);
        }
        stages.push(row);
        pow *= s.p_fail;
    }
    Ok(StationaryDistribution { stages, empty: (1.0 - s.rho) / s.rho * b000 })
}
