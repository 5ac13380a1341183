use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::stats::SimStats;
use crate::error::{Error, Result};
use crate::model::{self, ExchangeDurations};
use crate::params::{Mechanism, Scenario, Traffic, UserPriorityParams, UP_EMERGENCY};

/// Superframes discarded at the start of every run.
pub const WARMUP_SUPERFRAMES: u64 = 2;

/// Shortest accepted horizon, in superframes.
pub const MIN_SUPERFRAMES: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Eap,
    Rap,
}

impl Phase {
    fn permits(self, priority: usize) -> bool {
        self == Phase::Rap || priority == UP_EMERGENCY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Success,
    Collision,
    Error,
}

#[derive(Debug)]
struct Node {
    up: usize,
    stage: usize,
    window: u32,
    counter: u32,
    locked: bool,
    has_frame: bool,
    birth: f64,
    next_arrival: f64,
    rng: ChaCha8Rng,
}

/// Energy drawn by the parts of one exchange, split by radio state.
#[derive(Debug, Clone, Copy, Default)]
struct ExchangeEnergy {
    tx: f64,
    rx: f64,
    idle: f64,
}

struct Engine<'a, W: Write> {
    sc: &'a Scenario,
    nodes: Vec<Node>,
    channel_rng: ChaCha8Rng,
    arrivals: Option<Vec<Exp<f64>>>,
    d: ExchangeDurations,
    per: f64,
    payload_bits: u64,
    own_succ: ExchangeEnergy,
    own_coll: ExchangeEnergy,
    horizon: f64,
    warmup_end: f64,
    stats: SimStats,
    trace: Option<W>,
    t: f64,
}

fn own_energy(sc: &Scenario, d: &ExchangeDurations) -> (ExchangeEnergy, ExchangeEnergy) {
    let phy = &sc.phy;
    let a = phy.prop_delay;
    match sc.mechanism {
        Mechanism::Basic => {
            let e = ExchangeEnergy {
                tx: d.t_data * phy.p_tx,
                rx: d.t_ctrl * phy.p_rx,
                idle: (phy.sifs + 2.0 * a) * phy.p_idle,
            };
            (e, e)
        }
        Mechanism::RtsCts => (
            ExchangeEnergy {
                tx: (d.t_ctrl + d.t_data) * phy.p_tx,
                rx: 2.0 * d.t_ctrl * phy.p_rx,
                idle: (3.0 * phy.sifs + 4.0 * a) * phy.p_idle,
            },
            ExchangeEnergy {
                tx: d.t_ctrl * phy.p_tx,
                rx: d.t_ctrl * phy.p_rx,
                idle: (phy.sifs + 2.0 * a) * phy.p_idle,
            },
        ),
    }
}

fn check_feasible(sc: &Scenario, d: &ExchangeDurations) -> Result<()> {
    let need = sc.phy.sifs + sc.phy.csma_slot + d.t_succ;
    for i in sc.active_ups() {
        let longest = if i == UP_EMERGENCY { sc.eap1_len.max(sc.rap1_len) } else { sc.rap1_len };
        if need > longest {
            return Err(Error::validation(format!(
                "UP{i}: no permitted phase fits one exchange ({need:.6} s needed, longest phase {longest:.6} s)"
            )));
        }
    }
    Ok(())
}

/// Window for the stage reached after a failure, derived from the previous
/// window: unchanged after an odd-numbered failure, doubled after an even one,
/// never above `cw_max`.
fn next_window(up: &UserPriorityParams, window: u32, new_stage: usize) -> u32 {
    if new_stage > up.m as usize {
        up.cw_max
    } else if new_stage % 2 == 1 {
        window
    } else {
        (window * 2).min(up.cw_max)
    }
}

impl<'a, W: Write> Engine<'a, W> {
    fn new(sc: &'a Scenario, seed: u64, horizon: f64, trace: Option<W>) -> Result<Self> {
        sc.validate()?;
        if !(horizon.is_finite() && horizon >= MIN_SUPERFRAMES as f64 * sc.superframe_len()) {
            return Err(Error::validation(format!(
                "horizon {horizon} s covers fewer than {MIN_SUPERFRAMES} superframes of {} s",
                sc.superframe_len()
            )));
        }
        let d = model::exchange_durations(&sc.phy, sc.mechanism, sc.payload_bytes);
        check_feasible(sc, &d)?;
        let per = model::packet_error_rate(sc.ber, sc.mechanism, &sc.phy, sc.payload_bytes)?;
        let arrivals = match sc.traffic {
            Traffic::Saturated => None,
            Traffic::NonSaturated => Some(
                sc.arrival_rates
                    .iter()
                    .map(|&l| Exp::new(l.max(f64::MIN_POSITIVE)).map_err(|e| Error::validation(e.to_string())))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let mut channel_rng = ChaCha8Rng::seed_from_u64(seed);
        channel_rng.set_stream(0);
        let mut nodes = Vec::new();
        for up in sc.active_ups() {
            for _ in 0..sc.node_counts[up] {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(nodes.len() as u64 + 1);
                let window = sc.up_table[up].cw_min;
                nodes.push(Node {
                    up,
                    stage: 0,
                    window,
                    counter: 0,
                    locked: true,
                    has_frame: false,
                    birth: 0.0,
                    next_arrival: f64::INFINITY,
                    rng,
                });
            }
        }
        let (own_succ, own_coll) = own_energy(sc, &d);
        let mut engine = Self {
            sc,
            nodes,
            channel_rng,
            arrivals,
            d,
            per,
            payload_bits: 8 * sc.payload_bytes as u64,
            own_succ,
            own_coll,
            horizon,
            warmup_end: WARMUP_SUPERFRAMES as f64 * sc.superframe_len(),
            stats: SimStats::default(),
            trace,
            t: 0.0,
        };
        for k in 0..engine.nodes.len() {
            match &engine.arrivals {
                None => engine.new_frame(k, 0.0),
                Some(exp) => {
                    let gap = exp[engine.nodes[k].up].sample(&mut engine.nodes[k].rng);
                    engine.nodes[k].next_arrival = gap;
                }
            }
        }
        Ok(engine)
    }

    fn measuring(&self, time: f64) -> bool {
        time >= self.warmup_end
    }

    fn emit(&mut self, node: usize, event: &str) {
        if let Some(w) = self.trace.as_mut() {
            let n = &self.nodes[node];
            // Trace output is best-effort; a failing sink must not abort the run.
            let _ = writeln!(w, "{:.9} {} UP{} {} {} {}", self.t, node, n.up, event, n.stage, n.counter);
        }
    }

    fn new_frame(&mut self, k: usize, birth: f64) {
        let up = &self.sc.up_table[self.nodes[k].up];
        let node = &mut self.nodes[k];
        node.has_frame = true;
        node.birth = birth;
        node.stage = 0;
        node.window = up.cw_min;
        node.counter = node.rng.random_range(1..=node.window);
        self.stats.events += 1;
        if birth >= self.warmup_end {
            self.stats.ups[node.up].frames_generated += 1;
        }
        self.emit(k, "arrival");
    }

    fn deliver_arrivals(&mut self, now: f64) {
        if self.arrivals.is_none() {
            return;
        }
        for k in 0..self.nodes.len() {
            let n = &self.nodes[k];
            if !n.has_frame && n.next_arrival <= now {
                let birth = n.next_arrival;
                self.new_frame(k, birth);
            }
        }
    }

    /// Frees node `k` after its frame resolved at the current time.
    fn release(&mut self, k: usize) {
        let now = self.t;
        let birth = self.nodes[k].birth;
        match &self.arrivals {
            None => self.new_frame(k, now),
            Some(exp) => {
                let exp = exp[self.nodes[k].up];
                let node = &mut self.nodes[k];
                node.has_frame = false;
                node.locked = true;
                let mut suppressed = 0;
                while node.next_arrival <= now {
                    if node.next_arrival > birth {
                        suppressed += 1;
                    }
                    node.next_arrival += exp.sample(&mut node.rng);
                }
                if now >= self.warmup_end {
                    self.stats.ups[node.up].suppressed_arrivals += suppressed;
                }
            }
        }
    }

    fn resolve(&mut self, k: usize, outcome: Outcome) {
        let counted = self.nodes[k].birth >= self.warmup_end;
        let up_idx = self.nodes[k].up;
        let up = self.sc.up_table[up_idx];
        match outcome {
            Outcome::Success => {
                if counted {
                    let c = &mut self.stats.ups[up_idx];
                    c.successes += 1;
                    c.total_access_delay += self.t - self.nodes[k].birth;
                    c.payload_bits_delivered += self.payload_bits;
                }
                self.emit(k, "success");
                self.release(k);
            }
            Outcome::Collision | Outcome::Error => {
                if counted {
                    let c = &mut self.stats.ups[up_idx];
                    match outcome {
                        Outcome::Collision => c.collisions += 1,
                        _ => c.error_transmissions += 1,
                    }
                }
                self.emit(k, if outcome == Outcome::Collision { "collision" } else { "error" });
                let new_stage = self.nodes[k].stage + 1;
                if new_stage > up.max_stage() {
                    if counted {
                        let c = &mut self.stats.ups[up_idx];
                        c.drops += 1;
                        c.total_access_delay += self.t - self.nodes[k].birth;
                    }
                    self.emit(k, "drop");
                    self.release(k);
                } else {
                    let w = next_window(&up, self.nodes[k].window, new_stage);
                    if model::cw_schedule(&up, new_stage).ok() != Some(w) {
                        self.stats.audit.window_rule += 1;
                    }
                    let node = &mut self.nodes[k];
                    node.stage = new_stage;
                    node.window = w;
                    node.counter = node.rng.random_range(1..=w);
                }
            }
        }
    }

    /// Charges every node that may contend in `phase` for `states` idle slots.
    fn charge_idle_slots(&mut self, phase: Phase, states: u64) {
        if !self.measuring(self.t) {
            return;
        }
        self.stats.channel_states += states;
        let e = self.sc.phy.csma_slot * self.sc.phy.p_idle * states as f64;
        for up in self.sc.active_ups() {
            if phase.permits(up) {
                let n = self.sc.node_counts[up] as u64;
                let c = &mut self.stats.ups[up];
                c.energy_idle += e * n as f64;
                c.node_states += states * n;
            }
        }
    }

    fn charge_exchange(&mut self, phase: Phase, tx: &[usize], outcome: Outcome, duration: f64) {
        if !self.measuring(self.t) {
            return;
        }
        self.stats.channel_states += 1;
        let own = if outcome == Outcome::Collision { self.own_coll } else { self.own_succ };
        let overhear = duration * self.sc.phy.p_idle;
        for up in self.sc.active_ups() {
            if phase.permits(up) {
                let n = self.sc.node_counts[up] as u64;
                let c = &mut self.stats.ups[up];
                c.node_states += n;
                let talkers = tx.iter().filter(|&&k| self.nodes[k].up == up).count() as u64;
                c.energy_tx += own.tx * talkers as f64;
                c.energy_rx += own.rx * talkers as f64;
                c.energy_idle += own.idle * talkers as f64 + overhear * (n - talkers) as f64;
            }
        }
    }

    /// Part of `[t, t + len)` inside the measured window `[warmup_end, horizon)`.
    fn measured(&self, len: f64) -> f64 {
        (self.t + len).min(self.horizon) - self.t.max(self.warmup_end).min(self.horizon)
    }

    fn add_gap(&mut self, len: f64, end: f64) {
        let len = len.min(end - self.t).max(0.0);
        self.stats.channel.unlock_gaps += self.measured(len).max(0.0);
        self.t += len;
    }

    /// Next time a node that may contend in `phase` receives a frame.
    fn next_permitted_arrival(&self, phase: Phase) -> f64 {
        self.nodes
            .iter()
            .filter(|n| !n.has_frame && phase.permits(n.up))
            .map(|n| n.next_arrival)
            .fold(f64::INFINITY, f64::min)
    }

    /// Runs one phase. Returns false once the horizon is reached.
    fn run_phase(&mut self, phase: Phase, end: f64) -> bool {
        let slot = self.sc.phy.csma_slot;
        let t_succ = self.d.t_succ;
        self.add_gap(self.sc.phy.sifs, end);
        let mut tx = Vec::new();
        loop {
            if self.t >= self.horizon {
                return false;
            }
            self.deliver_arrivals(self.t);
            if self.t + slot > end + 1e-12 {
                self.stats.channel.phase_residue += self.measured(end - self.t).max(0.0);
                self.t = end;
                return true;
            }
            // Counters stay frozen once the rest of the phase cannot hold a
            // full successful exchange.
            let fits = end - (self.t + slot) >= t_succ - 1e-12;
            let mut any_eligible = false;
            for k in 0..self.nodes.len() {
                let n = &self.nodes[k];
                let eligible = fits && n.has_frame && phase.permits(n.up);
                if eligible == n.locked {
                    self.nodes[k].locked = !eligible;
                    self.emit(k, if eligible { "unlock" } else { "lock" });
                }
                any_eligible |= eligible;
            }
            if !any_eligible {
                // Nothing can happen until a permitted node gets a frame.
                let next = self.next_permitted_arrival(phase);
                let room = ((end - self.t) / slot + 1e-9).floor().max(1.0);
                let wait = if next.is_finite() { ((next - self.t) / slot).ceil().max(1.0) } else { room };
                let until_horizon = ((self.horizon - self.t) / slot).ceil().max(1.0);
                let k = wait.min(room).min(until_horizon) as u64;
                self.charge_idle_slots(phase, k);
                self.stats.channel.idle_slots += self.measured(k as f64 * slot).max(0.0);
                self.t += k as f64 * slot;
                self.stats.events += k;
                continue;
            }
            tx.clear();
            for k in 0..self.nodes.len() {
                let n = &mut self.nodes[k];
                if n.locked {
                    continue;
                }
                if n.counter == 0 {
                    self.stats.audit.locked_decrements += 1;
                    continue;
                }
                n.counter -= 1;
                if n.counter == 0 {
                    tx.push(k);
                }
            }
            self.charge_idle_slots(phase, 1);
            self.stats.channel.idle_slots += self.measured(slot).max(0.0);
            self.t += slot;
            self.stats.events += 1;
            if tx.is_empty() {
                continue;
            }
            let outcome = if tx.len() > 1 {
                Outcome::Collision
            } else if self.channel_rng.random::<f64>() < self.per {
                Outcome::Error
            } else {
                Outcome::Success
            };
            let duration = match outcome {
                Outcome::Success => self.d.t_succ,
                Outcome::Collision => self.d.t_coll,
                Outcome::Error => self.d.t_error,
            };
            for &k in &tx {
                let up = self.nodes[k].up;
                if !phase.permits(up) {
                    self.stats.audit.forbidden_phase_tx += 1;
                }
                if self.t + duration > end + 1e-12 {
                    self.stats.audit.phase_overruns += 1;
                }
                if self.nodes[k].birth >= self.warmup_end {
                    self.stats.ups[up].attempts += 1;
                }
                self.emit(k, "tx");
            }
            self.stats.events += tx.len() as u64;
            self.charge_exchange(phase, &tx, outcome, duration);
            self.stats.channel.exchanges += self.measured(duration).max(0.0);
            self.t += duration;
            let batch = std::mem::take(&mut tx);
            for &k in &batch {
                self.resolve(k, outcome);
            }
            tx = batch;
            self.add_gap(self.sc.phy.sifs, end);
        }
    }

    fn run(mut self) -> SimStats {
        let sf = self.sc.superframe_len();
        let mut index = 0u64;
        loop {
            let start = index as f64 * sf;
            if start >= self.horizon {
                break;
            }
            self.t = start;
            let mut alive = true;
            if self.sc.eap1_len > 0.0 {
                alive = self.run_phase(Phase::Eap, start + self.sc.eap1_len);
            }
            if alive {
                self.t = start + self.sc.eap1_len;
                alive = self.run_phase(Phase::Rap, start + sf);
            }
            if index >= WARMUP_SUPERFRAMES && alive {
                self.stats.superframes_elapsed += 1;
            }
            if !alive {
                break;
            }
            index += 1;
        }
        self.stats.simulated_time = (self.t.min(self.horizon) - self.warmup_end).max(0.0);
        if let Some(w) = self.trace.as_mut() {
            let _ = w.flush();
        }
        self.stats
    }
}

/// Simulates `scenario` for `horizon` seconds. The first
/// [`WARMUP_SUPERFRAMES`] superframes are excluded from every counter except
/// the event count.
pub fn run_simulation(scenario: &Scenario, seed: u64, horizon: f64) -> Result<SimStats> {
    Ok(Engine::<std::io::Sink>::new(scenario, seed, horizon, None)?.run())
}

/// As [`run_simulation`], writing one line per node event to `trace`:
/// `time node UPi event stage counter`.
pub fn run_simulation_traced<W: Write>(scenario: &Scenario, seed: u64, horizon: f64, trace: W) -> Result<SimStats> {
    Ok(Engine::new(scenario, seed, horizon, Some(trace))?.run())
}
