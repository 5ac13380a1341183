use crate::params::NUM_UPS;

/// Counters of one priority, aggregated over all of its nodes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpCounters {
    pub frames_generated: u64,
    pub attempts: u64,
    pub successes: u64,
    pub collisions: u64,
    pub error_transmissions: u64,
    pub drops: u64,
    /// Arrivals discarded because the node's single-frame buffer was full.
    pub suppressed_arrivals: u64,
    /// Sum of birth-to-resolution times of resolved frames, seconds.
    pub total_access_delay: f64,
    pub energy_tx: f64,
    pub energy_rx: f64,
    pub energy_idle: f64,
    /// Node-states (idle slots plus exchanges) observed in permitted phases,
    /// summed over the priority's nodes.
    pub node_states: u64,
    pub payload_bits_delivered: u64,
}

impl UpCounters {
    pub fn resolved(&self) -> u64 {
        self.successes + self.drops
    }

    pub fn energy_total(&self) -> f64 {
        self.energy_tx + self.energy_rx + self.energy_idle
    }
}

/// How measured channel time was spent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelTime {
    pub idle_slots: f64,
    pub exchanges: f64,
    /// SIFS waits before counters unlock, after phase starts and exchanges.
    pub unlock_gaps: f64,
    /// Tail of a phase too short for another slot.
    pub phase_residue: f64,
}

impl ChannelTime {
    pub fn total(&self) -> f64 {
        self.idle_slots + self.exchanges + self.unlock_gaps + self.phase_residue
    }
}

/// Protocol-rule violations detected while simulating. All zero in a correct run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AuditCounters {
    pub forbidden_phase_tx: u64,
    pub phase_overruns: u64,
    pub locked_decrements: u64,
    pub window_rule: u64,
}

impl AuditCounters {
    pub fn total(&self) -> u64 {
        self.forbidden_phase_tx + self.phase_overruns + self.locked_decrements + self.window_rule
    }
}

/// Raw output of one replication. Only activity after the warm-up is counted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimStats {
    pub ups: [UpCounters; NUM_UPS],
    pub simulated_time: f64,
    pub superframes_elapsed: u64,
    pub channel: ChannelTime,
    /// Channel states after warm-up: idle slots plus exchanges.
    pub channel_states: u64,
    /// Slots, transmissions and arrivals processed over the whole run.
    pub events: u64,
    pub audit: AuditCounters,
}
