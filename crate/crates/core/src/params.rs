//! Static configuration: user-priority table, PHY/MAC attributes and scenarios.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Number of user priorities in the standard.
pub const NUM_UPS: usize = 8;

/// Largest network a hub may serve (`mMaxBANSize`).
pub const MAX_BAN_SIZE: u32 = 64;

/// Index of the highest priority, the only one admitted to EAP1.
pub const UP_EMERGENCY: usize = 7;

/// Contention-window bounds and stage limits of one user priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UserPriorityParams {
    pub priority: usize,
    pub cw_min: u32,
    pub cw_max: u32,
    /// Stages over which the window doubles every second failure.
    pub m: u32,
    /// Additional stages spent at `cw_max`.
    pub x: u32,
}

impl UserPriorityParams {
    pub const fn new(priority: usize, cw_min: u32, cw_max: u32, m: u32, x: u32) -> Self {
        Self { priority, cw_min, cw_max, m, x }
    }

    /// Highest backoff stage index, `m + x`.
    pub fn max_stage(&self) -> usize {
        (self.m + self.x) as usize
    }

    /// Number of transmission attempts before a drop, `m + x + 1`.
    pub fn attempts(&self) -> usize {
        self.max_stage() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.priority >= NUM_UPS {
            return Err(Error::validation(format!("priority {} outside 0..=7", self.priority)));
        }
        if self.cw_min == 0 {
            return Err(Error::validation(format!("UP{}: cw_min must be positive", self.priority)));
        }
        if self.cw_min > self.cw_max {
            return Err(Error::validation(format!(
                "UP{}: cw_min {} exceeds cw_max {}",
                self.priority, self.cw_min, self.cw_max
            )));
        }
        Ok(())
    }
}

/// The eight rows of the standard's user-priority table.
pub const DEFAULT_UP_TABLE: [UserPriorityParams; NUM_UPS] = [
    UserPriorityParams::new(0, 16, 64, 4, 3),
    UserPriorityParams::new(1, 16, 32, 2, 5),
    UserPriorityParams::new(2, 8, 32, 4, 3),
    UserPriorityParams::new(3, 8, 16, 2, 5),
    UserPriorityParams::new(4, 4, 16, 4, 3),
    UserPriorityParams::new(5, 4, 8, 2, 5),
    UserPriorityParams::new(6, 2, 8, 4, 3),
    UserPriorityParams::new(7, 1, 4, 2, 5),
];

/// Narrowband PHY and MAC attributes. Header and FCS sizes are in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyMacConfig {
    pub preamble_bits: u32,
    pub phy_header_bits: u32,
    pub mac_header_bits: u32,
    pub fcs_bits: u32,
    /// Total length of an RTS, CTS or ACK frame.
    pub ctrl_frame_bits: u32,
    /// Preamble symbol rate (symbols/s).
    pub symbol_rate: f64,
    /// PLCP header rate (bits/s).
    pub plcp_rate: f64,
    /// PSDU rate (bits/s).
    pub psdu_rate: f64,
    pub csma_slot: f64,
    pub sifs: f64,
    pub prop_delay: f64,
    pub p_tx: f64,
    pub p_rx: f64,
    pub p_idle: f64,
    pub retry_limit: u32,
}

impl Default for PhyMacConfig {
    fn default() -> Self {
        Self {
            preamble_bits: 90,
            phy_header_bits: 31,
            mac_header_bits: 56,
            fcs_bits: 16,
            ctrl_frame_bits: 193,
            symbol_rate: 600e3,
            plcp_rate: 91.9e3,
            psdu_rate: 971.4e3,
            csma_slot: 125e-6,
            sifs: 75e-6,
            prop_delay: 1e-6,
            p_tx: 27e-3,
            p_rx: 1.8e-3,
            p_idle: 5e-6,
            retry_limit: 7,
        }
    }
}

impl PhyMacConfig {
    /// Bits preceding the PSDU: preamble plus PHY header.
    pub fn plcp_bits(&self) -> u32 {
        self.preamble_bits + self.phy_header_bits
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("symbol_rate", self.symbol_rate),
            ("plcp_rate", self.plcp_rate),
            ("psdu_rate", self.psdu_rate),
            ("csma_slot", self.csma_slot),
            ("sifs", self.sifs),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("prop_delay", self.prop_delay),
            ("p_tx", self.p_tx),
            ("p_rx", self.p_rx),
            ("p_idle", self.p_idle),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(format!("{name} must be nonnegative, got {v}")));
            }
        }
        let sum = self.preamble_bits + self.phy_header_bits + self.mac_header_bits + self.fcs_bits;
        if sum != self.ctrl_frame_bits {
            return Err(Error::validation(format!(
                "ctrl_frame_bits {} != preamble + phy header + mac header + fcs = {}",
                self.ctrl_frame_bits, sum
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    Basic,
    RtsCts,
}

impl Mechanism {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mechanism::Basic => "basic",
            Mechanism::RtsCts => "rts-cts",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '/'], "-").as_str() {
            "basic" => Ok(Mechanism::Basic),
            "rts-cts" | "rtscts" => Ok(Mechanism::RtsCts),
            other => Err(Error::validation(format!("unknown mechanism '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Traffic {
    Saturated,
    NonSaturated,
}

impl Traffic {
    pub fn as_str(&self) -> &'static str {
        match self {
            Traffic::Saturated => "saturated",
            Traffic::NonSaturated => "non-saturated",
        }
    }
}

impl fmt::Display for Traffic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Traffic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "saturated" => Ok(Traffic::Saturated),
            "non-saturated" | "nonsaturated" | "unsaturated" => Ok(Traffic::NonSaturated),
            other => Err(Error::validation(format!("unknown traffic mode '{other}'"))),
        }
    }
}

/// One complete experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub node_counts: [u32; NUM_UPS],
    /// Poisson arrival rate per node, packets/s. Ignored when saturated.
    pub arrival_rates: [f64; NUM_UPS],
    pub ber: f64,
    pub payload_bytes: u32,
    /// EAP1 length, seconds.
    pub eap1_len: f64,
    /// RAP1 length, seconds.
    pub rap1_len: f64,
    pub mechanism: Mechanism,
    pub traffic: Traffic,
    pub phy: PhyMacConfig,
    pub up_table: [UserPriorityParams; NUM_UPS],
}

impl Default for Scenario {
    /// Sixteen nodes (two per priority), RTS/CTS, BER 2e-5, 100-byte payload,
    /// EAP1 0.1 s, RAP1 0.8 s, saturated.
    fn default() -> Self {
        Self {
            node_counts: [2; NUM_UPS],
            arrival_rates: [2.0; NUM_UPS],
            ber: 2e-5,
            payload_bytes: 100,
            eap1_len: 0.1,
            rap1_len: 0.8,
            mechanism: Mechanism::RtsCts,
            traffic: Traffic::Saturated,
            phy: PhyMacConfig::default(),
            up_table: DEFAULT_UP_TABLE,
        }
    }
}

/// Converts a duration to whole CSMA slots, tolerating float noise at exact multiples.
pub fn seconds_to_slots(len: f64, csma_slot: f64) -> u64 {
    (len / csma_slot + 1e-9).floor().max(0.0) as u64
}

impl Scenario {
    pub fn total_nodes(&self) -> u32 {
        self.node_counts.iter().sum()
    }

    /// Priorities with at least one node.
    pub fn active_ups(&self) -> impl Iterator<Item = usize> + '_ {
        (0..NUM_UPS).filter(move |&i| self.node_counts[i] > 0)
    }

    pub fn eap_slots(&self) -> u64 {
        seconds_to_slots(self.eap1_len, self.phy.csma_slot)
    }

    pub fn rap_slots(&self) -> u64 {
        seconds_to_slots(self.rap1_len, self.phy.csma_slot)
    }

    pub fn superframe_len(&self) -> f64 {
        self.eap1_len + self.rap1_len
    }

    /// Length-weights `(eap, rap)` used to mix the two phases seen by UP7.
    pub fn phase_weights(&self) -> (f64, f64) {
        let eap = self.eap_slots() as f64;
        let rap = self.rap_slots() as f64;
        let total = eap + rap;
        if total == 0.0 {
            (0.0, 1.0)
        } else {
            (eap / total, rap / total)
        }
    }

    /// Sets `n` nodes in every priority.
    pub fn with_nodes_per_up(mut self, n: u32) -> Self {
        self.node_counts = [n; NUM_UPS];
        self
    }

    pub fn with_arrival_rate(mut self, lambda: f64) -> Self {
        self.arrival_rates = [lambda; NUM_UPS];
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.phy.validate()?;
        for (i, up) in self.up_table.iter().enumerate() {
            up.validate()?;
            if up.priority != i {
                return Err(Error::validation(format!(
                    "up_table row {i} carries priority {}",
                    up.priority
                )));
            }
        }
        if self.total_nodes() > MAX_BAN_SIZE {
            return Err(Error::validation(format!(
                "total node count {} exceeds {MAX_BAN_SIZE}",
                self.total_nodes()
            )));
        }
        if !(0.0..=1.0).contains(&self.ber) {
            return Err(Error::validation(format!("ber outside [0,1]: {}", self.ber)));
        }
        if !(self.eap1_len.is_finite() && self.eap1_len >= 0.0) {
            return Err(Error::validation(format!("eap1 must be >= 0, got {}", self.eap1_len)));
        }
        if !(self.rap1_len.is_finite() && self.rap1_len > 0.0) {
            return Err(Error::validation(format!("rap1 must be > 0, got {}", self.rap1_len)));
        }
        if self.traffic == Traffic::NonSaturated {
            for (i, &l) in self.arrival_rates.iter().enumerate() {
                if !(l.is_finite() && l >= 0.0) {
                    return Err(Error::validation(format!("UP{i}: arrival rate must be >= 0, got {l}")));
                }
            }
        }
        Ok(())
    }
}
