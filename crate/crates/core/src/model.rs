//! Closed-form quantities that depend only on configuration: contention
//! windows, frame airtimes, packet error rate, exchange durations and the
//! counter-lock probability.

use crate::error::{Error, Result};
use crate::params::{Mechanism, PhyMacConfig, UserPriorityParams, UP_EMERGENCY};

/// Contention window `W_{i,j}` of a priority at backoff stage `stage`.
///
/// The window starts at `cw_min`, doubles after every even-numbered failure up
/// to stage `m`, then stays at `cw_max` for the remaining `x` stages.
pub fn cw_schedule(up: &UserPriorityParams, stage: usize) -> Result<u32> {
    let max_stage = up.max_stage();
    if stage > max_stage {
        return Err(Error::StageRange { stage, max_stage });
    }
    let m = up.m as usize;
    let w = if stage == 0 {
        up.cw_min
    } else if stage <= m {
        up.cw_min << (stage / 2)
    } else {
        up.cw_max
    };
    Ok(w)
}

/// All windows `W_{i,0..=m+x}`.
pub fn windows(up: &UserPriorityParams) -> Vec<u32> {
    (0..=up.max_stage())
        .map(|j| cw_schedule(up, j).expect("stage within range"))
        .collect()
}

/// Mean backoff `C_i` in slots: the mean draw `(W_j + 1) / 2` averaged over
/// every stage.
pub fn mean_backoff(up: &UserPriorityParams) -> f64 {
    let w = windows(up);
    w.iter().map(|&wj| (wj as f64 + 1.0) / 2.0).sum::<f64>() / w.len() as f64
}

/// Data frame bits, including preamble and PHY header.
pub fn data_frame_bits(phy: &PhyMacConfig, payload_bytes: u32) -> u64 {
    phy.plcp_bits() as u64 + phy.mac_header_bits as u64 + 8 * payload_bytes as u64 + phy.fcs_bits as u64
}

/// Airtime of a data frame carrying `payload_bytes`.
pub fn data_frame_duration(phy: &PhyMacConfig, payload_bytes: u32) -> f64 {
    let psdu_bits = phy.mac_header_bits as f64 + 8.0 * payload_bytes as f64 + phy.fcs_bits as f64;
    phy.preamble_bits as f64 / phy.symbol_rate
        + phy.phy_header_bits as f64 / phy.plcp_rate
        + psdu_bits / phy.psdu_rate
}

/// Airtime of an RTS, CTS or ACK frame.
pub fn control_frame_duration(phy: &PhyMacConfig) -> f64 {
    data_frame_duration(phy, 0)
}

/// Airtime of the payload alone.
pub fn payload_duration(phy: &PhyMacConfig, payload_bytes: u32) -> f64 {
    8.0 * payload_bytes as f64 / phy.psdu_rate
}

/// Number of bits exposed to channel errors during one exchange.
pub fn exchange_bits(mechanism: Mechanism, phy: &PhyMacConfig, payload_bytes: u32) -> u64 {
    let data = data_frame_bits(phy, payload_bytes);
    let ctrl = phy.ctrl_frame_bits as u64;
    match mechanism {
        Mechanism::Basic => data + ctrl,
        Mechanism::RtsCts => 3 * ctrl + data,
    }
}

/// Probability that at least one bit of the exchange is corrupted.
pub fn packet_error_rate(ber: f64, mechanism: Mechanism, phy: &PhyMacConfig, payload_bytes: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&ber) {
        return Err(Error::ProbabilityDomain { what: "ber", value: ber });
    }
    if ber == 0.0 {
        return Ok(0.0);
    }
    let bits = exchange_bits(mechanism, phy, payload_bytes) as f64;
    // (1 - ber)^bits through log1p keeps small BER accurate.
    let survive = (bits * (-ber).ln_1p()).exp();
    Ok((1.0 - survive).clamp(0.0, 1.0))
}

/// Channel occupancy of the three exchange outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeDurations {
    pub t_data: f64,
    pub t_ctrl: f64,
    pub t_succ: f64,
    pub t_coll: f64,
    pub t_error: f64,
    /// `t_succ` rounded up to whole CSMA slots.
    pub l_succ_slots: u64,
}

pub fn exchange_durations(phy: &PhyMacConfig, mechanism: Mechanism, payload_bytes: u32) -> ExchangeDurations {
    let t_data = data_frame_duration(phy, payload_bytes);
    let t_ctrl = control_frame_duration(phy);
    let a = phy.prop_delay;
    let (t_succ, t_coll) = match mechanism {
        Mechanism::Basic => {
            let t = t_data + t_ctrl + phy.sifs + 2.0 * a;
            (t, t)
        }
        Mechanism::RtsCts => (
            2.0 * t_ctrl + t_data + t_ctrl + 3.0 * phy.sifs + 4.0 * a,
            2.0 * t_ctrl + phy.sifs + 2.0 * a,
        ),
    };
    let l_succ_slots = (t_succ / phy.csma_slot - 1e-9).ceil().max(0.0) as u64;
    ExchangeDurations { t_data, t_ctrl, t_succ, t_coll, t_error: t_succ, l_succ_slots }
}

/// Probability that the backoff counter locks in a slot because the
/// permitted phase has too little time left.
pub fn lock_probability(
    up: &UserPriorityParams,
    eap_slots: u64,
    rap_slots: u64,
    l_succ_slots: u64,
    mean_backoff: f64,
) -> Result<f64> {
    let span = if up.priority == UP_EMERGENCY {
        rap_slots as f64
    } else {
        (eap_slots + rap_slots) as f64
    };
    let denominator = span - l_succ_slots as f64 - mean_backoff;
    if denominator <= 0.0 {
        return Err(Error::InfeasiblePhase { priority: up.priority, denominator });
    }
    Ok((1.0 / denominator).clamp(0.0, 1.0))
}
