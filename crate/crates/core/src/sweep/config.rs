//! TOML scenario and sweep files.
//!
//! Every key is optional; anything left out keeps its default.
//!
//! ```toml
//! [scenario]
//! nodes_per_up = 2            # or node_counts = [2, 2, 2, 2, 2, 2, 2, 2]
//! arrival_rate = 2.0          # or arrival_rates = [...], packets/s per node
//! ber = 2e-5
//! payload_bytes = 100
//! eap1 = 0.1                  # seconds
//! rap1 = 0.8                  # seconds
//! mechanism = "rts-cts"       # or "basic"
//! traffic = "saturated"       # or "non-saturated"
//!
//! [phy]                       # any PhyMacConfig field
//! csma_slot = 125e-6
//!
//! [[up]]                      # override one row of the priority table
//! priority = 3
//! cw_min = 8
//!
//! [sweep]
//! parameter = "rap1"          # arrival-rate | ber | payload | rap1 | nodes | mechanism
//! values = [0.1, 0.2]         # or range = { from = 0.1, to = 0.8, step = 0.1 }
//! replications = 20
//! seed = 1
//! horizon = 60.0
//! ```

use std::path::Path;

use serde::Deserialize;

use super::spec::{SweepParameter, SweepSpec, SweepValue};
use crate::error::{Error, Result};
use crate::params::{PhyMacConfig, Scenario, NUM_UPS};

/// A parsed configuration file.
#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Scenario(Scenario),
    Sweep(SweepSpec),
}

impl Config {
    pub fn scenario(&self) -> &Scenario {
        match self {
            Config::Scenario(s) => s,
            Config::Sweep(s) => &s.base,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default)]
    phy: RawPhy,
    #[serde(default)]
    up: Vec<RawUp>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    nodes_per_up: Option<u32>,
    node_counts: Option<Vec<u32>>,
    arrival_rate: Option<f64>,
    arrival_rates: Option<Vec<f64>>,
    ber: Option<f64>,
    payload_bytes: Option<u32>,
    eap1: Option<f64>,
    rap1: Option<f64>,
    mechanism: Option<String>,
    traffic: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhy {
    preamble_bits: Option<u32>,
    phy_header_bits: Option<u32>,
    mac_header_bits: Option<u32>,
    fcs_bits: Option<u32>,
    ctrl_frame_bits: Option<u32>,
    symbol_rate: Option<f64>,
    plcp_rate: Option<f64>,
    psdu_rate: Option<f64>,
    csma_slot: Option<f64>,
    sifs: Option<f64>,
    prop_delay: Option<f64>,
    p_tx: Option<f64>,
    p_rx: Option<f64>,
    p_idle: Option<f64>,
    retry_limit: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUp {
    priority: usize,
    cw_min: Option<u32>,
    cw_max: Option<u32>,
    m: Option<u32>,
    x: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: String,
    values: Option<Vec<toml::Value>>,
    range: Option<RawRange>,
    replications: Option<u32>,
    seed: Option<u64>,
    horizon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRange {
    from: f64,
    to: f64,
    step: f64,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $src.$field { $dst.$field = v; })+
    };
}

fn build_phy(raw: RawPhy) -> PhyMacConfig {
    let mut phy = PhyMacConfig::default();
    overlay!(
        phy, raw, preamble_bits, phy_header_bits, mac_header_bits, fcs_bits, ctrl_frame_bits, symbol_rate,
        plcp_rate, psdu_rate, csma_slot, sifs, prop_delay, p_tx, p_rx, p_idle, retry_limit,
    );
    phy
}

fn fixed_len<T: Copy>(what: &str, v: Vec<T>) -> Result<[T; NUM_UPS]> {
    let n = v.len();
    v.try_into()
        .map_err(|_| Error::validation(format!("{what} needs {NUM_UPS} entries, got {n}")))
}

fn build_scenario(raw: RawConfig) -> Result<(Scenario, Option<RawSweep>)> {
    let mut sc = Scenario { phy: build_phy(raw.phy), ..Scenario::default() };
    let s = raw.scenario;
    match (s.nodes_per_up, s.node_counts) {
        (Some(_), Some(_)) => return Err(Error::validation("set nodes_per_up or node_counts, not both")),
        (Some(n), None) => sc.node_counts = [n; NUM_UPS],
        (None, Some(v)) => sc.node_counts = fixed_len("node_counts", v)?,
        (None, None) => {}
    }
    match (s.arrival_rate, s.arrival_rates) {
        (Some(_), Some(_)) => return Err(Error::validation("set arrival_rate or arrival_rates, not both")),
        (Some(l), None) => sc.arrival_rates = [l; NUM_UPS],
        (None, Some(v)) => sc.arrival_rates = fixed_len("arrival_rates", v)?,
        (None, None) => {}
    }
    if let Some(v) = s.ber {
        sc.ber = v;
    }
    if let Some(v) = s.payload_bytes {
        sc.payload_bytes = v;
    }
    if let Some(v) = s.eap1 {
        sc.eap1_len = v;
    }
    if let Some(v) = s.rap1 {
        sc.rap1_len = v;
    }
    if let Some(v) = s.mechanism {
        sc.mechanism = v.parse()?;
    }
    if let Some(v) = s.traffic {
        sc.traffic = v.parse()?;
    }
    for row in raw.up {
        if row.priority >= NUM_UPS {
            return Err(Error::validation(format!("[[up]] priority {} outside 0..=7", row.priority)));
        }
        let up = &mut sc.up_table[row.priority];
        overlay!(up, row, cw_min, cw_max, m, x);
    }
    sc.validate()?;
    Ok((sc, raw.sweep))
}

fn sweep_values(parameter: SweepParameter, raw: &RawSweep) -> Result<Vec<SweepValue>> {
    match (&raw.values, &raw.range) {
        (Some(_), Some(_)) => Err(Error::validation("set sweep values or range, not both")),
        (None, None) => Err(Error::validation("sweep needs values or range")),
        (Some(vals), None) => vals.iter().map(|v| SweepValue::from_toml(parameter, v)).collect(),
        (None, Some(r)) => {
            if parameter == SweepParameter::Mechanism {
                return Err(Error::validation("mechanism sweeps take a list of values, not a range"));
            }
            super::spec::range(r.from, r.to, r.step).map(|v| v.into_iter().map(SweepValue::Number).collect())
        }
    }
}

/// Parses configuration text. A `[sweep]` table makes it a sweep.
pub fn parse_config_str(text: &str) -> Result<Config> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let (base, sweep) = build_scenario(raw)?;
    let Some(sw) = sweep else {
        return Ok(Config::Scenario(base));
    };
    let parameter: SweepParameter = sw.parameter.parse()?;
    let mut spec = SweepSpec::new(base, parameter, sweep_values(parameter, &sw)?);
    if let Some(r) = sw.replications {
        spec.replications = r;
    }
    if let Some(s) = sw.seed {
        spec.seed = s;
    }
    if let Some(h) = sw.horizon {
        spec.horizon = h;
    }
    spec.validate()?;
    Ok(Config::Sweep(spec))
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}
