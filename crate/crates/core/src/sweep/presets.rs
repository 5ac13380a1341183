//! Named experiment presets `fig5` .. `fig12`.
//!
//! All share 2 nodes per priority (except the node-count sweeps), BER 2e-5,
//! 100-byte payload, EAP1 0.1 s, RAP1 0.8 s and RTS/CTS unless noted.
//! Simulation runs use 20 replications of 60 s each.
//!
//! | preset | sweep | traffic |
//! |---|---|---|
//! | fig5 | arrival rate 0.5..4.0 pkt/s, step 0.5 | non-saturated |
//! | fig6 | BER 0..1e-2 | saturated |
//! | fig7 | payload 0..260 B, step 10 | saturated |
//! | fig8 | RAP1 0.1..0.8 s, step 0.1, λ = 2 | non-saturated |
//! | fig9..fig12 | nodes 8..64, step 8, λ = 0.5, Basic and RTS/CTS | non-saturated |
//!
//! Figures 9 to 12 plot different metrics of the same experiment, so those
//! four presets produce the same table.

use super::spec::{range, SweepParameter, SweepSpec, SweepValue};
use crate::error::{Error, Result};
use crate::params::{Mechanism, Scenario, Traffic};

pub const PRESET_NAMES: [&str; 8] = ["fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12"];

pub const FIG6_BER: [f64; 11] = [0.0, 1e-5, 2e-5, 5e-5, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2];

fn numbers(v: Vec<f64>) -> Vec<SweepValue> {
    v.into_iter().map(SweepValue::Number).collect()
}

fn non_saturated(lambda: f64) -> Scenario {
    Scenario { traffic: Traffic::NonSaturated, ..Scenario::default() }.with_arrival_rate(lambda)
}

/// The sweeps behind a preset, in output order.
pub fn preset(name: &str) -> Result<Vec<SweepSpec>> {
    let specs = match name {
        "fig5" => vec![SweepSpec::new(
            non_saturated(2.0),
            SweepParameter::ArrivalRate,
            numbers(range(0.5, 4.0, 0.5)?),
        )],
        "fig6" => vec![SweepSpec::new(Scenario::default(), SweepParameter::Ber, numbers(FIG6_BER.to_vec()))],
        "fig7" => vec![SweepSpec::new(
            Scenario::default(),
            SweepParameter::PayloadBytes,
            numbers(range(0.0, 260.0, 10.0)?),
        )],
        "fig8" => vec![SweepSpec::new(non_saturated(2.0), SweepParameter::Rap1Len, numbers(range(0.1, 0.8, 0.1)?))],
        "fig9" | "fig10" | "fig11" | "fig12" => [Mechanism::Basic, Mechanism::RtsCts]
            .into_iter()
            .map(|m| {
                let base = Scenario { mechanism: m, ..non_saturated(0.5) };
                Ok(SweepSpec::new(base, SweepParameter::NodeCount, numbers(range(8.0, 64.0, 8.0)?)))
            })
            .collect::<Result<_>>()?,
        other => {
            return Err(Error::validation(format!(
                "unknown preset '{other}' (expected one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(specs)
}
