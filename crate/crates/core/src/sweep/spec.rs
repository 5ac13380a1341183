use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::params::{Mechanism, Scenario, NUM_UPS};

/// The scenario field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParameter {
    ArrivalRate,
    Ber,
    PayloadBytes,
    Rap1Len,
    /// Total node count, split evenly over the active priorities.
    NodeCount,
    Mechanism,
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParameter::ArrivalRate => "arrival-rate",
            SweepParameter::Ber => "ber",
            SweepParameter::PayloadBytes => "payload",
            SweepParameter::Rap1Len => "rap1",
            SweepParameter::NodeCount => "nodes",
            SweepParameter::Mechanism => "mechanism",
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "arrival-rate" | "lambda" => SweepParameter::ArrivalRate,
            "ber" => SweepParameter::Ber,
            "payload" | "payload-bytes" => SweepParameter::PayloadBytes,
            "rap1" | "rap1-len" => SweepParameter::Rap1Len,
            "nodes" | "node-count" => SweepParameter::NodeCount,
            "mechanism" => SweepParameter::Mechanism,
            other => return Err(Error::validation(format!("unknown sweep parameter '{other}'"))),
        })
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    Number(f64),
    Mechanism(Mechanism),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(v) => write!(f, "{v}"),
            SweepValue::Mechanism(m) => f.write_str(m.as_str()),
        }
    }
}

impl SweepValue {
    /// Reads a value written by `Display`.
    pub fn parse(parameter: SweepParameter, s: &str) -> Result<Self> {
        if parameter == SweepParameter::Mechanism {
            return Ok(SweepValue::Mechanism(s.parse()?));
        }
        s.parse::<f64>()
            .map(SweepValue::Number)
            .map_err(|_| Error::validation(format!("'{s}' is not a number for sweep parameter {parameter}")))
    }

    pub(crate) fn from_toml(parameter: SweepParameter, v: &toml::Value) -> Result<Self> {
        match (parameter, v) {
            (SweepParameter::Mechanism, toml::Value::String(s)) => Ok(SweepValue::Mechanism(s.parse()?)),
            (SweepParameter::Mechanism, other) => {
                Err(Error::validation(format!("mechanism sweep value must be a string, got {other}")))
            }
            (_, toml::Value::Integer(i)) => Ok(SweepValue::Number(*i as f64)),
            (_, toml::Value::Float(x)) => Ok(SweepValue::Number(*x)),
            (p, other) => Err(Error::validation(format!("{p} sweep value must be a number, got {other}"))),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            SweepValue::Number(v) => Some(*v),
            SweepValue::Mechanism(_) => None,
        }
    }
}

/// Inclusive arithmetic range, with float noise trimmed so that e.g. the
/// third point of `0.1, 0.2, ...` is exactly `0.3`.
pub fn range(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && step.is_finite() && step > 0.0 && to >= from) {
        return Err(Error::validation(format!("bad range from {from} to {to} step {step}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let v = from + i as f64 * step;
            format!("{v:.12}").parse().unwrap_or(v)
        })
        .collect())
}

pub const DEFAULT_REPLICATIONS: u32 = 20;
pub const DEFAULT_HORIZON: f64 = 60.0;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: Scenario,
    pub parameter: SweepParameter,
    pub values: Vec<SweepValue>,
    /// Simulation replications per point.
    pub replications: u32,
    pub seed: u64,
    /// Simulated seconds per replication.
    pub horizon: f64,
    /// Label carried into every output row, e.g. the mechanism of a preset.
    pub series: String,
}

impl SweepSpec {
    pub fn new(base: Scenario, parameter: SweepParameter, values: Vec<SweepValue>) -> Self {
        let series = base.mechanism.as_str().to_string();
        Self {
            base,
            parameter,
            values,
            replications: DEFAULT_REPLICATIONS,
            seed: DEFAULT_SEED,
            horizon: DEFAULT_HORIZON,
            series,
        }
    }

    pub fn with_series(mut self, series: impl Into<String>) -> Self {
        self.series = series.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.values.is_empty() {
            return Err(Error::validation("sweep has no values"));
        }
        if self.replications == 0 {
            return Err(Error::validation("replications must be at least 1"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::validation(format!("horizon must be > 0, got {}", self.horizon)));
        }
        self.values.iter().try_for_each(|v| self.apply(*v).map(drop))
    }

    /// Base scenario with one sweep value substituted, validated.
    pub fn apply(&self, value: SweepValue) -> Result<Scenario> {
        let mut sc = self.base.clone();
        let p = self.parameter;
        match (p, value) {
            (SweepParameter::Mechanism, SweepValue::Mechanism(m)) => sc.mechanism = m,
            (SweepParameter::Mechanism, v) => {
                return Err(Error::validation(format!("mechanism sweep got number {v}")));
            }
            (_, SweepValue::Mechanism(m)) => {
                return Err(Error::validation(format!("{p} sweep got mechanism {m}")));
            }
            (SweepParameter::ArrivalRate, SweepValue::Number(v)) => sc.arrival_rates = [v; NUM_UPS],
            (SweepParameter::Ber, SweepValue::Number(v)) => sc.ber = v,
            (SweepParameter::Rap1Len, SweepValue::Number(v)) => sc.rap1_len = v,
            (SweepParameter::PayloadBytes, SweepValue::Number(v)) => {
                sc.payload_bytes = whole(p, v)?;
            }
            (SweepParameter::NodeCount, SweepValue::Number(v)) => {
                let n = whole(p, v)?;
                let active: Vec<usize> = sc.active_ups().collect();
                if active.is_empty() || n % active.len() as u32 != 0 {
                    return Err(Error::validation(format!(
                        "node count {n} does not divide evenly over {} active priorities",
                        active.len()
                    )));
                }
                let per = n / active.len() as u32;
                for i in active {
                    sc.node_counts[i] = per;
                }
            }
        }
        sc.validate()?;
        Ok(sc)
    }
}

fn whole(p: SweepParameter, v: f64) -> Result<u32> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        Err(Error::validation(format!("{p} sweep value {v} is not a whole number")))
    }
}
