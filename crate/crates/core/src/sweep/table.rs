//! Sweep result rows and their CSV form.
//!
//! The file opens with a comment line naming the schema version, followed by
//! a header row and one row per (sweep value, priority). Empty cells mean a
//! quantity is unavailable: not computed in the chosen mode, a failed point,
//! or a metric with no resolved frames.
//!
//! | column | meaning |
//! |---|---|
//! | `series` | label of the sweep the row belongs to (mechanism for presets) |
//! | `parameter`, `value` | swept scenario field and its value |
//! | `up` | user priority 0..=7 |
//! | `status`, `error` | `ok` or `failed` with the reason |
//! | `a_reliability` .. `a_delay` | analytical R, S, E (J per state), D (s) |
//! | `iterations`, `residual` | solver diagnostics |
//! | `replications` | simulation replications behind the `s_` columns |
//! | `s_*`, `s_*_hw` | simulated mean and 95% half-width |
//! | `dev_*` | \|simulated − analytical\| / \|analytical\| |

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::{SweepParameter, SweepValue};
use crate::error::{Error, Result};
use crate::sim::Estimate;

pub const SCHEMA_VERSION: u32 = 1;
const SCHEMA_PREFIX: &str = "# wban sweep table, schema ";

#[derive(Debug, Clone, PartialEq, Default)]
pub enum RowStatus {
    #[default]
    Ok,
    Failed(String),
}

/// Four metrics of one priority, each possibly unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricCells {
    pub reliability: Option<f64>,
    pub throughput: Option<f64>,
    pub energy: Option<f64>,
    pub delay: Option<f64>,
}

impl MetricCells {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Reliability => self.reliability,
            Metric::Throughput => self.throughput,
            Metric::Energy => self.energy,
            Metric::Delay => self.delay,
        }
    }

    fn set(&mut self, m: Metric, v: Option<f64>) {
        match m {
            Metric::Reliability => self.reliability = v,
            Metric::Throughput => self.throughput = v,
            Metric::Energy => self.energy = v,
            Metric::Delay => self.delay = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Reliability,
    Throughput,
    Energy,
    Delay,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Reliability, Metric::Throughput, Metric::Energy, Metric::Delay];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Reliability => "reliability",
            Metric::Throughput => "throughput",
            Metric::Energy => "energy",
            Metric::Delay => "delay",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub series: String,
    pub parameter: SweepParameter,
    pub value: SweepValue,
    pub up: usize,
    pub status: RowStatus,
    pub analytical: MetricCells,
    pub iterations: Option<u64>,
    pub residual: Option<f64>,
    pub replications: Option<u32>,
    pub simulated: MetricCells,
    pub half_width: MetricCells,
}

/// `|s - a| / |a|`, infinite when only the analytical value is zero.
pub fn relative_deviation(analytical: f64, simulated: f64) -> f64 {
    let diff = (simulated - analytical).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / analytical.abs()
    }
}

impl Row {
    pub fn new(series: &str, parameter: SweepParameter, value: SweepValue, up: usize) -> Self {
        Self {
            series: series.to_string(),
            parameter,
            value,
            up,
            status: RowStatus::Ok,
            analytical: MetricCells::default(),
            iterations: None,
            residual: None,
            replications: None,
            simulated: MetricCells::default(),
            half_width: MetricCells::default(),
        }
    }

    pub fn deviation(&self, m: Metric) -> Option<f64> {
        Some(relative_deviation(self.analytical.get(m)?, self.simulated.get(m)?))
    }

    pub(crate) fn set_simulated(&mut self, m: Metric, e: Option<Estimate>) {
        self.simulated.set(m, e.map(|e| e.mean));
        self.half_width.set(m, e.map(|e| e.half_width));
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    series: String,
    parameter: String,
    value: String,
    up: usize,
    status: String,
    error: String,
    a_reliability: Option<f64>,
    a_throughput: Option<f64>,
    a_energy: Option<f64>,
    a_delay: Option<f64>,
    iterations: Option<u64>,
    residual: Option<f64>,
    replications: Option<u32>,
    s_reliability: Option<f64>,
    s_reliability_hw: Option<f64>,
    s_throughput: Option<f64>,
    s_throughput_hw: Option<f64>,
    s_energy: Option<f64>,
    s_energy_hw: Option<f64>,
    s_delay: Option<f64>,
    s_delay_hw: Option<f64>,
    dev_reliability: Option<f64>,
    dev_throughput: Option<f64>,
    dev_energy: Option<f64>,
    dev_delay: Option<f64>,
}

impl From<&Row> for Record {
    fn from(r: &Row) -> Self {
        let (status, error) = match &r.status {
            RowStatus::Ok => ("ok".to_string(), String::new()),
            RowStatus::Failed(e) => ("failed".to_string(), e.clone()),
        };
        Record {
            series: r.series.clone(),
            parameter: r.parameter.to_string(),
            value: r.value.to_string(),
            up: r.up,
            status,
            error,
            a_reliability: r.analytical.reliability,
            a_throughput: r.analytical.throughput,
            a_energy: r.analytical.energy,
            a_delay: r.analytical.delay,
            iterations: r.iterations,
            residual: r.residual,
            replications: r.replications,
            s_reliability: r.simulated.reliability,
            s_reliability_hw: r.half_width.reliability,
            s_throughput: r.simulated.throughput,
            s_throughput_hw: r.half_width.throughput,
            s_energy: r.simulated.energy,
            s_energy_hw: r.half_width.energy,
            s_delay: r.simulated.delay,
            s_delay_hw: r.half_width.delay,
            dev_reliability: r.deviation(Metric::Reliability),
            dev_throughput: r.deviation(Metric::Throughput),
            dev_energy: r.deviation(Metric::Energy),
            dev_delay: r.deviation(Metric::Delay),
        }
    }
}

impl TryFrom<Record> for Row {
    type Error = Error;

    fn try_from(r: Record) -> Result<Self> {
        let parameter: SweepParameter = r.parameter.parse()?;
        let status = match r.status.as_str() {
            "ok" => RowStatus::Ok,
            "failed" => RowStatus::Failed(r.error),
            other => return Err(Error::validation(format!("unknown row status '{other}'"))),
        };
        Ok(Row {
            series: r.series,
            parameter,
            value: SweepValue::parse(parameter, &r.value)?,
            up: r.up,
            status,
            analytical: MetricCells {
                reliability: r.a_reliability,
                throughput: r.a_throughput,
                energy: r.a_energy,
                delay: r.a_delay,
            },
            iterations: r.iterations,
            residual: r.residual,
            replications: r.replications,
            simulated: MetricCells {
                reliability: r.s_reliability,
                throughput: r.s_throughput,
                energy: r.s_energy,
                delay: r.s_delay,
            },
            half_width: MetricCells {
                reliability: r.s_reliability_hw,
                throughput: r.s_throughput_hw,
                energy: r.s_energy_hw,
                delay: r.s_delay_hw,
            },
        })
    }
}

/// Ordered sweep output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub rows: Vec<Row>,
}

impl Table {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SCHEMA_PREFIX}{SCHEMA_VERSION}")?;
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(Record::from(row))?;
        }
        if self.rows.is_empty() {
            // serde only emits the header together with the first record
            w.write_record(HEADER)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut input = BufReader::new(input);
        let mut first = String::new();
        input.read_line(&mut first)?;
        let version = first
            .trim_end()
            .strip_prefix(SCHEMA_PREFIX)
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| Error::Parse { line: 1, message: "missing schema version line".into() })?;
        if version != SCHEMA_VERSION {
            return Err(Error::Parse {
                line: 1,
                message: format!("schema version {version}, expected {SCHEMA_VERSION}"),
            });
        }
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header != HEADER {
            return Err(Error::Parse { line: 2, message: "unexpected header row".into() });
        }
        let mut rows = Vec::new();
        for (i, rec) in r.deserialize::<Record>().enumerate() {
            let line = i + 3;
            let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
            rows.push(Row::try_from(rec).map_err(|e| Error::Parse { line, message: e.to_string() })?);
        }
        Ok(Table { rows })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = File::create(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = File::open(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::read_csv(f)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.status != RowStatus::Ok)
    }
}

const HEADER: [&str; 25] = [
    "series",
    "parameter",
    "value",
    "up",
    "status",
    "error",
    "a_reliability",
    "a_throughput",
    "a_energy",
    "a_delay",
    "iterations",
    "residual",
    "replications",
    "s_reliability",
    "s_reliability_hw",
    "s_throughput",
    "s_throughput_hw",
    "s_energy",
    "s_energy_hw",
    "s_delay",
    "s_delay_hw",
    "dev_reliability",
    "dev_throughput",
    "dev_energy",
    "dev_delay",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Mechanism;

    fn sample() -> Table {
        let mut a = Row::new("rts-cts", SweepParameter::Ber, SweepValue::Number(2e-5), 3);
        a.analytical = MetricCells {
            reliability: Some(0.1234567890123456),
            throughput: Some(1e-3 / 3.0),
            energy: Some(1.1e-7),
            delay: None,
        };
        a.iterations = Some(512);
        a.residual = Some(9.5e-11);
        a.replications = Some(20);
        a.simulated.reliability = Some(0.2);
        a.half_width.reliability = Some(f64::INFINITY);
        let mut b = Row::new("basic, \"quoted\"", SweepParameter::Mechanism, SweepValue::Mechanism(Mechanism::Basic), 7);
        b.status = RowStatus::Failed("did not converge, residual 1e-3".into());
        Table { rows: vec![a, b] }
    }

    #[test]
    fn round_trip_is_exact() {
        let t = sample();
        let text = t.to_csv_string().unwrap();
        assert!(text.starts_with("# wban sweep table, schema 1\nseries,parameter,value,up,"));
        assert_eq!(Table::read_csv(text.as_bytes()).unwrap(), t);
    }

    #[test]
    fn empty_table_still_has_header() {
        let text = Table::default().to_csv_string().unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(Table::read_csv(text.as_bytes()).unwrap(), Table::default());
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let text = sample().to_csv_string().unwrap().replace("schema 1", "schema 9");
        assert!(matches!(Table::read_csv(text.as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn bad_cell_reports_its_line() {
        let text = sample().to_csv_string().unwrap().replacen(",512,", ",many,", 1);
        assert!(matches!(Table::read_csv(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn deviation_is_relative_to_the_model() {
        assert!((relative_deviation(0.88, 0.80) - 0.0909090909090909).abs() < 1e-15);
        assert_eq!(relative_deviation(0.0, 0.0), 0.0);
        assert_eq!(relative_deviation(0.0, 0.1), f64::INFINITY);
    }
}
