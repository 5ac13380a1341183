use std::collections::HashMap;
use std::fmt;

use super::spec::SweepParameter;
use super::table::{relative_deviation, Metric, RowStatus, Table};
use crate::error::{Error, Result};

/// Accepted gap between analytical and simulated values: the looser of a
/// relative and an absolute bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub fn accepts(&self, analytical: f64, simulated: f64) -> bool {
        (simulated - analytical).abs() <= (self.rel * analytical.abs()).max(self.abs)
    }
}

/// Per-metric tolerances; `None` leaves a metric unchecked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub reliability: Option<Tolerance>,
    pub throughput: Option<Tolerance>,
    pub energy: Option<Tolerance>,
    pub delay: Option<Tolerance>,
}

impl Default for Tolerances {
    /// 15% or 0.05 absolute on reliability and throughput, 25% on delay,
    /// energy unchecked.
    fn default() -> Self {
        Self {
            reliability: Some(Tolerance { rel: 0.15, abs: 0.05 }),
            throughput: Some(Tolerance { rel: 0.15, abs: 0.05 }),
            energy: None,
            delay: Some(Tolerance { rel: 0.25, abs: 0.0 }),
        }
    }
}

impl Tolerances {
    pub fn get(&self, m: Metric) -> Option<Tolerance> {
        match m {
            Metric::Reliability => self.reliability,
            Metric::Throughput => self.throughput,
            Metric::Energy => self.energy,
            Metric::Delay => self.delay,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub series: String,
    pub value: String,
    pub up: usize,
    pub metric: Metric,
    pub analytical: Option<f64>,
    pub simulated: Option<f64>,
    /// `|s - a| / |a|`; `None` when either side is unavailable.
    pub deviation: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeviationReport {
    pub entries: Vec<Deviation>,
    /// Sweep points that failed on either side, as `series parameter=value: reason`.
    pub failed_points: Vec<String>,
}

impl DeviationReport {
    pub fn passed(&self) -> bool {
        self.failed_points.is_empty() && self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Deviation> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

impl fmt::Display for DeviationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
        for e in &self.entries {
            writeln!(
                f,
                "{} {} UP{} {:<11} a={} s={} dev={} {}",
                e.series,
                e.value,
                e.up,
                e.metric.as_str(),
                cell(e.analytical),
                cell(e.simulated),
                e.deviation.map_or("-".to_string(), |d| format!("{d:.4}")),
                if e.pass { "ok" } else { "FAIL" }
            )?;
        }
        for p in &self.failed_points {
            writeln!(f, "failed point: {p}")?;
        }
        let failed = self.failures().count();
        write!(
            f,
            "{}: {} of {} checks outside tolerance, {} failed points",
            if self.passed() { "PASS" } else { "FAIL" },
            failed,
            self.entries.len(),
            self.failed_points.len()
        )
    }
}

type Key = (String, SweepParameter, String, usize);

/// Checks the analytical cells of `analytical` against the simulated cells
/// of `simulated`. Both tables must cover the same points. Passing one table
/// run in `Both` mode as both arguments compares it with itself.
pub fn compare(analytical: &Table, simulated: &Table, tol: &Tolerances) -> Result<DeviationReport> {
    let key = |r: &super::table::Row| -> Key { (r.series.clone(), r.parameter, r.value.to_string(), r.up) };
    let sim: HashMap<Key, &super::table::Row> = simulated.rows.iter().map(|r| (key(r), r)).collect();
    if sim.len() != analytical.rows.len() {
        return Err(Error::Compare(format!(
            "tables cover different points: {} analytical rows, {} simulated",
            analytical.rows.len(),
            sim.len()
        )));
    }
    let mut report = DeviationReport::default();
    for a in &analytical.rows {
        let k = key(a);
        let s = sim
            .get(&k)
            .ok_or_else(|| Error::Compare(format!("no simulated row for {} {}={} UP{}", k.0, k.1, k.2, k.3)))?;
        for (side, row) in [("analytical", a), ("simulated", *s)] {
            if let RowStatus::Failed(msg) = &row.status {
                if a.up == 0 {
                    report.failed_points.push(format!("{} {}={} ({side}): {msg}", k.0, k.1, k.2));
                }
            }
        }
        if a.status != RowStatus::Ok || s.status != RowStatus::Ok {
            continue;
        }
        for m in Metric::ALL {
            let Some(t) = tol.get(m) else { continue };
            let (av, sv) = (a.analytical.get(m), s.simulated.get(m));
            let (deviation, pass) = match (av, sv) {
                (None, None) => continue,
                (Some(x), Some(y)) => (Some(relative_deviation(x, y)), t.accepts(x, y)),
                _ => (None, false),
            };
            report.entries.push(Deviation {
                series: a.series.clone(),
                value: k.2.clone(),
                up: a.up,
                metric: m,
                analytical: av,
                simulated: sv,
                deviation,
                pass,
            });
        }
    }
    Ok(report)
}
