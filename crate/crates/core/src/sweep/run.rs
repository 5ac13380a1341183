use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::spec::{SweepSpec, SweepValue};
use super::table::{Metric, Row, RowStatus, Table};
use crate::error::{Error, Result};
use crate::metrics;
use crate::params::{Scenario, NUM_UPS};
use crate::sim;
use crate::solver::solve_fixed_point;

/// Which engines a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytical,
    Simulated,
    Both,
}

impl Mode {
    pub fn analytical(&self) -> bool {
        matches!(self, Mode::Analytical | Mode::Both)
    }

    pub fn simulated(&self) -> bool {
        matches!(self, Mode::Simulated | Mode::Both)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Analytical => "analytical",
            Mode::Simulated => "sim",
            Mode::Both => "both",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytical" => Ok(Mode::Analytical),
            "sim" | "simulated" => Ok(Mode::Simulated),
            "both" => Ok(Mode::Both),
            other => Err(Error::validation(format!("unknown mode '{other}' (analytical, sim, both)"))),
        }
    }
}

/// Master seed of sweep point `index`.
fn point_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64) << 32)
}

fn fill_analytical(rows: &mut [Row], sc: &Scenario) -> Result<()> {
    let sol = solve_fixed_point(sc)?;
    let report = metrics::evaluate(&sol, sc)?;
    for (row, m) in rows.iter_mut().zip(report.ups.iter()) {
        row.analytical.reliability = m.reliability;
        row.analytical.throughput = m.throughput;
        row.analytical.energy = m.energy;
        row.analytical.delay = m.delay;
        row.iterations = Some(sol.diagnostics.iterations as u64);
        row.residual = Some(sol.diagnostics.residual);
    }
    Ok(())
}

fn fill_simulated(rows: &mut [Row], sc: &Scenario, spec: &SweepSpec, index: usize) -> Result<()> {
    let runs = sim::replicate(sc, point_seed(spec.seed, index), spec.horizon, spec.replications)?;
    let est = sim::summarize(&runs, sc);
    for (row, e) in rows.iter_mut().zip(est.iter()) {
        row.replications = Some(spec.replications);
        row.set_simulated(Metric::Reliability, e.reliability);
        row.set_simulated(Metric::Throughput, e.throughput);
        row.set_simulated(Metric::Energy, e.energy);
        row.set_simulated(Metric::Delay, e.delay);
    }
    Ok(())
}

fn point_rows(spec: &SweepSpec, index: usize, value: SweepValue, mode: Mode) -> Vec<Row> {
    let mut rows: Vec<Row> = (0..NUM_UPS).map(|up| Row::new(&spec.series, spec.parameter, value, up)).collect();
    let outcome = spec.apply(value).and_then(|sc| {
        if mode.analytical() {
            fill_analytical(&mut rows, &sc)?;
        }
        if mode.simulated() {
            fill_simulated(&mut rows, &sc, spec, index)?;
        }
        Ok(())
    });
    if let Err(e) = outcome {
        log::debug!("{} {}={value}: {e}", spec.series, spec.parameter);
        for row in &mut rows {
            row.status = RowStatus::Failed(e.to_string());
        }
    }
    rows
}

/// Runs every point of `spec` on the current rayon pool. A point that fails
/// is recorded in its rows and the sweep carries on.
pub fn run_sweep(spec: &SweepSpec, mode: Mode) -> Table {
    let rows = spec
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| point_rows(spec, i, v, mode))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Table { rows }
}

/// Runs several sweeps with at most `parallel` worker threads (0 means one
/// per core) and concatenates their tables in order.
pub fn run_sweeps(specs: &[SweepSpec], mode: Mode, parallel: usize) -> Result<Table> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
    let tables: Vec<Table> = pool.install(|| specs.par_iter().map(|s| run_sweep(s, mode)).collect());
    Ok(Table { rows: tables.into_iter().flat_map(|t| t.rows).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::spec::SweepParameter;

    #[test]
    fn single_value_sweep_matches_a_direct_solve() {
        let sc = Scenario::default();
        let spec = SweepSpec::new(sc.clone(), SweepParameter::Ber, vec![SweepValue::Number(sc.ber)]);
        let table = run_sweep(&spec, Mode::Analytical);
        let sol = solve_fixed_point(&sc).unwrap();
        let report = metrics::evaluate(&sol, &sc).unwrap();
        assert_eq!(table.rows.len(), NUM_UPS);
        for (row, m) in table.rows.iter().zip(report.ups.iter()) {
            assert_eq!(row.analytical.reliability, m.reliability);
            assert_eq!(row.analytical.throughput, m.throughput);
            assert_eq!(row.analytical.energy, m.energy);
            assert_eq!(row.analytical.delay, m.delay);
            assert_eq!(row.simulated.reliability, None);
        }
    }

    #[test]
    fn failing_point_is_recorded_and_sweep_continues() {
        let spec = SweepSpec::new(
            Scenario::default(),
            SweepParameter::Rap1Len,
            vec![SweepValue::Number(0.8), SweepValue::Number(0.001), SweepValue::Number(0.4)],
        );
        let table = run_sweep(&spec, Mode::Analytical);
        assert_eq!(table.rows.len(), 3 * NUM_UPS);
        let failed: Vec<_> = table.failures().map(|r| r.value).collect();
        assert_eq!(failed, vec![SweepValue::Number(0.001); NUM_UPS]);
        assert!(table.rows[2 * NUM_UPS].analytical.reliability.is_some());
    }

    #[test]
    fn mode_parses() {
        assert_eq!("sim".parse::<Mode>().unwrap(), Mode::Simulated);
        assert!("fast".parse::<Mode>().is_err());
    }
}
