mod plot;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wban_core::metrics;
use wban_core::sim::{self, run_simulation_traced, summarize};
use wban_core::sweep::{
    self, compare, parse_config, preset, Config, Mode, SweepParameter, SweepSpec, SweepValue, Table, Tolerances,
};
use wban_core::{solve_fixed_point, Error, Scenario};

const EXIT_FAILURE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;
const EXIT_COMPARISON: u8 = 5;

/// Markov-chain model and discrete-event simulator for IEEE 802.15.6 CSMA/CA.
#[derive(Parser)]
#[command(name = "wban", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and print per-priority metrics.
    Solve(Opts),
    /// Run the sweep described by a config file.
    Sweep(Opts),
    /// Simulate one scenario over several replications.
    Simulate(Opts),
    /// Compare the model with the simulator, either by running both on a
    /// config or by reading two CSV tables.
    Compare {
        #[command(flatten)]
        opts: Opts,
        /// CSV holding analytical results.
        #[arg(long, requires = "simulated", conflicts_with = "config")]
        analytical: Option<PathBuf>,
        /// CSV holding simulated results.
        #[arg(long, requires = "analytical")]
        simulated: Option<PathBuf>,
    },
    /// Regenerate the table behind one of the named experiments.
    Reproduce {
        /// fig5, fig6, ..., fig12
        preset: String,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args, Clone)]
struct Opts {
    /// Scenario or sweep file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the CSV table; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// analytical, sim or both.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    /// Simulated seconds per replication.
    #[arg(long)]
    horizon: Option<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    parallel: usize,
    /// Write a per-event log of the first replication here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Also write one SVG chart per metric next to the CSV.
    #[arg(long)]
    plot: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Validation(_)
        | Error::StageRange { .. }
        | Error::ProbabilityDomain { .. }
        | Error::InfeasiblePhase { .. }
        | Error::DegenerateTau { .. }
        | Error::BlockedChannel { .. } => EXIT_VALIDATION,
        Error::Convergence { .. } | Error::StaleState => EXIT_CONVERGENCE,
        Error::Compare(_) => EXIT_COMPARISON,
        Error::Io(_) => EXIT_FAILURE,
    }
}

impl Opts {
    fn load(&self) -> Result<Config, Error> {
        match &self.config {
            Some(p) => parse_config(p),
            None => Ok(Config::Scenario(Scenario::default())),
        }
    }

    /// Applies command-line overrides to a sweep.
    fn tune(&self, mut spec: SweepSpec) -> Result<SweepSpec, Error> {
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(r) = self.replications {
            spec.replications = r;
        }
        if let Some(h) = self.horizon {
            spec.horizon = h;
        }
        spec.validate()?;
        Ok(spec)
    }

    fn single_point(&self, sc: Scenario) -> Result<SweepSpec, Error> {
        let ber = sc.ber;
        self.tune(SweepSpec::new(sc, SweepParameter::Ber, vec![SweepValue::Number(ber)]))
    }

    fn specs(&self) -> Result<Vec<SweepSpec>, Error> {
        match self.load()? {
            Config::Sweep(spec) => Ok(vec![self.tune(spec)?]),
            Config::Scenario(sc) => Ok(vec![self.single_point(sc)?]),
        }
    }
}

fn emit(table: &Table, opts: &Opts, plot_stem: &str) -> Result<(), Error> {
    match &opts.out {
        Some(p) => table.save(p)?,
        None => {
            let stdout = io::stdout();
            table.write_csv(stdout.lock())?;
        }
    }
    if opts.plot {
        let stem = match &opts.out {
            Some(p) => p.with_extension(""),
            None => PathBuf::from(plot_stem),
        };
        for path in plot::write_charts(table, &stem)? {
            log::info!("wrote {}", path.display());
        }
    }
    Ok(())
}

/// Exit status for a finished sweep: failed points count as non-convergence.
fn sweep_status(table: &Table) -> u8 {
    let failed: Vec<_> = table.failures().collect();
    if failed.is_empty() {
        return 0;
    }
    for row in failed.iter().filter(|r| r.up == 0) {
        if let sweep::RowStatus::Failed(msg) = &row.status {
            eprintln!("warning: {} {}={} failed: {msg}", row.series, row.parameter, row.value);
        }
    }
    EXIT_CONVERGENCE
}

fn solve(opts: &Opts) -> Result<u8, Error> {
    let sc = opts.load()?.scenario().clone();
    let sol = solve_fixed_point(&sc)?;
    let report = metrics::evaluate(&sol, &sc)?;
    let d = &sol.diagnostics;
    println!("converged in {} iterations, residual {:e}", d.iterations, d.residual);
    println!("{:<4} {:>10} {:>12} {:>12} {:>12} {:>10}", "UP", "tau", "R", "S", "E (J)", "D (s)");
    for (u, m) in sol.ups.iter().zip(report.ups.iter()) {
        if !u.active {
            continue;
        }
        println!(
            "UP{:<2} {:>10.6} {:>12.6} {:>12.6e} {:>12.6e} {:>10.6}",
            u.priority,
            u.tau,
            m.reliability.unwrap_or(f64::NAN),
            m.throughput.unwrap_or(f64::NAN),
            m.energy.unwrap_or(f64::NAN),
            m.delay.unwrap_or(f64::NAN),
        );
    }
    if let Some(out) = &opts.out {
        let table = sweep::run_sweeps(&[opts.single_point(sc)?], Mode::Analytical, opts.parallel)?;
        table.save(out)?;
    }
    Ok(0)
}

fn run_sweep(opts: &Opts) -> Result<u8, Error> {
    let specs = opts.specs()?;
    let table = sweep::run_sweeps(&specs, opts.mode.unwrap_or(Mode::Analytical), opts.parallel)?;
    emit(&table, opts, "sweep")?;
    Ok(sweep_status(&table))
}

fn write_trace(sc: &Scenario, spec: &SweepSpec, path: &Path) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let seed = sim::replication_seed(spec.seed, 0);
    let stats = run_simulation_traced(sc, seed, spec.horizon, &mut w)?;
    w.flush()?;
    if stats.audit.total() > 0 {
        eprintln!("warning: protocol audit found violations: {:?}", stats.audit);
    }
    Ok(())
}

fn simulate(opts: &Opts) -> Result<u8, Error> {
    let sc = opts.load()?.scenario().clone();
    let spec = opts.single_point(sc.clone())?;
    if let Some(path) = &opts.trace {
        write_trace(&sc, &spec, path)?;
    }
    let runs = sim::run_replications(&sc, spec.seed, spec.horizon, spec.replications, opts.parallel)?;
    let est = summarize(&runs, &sc);
    let events: u64 = runs.iter().map(|r| r.events).sum();
    let violations: u64 = runs.iter().map(|r| r.audit.total()).sum();
    println!(
        "{} replications x {} s, {} events, {} audit violations",
        spec.replications, spec.horizon, events, violations
    );
    let cell = |e: Option<sim::Estimate>| e.map_or("-".to_string(), |e| format!("{:.5e} ± {:.1e}", e.mean, e.half_width));
    println!("{:<4} {:>22} {:>22} {:>22} {:>22}", "UP", "R", "S", "E (J)", "D (s)");
    for e in est.iter().filter(|e| sc.node_counts[e.priority] > 0) {
        println!(
            "UP{:<2} {:>22} {:>22} {:>22} {:>22}",
            e.priority,
            cell(e.reliability),
            cell(e.throughput),
            cell(e.energy),
            cell(e.delay)
        );
    }
    if opts.out.is_some() {
        let table = sweep::run_sweeps(&[spec], Mode::Simulated, opts.parallel)?;
        emit(&table, opts, "simulate")?;
    }
    Ok(if violations > 0 { EXIT_FAILURE } else { 0 })
}

fn run_compare(opts: &Opts, analytical: Option<&Path>, simulated: Option<&Path>) -> Result<u8, Error> {
    let (a, s) = match (analytical, simulated) {
        (Some(a), Some(s)) => (Table::load(a)?, Table::load(s)?),
        _ => {
            let table = sweep::run_sweeps(&opts.specs()?, Mode::Both, opts.parallel)?;
            if opts.out.is_some() {
                emit(&table, opts, "compare")?;
            }
            (table.clone(), table)
        }
    };
    let report = compare(&a, &s, &Tolerances::default())?;
    println!("{report}");
    Ok(if report.passed() { 0 } else { EXIT_COMPARISON })
}

fn reproduce(name: &str, opts: &Opts) -> Result<u8, Error> {
    let specs = preset(name)?.into_iter().map(|s| opts.tune(s)).collect::<Result<Vec<_>, _>>()?;
    let table = sweep::run_sweeps(&specs, opts.mode.unwrap_or(Mode::Analytical), opts.parallel)?;
    emit(&table, opts, name)?;
    Ok(sweep_status(&table))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(o) => solve(o),
        Command::Sweep(o) => run_sweep(o),
        Command::Simulate(o) => simulate(o),
        Command::Compare { opts, analytical, simulated } => {
            run_compare(opts, analytical.as_deref(), simulated.as_deref())
        }
        Command::Reproduce { preset, opts } => reproduce(preset, opts),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
