use std::path::Path;
use std::process::{Command, Output};

use wban_core::sweep::{RowStatus, Table};

fn wban(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wban")).args(args).output().expect("run wban")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_default_scenario() {
    let o = wban(&["solve"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("converged in "));
    assert_eq!(text.lines().filter(|l| l.starts_with("UP")).count(), 9);
}

#[test]
fn solve_writes_a_single_point_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve.csv");
    let o = wban(&["solve", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let t = Table::load(&out).unwrap();
    assert_eq!(t.rows.len(), 8);
    assert!(t.rows.iter().all(|r| r.analytical.reliability.is_some()));
}

#[test]
fn validation_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[scenario]\nber = 1.5\n");
    let o = wban(&["solve", "--config", &cfg]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ber outside [0,1]"));
    assert_eq!(code(&wban(&["reproduce", "fig4"])), 3);
}

#[test]
fn parse_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "broken.toml", "[scenario]\n\nber = = 2\n");
    let o = wban(&["solve", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn missing_config_is_a_plain_failure() {
    assert_eq!(code(&wban(&["solve", "--config", "/nonexistent/x.toml"])), 1);
}

#[test]
fn failed_sweep_point_exits_4_but_keeps_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "[sweep]\nparameter = \"ber\"\nvalues = [0.0, 2e-5]\n");
    let o = wban(&["sweep", "--config", &cfg]);
    assert_eq!(code(&o), 0);
    let t = Table::read_csv(&o.stdout[..]).unwrap();
    assert_eq!(t.rows.len(), 16);

    // 3 ms of RAP is shorter than one RTS/CTS exchange plus the mean backoff.
    let cfg = write(dir.path(), "f.toml", "[sweep]\nparameter = \"rap1\"\nvalues = [0.8, 0.003]\n");
    let o = wban(&["sweep", "--config", &cfg]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible phase"));
    let t = Table::read_csv(&o.stdout[..]).unwrap();
    assert!(t.rows[..8].iter().all(|r| r.status == RowStatus::Ok));
    assert!(t.rows[8..].iter().all(|r| matches!(r.status, RowStatus::Failed(_))));
}

#[test]
fn reproduce_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = wban(&["reproduce", "fig6", "--out", p.to_str().unwrap(), "--parallel", "2"]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(Table::load(&a).unwrap().rows.len(), 11 * 8);
}

#[test]
fn simulate_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.log");
    let o = wban(&[
        "simulate",
        "--replications",
        "2",
        "--horizon",
        "9",
        "--seed",
        "3",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 audit violations"));
    let log = std::fs::read_to_string(&trace).unwrap();
    let first = log.lines().next().unwrap();
    assert_eq!(first.split_whitespace().count(), 6, "{first}");
    assert!(log.lines().any(|l| l.contains(" tx ")));
}

#[test]
fn compare_csv_pair() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    assert_eq!(code(&wban(&["solve", "--out", a.to_str().unwrap()])), 0);
    let mut t = Table::load(&a).unwrap();
    for r in &mut t.rows {
        r.simulated = r.analytical;
    }
    let s = dir.path().join("s.csv");
    t.save(&s).unwrap();
    let o = wban(&["compare", "--analytical", a.to_str().unwrap(), "--simulated", s.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));

    for r in &mut t.rows {
        r.simulated.reliability = r.analytical.reliability.map(|x| x * 0.5 - 0.06);
    }
    t.save(&s).unwrap();
    let o = wban(&["compare", "--analytical", a.to_str().unwrap(), "--simulated", s.to_str().unwrap()]);
    assert_eq!(code(&o), 5);

    t.rows.pop();
    t.save(&s).unwrap();
    let o = wban(&["compare", "--analytical", a.to_str().unwrap(), "--simulated", s.to_str().unwrap()]);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("comparison error"));
}

#[test]
fn plot_writes_svg_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig8.csv");
    let o = wban(&["reproduce", "fig8", "--out", out.to_str().unwrap(), "--plot"]);
    assert_eq!(code(&o), 0);
    for m in ["reliability", "throughput", "energy", "delay"] {
        let svg = std::fs::read_to_string(dir.path().join(format!("fig8_{m}.svg"))).unwrap();
        assert!(svg.contains("<svg"));
    }
}

#[test]
fn bad_mode_is_a_usage_error() {
    assert_eq!(code(&wban(&["sweep", "--mode", "fast"])), 2);
}
