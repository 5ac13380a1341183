use std::fs;

use wban_core::sweep::{
    compare, parse_config, run_sweeps, Config, Metric, Mode, RowStatus, SweepParameter, SweepValue, Table, Tolerance,
    Tolerances,
};
use wban_core::{Error, Mechanism, NUM_UPS};

const SWEEP: &str = r#"
[scenario]
nodes_per_up = 1
mechanism = "basic"

[sweep]
parameter = "payload"
values = [20, 120, 250]
replications = 2
seed = 9
horizon = 10.0
"#;

#[test]
fn config_file_drives_a_mixed_sweep_that_survives_a_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("sweep.toml");
    fs::write(&cfg_path, SWEEP).unwrap();
    let Config::Sweep(spec) = parse_config(&cfg_path).unwrap() else { panic!("expected a sweep") };
    assert_eq!(spec.parameter, SweepParameter::PayloadBytes);
    assert_eq!(spec.base.mechanism, Mechanism::Basic);
    assert_eq!(spec.series, "basic");

    let table = run_sweeps(&[spec], Mode::Both, 2).unwrap();
    assert_eq!(table.rows.len(), 3 * NUM_UPS);
    assert!(table.failures().next().is_none());
    let row = &table.rows[NUM_UPS + 7];
    assert_eq!(row.value, SweepValue::Number(120.0));
    assert_eq!(row.replications, Some(2));
    assert!(row.simulated.reliability.is_some() && row.half_width.reliability.is_some());
    assert!(row.deviation(Metric::Throughput).is_some());

    let csv_path = dir.path().join("out.csv");
    table.save(&csv_path).unwrap();
    assert_eq!(Table::load(&csv_path).unwrap(), table);
}

#[test]
fn failed_rows_round_trip_with_their_message() {
    let mut table = run_sweeps(
        &[wban_core::sweep::SweepSpec::new(
            wban_core::Scenario::default(),
            SweepParameter::Rap1Len,
            vec![SweepValue::Number(0.003)],
        )],
        Mode::Analytical,
        1,
    )
    .unwrap();
    assert!(matches!(&table.rows[0].status, RowStatus::Failed(m) if m.contains("infeasible")));
    table.rows[3].status = RowStatus::Failed("quoted, \"odd\"\nmessage".into());
    let back = Table::read_csv(table.to_csv_string().unwrap().as_bytes()).unwrap();
    assert_eq!(back, table);
}

#[test]
fn csv_reader_rejects_foreign_files() {
    let err = Table::read_csv("a,b\n1,2\n".as_bytes()).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");
    let text = run_sweeps(
        &[wban_core::sweep::SweepSpec::new(
            wban_core::Scenario::default(),
            SweepParameter::Ber,
            vec![SweepValue::Number(0.0)],
        )],
        Mode::Analytical,
        1,
    )
    .unwrap()
    .to_csv_string()
    .unwrap();
    let broken = text.replacen("a_reliability", "reliability", 1);
    assert!(matches!(Table::read_csv(broken.as_bytes()), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn comparison_respects_tolerances() {
    let spec = wban_core::sweep::SweepSpec {
        replications: 2,
        horizon: 10.0,
        ..wban_core::sweep::SweepSpec::new(
            wban_core::Scenario::default().with_nodes_per_up(1),
            SweepParameter::Ber,
            vec![SweepValue::Number(0.0)],
        )
    };
    let table = run_sweeps(&[spec], Mode::Both, 1).unwrap();
    let loose = Tolerance { rel: f64::INFINITY, abs: 0.0 };
    let everything = Tolerances { reliability: Some(loose), throughput: Some(loose), energy: Some(loose), delay: Some(loose) };
    let report = compare(&table, &table, &everything).unwrap();
    assert!(report.passed());
    assert_eq!(report.entries.len(), 4 * NUM_UPS);

    let strict = Tolerance { rel: 0.0, abs: 0.0 };
    let report = compare(&table, &table, &Tolerances { reliability: Some(strict), ..everything }).unwrap();
    assert!(!report.passed());
    assert!(report.failures().all(|d| d.metric == Metric::Reliability));

    let mut shorter = table.clone();
    shorter.rows.pop();
    assert!(matches!(compare(&table, &shorter, &everything), Err(Error::Compare(_))));
}
