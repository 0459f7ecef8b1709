use qbc_harness::config::parse_suites;
use qbc_harness::report::{trace_path, AttackEntry, TraceRow};
use qbc_harness::{emit_report, load_report, run_suite, HarnessError, OutputFormat, Report, RunConfig, Suite};

fn quick_attack(d: usize, seed: u64) -> RunConfig {
    let mut c = RunConfig::new(d, seed, vec![Suite::Attack]);
    c.optimizer.restarts = 3;
    c.optimizer.iterations = 60;
    c
}

#[test]
fn same_config_gives_identical_json() {
    let mut c = RunConfig::new(2, 5, parse_suites("hiding,structure,bounds,nogo,lemma").unwrap());
    c.bound_samples = 50;
    let a = run_suite(&c).unwrap().to_json().unwrap();
    let b = run_suite(&c).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    let attack = quick_attack(2, 5);
    assert_eq!(run_suite(&attack).unwrap().to_json().unwrap(), run_suite(&attack).unwrap().to_json().unwrap());
}

#[test]
fn empty_suite_list_echoes_config_only() {
    let c = RunConfig::new(3, u64::MAX, vec![]);
    let r = run_suite(&c).unwrap();
    assert!(r.suites.is_empty() && r.attacks.is_empty() && r.timings.is_empty());
    assert!(r.all_pass());
    let json = r.to_json().unwrap();
    // seed is echoed verbatim, not through f64
    assert!(json.contains("\"seed\": 18446744073709551615"));
    assert!(json.contains("\"suites\": []"));
}

#[test]
fn suites_are_independent_of_each_other() {
    let mut both = RunConfig::new(2, 9, vec![Suite::Bounds, Suite::Nogo]);
    both.bound_samples = 20;
    let mut one = both.clone();
    one.suites = vec![Suite::Nogo];
    let a = run_suite(&both).unwrap();
    let b = run_suite(&one).unwrap();
    assert_eq!(a.entry("nogo.0to1"), b.entry("nogo.0to1"));
}

#[test]
fn json_round_trip_and_csv_traces() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_suite(&quick_attack(2, 1)).unwrap();
    assert_eq!(report.attacks.len(), 2);

    let json = dir.path().join("r.json");
    emit_report(&report, &json, OutputFormat::Json).unwrap();
    assert_eq!(load_report(&json).unwrap(), report);

    let csv = dir.path().join("t.csv");
    let written = emit_report(&report, &csv, OutputFormat::Csv).unwrap();
    assert_eq!(written, vec![trace_path(&csv, "0to1"), trace_path(&csv, "1to0")]);
    for (p, attack) in written.iter().zip(&report.attacks) {
        let text = std::fs::read_to_string(p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("restart,iteration,best_p"));
        assert_eq!(lines.count(), attack.trace.len());
    }
}

#[test]
fn single_attack_csv_goes_to_the_given_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut report = Report::empty(&RunConfig::new(2, 0, vec![]));
    let csv = dir.path().join("t.csv");
    emit_report(&report, &csv, OutputFormat::Csv).unwrap();
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), "restart,iteration,best_p\n");

    let full = run_suite(&quick_attack(2, 3)).unwrap();
    let mut one: AttackEntry = full.attacks[0].clone();
    one.trace = vec![TraceRow { restart: 1, iteration: 0, best_p: 0.125 }];
    report.attacks.push(one);
    emit_report(&report, &csv, OutputFormat::Csv).unwrap();
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), "restart,iteration,best_p\n1,0,0.125\n");
}

#[test]
fn unwritable_path_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let report = Report::empty(&RunConfig::new(2, 0, vec![]));
    let bad = dir.path().join("missing").join("r.json");
    assert!(matches!(emit_report(&report, &bad, OutputFormat::Json), Err(HarnessError::Write { .. })));
    assert!(matches!(load_report(&bad), Err(HarnessError::Read { .. })));
}

#[test]
fn invalid_configs_are_usage_errors() {
    for c in [RunConfig::new(1, 0, vec![]), RunConfig::new(6, 0, vec![Suite::Hiding])] {
        assert!(matches!(run_suite(&c), Err(HarnessError::Usage(_))));
    }
}
