use std::fs;
use std::process::Command;

use dzk_core::lab::{CaseId, EstimateCase, SlopeFit};
use dzk_runner::{emit_reports, parse_config, run_into, ReportRecord, RunnerError, Status};

const QUICK: &str = "grid.nx = 16\ngrid.ny = 16\ngrid.nz = 8\nfamily.count = 3\n";

fn record(reports: Vec<dzk_core::lab::Report>) -> ReportRecord {
    ReportRecord {
        case: "bk-bound".into(),
        status: Status::Pass,
        metrics: Default::default(),
        diagnostics: Vec::new(),
        reports,
        payloads: Vec::new(),
        artifacts: Vec::new(),
    }
}

#[test]
fn unitarity_only_gives_one_passing_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(&format!("{QUICK}estimate.case = unitarity")).unwrap();
    let recs = run_into(&cfg, dir.path()).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].status, Status::Pass);
    assert_eq!(recs[0].artifacts, vec!["unitarity.csv".to_string()]);
    let csv = fs::read_to_string(dir.path().join("unitarity.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("case_id,input_id,param_json,lhs,rhs,ratio\n"));
    let echo = fs::read_to_string(dir.path().join("config.txt")).unwrap();
    assert_eq!(parse_config(&echo).unwrap(), cfg);
}

#[test]
fn empty_records_give_header_only_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = emit_reports(&mut [], dir.path()).unwrap();
    let text = fs::read_to_string(path).unwrap();
    assert_eq!(text, "case_id,status,metrics_json,artifacts,diagnostics\n");
}

#[test]
fn slope_fit_gives_two_column_file_and_collisions_are_versioned() {
    let dir = tempfile::tempdir().unwrap();
    let fit = SlopeFit::new(EstimateCase::new(CaseId::BkBound), "line", vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 5.0]).unwrap();
    let mut recs = vec![record(vec![fit.clone().into()])];
    emit_reports(&mut recs, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("bk-bound-fit.csv")).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data, ["abscissa,ordinate", "0,1", "1,3", "2,5"]);
    assert!(text.ends_with("# slope,residual\n# 2,0\n"));
    let mut again = vec![record(vec![fit.into()])];
    let summary = emit_reports(&mut again, dir.path()).unwrap();
    assert_eq!(again[0].artifacts, vec!["bk-bound-fit.1.csv".to_string()]);
    assert!(summary.ends_with("summary.1.csv"));
    assert_eq!(fs::read_to_string(dir.path().join("bk-bound-fit.csv")).unwrap(), text);
}

#[test]
fn unwritable_directory_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    fs::write(&file, b"x").unwrap();
    assert!(matches!(emit_reports(&mut [], &file.join("sub")), Err(RunnerError::Unwritable { .. })));
}

#[test]
fn same_seed_gives_identical_files() {
    let cfg = parse_config(&format!("{QUICK}estimate.case = unitarity, leibniz-commutator, maximal\nrun.seed = 5")).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_into(&cfg, a.path()).unwrap();
    run_into(&cfg, b.path()).unwrap();
    for name in ["summary.csv", "unitarity.csv", "leibniz-commutator.csv", "maximal.csv", "config.txt"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let other = parse_config(&format!("{QUICK}estimate.case = unitarity\nrun.seed = 6")).unwrap();
    let c = tempfile::tempdir().unwrap();
    run_into(&other, c.path()).unwrap();
    assert_ne!(fs::read(a.path().join("unitarity.csv")).unwrap(), fs::read(c.path().join("unitarity.csv")).unwrap());
}

fn dzk(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dzk")).args(args).output().unwrap()
}

#[test]
fn cli_exit_status_follows_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("quick.conf");
    fs::write(&conf, QUICK).unwrap();
    let out = dir.path().join("out");
    let (c, o) = (conf.to_str().unwrap(), out.to_str().unwrap());
    let ok = dzk(&["verify", "unitarity", "--config", c, "--out", o, "--seed", "3"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(out.join("summary.csv").exists());
    // a family wider than the grid makes the case error out
    fs::write(&conf, format!("{QUICK}family.band = 9,9,9")).unwrap();
    let bad = dzk(&["verify", "unitarity", "--config", c, "--out", o]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(dzk(&["verify", "no-such-case", "--out", o]).status.code(), Some(2));
    fs::write(&conf, "grid.nx = 7").unwrap();
    assert_eq!(dzk(&["suite", "--config", c, "--out", o]).status.code(), Some(2));
}

#[test]
fn bench_writes_timings() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("b.conf");
    fs::write(&conf, format!("{QUICK}bench.repeats = 1")).unwrap();
    let o = dir.path().to_str().unwrap();
    assert!(dzk(&["bench", "--config", conf.to_str().unwrap(), "--out", o]).status.success());
    let text = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
}
