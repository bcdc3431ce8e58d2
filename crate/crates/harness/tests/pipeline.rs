use std::process::Command;

use wavewall::output::{emit_all, format_csv, format_report, CSV_HEADER};
use wavewall::sweep::sweep;
use wavewall::{parse_config, run_scenario};

fn small(extra: &str, dir: &std::path::Path) -> wavewall::RunConfig {
    parse_config(&format!(
        "geometry.n = 17\ntime.t_end = 0.3\ntime.stride = 4\noutput.dir = {}\n{extra}",
        dir.display()
    ))
    .unwrap()
}

#[test]
fn csv_rows_follow_the_stride_and_repeat_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("initial.amplitude = 0.5", dir.path());
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    let (ca, cb) = (format_csv(&a), format_csv(&b));
    assert_eq!(ca, cb);
    let rec = a.record.as_ref().unwrap();
    let mut lines = ca.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows = lines.filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, rec.steps / 4 + 1);
    let times: Vec<f64> = rec.snapshots.iter().map(|s| s.time).collect();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn global_w1_report_has_the_energy_bound_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("scenario = global_W1\ntime.t_end = 1", dir.path());
    let o = run_scenario(&cfg).unwrap();
    assert!(o.passed(), "{:#?}", o.checks);
    let report = format_report(&o);
    assert!(report.contains("E(t) ≤ cd/(c−2)"));
    assert!(report.contains("== hypotheses"));
    let files = emit_all(&o).unwrap();
    assert!(files.iter().any(|f| f.ends_with("run_class.svg")));
}

#[test]
fn failed_hypotheses_skip_the_run_but_keep_the_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("scenario = blowup_negative\ninitial.amplitude = 0.1", dir.path());
    let o = run_scenario(&cfg).unwrap();
    assert!(o.record.is_none());
    assert!(!o.passed());
    let report = format_report(&o);
    assert!(report.contains("[FAILED] totalE(0)<0"));
    assert!(report.contains("[ok] p>m"));
}

#[test]
fn sweep_returns_one_outcome_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("scenario = blowup_negative\ntime.cap_factor = 1e3\ntime.t_end = 3", dir.path());
    let vals: Vec<String> = ["0.5", "1", "2"].iter().map(|s| s.to_string()).collect();
    let out = sweep(&cfg, "blowup.eps_multiplier", &vals).unwrap();
    assert_eq!(out.len(), 3);
    let eps: Vec<f64> = out.iter().map(|o| o.as_ref().unwrap().eps.unwrap().eps).collect();
    assert!((eps[0] * 2.0 - eps[1]).abs() < 1e-12 * eps[1]);
    assert!((eps[2] - 2.0 * eps[1]).abs() < 1e-12 * eps[1]);
    let seeds: Vec<u64> = out.iter().map(|o| o.as_ref().unwrap().prepared.config.seed).collect();
    assert_eq!(seeds, [cfg.seed, cfg.seed + 1, cfg.seed + 2]);
}

#[test]
fn checkpoint_restart_reproduces_the_final_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("initial.amplitude = 0.5\noutput.checkpoint = true\noutput.plots = false", dir.path());
    let o = run_scenario(&cfg).unwrap();
    emit_all(&o).unwrap();
    let ckpt = dir.path().join("run.ckpt");
    let again = small(&format!("initial.checkpoint = {}\ntime.t_end = 0.31", ckpt.display()), dir.path());
    let p = wavewall::scenario::prepare(&again).unwrap();
    assert_eq!(p.initial, o.record.unwrap().final_state);
}

#[test]
fn readme_documents_every_key() {
    let readme = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md")).unwrap();
    for (key, _, _) in wavewall::config::KEYS {
        assert!(readme.contains(&format!("`{key}`")), "README is missing {key}");
    }
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_wavewall");
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let bad = write("bad.cfg", "geometry.dim = 4\n");
    let unknown = write("unknown.cfg", "geometry.dim = 2\nfoo = 1\n");
    let fails = write("fails.cfg", "geometry.n = 17\nscenario = blowup_negative\ninitial.amplitude = 0.1\n");
    let ok = write("ok.cfg", "geometry.n = 17\nscenario = global_W1\n");
    let code = |args: &[&std::ffi::OsStr]| Command::new(bin).args(args).output().unwrap();
    assert_eq!(code(&["check".as_ref(), bad.as_os_str()]).status.code(), Some(2));
    let out = code(&["check".as_ref(), unknown.as_os_str()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(code(&["check".as_ref(), fails.as_os_str()]).status.code(), Some(1));
    assert_eq!(code(&["check".as_ref(), ok.as_os_str()]).status.code(), Some(0));
}
