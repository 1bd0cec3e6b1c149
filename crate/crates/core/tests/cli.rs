use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use greenride::cli::MetricsReport;
use greenride::snapshot::EpochSnapshot;

const SMALL: &str = "fleet_size = 8\nsynthetic_requests = 120\n";

fn greenride(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greenride")).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(greenride(&[]).status.code(), Some(1));
    assert_eq!(greenride(&["run", "--scenario", "steam"]).status.code(), Some(1));
    assert_eq!(greenride(&["run", "--seeds", "0"]).status.code(), Some(1));
    assert_eq!(greenride(&["--help"]).status.code(), Some(0));
    assert_eq!(greenride(&["--version"]).status.code(), Some(0));
}

#[test]
fn bad_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(greenride(&["run", "--config", "/no/such/file.toml", "--out-dir", out]).status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "fleet_size = 8\nno_such_key = 3\n").unwrap();
    assert_eq!(greenride(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", out]).status.code(), Some(2));

    let cfg = small_config(dir.path());
    assert_eq!(greenride(&["run", "--config", &cfg, "--willingness", "1.5", "--out-dir", out]).status.code(), Some(2));
}

#[test]
fn run_writes_metrics_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let res = greenride(&[
        "run",
        "--config",
        &cfg,
        "--scenario",
        "case2",
        "--seeds",
        "2",
        "--seed",
        "5",
        "--trace",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(stdout(&res).starts_with("case2"));

    let report: MetricsReport = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(report.runs.len(), 2);
    assert_eq!(report.summary.seeds, vec![5, 6]);
    for m in &report.runs {
        assert_eq!(m.received_rides, m.completed_rides + m.missed_rides + m.open_rides);
    }
    let series = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 2 * 1080);
    assert!(fs::read_to_string(out.join("bargain_trace.csv")).unwrap().lines().count() > 1);
}

#[test]
fn fossil_has_no_power_loss() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let res = greenride(&["run", "--config", &cfg, "--scenario", "fossil", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    assert!(stdout(&res).contains("PL n/a"), "{}", stdout(&res));
}

#[test]
fn full_sweep_has_fifteen_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let res = greenride(&["sweep", "--config", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(stdout(&res).lines().count(), 15);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 16);
    assert_eq!(csv.lines().filter(|l| l.starts_with("case1")).count(), 3);
}

#[test]
fn single_cell_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let res = greenride(&[
        "sweep",
        "--config",
        &cfg,
        "--weathers",
        "cloudy-morning",
        "--willingness",
        "0.5",
        "--no-case1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0));
    let text = stdout(&res);
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("cloudy_morning") && text.contains("w=0.5"), "{text}");
}

/// Dumps the first epoch from `minute` on and returns its path.
fn dump_epoch(dir: &Path, minute: u32) -> std::path::PathBuf {
    let cfg = dir.join("desk.toml");
    fs::write(&cfg, "fleet_size = 20\nsynthetic_requests = 500\n").unwrap();
    let out = dir.join(format!("dump{minute}"));
    let res = greenride(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--dump-epoch",
        &minute.to_string(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0));
    fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_str().unwrap().starts_with("epoch_"))
        .expect("an epoch was dumped")
}

#[test]
fn certify_dumped_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let (path, snap) = (0..)
        .map(|k| dump_epoch(dir.path(), 300 + 30 * k))
        .map(|p| {
            let snap = EpochSnapshot::load(&p).unwrap();
            (p, snap)
        })
        .find(|(_, s)| s.problem.p() > 0)
        .unwrap();
    assert!(snap.minute >= 300);
    assert_eq!(path.file_name().unwrap().to_str().unwrap(), format!("epoch_{}.json", snap.minute));

    let res = greenride(&["certify", path.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let verdict = if snap.converged { "PASS" } else { "FAIL" };
    assert!(stdout(&res).contains(verdict), "{}", stdout(&res));

    // Move one bid to the far end of the box, away from its best response.
    let mut bent = snap.clone();
    let c = &bent.problem.costs;
    let (i, j) =
        (0..c.m()).flat_map(|i| (0..c.p()).map(move |j| (i, j))).find(|&(i, j)| c.ride_feasible(i, j)).unwrap();
    let b = bent.problem.ride_box;
    let y = &mut bent.ride_incentives[(i, j)];
    *y = if *y > 0.5 * (b.lo + b.hi) { b.lo } else { b.hi };
    let bent_path = dir.path().join("bent.json");
    fs::write(&bent_path, bent.to_json()).unwrap();
    let res = greenride(&["certify", bent_path.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    assert!(stdout(&res).contains("FAIL"), "{}", stdout(&res));

    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    assert_eq!(greenride(&["certify", empty.to_str().unwrap()]).status.code(), Some(2));
}
