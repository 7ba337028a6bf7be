use std::path::Path;
use std::process::{Command, Output};

use gtsample::PlantedFamily;

fn gtsample(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gtsample")).args(args).output().expect("run gtsample")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_family(dir: &Path) -> std::path::PathBuf {
    let fam = dir.join("fam.json");
    let o = gtsample(&["generate", "--n", "300", "--k2", "40", "--k3", "40", "--k4", "40", "--k5", "400", "--seed", "3", "-o", p(&fam)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    fam
}

#[test]
fn generate_writes_requested_counts() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam.json");
    let o = gtsample(&["generate", "--n", "1000", "--k2", "200", "--k3", "100", "--k4", "50", "--seed", "7", "-o", p(&fam)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("k2=200 k3=100 k4=50"));
    let family = PlantedFamily::from_json(&std::fs::read_to_string(&fam).unwrap()).unwrap();
    assert_eq!(family.planted().len(), 350);
    assert_eq!(family.universe_size(), 1000);
    assert_eq!(family.seed(), 7);
}

#[test]
fn generate_empty_family_warns() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("empty.json");
    let o = gtsample(&["generate", "--n", "10", "--k2", "0", "-o", p(&fam)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    let family = PlantedFamily::from_json(&std::fs::read_to_string(&fam).unwrap()).unwrap();
    assert!(family.planted().is_empty());
}

#[test]
fn generate_rejects_singletons_and_infeasible_counts() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("x.json");
    let o = gtsample(&["generate", "--n", "10", "--k1", "5", "-o", p(&fam)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--k1"));
    let o = gtsample(&["generate", "--n", "5", "--k2", "11", "-o", p(&fam)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--k2"));
    assert!(!fam.exists());
}

#[test]
fn run_writes_log_summary_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let fam = small_family(dir.path());
    let out = dir.path().join("out");
    let args = [
        "run", "--family", p(&fam), "--a0", "16,48", "--runs", "200", "--kmin", "2", "--kmax", "4", "--tmax", "20", "--pfn", "0.01",
        "--seed", "42", "-o", p(&out),
    ];
    let o = gtsample(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("a0=")).count(), 2);

    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows.len(), 1 + 2 * 2);
    assert!(rows[0].starts_with("algorithm,a0,T_label,finds,"));
    assert!(rows[1].starts_with("sight,16,fam,"));
    assert!(rows[4].starts_with("rc,48,fam,"));

    let log = std::fs::read_to_string(out.join("runs.ndjson")).unwrap();
    assert_eq!(log.lines().count(), 2 * 2 * 200);
    let echo = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(echo.contains("a0 = 16,48\n") && echo.contains("seed = 42\n"));

    // the echoed config reproduces the run
    let again = dir.path().join("again");
    let o = gtsample(&["run", "--config", p(&out.join("config.txt")), "-o", p(&again)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["runs.ndjson", "summary.csv", "config.txt"] {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let fam = small_family(dir.path());
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, format!("family = {}\na0 = 16\nruns = 50\nseed = 1\n", fam.display())).unwrap();
    let out = dir.path().join("out");
    let o = gtsample(&["run", "--config", p(&cfg), "--runs", "30", "--label", "T9", "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let echo = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(echo.contains("runs = 30\n") && echo.contains("label = T9\n"));
    assert_eq!(std::fs::read_to_string(out.join("runs.ndjson")).unwrap().lines().count(), 60);
}

#[test]
fn run_validation_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let fam = small_family(dir.path());
    let out = dir.path().join("out");
    let o = gtsample(&["run", "--family", p(&fam), "--a0", "2", "--kmax", "4", "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--a0"));
    let o = gtsample(&["run", "--family", p(&fam), "--a0", "16", "--pfn", "1.5", "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--pfn"));
    let o = gtsample(&["run", "--family", p(&dir.path().join("missing.json")), "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(3));
    let o = gtsample(&["run", "--family", p(&fam), "--a0", "16", "--runs", "5", "-o", p(&fam.join("sub"))]);
    assert_eq!(o.status.code(), Some(3));
    let o = gtsample(&["run", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bounds_subcommand() {
    let o = gtsample(&["bounds", "--a0", "16", "--kmin", "2", "--kmax", "4", "--tmax", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("sight_max_tests  28\n"));
    assert!(text.contains("schedule         [16,11,8,6]\n"));
    assert!(text.contains("rc_max_tests     111\n"));
    assert!(text.contains("rc_max_positive  5\n"));

    let o = gtsample(&["bounds", "--a0", "176", "--kmin", "2", "--kmax", "4", "--tmax", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("sight_max_tests  44\n"));
    assert!(text.contains("schedule         [176,88,44,22,11,8,6]\n"));
    assert!(text.contains("schedule_len     7\n"));

    let o = gtsample(&["bounds", "--a0", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stats_recomputes_summary_from_log() {
    let dir = tempfile::tempdir().unwrap();
    let fam = small_family(dir.path());
    let out = dir.path().join("out");
    let o = gtsample(&["run", "--family", p(&fam), "--a0", "16,80", "--runs", "150", "--pfn", "0.02", "--seed", "8", "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let again = dir.path().join("stats.csv");
    let o = gtsample(&["stats", "--log", p(&out.join("runs.ndjson")), "--label", "fam", "-o", p(&again)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(out.join("summary.csv")).unwrap(), std::fs::read(&again).unwrap());

    let bad = dir.path().join("bad.ndjson");
    std::fs::write(&bad, "{not json}\n").unwrap();
    let o = gtsample(&["stats", "--log", p(&bad), "-o", p(&again)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn version_and_help() {
    let o = gtsample(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("gtsample "));
    let o = gtsample(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["generate", "run", "bounds", "stats"] {
        assert!(stdout(&o).contains(sub));
    }
}
