use std::path::Path;
use std::process::{Command, Output};

fn demosim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_demosim")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

const SMALL: &[&str] = &["--initial-pop", "300", "--tfinal", "2022", "--dt", "monthly"];

fn run_into(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--out", out];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    demosim(&args, dir)
}

#[test]
fn exported_defaults_reproduce_a_run_without_config() {
    let dir = tempfile::tempdir().unwrap();
    ok(&demosim(&["export-defaults", "--out", "defaults.cfg"], dir.path()));
    ok(&run_into(dir.path(), "with", &["--config", "defaults.cfg"]));
    ok(&run_into(dir.path(), "without", &[]));
    for f in ["statistics.csv", "population.txt"] {
        assert_eq!(read(dir.path().join("with").join(f)), read(dir.path().join("without").join(f)), "{f}");
    }
}

#[test]
fn export_defaults_to_stdout_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = demosim(&["export-defaults"], dir.path());
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("basicDivorceRate = 0.06"));
    assert!(text.contains("startMarriedRate = 0.8"));
    assert!(text.contains("clock = daily"));
    std::fs::write(dir.path().join("d.cfg"), &text).unwrap();
    let again = demosim(&["export-defaults"], dir.path());
    assert_eq!(again.stdout, text.as_bytes());
}

#[test]
fn identical_flags_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run_into(dir.path(), "a", &["--seed", "9"]));
    ok(&run_into(dir.path(), "b", &["--seed", "9"]));
    ok(&run_into(dir.path(), "c", &["--seed", "10"]));
    for f in ["statistics.csv", "population.txt"] {
        assert_eq!(read(dir.path().join("a").join(f)), read(dir.path().join("b").join(f)));
        assert_ne!(read(dir.path().join("a").join(f)), read(dir.path().join("c").join(f)));
    }
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.cfg"),
        "seed = 5\ninitialPop = 120\ntFinal = 2021\nclock = weekly\noutputDir = from_config\n",
    )
    .unwrap();
    ok(&demosim(&["run", "--config", "c.cfg", "--seed", "6"], dir.path()));
    let cfg = String::from_utf8(read(dir.path().join("from_config/run.cfg"))).unwrap();
    assert!(cfg.contains("seed = 6\n"), "{cfg}");
    assert!(cfg.contains("initialPop = 120\n"));
    assert!(cfg.contains("clock = weekly\n"));
    ok(&demosim(&["run", "--config", "c.cfg", "--out", "flag_dir", "--initial-pop", "80"], dir.path()));
    let cfg = String::from_utf8(read(dir.path().join("flag_dir/run.cfg"))).unwrap();
    assert!(cfg.contains("seed = 5\n"));
    assert!(cfg.contains("initialPop = 80\n"));
    let stats = String::from_utf8(read(dir.path().join("flag_dir/statistics.csv"))).unwrap();
    assert!(stats.lines().nth(1).unwrap().starts_with("0,2020.00,80,"));
    assert_eq!(stats.lines().count(), 1 + 1 + 52);
}

#[test]
fn replicates_write_per_seed_files_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run_into(dir.path(), "reps", &["--replicates", "3", "--seed", "100"]));
    let reps = dir.path().join("reps");
    for i in 0..3 {
        assert!(reps.join(format!("statistics_r{i}.csv")).exists());
        assert!(reps.join(format!("population_r{i}.txt")).exists());
    }
    ok(&run_into(dir.path(), "single", &["--seed", "101"]));
    assert_eq!(read(reps.join("statistics_r1.csv")), read(dir.path().join("single/statistics.csv")));
    let summary = String::from_utf8(read(reps.join("summary.csv"))).unwrap();
    assert!(summary.starts_with("step,time,alive_mean,alive_var,"));
    assert_eq!(summary.lines().count(), 1 + 1 + 24);
}

#[test]
fn audit_and_thinning_flags() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run_into(dir.path(), "audited", &["--audit", "--stats-every", "6"]));
    let stats = String::from_utf8(read(dir.path().join("audited/statistics.csv"))).unwrap();
    let steps: Vec<&str> = stats.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(steps, ["0", "6", "12", "18", "24"]);
}

#[test]
fn validate_reports_the_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = demosim(&["validate", "--initial-pop", "500"], dir.path());
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: 500 persons"));
}

#[test]
fn errors_exit_nonzero_with_distinct_messages() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 6] = [
        (&["run", "--bogus"], "--bogus"),
        (&["run", "--dt", "fortnightly"], "fortnightly"),
        (&["run", "--config", "missing.cfg"], "missing.cfg"),
        (&["run", "--tfinal", "2010"], "tFinal"),
        (&["run", "--fertility", "nope.txt"], "fertility"),
        (&["run", "--replicates", "0"], "replicates"),
    ];
    for (args, needle) in cases {
        let out = demosim(args, dir.path());
        assert!(!out.status.success(), "{args:?} succeeded");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{args:?}: {err}");
    }
    std::fs::write(dir.path().join("bad.cfg"), "colour = blue\n").unwrap();
    let out = demosim(&["validate", "--config", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key `colour`"));
}
