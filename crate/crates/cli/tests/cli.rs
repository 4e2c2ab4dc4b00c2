use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pedalshare"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn simulate_fixed_duration_row_count() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("log.csv");
    let o = exec(&[
        "simulate",
        "--scenario",
        path_str(&scenario("closed_loop.toml")),
        "--out",
        path_str(&out),
        "--duration",
        "60",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(csv_rows(&out), 60 * 5);
    assert!(stdout(&o).starts_with("300 rows"));
}

#[test]
fn simulate_missing_file() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nowhere.toml");
    let o = exec(&[
        "simulate",
        "--scenario",
        path_str(&missing),
        "--out",
        path_str(&dir.path().join("x.csv")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere.toml"));
}

#[test]
fn simulate_rejects_polluted_without_transient() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        r#"
[route]
[[route.zone]]
kind = "non_polluted"
start = 0.0
end = 500.0
concentration = 5.0

[[route.zone]]
kind = "polluted"
start = 500.0
end = 900.0
concentration = 80.0
"#,
    )
    .unwrap();
    let o = exec(&[
        "simulate",
        "--scenario",
        path_str(&bad),
        "--out",
        path_str(&dir.path().join("x.csv")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("not preceded by a transient zone"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn usage_error_is_exit_one() {
    assert_eq!(exec(&["simulate"]).status.code(), Some(1));
    assert_eq!(exec(&["--help"]).status.code(), Some(0));
}

#[test]
fn report_composes_with_simulate() {
    let dir = TempDir::new().unwrap();
    let log = dir.path().join("log.csv");
    let summary = dir.path().join("summary.csv");
    let o = exec(&[
        "simulate",
        "--scenario",
        path_str(&scenario("closed_loop.toml")),
        "--out",
        path_str(&log),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = exec(&[
        "report",
        "--log",
        path_str(&log),
        "--out",
        path_str(&summary),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("error percentiles"));

    let table: Vec<(String, f64)> = fs::read_to_string(&summary)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k.to_string(), v.parse().unwrap())
        })
        .collect();
    let get = |key: &str| {
        table
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
            .unwrap()
    };
    assert!(get("error_p5_pct") >= -12.0);
    assert!(get("error_p95_pct") <= 12.0);
    assert!(get("error_p50_pct").abs() <= 2.0);

    let again = exec(&["report", "--log", path_str(&log)]);
    assert_eq!(stdout(&again), stdout(&o));
}

#[test]
fn report_rejects_malformed_log() {
    let dir = TempDir::new().unwrap();
    let log = dir.path().join("junk.csv");
    fs::write(&log, "a,b,c\n1,2,3\n").unwrap();
    assert_eq!(
        exec(&["report", "--log", path_str(&log)]).status.code(),
        Some(1)
    );
}

#[test]
fn replay_counts() {
    let dir = TempDir::new().unwrap();
    let good: String = (0..100)
        .map(|i| format!("36.{i}\t2.5\t18.0\t25.0\t60.0\t55.5\n"))
        .collect();
    let path = dir.path().join("frames.txt");

    fs::write(&path, &good).unwrap();
    let o = exec(&["replay", "--frames", path_str(&path)]);
    assert_eq!(stdout(&o).trim(), "100 ok, 0 errors");

    let corrupted = good.replacen("18.0", "1x.0", 1);
    fs::write(&path, corrupted).unwrap();
    let o = exec(&["replay", "--frames", path_str(&path)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "99 ok, 1 BadNumber");

    fs::write(&path, "").unwrap();
    assert_eq!(
        stdout(&exec(&["replay", "--frames", path_str(&path)])).trim(),
        "0 ok, 0 errors"
    );
}

fn sweep_to(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.path().join(name);
    let scen = scenario("closed_loop.toml");
    let mut args = vec![
        "sweep",
        "--scenario",
        path_str(&scen),
        "--out",
        path_str(&out),
    ];
    args.extend_from_slice(extra);
    let o = exec(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn fitted(o: &Output) -> (f64, f64, f64) {
    let text = stdout(o);
    let field = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line.split_whitespace().nth(2).unwrap().parse().unwrap()
    };
    (field("beta1"), field("beta2"), field("residual_rms"))
}

#[test]
fn fit_recovers_known_line() {
    let dir = TempDir::new().unwrap();
    let sweep = sweep_to(
        &dir,
        "sweep.csv",
        &["--ytilde", "1,4,8,12,16", "--jobs", "3"],
    );
    let o = exec(&["fit-noload", "--sweep", path_str(&sweep)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (b1, b2, rms) = fitted(&o);
    assert!((b1 - 3.0).abs() < 1e-6, "{b1}");
    assert!((b2 - 5.0).abs() < 1e-6, "{b2}");
    assert!(rms < 1e-6);
}

#[test]
fn fit_single_input_fails() {
    let dir = TempDir::new().unwrap();
    let sweep = sweep_to(&dir, "one.csv", &["--ytilde", "9"]);
    let o = exec(&["fit-noload", "--sweep", path_str(&sweep)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_noisy_residual_matches_sigma() {
    let dir = TempDir::new().unwrap();
    let sweep = sweep_to(
        &dir,
        "noisy.csv",
        &[
            "--ytilde",
            "1,3,5,7,9,11,13,15",
            "--noise",
            "1",
            "--seed",
            "3",
        ],
    );
    let (b1, b2, rms) = fitted(&exec(&["fit-noload", "--sweep", path_str(&sweep)]));
    assert!((rms - 1.0).abs() < 0.1, "residual {rms}");
    assert!(
        (b1 - 3.0).abs() < 0.1 && (b2 - 5.0).abs() < 0.5,
        "{b1} {b2}"
    );
}

#[test]
fn sweep_is_independent_of_jobs() {
    let dir = TempDir::new().unwrap();
    let a = sweep_to(
        &dir,
        "a.csv",
        &["--ytilde", "2,6,10,14", "--noise", "2", "--jobs", "1"],
    );
    let b = sweep_to(
        &dir,
        "b.csv",
        &["--ytilde", "2,6,10,14", "--noise", "2", "--jobs", "4"],
    );
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn sweep_rejects_out_of_range_input() {
    let dir = TempDir::new().unwrap();
    let o = exec(&[
        "sweep",
        "--scenario",
        path_str(&scenario("closed_loop.toml")),
        "--ytilde",
        "0,5",
        "--out",
        path_str(&dir.path().join("x.csv")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = exec(&[
            "simulate",
            "--scenario",
            path_str(&scenario("open_loop.toml")),
            "--out",
            path_str(out),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}
