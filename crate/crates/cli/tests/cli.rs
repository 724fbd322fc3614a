use std::fs;
use std::process::{Command, Output};

use cornerbie::harness::RunConfig;
use cornerbie::DomainFamily;

const HEADER: &str = "mu,nu,err_p1,err_p2,err_p3,err_p4,cond";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cornerbie"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn solve_prints_one_csv_row() {
    let out = run(&["solve", "--example", "heart", "--mu", "8", "--nu", "32"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, [HEADER, lines[1]]);
    assert!(lines[1].starts_with("8,32,"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknowns=50 "));
}

#[test]
fn table_writes_every_row_to_the_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let out = run(&[
        "table",
        "--example",
        "teardrop",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0], HEADER);
    assert!(lines[5].starts_with("128,512,"));
}

#[test]
fn json_config_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::preset(DomainFamily::Boomerang);
    cfg.rows.truncate(1);
    let path = dir.path().join("cfg.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();

    let out = run(&["table", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);

    let out = run(&[
        "table",
        "--config",
        path.to_str().unwrap(),
        "--mu",
        "16",
        "--nu",
        "64",
        "--c",
        "300",
    ]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("\n16,64,"));
}

#[test]
fn points_file_sets_the_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.txt");
    fs::write(&path, "# x y\n5 0\n0,7\n").unwrap();
    let out = run(&[
        "solve",
        "--example",
        "triangle",
        "--mu",
        "8",
        "--nu",
        "32",
        "--points",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "mu,nu,err_p1,err_p2,cond");
}

#[test]
fn angle_sweep_writes_phi_and_cond() {
    let out = run(&[
        "angle-sweep",
        "--example",
        "teardrop",
        "--steps",
        "3",
        "--mu",
        "8",
        "--nu",
        "32",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.lines().next().unwrap(), "phi,cond");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_points = dir.path().join("bad.txt");
    fs::write(&bad_points, "1 2 3\n").unwrap();
    let inside = dir.path().join("inside.txt");
    fs::write(&inside, "0.5 0\n").unwrap();
    let broken_json = dir.path().join("broken.json");
    fs::write(&broken_json, "{\"domain\": ").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["solve"],
        vec!["solve", "--example", "heart", "--mu", "8"],
        vec!["solve", "--example", "heart", "--phi", "3.14159"],
        vec!["solve", "--example", "heart", "--mu", "32", "--nu", "32"],
        vec!["solve", "--example", "heart", "--epsilon", "0.7"],
        vec!["solve", "--example", "heart", "--rhs-M", "0"],
        vec![
            "solve",
            "--example",
            "heart",
            "--points",
            bad_points.to_str().unwrap(),
        ],
        vec![
            "solve",
            "--example",
            "heart",
            "--points",
            inside.to_str().unwrap(),
        ],
        vec!["solve", "--config", broken_json.to_str().unwrap()],
        vec!["solve", "--config", "/nonexistent/cfg.json"],
        vec!["angle-sweep", "--example", "triangle"],
        vec!["angle-sweep", "--example", "heart", "--phi-min", "0.5"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(
            code(&out),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn numerical_failures_exit_with_three() {
    let out = run(&[
        "solve",
        "--example",
        "heart",
        "--mu",
        "8",
        "--nu",
        "32",
        "--delta",
        "1e-300",
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["table", "--example", "heart", "--delta", "1e-300"]);
    assert_eq!(code(&out), 3);
    // The table is still written, with NaN cells for the failed rows.
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.contains("NaN"));
}
