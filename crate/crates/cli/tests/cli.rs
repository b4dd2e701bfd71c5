use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orlicz-frac"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("orlicz-frac-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn read(base: &Path, suffix: &str) -> String {
    let mut p = base.as_os_str().to_owned();
    p.push(suffix);
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn young_info_reports_power_constants() {
    let out = run(&["young-info", "--family", "power", "--p", "3", "--format", "csv"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.contains("delta2_constant,8.0"), "{csv}");
    assert!(csv.contains("abar_at_one,0.3333333333333333"), "{csv}");
}

#[test]
fn exit_codes_follow_the_taxonomy() {
    let unknown = run(&["young-info", "--family", "power", "--p", "2", "--bogus", "1"]);
    assert_eq!(unknown.status.code(), Some(1));
    let stderr = String::from_utf8(unknown.stderr).unwrap();
    assert!(stderr.starts_with("error: invalid-parameter:"), "{stderr}");

    let missing = run(&["limit", "--family", "power", "--p", "2"]);
    assert_eq!(missing.status.code(), Some(1));

    let bad_grid = run(&["limit", "--family", "power", "--p", "2", "--testfn", "tent", "--s", "0.1,0.2,0.3"]);
    assert_eq!(bad_grid.status.code(), Some(1));
}

#[test]
fn json_sidecar_reproduces_the_run() {
    let dir = scratch("roundtrip");
    let first = dir.join("first");
    let second = dir.join("second");
    let args = ["counterexample", "--s", "0.2,0.1,0.05", "--gamma", "2"];
    assert!(bin().args(args).arg("--out").arg(&first).status().unwrap().success());
    let sidecar = first.with_extension("json");
    let status = bin()
        .args(["counterexample", "--config"])
        .arg(&sidecar)
        .arg("--out")
        .arg(&second)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read(&first, ".csv"), read(&second, ".csv"));
    let doc: serde_json::Value = serde_json::from_str(&read(&first, ".json")).unwrap();
    assert_eq!(doc["provenance"]["command"], "counterexample");
    assert_eq!(doc["result"]["monotone_growth"], true);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn key_value_file_is_overridden_by_flags() {
    let dir = scratch("file");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# quadratic\ncommand = young-info\nfamily = power\np = 3\n").unwrap();
    let out = bin()
        .args(["young-info", "--format", "csv", "--p", "2", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.contains("delta2_constant,4.0"), "{csv}");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn monte_carlo_output_ignores_thread_count() {
    let args = [
        "seminorm", "--family", "power", "--p", "2", "--testfn", "tent", "--s", "0.4", "--method", "mc",
        "--mc-samples", "50000", "--seed", "11", "--format", "csv",
    ];
    let single = bin().args(args).env("ORLICZ_FRAC_THREADS", "1").output().unwrap();
    let many = bin().args(args).env("ORLICZ_FRAC_THREADS", "4").output().unwrap();
    assert!(single.status.success() && many.status.success());
    assert_eq!(single.stdout, many.stdout);
}
