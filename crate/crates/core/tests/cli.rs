mod common;

use std::path::Path;
use std::process::{Command, Output};

use cal_lab::cli::{csv_header, EXIT_CAPACITY, EXIT_CHECK_FAILED, EXIT_PARSE, EXIT_USAGE};
use cal_lab::instance::Instance;
use cal_lab::lowerbounds::gen_lb_instance;
use common::*;
use serde_json::Value;

fn cal_lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cal-lab"))
        .current_dir(dir)
        .env_remove("CAL_LAB_OUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> u8 {
    out.status.code().unwrap() as u8
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_two_edge(dir: &Path) {
    std::fs::write(dir.join("two.json"), Instance::from_prior(&two_edge_prior()).to_json()).unwrap();
}

#[test]
fn two_edge_report() {
    let dir = tempfile::tempdir().unwrap();
    write_two_edge(dir.path());
    let out = cal_lab(dir.path(), &["check", "--instance", "two.json", "--out", "r/two.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let report = read_json(&dir.path().join("r/two.json"));
    assert_eq!(report["instance_id"], "two");
    assert_eq!(report["chain"]["single"], 1.25);
    assert_eq!(report["chain"]["nonfav"], 0.25);
    assert_eq!(report["chain"]["brev"], 1.0);
    assert_eq!(report["chain"]["d"], 2);
    assert_eq!(report["lower_bound"], Value::Null);
    assert_eq!(report["config"]["mode"]["kind"], "exact");
    assert!(report.get("elapsed_ms").is_none());

    let csv = std::fs::read_to_string(dir.path().join("r/two.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), csv_header(false).join(","));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), csv_header(false).len());
    assert_eq!(&row[..5], ["two", report["instance_hash"].as_str().unwrap(), "exact", "2", "2"]);
    assert_eq!(row[8], "1.25");
    assert_eq!(row[9], "0.25");
    assert!(lines.next().is_none());
}

#[test]
fn report_goes_to_stdout_or_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    write_two_edge(dir.path());
    let out = cal_lab(dir.path(), &["check", "--instance", "two.json"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["chain"]["single"], 1.25);

    let env_out = Command::new(env!("CARGO_BIN_EXE_cal-lab"))
        .current_dir(dir.path())
        .env("CAL_LAB_OUT_DIR", "reports")
        .args(["check", "--instance", "two.json"])
        .output()
        .unwrap();
    assert_eq!(code(&env_out), 0);
    assert!(env_out.stdout.is_empty());
    assert_eq!(read_json(&dir.path().join("reports/two.report.json")), report);
    assert!(dir.path().join("reports/two.report.csv").exists());
}

#[test]
fn empty_instance_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.json"), r#"{"m": 2, "edges": []}"#).unwrap();
    let out = cal_lab(dir.path(), &["check", "--instance", "empty.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["single", "nonfav", "core", "tail", "brev", "srev_star_lb", "rev_lp", "dual_bound", "welfare"] {
        assert_eq!(report["chain"][key], 0.0, "{key}");
    }
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.json"), "{\"m\": 2, \"edges\": [").unwrap();
    std::fs::write(d.join("neg.json"), r#"{"m": 1, "edges": [{"items": [0], "support": [{"value": -1, "prob": 1}]}]}"#)
        .unwrap();
    assert_eq!(code(&cal_lab(d, &["check", "--instance", "bad.json"])), EXIT_PARSE);
    assert_eq!(code(&cal_lab(d, &["check", "--instance", "neg.json"])), EXIT_PARSE);

    write_two_edge(d);
    assert_eq!(code(&cal_lab(d, &["check", "--instance", "two.json", "--cap-profiles", "2"])), EXIT_CAPACITY);
    assert_eq!(code(&cal_lab(d, &["check", "--instance", "two.json", "--mode", "mc:0"])), EXIT_USAGE);
    assert_eq!(code(&cal_lab(d, &["check", "--instance", "two.json", "--q", "1.5"])), EXIT_USAGE);
    assert_eq!(code(&cal_lab(d, &["gen", "ph", "--m", "3"])), EXIT_USAGE);
    assert_eq!(code(&cal_lab(d, &["gen", "regular", "--m", "3", "--d", "3"])), EXIT_USAGE);
    // A missing instance file is an I/O failure, distinct from the contract codes.
    let missing = code(&cal_lab(d, &["check", "--instance", "nope.json"]));
    assert!(![0, EXIT_CHECK_FAILED, EXIT_PARSE, EXIT_CAPACITY].contains(&missing));
}

#[test]
fn monte_carlo_mode_runs_past_the_profile_cap() {
    let dir = tempfile::tempdir().unwrap();
    write_two_edge(dir.path());
    let out = cal_lab(
        dir.path(),
        &["check", "--instance", "two.json", "--cap-profiles", "2", "--mode", "mc:4000", "--seed", "3"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["chain"]["rev_lp"], Value::Null);
    assert_eq!(report["config"]["seed"], 3);
}

#[test]
fn gen_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cal_lab(d, &["gen", "lb", "--edges", "{1};{2}", "--a", "10", "--out", "lb.json"])), 0);
    let parsed = Instance::parse_prior(&std::fs::read_to_string(d.join("lb.json")).unwrap()).unwrap();
    assert_eq!(parsed, gen_lb_instance(&[edge(&[1]), edge(&[2])], 10).unwrap().prior);

    let out = cal_lab(d, &["gen", "ph", "--m", "3", "--k", "2"]);
    assert_eq!(code(&out), 0);
    let ph = Instance::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(ph.edges.len(), 6);

    let a = cal_lab(d, &["gen", "random", "--m", "2", "--seed", "7"]);
    let b = cal_lab(d, &["gen", "random", "--m", "2", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(Instance::parse(&String::from_utf8(a.stdout).unwrap()).unwrap().m, 2);
    assert_ne!(cal_lab(d, &["gen", "random", "--m", "2", "--seed", "8"]).stdout, b.stdout);
}

#[test]
fn lower_bound_instances_are_recognized() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cal_lab(d, &["gen", "regular", "--m", "3", "--d", "2", "--out", "tri.json"])), 0);
    let out = cal_lab(d, &["check", "--instance", "tri.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["lower_bound"]["a"], 10);
    assert_eq!(report["lower_bound"]["edges"], 3);
    assert!(report["chain"]["rev_lp"].as_f64().unwrap() > 2.99);
}

#[test]
fn sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = cal_lab(d, &["sweep", "--count", "0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "inequality,passed,failed,skipped,min_slack,median_slack,max_slack\n"
            .to_string()
            + &cal_lab::duality::INEQUALITY_NAMES.map(|n| format!("{n},0,0,0,,,\n")).concat()
    );

    let args = ["sweep", "--count", "12", "--m-min", "1", "--m", "3", "--seed", "99", "--out", "s/run.csv"];
    assert_eq!(code(&cal_lab(d, &args)), 0);
    let first = std::fs::read(d.join("s/run.csv")).unwrap();
    let rows = std::fs::read_to_string(d.join("s/run.instances.csv")).unwrap();
    assert_eq!(rows.lines().count(), 13);
    let ids: Vec<&str> = rows.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids.first(), Some(&"random-99"));
    assert_eq!(ids.last(), Some(&"random-110"));
    assert_eq!(code(&cal_lab(d, &args)), 0);
    assert_eq!(std::fs::read(d.join("s/run.csv")).unwrap(), first);

    // Capacity errors become skips, not failures.
    let capped = cal_lab(d, &["sweep", "--count", "5", "--m", "3", "--cap-profiles", "1"]);
    assert_eq!(code(&capped), 0);
    assert!(String::from_utf8_lossy(&capped.stderr).contains("5 over capacity"));
}

#[test]
fn check_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cal_lab(d, &["gen", "random", "--m", "3", "--seed", "21", "--out", "r.json"])), 0);
    let a = cal_lab(d, &["check", "--instance", "r.json", "--mode", "mc:2000", "--seed", "5"]);
    let b = cal_lab(d, &["check", "--instance", "r.json", "--mode", "mc:2000", "--seed", "5"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = cal_lab(d, &["check", "--instance", "r.json", "--mode", "mc:2000", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}
