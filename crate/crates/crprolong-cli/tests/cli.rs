use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crprolong"))
}

/// Run with `--out report.json` inside `dir`; returns (exit code, report text).
fn run_out(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = dir.join("report.json");
    let _ = fs::remove_file(&out);
    let status = bin().args(args).arg("--out").arg(&out).output().unwrap().status;
    (status.code().unwrap(), fs::read_to_string(&out).unwrap_or_default())
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn prolong_type_i_one() {
    let d = TempDir::new().unwrap();
    let (code, rep) = run_out(d.path(), &["prolong", "--form", "I", "--p", "1", "--q", "0"]);
    assert_eq!(code, 0);
    let v = json(&rep);
    assert_eq!(v["total_complex"], 10);
    assert_eq!(v["identification"]["name"], "so(3,2)");
    assert_eq!(v["verification"]["passed"], true);
    assert!(rep.ends_with("}\n"));
}

#[test]
fn classify_irregular_exits_two() {
    let d = TempDir::new().unwrap();
    let f = write(d.path(), "s.json", r#"{"n":2,"kernel_rank":1,"hermitian":[[1,0],[0,1]],"operators":[[[1,0],[0,2]]]}"#);
    let (code, rep) = run_out(d.path(), &["classify", &f]);
    assert_eq!(code, 2);
    assert!(json(&rep)["regularity"]["witness"].as_str().unwrap().contains("A^3 is not in C*A"));
}

#[test]
fn validate_singular_exits_one() {
    let d = TempDir::new().unwrap();
    let f = write(d.path(), "s.json", r#"{"n":2,"kernel_rank":1,"hermitian":[[1,0],[0,0]],"operators":[[[1,0],[0,1]]]}"#);
    let (code, rep) = run_out(d.path(), &["validate", &f]);
    assert_eq!(code, 1);
    assert!(json(&rep)["error"].as_str().unwrap().starts_with("DegenerateLeviForm"));
}

#[test]
fn validate_and_classify_descriptor_input() {
    let d = TempDir::new().unwrap();
    let f = write(d.path(), "f.json", r#"{"form":"nilpotent","blocks":[{"k":2,"eps":1},{"k":1,"eps":-1}]}"#);
    let (code, rep) = run_out(d.path(), &["validate", &f]);
    assert_eq!(code, 0);
    assert_eq!(json(&rep)["dim_m"], 9);
    let (code, rep) = run_out(d.path(), &["classify", "--form", "nil", "--blocks", "2+,1-"]);
    assert_eq!(code, 0);
    // a global sign flip of the form relates the two orientations
    assert_eq!(json(&rep)["classification"]["tag"], "nil[2+,1+]");
}

#[test]
fn bad_flags_exit_one() {
    let d = TempDir::new().unwrap();
    for args in [
        &["prolong", "--form", "weak", "--p", "2", "--q", "0"][..],
        &["prolong", "--form", "I", "--p", "0", "--q", "0"],
        &["prolong", "--form", "nil", "--blocks", "4+"],
        &["prolong"],
        &["table", "6"],
        &["golden", "--name", "su(2,2)"],
        &["classify", "--form", "I", "--p", "1", "--format", "csv"],
    ] {
        let (code, rep) = run_out(d.path(), args);
        assert_eq!(code, 1, "{args:?}");
        assert!(json(&rep)["error"].is_string(), "{args:?}");
    }
    for args in [&["prolong", "--max-degree", "0", "--form", "I", "--p", "1"][..], &["frobnicate"]] {
        assert_eq!(bin().args(args).output().unwrap().status.code(), Some(1), "{args:?}");
    }
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn max_degree_cap_is_reported() {
    let d = TempDir::new().unwrap();
    let (code, rep) = run_out(d.path(), &["prolong", "--form", "I", "--p", "1", "--max-degree", "1"]);
    assert_eq!(code, 0);
    let v = json(&rep);
    assert_eq!(v["max_degree_reached"], true);
    assert_eq!(v["identification"]["name"], "unrecognized");
    assert_eq!(v["verification"]["truncated"], true);
}

#[test]
fn emitted_algebra_round_trips() {
    let d = TempDir::new().unwrap();
    let alg = d.path().join("alg.json");
    let (code, report) = run_out(d.path(), &["prolong", "--form", "II", "--p", "1", "--emit-algebra", alg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report_path = write(d.path(), "prolong.json", &report);
    let again = d.path().join("again.json");
    let (code, rep) = run_out(d.path(), &["check-jacobi", alg.to_str().unwrap(), "--resave", again.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(json(&rep)["resave_identical"], true);
    assert_eq!(fs::read(&alg).unwrap(), fs::read(&again).unwrap());
    let (code, rep) = run_out(d.path(), &["check-jacobi", &report_path]);
    assert_eq!(code, 0);
    assert_eq!(json(&rep)["dim"], 15);
}

#[test]
fn corrupted_algebra_exits_three() {
    let d = TempDir::new().unwrap();
    let alg = d.path().join("alg.json");
    run_out(d.path(), &["prolong", "--form", "I", "--p", "1", "--emit-algebra", alg.to_str().unwrap()]);
    let mut v = json(&fs::read_to_string(&alg).unwrap());
    let brackets = v["brackets"].as_array_mut().unwrap();
    let b = brackets.iter_mut().find(|b| b["a"][0] == 0 && b["b"][0] == 1).unwrap();
    let re = b["value"][0]["re"].as_str().unwrap().to_string();
    let flipped = re.strip_prefix('-').map_or(format!("-{re}"), str::to_string);
    b["value"][0]["re"] = Value::String(flipped);
    let bad = write(d.path(), "bad.json", &serde_json::to_string_pretty(&v).unwrap());
    let (code, rep) = run_out(d.path(), &["check-jacobi", &bad]);
    assert_eq!(code, 3);
    assert!(json(&rep)["jacobi_violations"].as_u64().unwrap() > 0);
}

#[test]
fn identify_and_golden() {
    let d = TempDir::new().unwrap();
    let (code, rep) = run_out(d.path(), &["identify", "--form", "II", "--p", "2", "--verify", "fast"]);
    assert_eq!(code, 0);
    let v = json(&rep);
    assert_eq!(v["identification"]["name"], "so*(8)");
    assert_eq!(v["verification"]["jacobi_skipped"], true);
    let (code, rep) = run_out(d.path(), &["golden", "--name", "so(4,2)"]);
    assert_eq!(code, 0);
    let v = json(&rep);
    assert_eq!(v["fingerprint"]["killing_signature"], serde_json::json!([8, 7]));
    assert_eq!(v["verification"]["jacobi_violations"], 0);
}

#[test]
fn weak_profile_flag() {
    let d = TempDir::new().unwrap();
    let (code, rep) = run_out(d.path(), &["prolong", "--form", "weak", "--p", "2", "--q", "1", "--profile", "1,1,-"]);
    assert_eq!(code, 0);
    let v = json(&rep);
    assert_eq!(v["family"], "weak(2,1;1,1;-)");
    assert_eq!(v["identification"]["name"], "g0-only");
}

#[test]
fn fast_and_full_agree_on_dimensions() {
    let d = TempDir::new().unwrap();
    let (_, full) = run_out(d.path(), &["prolong", "--form", "nil", "--blocks", "3+,1+"]);
    let (_, fast) = run_out(d.path(), &["prolong", "--form", "nil", "--blocks", "3+,1+", "--verify", "fast"]);
    let (full, fast) = (json(&full), json(&fast));
    assert_eq!(full["dims"], fast["dims"]);
    assert_eq!(full["algebra"], fast["algebra"]);
    assert_eq!(full["identification"], fast["identification"]);
}

#[test]
fn table_is_reproducible_in_every_format() {
    let d = TempDir::new().unwrap();
    for fmt in ["json", "csv", "md"] {
        let (c1, a) = run_out(d.path(), &["table", "5", "7", "--format", fmt]);
        let (c2, b) = run_out(d.path(), &["table", "5", "7", "--format", fmt]);
        assert_eq!((c1, c2), (0, 0));
        assert_eq!(a, b, "{fmt}");
    }
    let (_, csv_text) = run_out(d.path(), &["table", "7", "--format", "csv"]);
    let rows_part = csv_text.split("\n\n").next().unwrap();
    let mut rd = csv::Reader::from_reader(rows_part.as_bytes());
    let totals: Vec<String> = rd.records().map(|r| r.unwrap()[6].to_string()).collect();
    assert_eq!(totals, ["15", "15", "15", "10", "10", "16"]);
    let (_, j) = run_out(d.path(), &["table", "7"]);
    let s = &json(&j)["summary"][0];
    assert_eq!((s["strongly_non_nilpotent"].as_u64(), s["nilpotent_max"].as_u64()), (Some(15), Some(16)));
}
