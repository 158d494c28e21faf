use std::path::Path;
use std::process::{Command, Output};

fn h2rbox(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_h2rbox")).arg("--out-dir").arg(out).args(args).output().expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("read")).expect("json")
}

#[test]
fn constraints_classifies_each_set() {
    let d = tempfile::tempdir().unwrap();
    let o = h2rbox(d.path(), &["constraints", "--w", "4", "--h", "2", "--theta", "-30", "--dtheta", "45", "--svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&d.path().join("constraints.json"));
    let classes: Vec<&str> = r["results"].as_array().unwrap().iter().map(|x| x["classification"].as_str().unwrap()).collect();
    assert_eq!(classes, ["INFINITE_FAMILY", "TWO_FOLD", "UNIQUE"]);
    let unique = &r["results"][2]["solutions"][0];
    assert!((unique["theta"].as_f64().unwrap() + 30f64.to_radians()).abs() < 1e-6);
    assert!(d.path().join("constraints_residuals.svg").exists());
    assert!(stdout(&o).contains("TWO_FOLD"));
}

#[test]
fn square_boxes_are_flagged() {
    let d = tempfile::tempdir().unwrap();
    let o = h2rbox(d.path(), &["constraints", "--w", "3", "--h", "3", "--theta", "20", "--dtheta", "40"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("DEGENERATE_SQUARE"));
}

#[test]
fn zero_view_rotation_leaves_a_family() {
    let d = tempfile::tempdir().unwrap();
    let o = h2rbox(d.path(), &["constraints", "--w", "4", "--h", "2", "--theta", "30", "--dtheta", "0", "--sets", "hcrc+sc"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&d.path().join("constraints.json"));
    assert_eq!(r["results"][0]["classification"], "INFINITE_FAMILY");
}

#[test]
fn inconsistent_problem_has_no_solution() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("p.json");
    std::fs::write(&p, r#"{"view1_dims": [4.0, 2.0], "view2_dims": [40.0, 1.0], "delta_theta": 0.5}"#).unwrap();
    let o = h2rbox(d.path(), &["constraints", "--problem", p.to_str().unwrap(), "--sets", "hcrc+sc"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn problem_file_rejects_unknown_keys() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("p.json");
    std::fs::write(&p, r#"{"view1_dims": [4, 2], "view2_dims": [4, 2], "delta_theta": 0.5, "extra": 1}"#).unwrap();
    let o = h2rbox(d.path(), &["constraints", "--problem", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(h2rbox(d.path(), &["--bogus"]).status.code(), Some(2));
    assert_eq!(h2rbox(d.path(), &["constraints", "--w", "4"]).status.code(), Some(2));
    assert_eq!(h2rbox(d.path(), &["constraints", "--w", "4", "--h", "2", "--theta", "1", "--dtheta", "9", "--sets", "nope"]).status.code(), Some(2));
    assert_eq!(h2rbox(d.path(), &["recover", "--threads", "0"]).status.code(), Some(2));
    assert_eq!(h2rbox(d.path(), &["recover", "--objects", "5", "--steps", "0"]).status.code(), Some(2));
}

#[test]
fn config_file_unknown_key_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let c = d.path().join("c.json");
    std::fs::write(&c, r#"{"recovery": {"stepz": 3}}"#).unwrap();
    let o = h2rbox(d.path(), &["--config", c.to_str().unwrap(), "check", "--quick"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn iou_suite_and_negative_control() {
    let d = tempfile::tempdir().unwrap();
    let o = h2rbox(d.path(), &["check", "--suite", "iou", "--pairs", "50", "--samples", "20000"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 1);
    assert!(s.starts_with("PASS iou_oracle"));
    let o = h2rbox(d.path(), &["check", "--suite", "iou", "--pairs", "20", "--samples", "20000", "--inject-iou-bug"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL"));
    assert_eq!(json(&d.path().join("check.json"))["iou_fault_injected"], true);
}

#[test]
fn quick_check_runs_every_suite() {
    let d = tempfile::tempdir().unwrap();
    let o = h2rbox(d.path(), &["check", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let names: Vec<String> = json(&d.path().join("check.json"))["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(names.len(), 6);
}

#[test]
fn recover_then_eval_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let scene = d.path().join("scene.json");
    let o = h2rbox(d.path(), &["recover", "--objects", "25", "--steps", "400", "--write-scene", scene.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["recover_report.json", "recover_summary.json", "recover_objects.csv"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(d.path().join("recover_objects.csv")).unwrap();
    assert_eq!(csv.lines().count(), 26);
    assert!(csv.starts_with("object_id,gt_theta_deg,pred_theta_deg"));

    let e = d.path().join("eval");
    let det = d.path().join("recover_report.json");
    let o = h2rbox(&e, &["eval", "--scene", scene.to_str().unwrap(), "--detections", det.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&d.path().join("recover_summary.json"));
    let ev = json(&e.join("eval.json"));
    // same detections, scores only rounded: AP must agree
    assert!((summary["eval"]["ap50"].as_f64().unwrap() - ev["ap50"].as_f64().unwrap()).abs() < 1e-6);

    // replaying the written scene reproduces the run
    let r = d.path().join("replay");
    let o = h2rbox(&r, &["recover", "--scene", scene.to_str().unwrap(), "--steps", "400"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read(r.join("recover_report.json")).unwrap(),
        std::fs::read(d.path().join("recover_report.json")).unwrap()
    );
}

#[test]
fn huge_steps_exit_4() {
    let d = tempfile::tempdir().unwrap();
    let o = h2rbox(d.path(), &["recover", "--objects", "10", "--steps", "30", "--step-size", "1e6"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(json(&d.path().join("recover_summary.json"))["diverged_at"].is_u64());
}

#[test]
fn thread_count_does_not_change_results() {
    let d = tempfile::tempdir().unwrap();
    let a = d.path().join("a");
    let b = d.path().join("b");
    h2rbox(&a, &["--threads", "1", "recover", "--objects", "20", "--steps", "200"]);
    h2rbox(&b, &["--threads", "4", "recover", "--objects", "20", "--steps", "200"]);
    assert_eq!(std::fs::read(a.join("recover_report.json")).unwrap(), std::fs::read(b.join("recover_report.json")).unwrap());
}

#[test]
fn ablate_writes_table() {
    let d = tempfile::tempdir().unwrap();
    let o = h2rbox(d.path(), &["ablate", "--objects", "12", "--steps", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(d.path().join("ablation.csv")).unwrap();
    // header + {ss} x {o2o, o2m} x {crop, pad}
    assert_eq!(csv.lines().count(), 9);
    assert!(d.path().join("ablation.txt").exists());
}
