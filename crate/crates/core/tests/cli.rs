#![cfg(feature = "cli")]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use wbp_core::opt::{GoalSpec, StartConditions};
use wbp_core::pipeline::{BenchmarkSpec, PlanRequest};
use wbp_core::robot::{forward_kinematics, RobotModel, WholeBodyState};
use wbp_core::world::{BoxObstacle, ObstacleKind, Scenario, ScenarioParams};

const Q: [f64; 6] = [0.0, 0.3, 0.6, 0.0, 0.5, 0.0];

fn wbp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wbp")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, v: &impl serde::Serialize) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn read(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn request(goal_base: [f64; 3], base_goal: Option<[f64; 2]>) -> PlanRequest {
    let robot = RobotModel::default_mobile_manipulator();
    PlanRequest {
        start: StartConditions::at_rest(WholeBodyState { x: -3.0, y: 0.0, theta: 0.0, q: Q.to_vec() }),
        goal: GoalSpec::from_isometry(&forward_kinematics(&robot, goal_base, &Q)),
        base_goal,
        seed: 2,
    }
}

/// Empty room with a planned trajectory, report and request on disk.
fn planned() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "scenario.json", &Scenario::empty([-5.0, -4.0, 5.0, 4.0]));
    write(dir.path(), "request.json", &request([3.0, 0.5, 0.0], Some([3.0, 0.5])));
    let out = wbp(
        &["plan", "--scenario", "scenario.json", "--request", "request.json", "--out", "report.json", "--svg", "plan.svg"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

#[test]
fn plan_in_empty_room_succeeds() {
    let dir = planned();
    let report = read(dir.path(), "report.json");
    assert_eq!(report["status"], "success");
    assert!(report["best"]["T"].as_array().is_some_and(|t| !t.is_empty()));
}

#[test]
fn plan_svg_is_well_formed() {
    let dir = planned();
    let text = std::fs::read_to_string(dir.path().join("plan.svg")).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count() >= 2);
}

#[test]
fn plan_writes_report_to_stdout() {
    let dir = planned();
    let out = wbp(&["plan", "--scenario", "scenario.json", "--request", "request.json", "--jobs", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, read(dir.path(), "report.json"));
}

#[test]
fn goal_inside_obstacle_fails_every_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::empty([-5.0, -4.0, 5.0, 4.0]);
    s.obstacles.push(BoxObstacle { center: [3.0, 0.0, 0.6], half_extents: [0.5, 0.5, 0.6], yaw: 0.0, kind: ObstacleKind::Cuboid });
    write(dir.path(), "scenario.json", &s);
    let mut req = request([0.0; 3], None);
    req.goal.position = [3.0, 0.0, 0.6];
    write(dir.path(), "request.json", &req);
    let out = wbp(&["plan", "--scenario", "scenario.json", "--request", "request.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["status"], "all_candidates_failed");
}

#[test]
fn closed_wall_has_no_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::empty([-5.0, -4.0, 5.0, 4.0]);
    s.obstacles.push(BoxObstacle { center: [0.0, 0.0, 1.0], half_extents: [0.1, 4.0, 1.0], yaw: 0.0, kind: ObstacleKind::Wall });
    write(dir.path(), "scenario.json", &s);
    write(dir.path(), "request.json", &request([3.0, 0.0, 0.0], Some([3.0, 0.0])));
    let out = wbp(&["plan", "--scenario", "scenario.json", "--request", "request.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_input_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "scenario.json", &Scenario::empty([-5.0, -4.0, 5.0, 4.0]));
    std::fs::write(dir.path().join("request.json"), "{\n  \"start\": {\n    \"state\": 3\n  }\n}").unwrap();
    let out = wbp(&["plan", "--scenario", "scenario.json", "--request", "request.json"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("request.json") && err.contains("line 3"), "{err}");
    let out = wbp(&["plan", "--random", "1", "--jobs", "0"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(wbp(&["launch"], dir.path()).status.code(), Some(4));
}

#[test]
fn validate_round_trip_and_corruption() {
    let dir = planned();
    let d = dir.path();
    for file in ["report.json", "trajectory.json"] {
        if file == "trajectory.json" {
            write(d, file, &read(d, "report.json")["best"]);
        }
        let out = wbp(&["validate", "--trajectory", file, "--scenario", "scenario.json", "--request", "request.json"], d);
        assert_eq!(out.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["passed"], true);
        let families: Vec<&str> = v["families"].as_array().unwrap().iter().map(|f| f["family"].as_str().unwrap()).collect();
        assert_eq!(families.len(), 6);
    }
    let mut t = read(d, "trajectory.json");
    t["channels"]["s"][0][3] = Value::from(40.0);
    write(d, "corrupt.json", &t);
    let out = wbp(&["validate", "--trajectory", "corrupt.json", "--scenario", "scenario.json"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Diamond"));
    let out = wbp(&["validate", "--trajectory", "scenario.json", "--scenario", "scenario.json"], d);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn benchmark_rows_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = BenchmarkSpec { intervals: vec![[3.0, 8.0]], scenario: ScenarioParams::empty([12.0, 8.0]), ..BenchmarkSpec::desk_scale(1, 4) };
    write(d, "spec.json", &spec);
    let a = wbp(&["benchmark", "--spec", "spec.json", "--csv", "a.csv", "--out", "a.json"], d);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = wbp(&["benchmark", "--spec", "spec.json", "--csv", "b.csv", "--jobs", "2"], d);
    assert_eq!(b.status.code(), Some(0));
    let csv_a = std::fs::read(d.join("a.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(d.join("b.csv")).unwrap());
    let mut rows = csv::Reader::from_reader(csv_a.as_slice());
    assert_eq!(rows.records().count(), 1);
    let res = read(d, "a.json");
    let rate = res["intervals"][0]["success_rate"].as_f64().unwrap();
    assert!(rate == 0.0 || rate == 100.0);
}

#[test]
fn gen_scenario_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = wbp(&["gen-scenario", "--seed", "9", "--svg", "s.svg"], d);
    let b = wbp(&["gen-scenario", "--seed", "9"], d);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let s: Scenario = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(s.room, [0.0, 0.0, 20.0, 10.0]);
    roxmltree::Document::parse(&std::fs::read_to_string(d.join("s.svg")).unwrap()).unwrap();
}
