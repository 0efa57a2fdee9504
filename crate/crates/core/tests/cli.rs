use std::path::Path;
use std::process::{Command, Output};

use formplan::{DiscretizationScales, Disc, Point2, Scenario};

fn formplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formplan"))
        .args(args)
        .env("FORMPLAN_THREADS", "1")
        .output()
        .unwrap()
}

fn coarse_arena() -> Scenario {
    Scenario::square_arena(1.5, DiscretizationScales::new(0.25, 0.125, std::f64::consts::TAU / 16.0).unwrap())
}

fn walled() -> Scenario {
    let mut s = coarse_arena();
    s.obstacles = (0..=100).map(|k| Disc::new(Point2::new(5.0, k as f64 * 0.1), 0.1)).collect();
    s
}

fn save(s: &Scenario, dir: &Path, name: &str) -> String {
    let p = dir.join(name);
    s.save(&p).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn plan_empty_arena() {
    let dir = tempfile::tempdir().unwrap();
    let scn = save(&coarse_arena(), dir.path(), "empty.json");
    let out = dir.path().join("r.json");
    let svg = dir.path().join("r.svg");
    let o = formplan(&["plan", &scn, "-o", out.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["version"], 1);
    assert_eq!(doc["feasible"], true);
    // 7 m in x and 7 m in y on a 0.25 m lattice, four robots at weight 1
    assert!((doc["total_cost"].as_f64().unwrap() - 56.0).abs() < 1e-9);
    assert_eq!(doc["robot_paths"].as_array().unwrap().len(), 4);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn infeasible_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let scn = save(&walled(), dir.path(), "walled.json");
    let o = formplan(&["feasible", &scn]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).starts_with("no\n"));
    let out = dir.path().join("r.json");
    let o = formplan(&["plan", &scn, "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["feasible"], false);
    assert_eq!(doc["failure"], "unreachable");
}

#[test]
fn feasible_reports_stats_and_honors_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let scn = save(&coarse_arena(), dir.path(), "empty.json");
    let o = formplan(&["feasible", &scn, "--no-densify"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("yes\n"));
    assert!(text.contains("(densified 0)"), "{text}");
    let o = formplan(&["feasible", &scn, "--g", "0.5", "--g-min", "0.25", "--boundary-rule", "axis-neighbors"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = formplan(&["feasible", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.json"));

    let scn = save(&coarse_arena(), dir.path(), "empty.json");
    let o = formplan(&["feasible", &scn, "--g", "0.01"]);
    assert_eq!(o.status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"version": 1, "workspace": 3}"#).unwrap();
    let o = formplan(&["feasible", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("workspace"));
    assert_ne!(formplan(&["nonsense"]).status.code(), Some(0));
}

#[test]
fn gen_writes_a_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let template: serde_json::Value = serde_json::from_str(&coarse_arena().to_json()).unwrap();
    let doc = serde_json::json!({
        "version": 1,
        "scenario": template,
        "generator": {"count": 12, "radius_range": [0.05, 0.1], "seed": 9},
    });
    let params = dir.path().join("gen.json");
    std::fs::write(&params, doc.to_string()).unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = formplan(&["gen", params.to_str().unwrap(), "-o", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let s = Scenario::load(&a).unwrap();
    assert_eq!(s.obstacles.len(), 12);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn bench_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let scn = save(&coarse_arena(), dir.path(), "t.json");
    let out = dir.path().join("report.json");
    let o = formplan(&[
        "bench", &scn, "--counts", "0,10", "--trials", "2", "--seed", "5", "-o", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: formplan::bench::BenchReport =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.cells.len(), 4);
    assert_eq!(report.records.len(), 8);
    assert!(report.cells.iter().filter(|c| c.count == 0).all(|c| c.successes == 2));
    assert!(stdout(&o).lines().count() == 5);
}
