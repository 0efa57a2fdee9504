use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use formplan::scenario::ScenarioError;
use formplan::{
    CarrierModel, ConvexPolygon, Disc, DiscretizationScales, Endpoint, Formation, Point2, Rect, Scenario,
    SystemPose,
};

fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let ws = Rect::new(min, min + Point2::new(rng.gen_range(1.0..20.0), rng.gen_range(1.0..20.0))).unwrap();
    let robots = rng.gen_range(1..=5);
    let sheet = robots >= 3 && rng.gen_bool(0.4);
    let formations: Vec<Formation> = (0..rng.gen_range(1..=3))
        .map(|i| {
            let pts: Vec<Point2> = (0..robots)
                .map(|_| Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let c = pts.iter().fold(Point2::ORIGIN, |a, &p| a + p) * (1.0 / robots as f64);
            let f = Formation::new(format!("f{i}"), pts.iter().map(|&p| p - c).collect(), rng.gen_range(0.1..5.0))
                .unwrap();
            if sheet {
                f.with_cables((0..robots).map(|_| rng.gen_range(0.5..2.0)).collect()).unwrap()
            } else {
                f
            }
        })
        .collect();
    let carrier = if sheet {
        CarrierModel::SheetPayload {
            grip_height: rng.gen_range(0.5..2.0),
            payload_radius: rng.gen_range(0.05..0.3),
        }
    } else if rng.gen_bool(0.3) {
        CarrierModel::RigidObject {
            object_footprint: ConvexPolygon::centered_rectangle(rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0))
                .unwrap(),
        }
    } else {
        CarrierModel::FormationOnly
    };
    let inside = |rng: &mut ChaCha8Rng| {
        Point2::new(rng.gen_range(ws.min.x..ws.max.x), rng.gen_range(ws.min.y..ws.max.y))
    };
    let obstacles = (0..rng.gen_range(0..30))
        .map(|_| {
            let h = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.1..2.0) };
            Disc::with_height(inside(&mut rng), rng.gen_range(0.01..0.5), h)
        })
        .collect();
    let fid = |rng: &mut ChaCha8Rng| format!("f{}", rng.gen_range(0..formations.len()));
    let start = Endpoint::new(SystemPose::new(inside(&mut rng), rng.gen_range(-10.0..10.0)), fid(&mut rng));
    let goal = Endpoint::new(SystemPose::new(inside(&mut rng), rng.gen_range(-10.0..10.0)), fid(&mut rng));
    let g_min = rng.gen_range(0.01..0.2);
    Scenario {
        workspace: ws,
        robot_radius: rng.gen_range(0.01..0.5),
        formations,
        carrier,
        obstacles,
        start,
        goal,
        scales: DiscretizationScales::new(g_min * rng.gen_range(1.0..4.0), g_min, rng.gen_range(0.01..1.0)).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn save_then_load_is_identity(seed in any::<u64>()) {
        let s = random_scenario(seed);
        let text = s.to_json();
        let back = Scenario::from_json(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_json(), text);
    }
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let s = random_scenario(7);
    s.save(&path).unwrap();
    assert_eq!(Scenario::load(&path).unwrap(), s);
}

#[test]
fn errors_name_the_field() {
    let mut v: serde_json::Value = serde_json::from_str(&random_scenario(3).to_json()).unwrap();
    v["workspace"]["min"][0] = serde_json::json!("zero");
    match Scenario::from_json(&v.to_string()) {
        Err(ScenarioError::Schema { path, .. }) => assert_eq!(path, "workspace.min[0]"),
        other => panic!("{other:?}"),
    }
    let mut v: serde_json::Value = serde_json::from_str(&random_scenario(3).to_json()).unwrap();
    v["scales"]["g_min"] = serde_json::json!(0.0);
    assert!(matches!(Scenario::from_json(&v.to_string()), Err(ScenarioError::Invalid(_))));
}
