//! SVG plots of scenarios and plans. One pixel is one centimeter; the y axis
//! points up.

use std::fmt::Write;

use crate::carrier::CarrierModel;
use crate::formation::place;
use crate::geometry::Point2;
use crate::plangraph::PlanResult;
use crate::scenario::Scenario;
use crate::validity::Validator;

const PX_PER_M: f64 = 100.0;
const LEGEND_W: f64 = 160.0;
const ROBOT_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const HEIGHT_COLORS: [&str; 5] = ["#8c564b", "#bcbd22", "#e377c2", "#7f7f7f", "#17becf"];
/// Robot footprints drawn along the path, endpoints included.
const SNAPSHOTS: usize = 6;

fn fmt(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

struct Frame {
    min: Point2,
    height_px: f64,
}

impl Frame {
    fn x(&self, p: Point2) -> String {
        fmt((p.x - self.min.x) * PX_PER_M)
    }
    fn y(&self, p: Point2) -> String {
        fmt(self.height_px - (p.y - self.min.y) * PX_PER_M)
    }
    fn len(&self, m: f64) -> String {
        fmt(m * PX_PER_M)
    }
}

fn height_color(heights: &[f64], h: f64) -> &'static str {
    if h == 0.0 {
        return "#333333";
    }
    let k = heights.iter().position(|&x| x == h).unwrap_or(0);
    HEIGHT_COLORS[k % HEIGHT_COLORS.len()]
}

/// Draws the workspace, obstacles (colored by height), and, when a plan is
/// given, per-robot polylines with footprints at a few configurations.
pub fn render_svg(scenario: &Scenario, result: Option<&PlanResult>) -> String {
    let ws = scenario.workspace;
    let frame = Frame {
        min: ws.min,
        height_px: ws.height() * PX_PER_M,
    };
    let w = ws.width() * PX_PER_M;
    let mut heights: Vec<f64> = scenario.obstacles.iter().map(|o| o.height).filter(|&h| h > 0.0).collect();
    heights.sort_by(f64::total_cmp);
    heights.dedup();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        fmt(w + LEGEND_W),
        fmt(frame.height_px),
        fmt(w + LEGEND_W),
        fmt(frame.height_px)
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff" stroke="#000000" stroke-width="2"/>"##,
        fmt(w),
        fmt(frame.height_px)
    );
    s += "<g id=\"obstacles\">\n";
    for o in &scenario.obstacles {
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            frame.x(o.center),
            frame.y(o.center),
            frame.len(o.radius),
            height_color(&heights, o.height)
        );
    }
    s += "</g>\n";

    if let Some(r) = result.filter(|r| r.feasible && !r.config_path.is_empty()) {
        s += "<g id=\"paths\" fill=\"none\" stroke-width=\"2\">\n";
        for (k, path) in r.robot_paths.iter().enumerate() {
            let pts: Vec<String> = path.iter().map(|p| format!("{},{}", frame.x(*p), frame.y(*p))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" stroke="{}"/>"#,
                pts.join(" "),
                ROBOT_COLORS[k % ROBOT_COLORS.len()]
            );
        }
        s += "</g>\n<g id=\"footprints\" fill-opacity=\"0.35\">\n";
        let validator = Validator::new(scenario);
        let n = r.config_path.len();
        let mut picks: Vec<usize> = (0..SNAPSHOTS).map(|i| i * (n - 1) / (SNAPSHOTS - 1).max(1)).collect();
        picks.dedup();
        for i in picks {
            let c = &r.config_path[i];
            let pose = c.pose();
            match &scenario.carrier {
                CarrierModel::FormationOnly => {}
                CarrierModel::RigidObject { object_footprint } => {
                    let poly = object_footprint.transformed(pose.theta, pose.p);
                    let pts: Vec<String> = poly.vertices().iter().map(|p| format!("{},{}", frame.x(*p), frame.y(*p))).collect();
                    let _ = writeln!(s, r##"<polygon points="{}" fill="#aaaaaa"/>"##, pts.join(" "));
                }
                CarrierModel::SheetPayload { payload_radius, .. } => {
                    if let Some(st) = validator.payload_at(c.formation, &pose) {
                        let _ = writeln!(
                            s,
                            r##"<circle cx="{}" cy="{}" r="{}" fill="#ffbf00"/>"##,
                            frame.x(st.position),
                            frame.y(st.position),
                            frame.len(*payload_radius)
                        );
                    }
                }
            }
            for (k, p) in place(&scenario.formations[c.formation], &pose).iter().enumerate() {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
                    frame.x(*p),
                    frame.y(*p),
                    frame.len(scenario.robot_radius),
                    ROBOT_COLORS[k % ROBOT_COLORS.len()]
                );
            }
        }
        s += "</g>\n";
    }

    s += "<g id=\"markers\">\n";
    for (ep, color) in [(&scenario.start, "#00a000"), (&scenario.goal, "#c00000")] {
        let p = ep.pose.p;
        let _ = writeln!(
            s,
            r#"<path d="M {} {} l 8 8 m -16 0 l 8 -8 l 8 -8 m -16 0 l 8 8" stroke="{}" stroke-width="3"/>"#,
            frame.x(p),
            frame.y(p),
            color
        );
    }
    s += "</g>\n<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
    let lx = fmt(w + 12.0);
    let mut ly = 20.0;
    let mut entries = vec![("#333333", "blocks all".to_string())];
    for &h in &heights {
        entries.push((height_color(&heights, h), format!("height {} m", fmt(h))));
    }
    for (color, label) in entries {
        let _ = writeln!(s, r#"<circle cx="{lx}" cy="{}" r="6" fill="{color}"/>"#, fmt(ly));
        let _ = writeln!(s, r#"<text x="{}" y="{}">{label}</text>"#, fmt(w + 24.0), fmt(ly + 4.0));
        ly += 20.0;
    }
    s += "</g>\n</svg>\n";
    s
}
