//! Planning problem description and its JSON document form.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::carrier::CarrierModel;
use crate::cspace::DiscretizationScales;
use crate::formation::{Formation, SystemPose};
use crate::geometry::{Disc, Point2, Rect};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unsupported document version {0} (expected {SCENARIO_VERSION})")]
    Version(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A system pose plus the formation the system holds there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawEndpoint", into = "RawEndpoint")]
pub struct Endpoint {
    pub pose: SystemPose,
    pub formation: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEndpoint {
    p: Point2,
    theta: f64,
    formation: String,
}

impl From<RawEndpoint> for Endpoint {
    fn from(r: RawEndpoint) -> Self {
        Endpoint::new(SystemPose::new(r.p, r.theta), r.formation)
    }
}

impl From<Endpoint> for RawEndpoint {
    fn from(e: Endpoint) -> Self {
        RawEndpoint {
            p: e.pose.p,
            theta: e.pose.theta,
            formation: e.formation,
        }
    }
}

impl Endpoint {
    pub fn new(pose: SystemPose, formation: impl Into<String>) -> Self {
        Endpoint {
            pose,
            formation: formation.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioDocument", into = "ScenarioDocument")]
pub struct Scenario {
    pub workspace: Rect,
    pub robot_radius: f64,
    pub formations: Vec<Formation>,
    pub carrier: CarrierModel,
    pub obstacles: Vec<Disc>,
    pub start: Endpoint,
    pub goal: Endpoint,
    pub scales: DiscretizationScales,
}

/// On-disk form: the scenario fields plus a schema version.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    version: u32,
    workspace: Rect,
    robot_radius: f64,
    formations: Vec<Formation>,
    #[serde(default)]
    carrier: CarrierModel,
    #[serde(default)]
    obstacles: Vec<Disc>,
    start: Endpoint,
    goal: Endpoint,
    scales: DiscretizationScales,
}

impl TryFrom<ScenarioDocument> for Scenario {
    type Error = ScenarioError;

    fn try_from(d: ScenarioDocument) -> Result<Self, Self::Error> {
        if d.version != SCENARIO_VERSION {
            return Err(ScenarioError::Version(d.version));
        }
        let s = Scenario {
            workspace: d.workspace,
            robot_radius: d.robot_radius,
            formations: d.formations,
            carrier: d.carrier,
            obstacles: d.obstacles,
            start: d.start,
            goal: d.goal,
            scales: d.scales,
        };
        s.validate()?;
        Ok(s)
    }
}

impl From<Scenario> for ScenarioDocument {
    fn from(s: Scenario) -> Self {
        ScenarioDocument {
            version: SCENARIO_VERSION,
            workspace: s.workspace,
            robot_radius: s.robot_radius,
            formations: s.formations,
            carrier: s.carrier,
            obstacles: s.obstacles,
            start: s.start,
            goal: s.goal,
            scales: s.scales,
        }
    }
}

impl Scenario {
    pub fn formation_index(&self, id: &str) -> Option<usize> {
        self.formations.iter().position(|f| f.id == id)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        self.workspace
            .validate()
            .map_err(|e| ScenarioError::Invalid(format!("workspace: {e}")))?;
        if !(self.robot_radius > 0.0 && self.robot_radius.is_finite()) {
            return bad(format!("robot_radius must be positive, got {}", self.robot_radius));
        }
        if self.formations.is_empty() {
            return bad("at least one formation is required".into());
        }
        for (i, f) in self.formations.iter().enumerate() {
            f.validate()
                .map_err(|e| ScenarioError::Invalid(format!("formations[{i}]: {e}")))?;
            if self.formations[..i].iter().any(|g| g.id == f.id) {
                return bad(format!("duplicate formation id `{}`", f.id));
            }
        }
        if self.formations.len() > u16::MAX as usize {
            return bad("too many formations".into());
        }
        match &self.carrier {
            CarrierModel::FormationOnly | CarrierModel::RigidObject { .. } => {}
            CarrierModel::SheetPayload {
                grip_height,
                payload_radius,
            } => {
                if !(*grip_height > 0.0 && grip_height.is_finite()) {
                    return bad(format!("grip_height must be positive, got {grip_height}"));
                }
                if !(*payload_radius > 0.0 && payload_radius.is_finite()) {
                    return bad(format!("payload_radius must be positive, got {payload_radius}"));
                }
                if let Some(f) = self.formations.iter().find(|f| f.cable_lengths.is_none()) {
                    return bad(format!("sheet carrier: formation `{}` has no cable_lengths", f.id));
                }
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            o.validate()
                .map_err(|e| ScenarioError::Invalid(format!("obstacles[{i}]: {e}")))?;
        }
        for (name, ep) in [("start", &self.start), ("goal", &self.goal)] {
            if self.formation_index(&ep.formation).is_none() {
                return bad(format!("{name}: unknown formation `{}`", ep.formation));
            }
            if !ep.pose.p.is_finite() || !ep.pose.theta.is_finite() {
                return bad(format!("{name}: pose is not finite"));
            }
            if !self.workspace.contains(ep.pose.p) {
                return bad(format!("{name}: center {:?} outside workspace", ep.pose.p));
            }
        }
        let sf = &self.formations[self.formation_index(&self.start.formation).unwrap()];
        let gf = &self.formations[self.formation_index(&self.goal.formation).unwrap()];
        if sf.robot_count() != gf.robot_count() {
            return bad("start and goal formations have different robot counts".into());
        }
        self.scales
            .validate()
            .map_err(|e| ScenarioError::Invalid(format!("scales: {e}")))?;
        Ok(())
    }

    /// Parses and validates a JSON scenario document.
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: ScenarioDocument = serde_path_to_error::deserialize(de).map_err(|e| {
            ScenarioError::Schema {
                path: e.path().to_string(),
                message: e.into_inner().to_string(),
            }
        })?;
        Scenario::try_from(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
        Scenario::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// The rigid four-robot square crossing a 10 m x 10 m arena from
    /// (1.5, 1.5) to (8.5, 8.5), with no obstacles.
    pub fn square_arena(side: f64, scales: DiscretizationScales) -> Scenario {
        let square = Formation::regular_polygon("square", 4, side, 1.0)
            .expect("square formation is valid");
        Scenario {
            workspace: Rect::sized(10.0, 10.0).unwrap(),
            robot_radius: 0.35,
            formations: vec![square],
            carrier: CarrierModel::FormationOnly,
            obstacles: Vec::new(),
            start: Endpoint::new(SystemPose::new(Point2::new(1.5, 1.5), 0.0), "square"),
            goal: Endpoint::new(SystemPose::new(Point2::new(8.5, 8.5), 0.0), "square"),
            scales,
        }
    }
}

/// Loads a scenario from a file or a JSON string; convenience for
/// `Scenario::load` / `Scenario::from_json`.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    Scenario::from_json(text)
}

pub fn save_scenario(scenario: &Scenario) -> String {
    scenario.to_json()
}
