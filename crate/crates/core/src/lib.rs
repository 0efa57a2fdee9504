//! Graph-based motion planning for multi-robot systems that keep a rigid
//! formation (or switch among several) while carrying a load through a
//! field of disc obstacles.
//!
//! The pipeline: [`cspace`] discretizes centers and angles into valid
//! configurations, [`plangraph`] connects neighbors whose sweeps are clear,
//! checks reachability by breadth-first search and then runs Dijkstra.

pub mod bench;
pub mod carrier;
pub mod cspace;
pub mod envgen;
pub mod formation;
pub mod geometry;
pub mod plangraph;
pub mod render;
pub mod scenario;
pub mod validity;

pub use carrier::{config_valid, sheet_equilibrium, CarrierModel, PayloadState};
pub use cspace::{BoundaryRule, ConfigGrid, Configuration, DiscretizationScales, Stratum};
pub use formation::{place, Formation, SystemPose};
pub use geometry::{ConvexPolygon, Disc, Point2, Rect};
pub use plangraph::{plan, PlanGraph, PlanResult, PlannerOptions};
pub use scenario::{Endpoint, Scenario};
pub use validity::Validator;
