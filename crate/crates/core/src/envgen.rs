//! Random obstacle fields.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Disc, Point2};
use crate::scenario::Scenario;
use crate::validity::Validator;

/// Attempts per obstacle before giving up.
pub const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("radius range must satisfy 0 < min <= max, got [{0}, {1}]")]
    RadiusRange(f64, f64),
    #[error("height counts sum to {got}, expected {want}")]
    HeightCounts { got: usize, want: usize },
    #[error("heights must be finite and non-negative")]
    BadHeight,
    #[error("clearance must be finite and non-negative")]
    BadClearance,
    #[error("the start or goal configuration is invalid even without obstacles")]
    Premise,
    #[error("could not place obstacle {index} after {MAX_ATTEMPTS} attempts")]
    Exhausted { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum HeightChoices {
    /// Height 0: every obstacle blocks robots and payloads alike.
    AllBlocking,
    /// Exactly `count` obstacles get each `height`, in shuffled order.
    Counts { choices: Vec<HeightCount> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeightCount {
    pub height: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvGenParams {
    pub count: usize,
    pub radius_range: [f64; 2],
    #[serde(default = "all_blocking")]
    pub heights: HeightChoices,
    pub seed: u64,
    /// Extra keep-out distance: no obstacle edge comes closer than this to
    /// the start or goal center.
    #[serde(default)]
    pub clearance: f64,
}

fn all_blocking() -> HeightChoices {
    HeightChoices::AllBlocking
}

impl EnvGenParams {
    /// Radii uniform in `[0.05, 0.1]`, all obstacles blocking.
    pub fn uniform(count: usize, seed: u64) -> Self {
        EnvGenParams {
            count,
            radius_range: [0.05, 0.1],
            heights: HeightChoices::AllBlocking,
            seed,
            clearance: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let [lo, hi] = self.radius_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(GenError::RadiusRange(lo, hi));
        }
        if !(self.clearance >= 0.0 && self.clearance.is_finite()) {
            return Err(GenError::BadClearance);
        }
        if let HeightChoices::Counts { choices } = &self.heights {
            let got: usize = choices.iter().map(|c| c.count).sum();
            if got != self.count {
                return Err(GenError::HeightCounts { got, want: self.count });
            }
            if choices.iter().any(|c| !(c.height >= 0.0 && c.height.is_finite())) {
                return Err(GenError::BadHeight);
            }
        }
        Ok(())
    }
}

/// Mixes a base seed with extra words; distinct inputs give unrelated seeds.
pub fn derive_seed(base: u64, words: &[u64]) -> u64 {
    let mut h = splitmix(base);
    for &w in words {
        h = splitmix(h ^ splitmix(w.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws obstacles over the scenario's workspace, rejecting any that would
/// invalidate the start or goal configuration. The template's own obstacles
/// are ignored.
pub fn generate_environment(template: &Scenario, params: &EnvGenParams) -> Result<Vec<Disc>, GenError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut heights: Vec<f64> = match &params.heights {
        HeightChoices::AllBlocking => vec![0.0; params.count],
        HeightChoices::Counts { choices } => choices
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.height, c.count))
            .collect(),
    };
    heights.shuffle(&mut rng);

    let mut probe = template.clone();
    probe.obstacles.clear();
    let endpoints = [
        (probe.formation_index(&probe.start.formation), probe.start.pose),
        (probe.formation_index(&probe.goal.formation), probe.goal.pose),
    ];
    {
        let v = Validator::new(&probe);
        if endpoints.iter().any(|(f, pose)| f.is_none_or(|f| !v.is_valid(f, pose))) {
            return Err(GenError::Premise);
        }
    }

    let ws = template.workspace;
    let [lo, hi] = params.radius_range;
    let mut out = Vec::with_capacity(params.count);
    for (index, &height) in heights.iter().enumerate() {
        let mut placed = None;
        for _ in 0..MAX_ATTEMPTS {
            let center = Point2::new(rng.gen_range(ws.min.x..=ws.max.x), rng.gen_range(ws.min.y..=ws.max.y));
            let radius = if lo < hi { rng.gen_range(lo..=hi) } else { lo };
            let disc = Disc::with_height(center, radius, height);
            if endpoints
                .iter()
                .any(|(_, pose)| pose.p.distance(center) - radius < params.clearance)
            {
                continue;
            }
            // validity is a conjunction over obstacles, so testing the new
            // disc alone suffices
            probe.obstacles = vec![disc];
            let v = Validator::new(&probe);
            if endpoints.iter().all(|(f, pose)| v.is_valid(f.unwrap(), pose)) {
                placed = Some(disc);
                break;
            }
        }
        out.push(placed.ok_or(GenError::Exhausted { index })?);
    }
    Ok(out)
}
