//! Success-rate and timing sweeps over random obstacle fields.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cspace::{densify_with, enumerate_with, DiscretizationScales, Stratum};
use crate::envgen::{derive_seed, generate_environment, EnvGenParams, GenError};
use crate::plangraph::{plan_on, Failure, Mapping, PlannerOptions};
use crate::scenario::Scenario;
use crate::validity::Validator;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchParams {
    pub counts: Vec<usize>,
    pub scales: Vec<DiscretizationScales>,
    /// Densification settings to run; each trial's coarse grid is shared.
    pub densify: Vec<bool>,
    pub trials: usize,
    pub seed: u64,
    /// Radius range, heights and keep-out for generated obstacles; its
    /// `count` and `seed` are overridden per trial.
    pub generator: EnvGenParams,
    #[serde(default)]
    pub planner: PlannerOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub count: usize,
    pub trial: usize,
    pub env_seed: u64,
    pub scales: DiscretizationScales,
    pub densify: bool,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation_error: Option<String>,
    pub vertices: usize,
    pub edges: usize,
    pub mapping_seconds: f64,
    pub planning_seconds: f64,
    pub path_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchCell {
    pub count: usize,
    pub scales: DiscretizationScales,
    pub densify: bool,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_mapping_seconds: f64,
    pub mean_planning_seconds: f64,
    pub mean_total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchReport {
    pub version: u32,
    pub seed: u64,
    pub trials: usize,
    pub cells: Vec<BenchCell>,
    pub records: Vec<TrialRecord>,
}

impl BenchReport {
    pub fn cell(&self, count: usize, scales: &DiscretizationScales, densify: bool) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| c.count == count && c.scales == *scales && c.densify == densify)
    }

    pub fn record(&self, count: usize, trial: usize, scales: &DiscretizationScales, densify: bool) -> Option<&TrialRecord> {
        self.records.iter().find(|r| {
            r.count == count && r.trial == trial && r.scales == *scales && r.densify == densify
        })
    }
}

/// Seed of the obstacle field for one `(count, trial)`; independent of the
/// scales and densification so every setting sees the same environments.
pub fn trial_seed(base: u64, count: usize, trial: usize) -> u64 {
    derive_seed(base, &[count as u64, trial as u64])
}

fn run_trial(template: &Scenario, params: &BenchParams, count: usize, trial: usize) -> Vec<TrialRecord> {
    let env_seed = trial_seed(params.seed, count, trial);
    let gen = EnvGenParams {
        count,
        seed: env_seed,
        ..params.generator.clone()
    };
    let obstacles: Result<_, GenError> = generate_environment(template, &gen);
    let mut out = Vec::new();
    for scales in &params.scales {
        let blank = |densify: bool| TrialRecord {
            count,
            trial,
            env_seed,
            scales: *scales,
            densify,
            success: false,
            failure: None,
            generation_error: None,
            vertices: 0,
            edges: 0,
            mapping_seconds: 0.0,
            planning_seconds: 0.0,
            path_length: 0.0,
        };
        let obstacles = match &obstacles {
            Ok(o) => o.clone(),
            Err(e) => {
                for &d in &params.densify {
                    out.push(TrialRecord {
                        generation_error: Some(e.to_string()),
                        ..blank(d)
                    });
                }
                continue;
            }
        };
        let mut scenario = template.clone();
        scenario.obstacles = obstacles;
        scenario.scales = *scales;
        let validator = Validator::new(&scenario);
        let t = Instant::now();
        let coarse = enumerate_with(&validator);
        let coarse_seconds = t.elapsed().as_secs_f64();
        let mut modes = params.densify.clone();
        // the coarse grid is consumed last
        modes.sort_by_key(|d| !d);
        let mut coarse = Some(coarse);
        for densify in modes {
            let options = PlannerOptions {
                densify,
                ..params.planner
            };
            let mapping = if densify {
                let t = Instant::now();
                let grid = densify_with(coarse.as_ref().unwrap(), &validator, options.boundary_rule);
                Mapping {
                    grid,
                    seconds: coarse_seconds + t.elapsed().as_secs_f64(),
                }
            } else {
                Mapping {
                    grid: coarse.take().unwrap(),
                    seconds: coarse_seconds,
                }
            };
            debug_assert!(densify || mapping.grid.count(Stratum::Densified) == 0);
            let r = plan_on(&scenario, &validator, &mapping, &options);
            log::info!(
                "count {count} trial {trial} g {} densify {densify}: {} ({} vertices, {:.2}s + {:.2}s)",
                scales.g,
                if r.feasible { "ok" } else { "fail" },
                r.stats.vertices,
                r.stats.mapping_seconds,
                r.stats.planning_seconds
            );
            out.push(TrialRecord {
                success: r.feasible && !r.config_path.is_empty(),
                failure: r.failure,
                vertices: r.stats.vertices,
                edges: r.stats.edges,
                mapping_seconds: r.stats.mapping_seconds,
                planning_seconds: r.stats.planning_seconds,
                path_length: r.stats.mean_robot_path_length,
                ..blank(densify)
            });
        }
    }
    out
}

/// Runs every `(count, trial)` environment under every scale setting and
/// densification mode. Trials run in parallel; the report is ordered by
/// count, scales, mode and trial regardless of scheduling.
pub fn run_benchmark(template: &Scenario, params: &BenchParams) -> BenchReport {
    let jobs: Vec<(usize, usize)> = params
        .counts
        .iter()
        .flat_map(|&c| (0..params.trials).map(move |t| (c, t)))
        .collect();
    let mut records: Vec<TrialRecord> = jobs
        .par_iter()
        .flat_map_iter(|&(c, t)| run_trial(template, params, c, t))
        .collect();
    let order = |r: &TrialRecord| {
        (
            params.counts.iter().position(|&c| c == r.count),
            params.scales.iter().position(|s| *s == r.scales),
            params.densify.iter().position(|&d| d == r.densify),
            r.trial,
        )
    };
    records.sort_by_key(order);

    let mut cells = Vec::new();
    for &count in &params.counts {
        for scales in &params.scales {
            for &densify in &params.densify {
                let rs: Vec<&TrialRecord> = records
                    .iter()
                    .filter(|r| r.count == count && r.scales == *scales && r.densify == densify)
                    .collect();
                let n = rs.len().max(1) as f64;
                let successes = rs.iter().filter(|r| r.success).count();
                let mapping = rs.iter().map(|r| r.mapping_seconds).sum::<f64>() / n;
                let planning = rs.iter().map(|r| r.planning_seconds).sum::<f64>() / n;
                cells.push(BenchCell {
                    count,
                    scales: *scales,
                    densify,
                    trials: rs.len(),
                    successes,
                    success_rate: successes as f64 / n,
                    mean_mapping_seconds: mapping,
                    mean_planning_seconds: planning,
                    mean_total_seconds: mapping + planning,
                });
            }
        }
    }
    BenchReport {
        version: REPORT_VERSION,
        seed: params.seed,
        trials: params.trials,
        cells,
        records,
    }
}

/// Plain-text table of a report, one row per cell.
pub fn format_table(report: &BenchReport) -> String {
    let mut s = String::from("count  g      g_min  alpha  densify  success  mapping_s  planning_s  total_s\n");
    for c in &report.cells {
        s += &format!(
            "{:<6} {:<6} {:<6} {:<6} {:<8} {:>3}/{:<4} {:>9.3}  {:>10.3}  {:>7.3}\n",
            c.count,
            c.scales.g,
            c.scales.g_min,
            c.scales.alpha,
            c.densify,
            c.successes,
            c.trials,
            c.mean_mapping_seconds,
            c.mean_planning_seconds,
            c.mean_total_seconds
        );
    }
    s
}
