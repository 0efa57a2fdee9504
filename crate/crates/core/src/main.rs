use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use formplan::bench::{format_table, run_benchmark, BenchParams};
use formplan::cspace::{BoundaryRule, DiscretizationScales};
use formplan::envgen::{generate_environment, EnvGenParams};
use formplan::plangraph::{plan, PlanResult, PlannerOptions};
use formplan::render::render_svg;
use formplan::scenario::Scenario;

const EXIT_INFEASIBLE: u8 = 3;
const RESULT_VERSION: u32 = 1;
const GEN_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "formplan", version, about = "Formation motion planner for multi-robot systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report whether the goal is reachable, with graph statistics.
    Feasible {
        scenario: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Plan a path and write the result document.
    Plan {
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write an SVG plot.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Generate a random obstacle field into a scenario.
    Gen {
        /// Document with `version`, `scenario` and `generator`.
        params: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Success rates and timings over random fields.
    Bench {
        /// Scenario whose workspace, formations, start and goal are reused.
        template: PathBuf,
        /// Obstacle counts: `10,30,50` or an inclusive range `10..100[:step]`.
        #[arg(long, default_value = "10..100")]
        counts: String,
        /// Scale settings `g:g_min:alpha`, comma separated; defaults to the template's.
        #[arg(long)]
        scales: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Generator settings (count and seed are ignored); radii 0.05-0.1 m, all blocking by default.
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Only run with densification.
        #[arg(long, conflicts_with = "no_densify")]
        densify: bool,
        /// Only run without densification.
        #[arg(long)]
        no_densify: bool,
        #[arg(long, value_parser = parse_rule)]
        boundary_rule: Option<BoundaryRule>,
    },
}

#[derive(Args)]
struct Tuning {
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    g_min: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Refine cells next to the free-space boundary (default).
    #[arg(long, overrides_with = "no_densify")]
    densify: bool,
    #[arg(long, overrides_with = "densify")]
    no_densify: bool,
    #[arg(long, value_parser = parse_rule)]
    boundary_rule: Option<BoundaryRule>,
    /// Sweep sampling step in meters (default g_min / 2).
    #[arg(long)]
    sweep_step: Option<f64>,
}

impl Tuning {
    fn apply(&self, scenario: &mut Scenario) -> Result<PlannerOptions> {
        let sc = &mut scenario.scales;
        if let Some(g) = self.g {
            sc.g = g;
        }
        if let Some(g) = self.g_min {
            sc.g_min = g;
        }
        if let Some(a) = self.alpha {
            sc.alpha = a;
        }
        sc.validate().context("invalid scale override")?;
        if let Some(step) = self.sweep_step {
            if !(step > 0.0 && step.is_finite()) {
                bail!("--sweep-step must be positive");
            }
        }
        Ok(PlannerOptions {
            densify: !self.no_densify,
            boundary_rule: self.boundary_rule.unwrap_or_default(),
            sweep_step: self.sweep_step,
        })
    }
}

fn parse_rule(s: &str) -> Result<BoundaryRule, String> {
    match s.replace('-', "_").as_str() {
        "axis_neighbors" => Ok(BoundaryRule::AxisNeighbors),
        "planar_projection" => Ok(BoundaryRule::PlanarProjection),
        _ => Err(format!("unknown boundary rule `{s}` (axis-neighbors, planar-projection)")),
    }
}

fn parse_counts(s: &str) -> Result<Vec<usize>> {
    if let Some((lo, rest)) = s.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (hi, step.trim().parse::<usize>()?),
            None => (rest, 10),
        };
        let (lo, hi): (usize, usize) = (lo.trim().parse()?, hi.trim().parse()?);
        if step == 0 || lo > hi {
            bail!("bad count range `{s}`");
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    s.split(',')
        .map(|c| c.trim().parse::<usize>().with_context(|| format!("bad count `{c}`")))
        .collect()
}

fn parse_scales(s: &str) -> Result<Vec<DiscretizationScales>> {
    s.split(',')
        .map(|item| {
            let parts: Vec<f64> = item
                .split(':')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .with_context(|| format!("bad scale setting `{item}`"))?;
            let [g, g_min, alpha] = parts[..] else {
                bail!("scale setting `{item}` must be g:g_min:alpha");
            };
            Ok(DiscretizationScales::new(g, g_min, alpha)?)
        })
        .collect()
}

#[derive(Serialize)]
struct ResultDocument<'a> {
    version: u32,
    #[serde(flatten)]
    result: &'a PlanResult,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenDocument {
    version: u32,
    scenario: serde_json::Value,
    generator: EnvGenParams,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path) -> Result<Scenario> {
    Scenario::from_json(&read(path)?).with_context(|| format!("loading {}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Feasible { scenario, tuning } => {
            let mut s = load(&scenario)?;
            let options = tuning.apply(&mut s)?;
            let r = plan(&s, &options);
            println!("{}", if r.feasible { "yes" } else { "no" });
            println!(
                "vertices {} (densified {}), edges {}, mapping {:.3}s, planning {:.3}s",
                r.stats.vertices,
                r.stats.densified_vertices,
                r.stats.edges,
                r.stats.mapping_seconds,
                r.stats.planning_seconds
            );
            if let Some(f) = r.failure {
                println!("reason: {}", serde_json::to_string(&f)?.trim_matches('"'));
            }
            Ok(if r.feasible { ExitCode::SUCCESS } else { ExitCode::from(EXIT_INFEASIBLE) })
        }
        Command::Plan {
            scenario,
            output,
            svg,
            tuning,
        } => {
            let mut s = load(&scenario)?;
            let options = tuning.apply(&mut s)?;
            let r = plan(&s, &options);
            let doc = ResultDocument {
                version: RESULT_VERSION,
                result: &r,
            };
            write(&output, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
            if let Some(svg) = svg {
                write(&svg, &render_svg(&s, Some(&r)))?;
            }
            if r.feasible {
                println!(
                    "path of {} configurations, cost {:.4}, mean robot path {:.4} m",
                    r.config_path.len(),
                    r.total_cost,
                    r.stats.mean_robot_path_length
                );
                Ok(ExitCode::SUCCESS)
            } else {
                println!("infeasible");
                Ok(ExitCode::from(EXIT_INFEASIBLE))
            }
        }
        Command::Gen { params, output } => {
            let text = read(&params)?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            let doc: GenDocument = serde_path_to_error::deserialize(de)
                .map_err(|e| anyhow::anyhow!("{}: {}", e.path(), e.inner()))?;
            if doc.version != GEN_VERSION {
                bail!("unsupported generator document version {}", doc.version);
            }
            let mut s = Scenario::from_json(&doc.scenario.to_string()).context("generator template")?;
            s.obstacles = generate_environment(&s, &doc.generator)?;
            s.save(&output)?;
            println!("{} obstacles written to {}", s.obstacles.len(), output.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            template,
            counts,
            scales,
            trials,
            seed,
            generator,
            output,
            densify,
            no_densify,
            boundary_rule,
        } => {
            let t = load(&template)?;
            if trials == 0 {
                bail!("--trials must be at least 1");
            }
            let generator = match generator {
                Some(p) => serde_json::from_str(&read(&p)?).context("generator settings")?,
                None => EnvGenParams::uniform(0, 0),
            };
            let params = BenchParams {
                counts: parse_counts(&counts)?,
                scales: match scales {
                    Some(s) => parse_scales(&s)?,
                    None => vec![t.scales],
                },
                densify: match (densify, no_densify) {
                    (true, _) => vec![true],
                    (_, true) => vec![false],
                    _ => vec![false, true],
                },
                trials,
                seed,
                generator,
                planner: PlannerOptions {
                    boundary_rule: boundary_rule.unwrap_or_default(),
                    ..PlannerOptions::default()
                },
            };
            let report = run_benchmark(&t, &params);
            write(&output, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            print!("{}", format_table(&report));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(n) = std::env::var("FORMPLAN_THREADS") {
        match n.parse::<usize>() {
            Ok(n) => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("thread pool: {e}");
                }
            }
            Err(_) => log::warn!("ignoring FORMPLAN_THREADS={n}"),
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
