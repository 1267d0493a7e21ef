//! Held-out benchmark: every planner at every budget on the same queries.

mod report;

pub use report::{read_csv, write_csv, write_svg, BenchReport, CellStats, REFERENCE_TABLE};

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{derive_seed, query_rng, scene_for, scene_image, SceneSpec, HELD_OUT_BASE};
use crate::diffusion::NoiseSchedule;
use crate::encoding::WorkspaceImage;
use crate::error::{Error, Result};
use crate::planner::{biased_rrt, rrt, rrt_star, BiasConfig, GeneratorSource, PlannerConfig, PlannerKind, RunRecord};
use crate::wgan::GeneratorModel;
use crate::workspace::{Config, RobotModel, Scene};

/// Overrides the worker count of [`run_benchmark`].
pub const WORKERS_ENV: &str = "WGAN_RRT_WORKERS";

const RUN_STREAM: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Held-out queries to collect.
    pub scenes: usize,
    /// Planning budgets in seconds, tightest first.
    pub budgets: Vec<f64>,
    pub seeds_per_cell: usize,
    pub planners: Vec<PlannerKind>,
    pub planner: PlannerConfig,
    pub bias: BiasConfig,
    pub scene: SceneSpec,
    /// Cells per axis of the grid search that certifies a held-out query
    /// solvable (2-DOF robots); larger robots use a bounded RRT instead.
    pub solvable_grid: usize,
    /// Sample cap of the RRT solvability check for robots above 2 DOF.
    pub solvable_samples: usize,
    /// Concurrent planning calls; `None` reads [`WORKERS_ENV`], else 1.
    pub workers: Option<usize>,
    /// With `false`, a budget of `b` seconds becomes a cap of
    /// `b · samples_per_second` iterations and runs are fully deterministic.
    pub wall_clock: bool,
    pub samples_per_second: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scenes: 300,
            budgets: vec![0.05, 0.1, 0.25],
            seeds_per_cell: 1,
            planners: PlannerKind::ALL.to_vec(),
            planner: PlannerConfig {
                max_samples: 10_000_000,
                ..PlannerConfig::default()
            },
            bias: BiasConfig {
                m: 300,
                ..BiasConfig::default()
            },
            scene: SceneSpec::gapped_walls(),
            solvable_grid: 400,
            solvable_samples: 50_000,
            workers: None,
            wall_clock: true,
            samples_per_second: 100_000.0,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budgets.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::Config("budgets must be positive seconds".into()));
        }
        if self.seeds_per_cell == 0 || self.planners.is_empty() {
            return Err(Error::Config("need at least one planner and one seed per cell".into()));
        }
        if self.workers == Some(0) || !(self.samples_per_second > 0.0) {
            return Err(Error::Config("workers and samples_per_second must be positive".into()));
        }
        if self.solvable_grid < 2 || self.solvable_samples == 0 {
            return Err(Error::Config("solvability check needs a grid of ≥ 2 cells and a positive sample cap".into()));
        }
        self.planner.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.bias.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.scene.validate()
    }

    fn workers(&self) -> Result<usize> {
        if let Some(w) = self.workers {
            return Ok(w);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) => v
                .parse::<usize>()
                .ok()
                .filter(|&w| w > 0)
                .ok_or_else(|| Error::Config(format!("{WORKERS_ENV}={v} is not a positive integer"))),
            Err(_) => Ok(1),
        }
    }

    fn run_config(&self, budget: f64) -> PlannerConfig {
        if self.wall_clock {
            self.planner.with_budget(budget)
        } else {
            PlannerConfig {
                time_budget: None,
                max_samples: ((budget * self.samples_per_second).round() as usize).max(1),
                ..self.planner
            }
        }
    }
}

/// A held-out scene with its query and network input.
#[derive(Clone, Debug, PartialEq)]
pub struct HeldOutQuery {
    pub scene_id: u64,
    pub scene: Scene,
    pub start: Config,
    pub goal: Config,
    pub image: WorkspaceImage,
}

/// Breadth-first search over an `n^2` grid of configurations whose edges pass
/// `motion_free`; a found chain is a collision-free path, so `true` is a
/// certificate. Start and goal attach to the free cells around them.
pub fn grid_solvable(scene: &Scene, start: &Config, goal: &Config, n: usize) -> bool {
    if scene.dof() != 2 || !scene.is_free(start) || !scene.is_free(goal) {
        return false;
    }
    let center = |i: usize, j: usize| Config::clamped(vec![(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64]);
    let cell = |q: &Config| {
        let f = |v: f64| ((v * n as f64) as usize).min(n - 1);
        (f(q.as_slice()[0]), f(q.as_slice()[1]))
    };
    let around = |q: &Config| {
        let (ci, cj) = cell(q);
        let mut out = Vec::new();
        for i in ci.saturating_sub(1)..=(ci + 1).min(n - 1) {
            for j in cj.saturating_sub(1)..=(cj + 1).min(n - 1) {
                let c = center(i, j);
                if scene.is_free(&c) && scene.motion_free(q, &c) {
                    out.push(i * n + j);
                }
            }
        }
        out
    };
    let targets = around(goal);
    if scene.motion_free(start, goal) {
        return true;
    }
    let mut is_target = vec![false; n * n];
    for &t in &targets {
        is_target[t] = true;
    }
    let mut seen = vec![false; n * n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for s in around(start) {
        seen[s] = true;
        queue.push_back(s);
    }
    while let Some(k) = queue.pop_front() {
        if is_target[k] {
            return true;
        }
        let (i, j) = (k / n, k % n);
        let here = center(i, j);
        let neighbors = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
        for (a, b) in neighbors {
            if a >= n || b >= n || seen[a * n + b] {
                continue;
            }
            let there = center(a, b);
            if scene.is_free(&there) && scene.motion_free(&here, &there) {
                seen[a * n + b] = true;
                queue.push_back(a * n + b);
            }
        }
    }
    false
}

fn solvable(scene: &Scene, start: &Config, goal: &Config, cfg: &BenchConfig, scene_id: u64) -> Result<bool> {
    if scene.dof() == 2 {
        return Ok(grid_solvable(scene, start, goal, cfg.solvable_grid));
    }
    let pc = PlannerConfig {
        max_samples: cfg.solvable_samples,
        time_budget: None,
        ..cfg.planner
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, RUN_STREAM, scene_id ^ u64::MAX));
    Ok(rrt(scene, start, goal, &pc, &mut rng)?.success)
}

/// The first `cfg.scenes` solvable queries among scene ids from
/// [`HELD_OUT_BASE`] upward. Training ids all lie below that base, so the
/// sets never overlap.
pub fn held_out_queries(cfg: &BenchConfig) -> Result<Vec<HeldOutQuery>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.scenes);
    let limit = cfg.scenes.saturating_mul(20).max(100) as u64;
    let mut tried = 0u64;
    while out.len() < cfg.scenes {
        if tried == limit {
            return Err(Error::Generation(format!(
                "only {} solvable held-out queries among {limit} scenes",
                out.len()
            )));
        }
        // Batches of candidates are checked in parallel and consumed in id order.
        let batch: Vec<u64> = (tried..limit.min(tried + 32)).map(|k| HELD_OUT_BASE + k).collect();
        tried += batch.len() as u64;
        let found: Vec<Option<HeldOutQuery>> = batch
            .par_iter()
            .map(|&scene_id| {
                assert!(scene_id >= HELD_OUT_BASE, "held-out ids must not overlap training ids");
                let scene = scene_for(cfg.seed, scene_id, &cfg.scene)?;
                let mut rng = query_rng(cfg.seed, scene_id, 0);
                let Ok((start, goal)) = cfg.scene.query.sample(&scene, &mut rng) else {
                    return Ok(None);
                };
                if !solvable(&scene, &start, &goal, cfg, scene_id)? {
                    return Ok(None);
                }
                let image = scene_image(&scene, &start, &goal)?;
                Ok(Some(HeldOutQuery {
                    scene_id,
                    scene,
                    start,
                    goal,
                    image,
                }))
            })
            .collect::<Result<_>>()?;
        out.extend(found.into_iter().flatten().take(cfg.scenes - out.len()));
    }
    Ok(out)
}

/// What the biased planner queries.
#[derive(Clone, Copy)]
pub struct Guidance<'a> {
    pub generator: &'a GeneratorModel,
    pub schedule: &'a NoiseSchedule,
    pub inference_t: usize,
}

/// Lengths are reported in radians for arms (joint values are scaled turns).
pub fn length_scale(robot: &RobotModel) -> (f64, &'static str) {
    match robot {
        RobotModel::Point => (1.0, "units"),
        _ => (std::f64::consts::TAU, "rad"),
    }
}

/// Runs every (query, planner, budget, seed) cell. Runs execute on
/// `workers` threads, one planning call per thread, and come back sorted by
/// (scene, planner, budget, seed). Planners share the per-(scene, seed)
/// random stream, so the comparison is paired.
pub fn run_benchmark(queries: &[HeldOutQuery], cfg: &BenchConfig, guidance: Option<Guidance<'_>>) -> Result<(BenchReport, Vec<RunRecord>)> {
    cfg.validate()?;
    if cfg.planners.contains(&PlannerKind::BiasedRrt) {
        let g = guidance.ok_or_else(|| Error::Config("biased_rrt needs a generator checkpoint".into()))?;
        if let Some(q) = queries.iter().find(|q| q.scene.dof() != g.generator.dim()) {
            return Err(Error::Config(format!(
                "checkpoint predicts {}-DOF paths but scene {} has a {}-DOF robot",
                g.generator.dim(),
                q.scene_id,
                q.scene.dof()
            )));
        }
        g.schedule.check_t(g.inference_t).map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut jobs = Vec::new();
    for (qi, q) in queries.iter().enumerate() {
        let mut planners = cfg.planners.clone();
        planners.sort();
        planners.dedup();
        for &p in &planners {
            for (bi, &b) in cfg.budgets.iter().enumerate() {
                for s in 0..cfg.seeds_per_cell as u64 {
                    let seed = derive_seed(cfg.seed, RUN_STREAM, q.scene_id.wrapping_mul(1 << 16).wrapping_add(s));
                    jobs.push((q.scene_id, p, bi, s, qi, b, seed));
                }
            }
        }
    }
    jobs.sort_by_key(|a| (a.0, a.1, a.2, a.3));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers()?)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let records: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(scene_id, planner, _, _, qi, budget, seed)| {
                let q = &queries[qi];
                let pc = cfg.run_config(budget);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let r = match planner {
                    PlannerKind::Rrt => rrt(&q.scene, &q.start, &q.goal, &pc, &mut rng)?,
                    PlannerKind::RrtStar => rrt_star(&q.scene, &q.start, &q.goal, &pc, &mut rng)?,
                    PlannerKind::BiasedRrt => {
                        let g = guidance.expect("checked above");
                        let source = GeneratorSource {
                            generator: g.generator,
                            image: &q.image,
                            schedule: g.schedule,
                            t: cfg.bias.inference_t.unwrap_or(g.inference_t),
                        };
                        biased_rrt(&q.scene, &q.start, &q.goal, &source, &pc, &cfg.bias, &mut rng)?
                    }
                };
                Ok(RunRecord::from_result(scene_id, seed, budget, &r))
            })
            .collect::<Result<_>>()
    })?;
    let (scale, unit) = queries
        .first()
        .map_or((1.0, "units"), |q| length_scale(q.scene.robot()));
    Ok((BenchReport::from_records(&records, scale, unit), records))
}
