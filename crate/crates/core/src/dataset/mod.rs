//! Random scenes, RRT* demonstrations and clustered training targets.

mod io;

pub use io::{inspect, load_dataset, read_dataset, save_dataset, write_dataset, DatasetHeader};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affinity::{affinity_propagate, order_exemplars, APConfig, Preference};
use crate::encoding::{assemble_input, build_condition, decode_matrix, encode_path, PathMatrix, WorkspaceImage, IMAGE_SIZE, MATRIX_COLS, MATRIX_ROWS};
use crate::error::{Error, Result};
use crate::planner::{rrt_star, PlannerConfig};
use crate::wgan::TrainSample;
use crate::workspace::{rasterize, Bounds, Config, Obstacle, RobotModel, Scene};

/// Scene ids at or above this value are reserved for held-out evaluation;
/// training data only uses ids below it.
pub const HELD_OUT_BASE: u64 = 1 << 32;

/// Mixes a master seed with a stream tag and an index (SplitMix64 finalizer).
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(0x94D0_49BB_1331_11EB);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SCENE_STREAM: u64 = 1;
const QUERY_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RobotSpec {
    Point,
    Arm { base: [f64; 2], links: Vec<f64> },
}

impl RobotSpec {
    pub fn model(&self) -> Result<RobotModel> {
        match self {
            RobotSpec::Point => Ok(RobotModel::Point),
            RobotSpec::Arm { base, links } => RobotModel::planar_arm(*base, links.clone()),
        }
    }
}

/// Vertical walls, each split by one gap, placed in equal-width bands between
/// the left and right query strips.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    pub count: usize,
    pub thickness: f64,
    /// Inclusive range of gap widths.
    pub gap: (f64, f64),
    /// Range of gap-center heights.
    pub gap_center: (f64, f64),
    /// Horizontal span shared by the wall bands.
    pub span: (f64, f64),
    /// When set, gap centers snap to the centers of this many equal rows, so
    /// each gap covers a cell center of a raster with that many rows.
    pub gap_rows: Option<usize>,
}

/// C-space boxes for start and goal sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub start_min: Vec<f64>,
    pub start_max: Vec<f64>,
    pub goal_min: Vec<f64>,
    pub goal_max: Vec<f64>,
    /// Smallest start–goal distance.
    pub min_separation: f64,
    pub max_tries: usize,
}

impl QuerySpec {
    /// Anywhere in `[0, 1]^d`.
    pub fn anywhere(d: usize) -> Self {
        Self {
            start_min: vec![0.0; d],
            start_max: vec![1.0; d],
            goal_min: vec![0.0; d],
            goal_max: vec![1.0; d],
            min_separation: 0.3,
            max_tries: 10_000,
        }
    }

    /// Start in the left strip, goal in the right strip (point robot).
    pub fn left_to_right() -> Self {
        Self {
            start_min: vec![0.02, 0.02],
            start_max: vec![0.1, 0.98],
            goal_min: vec![0.9, 0.02],
            goal_max: vec![0.98, 0.98],
            min_separation: 0.3,
            max_tries: 10_000,
        }
    }

    fn sample_in<R: Rng>(min: &[f64], max: &[f64], rng: &mut R) -> Config {
        Config::clamped(
            min.iter()
                .zip(max)
                .map(|(&lo, &hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo })
                .collect(),
        )
    }

    /// Free `(start, goal)` at least `min_separation` apart.
    pub fn sample<R: Rng>(&self, scene: &Scene, rng: &mut R) -> Result<(Config, Config)> {
        let d = scene.dof();
        if [&self.start_min, &self.start_max, &self.goal_min, &self.goal_max]
            .iter()
            .any(|v| v.len() != d)
        {
            return Err(Error::Config(format!("query boxes must be {d}-dimensional")));
        }
        for _ in 0..self.max_tries {
            let s = Self::sample_in(&self.start_min, &self.start_max, rng);
            let g = Self::sample_in(&self.goal_min, &self.goal_max, rng);
            if s.distance(&g) >= self.min_separation && scene.is_free(&s) && scene.is_free(&g) {
                return Ok((s, g));
            }
        }
        Err(Error::Generation(format!(
            "no free start/goal pair after {} tries",
            self.max_tries
        )))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub robot: RobotSpec,
    /// Inclusive range of random obstacle counts (walls not included).
    pub obstacle_count: (usize, usize),
    /// Disc radius / rectangle half-side range (workspace units).
    pub obstacle_size: (f64, f64),
    /// Fraction of random obstacles that are discs; the rest are rectangles.
    pub disc_fraction: f64,
    pub walls: Option<WallSpec>,
    pub query: QuerySpec,
    pub max_retries: usize,
}

impl SceneSpec {
    /// Random discs and boxes; start and goal anywhere.
    pub fn clutter(robot: RobotSpec) -> Result<Self> {
        let d = robot.model()?.dof();
        Ok(Self {
            robot,
            obstacle_count: (2, 8),
            obstacle_size: (0.03, 0.12),
            disc_fraction: 0.5,
            walls: None,
            query: QuerySpec::anywhere(d),
            max_retries: 100,
        })
    }

    /// Four thin-gapped walls plus light clutter, left-to-right queries; the
    /// desk-scale benchmark family for the point robot.
    pub fn gapped_walls() -> Self {
        Self {
            robot: RobotSpec::Point,
            obstacle_count: (2, 5),
            obstacle_size: (0.02, 0.06),
            disc_fraction: 0.5,
            walls: Some(WallSpec {
                count: 4,
                thickness: 0.1,
                gap: (0.015, 0.02),
                gap_center: (0.15, 0.85),
                span: (0.2, 0.8),
                gap_rows: Some(IMAGE_SIZE),
            }),
            query: QuerySpec::left_to_right(),
            max_retries: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.robot.model()?;
        let (lo, hi) = self.obstacle_count;
        let (smin, smax) = self.obstacle_size;
        if lo > hi || !(smin > 0.0 && smin <= smax) {
            return Err(Error::Config("obstacle count/size ranges must be ordered and sizes positive".into()));
        }
        if !(0.0..=1.0).contains(&self.disc_fraction) || self.max_retries == 0 {
            return Err(Error::Config("disc_fraction must lie in [0,1] and max_retries be positive".into()));
        }
        if let Some(w) = &self.walls {
            if w.gap_rows == Some(0) || !(w.thickness > 0.0 && w.gap.0 > 0.0 && w.gap.0 <= w.gap.1 && w.span.0 < w.span.1 && w.gap_center.0 <= w.gap_center.1) {
                return Err(Error::Config("wall thickness, gaps and span must be positive and ordered".into()));
            }
        }
        if self.query.start_min.len() != model.dof() {
            return Err(Error::Config("query boxes do not match the robot".into()));
        }
        Ok(())
    }
}

fn random_obstacle<R: Rng>(spec: &SceneSpec, rng: &mut R) -> Result<Obstacle> {
    let (lo, hi) = spec.obstacle_size;
    let size = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    let center = [rng.gen::<f64>(), rng.gen::<f64>()];
    if rng.gen::<f64>() < spec.disc_fraction {
        Obstacle::disc(center, size)
    } else {
        let aspect = rng.gen_range(0.5..=2.0f64).sqrt();
        let (hx, hy) = (size * aspect, size / aspect);
        Obstacle::rect([center[0] - hx, center[1] - hy], [center[0] + hx, center[1] + hy])
    }
}

fn walls<R: Rng>(w: &WallSpec, rng: &mut R) -> Result<Vec<Obstacle>> {
    let mut out = Vec::new();
    let band = (w.span.1 - w.span.0) / w.count.max(1) as f64;
    for i in 0..w.count {
        let left = w.span.0 + i as f64 * band;
        let x = if band > w.thickness {
            rng.gen_range(left..left + band - w.thickness)
        } else {
            left
        };
        let gap = if w.gap.1 > w.gap.0 { rng.gen_range(w.gap.0..=w.gap.1) } else { w.gap.0 };
        let mut c = if w.gap_center.1 > w.gap_center.0 {
            rng.gen_range(w.gap_center.0..=w.gap_center.1)
        } else {
            w.gap_center.0
        };
        if let Some(rows) = w.gap_rows {
            let rows = rows as f64;
            c = ((c * rows - 0.5).round() + 0.5) / rows;
        }
        let (lo, hi) = ((c - gap / 2.0).max(0.0), (c + gap / 2.0).min(1.0));
        if lo > 0.0 {
            out.push(Obstacle::rect([x, 0.0], [x + w.thickness, lo])?);
        }
        if hi < 1.0 {
            out.push(Obstacle::rect([x, hi], [x + w.thickness, 1.0])?);
        }
    }
    Ok(out)
}

/// Deterministic in `seed`. Retries (up to `max_retries`) until some of 256
/// uniform configurations is free.
pub fn generate_scene(seed: u64, spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let robot = spec.robot.model()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..spec.max_retries {
        let (lo, hi) = spec.obstacle_count;
        let n = rng.gen_range(lo..=hi);
        let mut obstacles = match &spec.walls {
            Some(w) => walls(w, &mut rng)?,
            None => Vec::new(),
        };
        for _ in 0..n {
            obstacles.push(random_obstacle(spec, &mut rng)?);
        }
        let scene = Scene::new(Bounds::unit(), obstacles, robot.clone())?;
        let d = scene.dof();
        let any_free = (0..256).any(|_| scene.is_free(&Config::clamped((0..d).map(|_| rng.gen()).collect())));
        if any_free {
            return Ok(scene);
        }
    }
    Err(Error::Generation(format!(
        "no scene with free space after {} attempts",
        spec.max_retries
    )))
}

/// Inserts evenly spaced points so consecutive waypoints are at most
/// `spacing` apart; original waypoints are kept.
pub fn densify(path: &[Config], spacing: f64) -> Vec<Config> {
    let mut out = Vec::new();
    for w in path.windows(2) {
        let n = (w[0].distance(&w[1]) / spacing).ceil().max(1.0) as usize;
        for i in 0..n {
            out.push(w[0].lerp(&w[1], i as f64 / n as f64));
        }
    }
    out.extend(path.last().cloned());
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    /// RRT* iterations; fixed so demonstrations are reproducible.
    pub iterations: usize,
    /// Optional wall-clock cap on top of `iterations`.
    pub seconds: Option<f64>,
    pub step_eta: f64,
    pub spacing: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            seconds: None,
            step_eta: 0.05,
            spacing: 0.02,
        }
    }
}

/// RRT* path from `start` to `goal`, densified to `cfg.spacing`; `None` when
/// the planner finds nothing within its budget.
pub fn collect_demo<R: Rng>(scene: &Scene, start: &Config, goal: &Config, cfg: &DemoConfig, rng: &mut R) -> Result<Option<Vec<Config>>> {
    let pc = PlannerConfig {
        step_eta: cfg.step_eta,
        max_samples: cfg.iterations,
        time_budget: cfg.seconds,
        ..PlannerConfig::default()
    };
    let r = rrt_star(scene, start, goal, &pc, rng)?;
    Ok(r.success.then(|| densify(&r.path, cfg.spacing)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    pub scene_id: u64,
    pub scene: Scene,
    pub start: Config,
    pub goal: Config,
    pub y0: WorkspaceImage,
    pub target: PathMatrix,
    pub raw_waypoints: Vec<Config>,
    pub demo_length: f64,
}

impl TrainingExample {
    pub fn exemplars(&self) -> Vec<Config> {
        decode_matrix(&self.target)
    }

    pub fn to_sample(&self) -> TrainSample {
        TrainSample {
            y0: self.y0.tensor().clone(),
            target: self.target.values().clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NoQuery,
    DemoFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub scenes: usize,
    pub pairs_per_scene: usize,
    pub scene: SceneSpec,
    pub demo: DemoConfig,
    pub clustering: APConfig,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            scenes: 200,
            pairs_per_scene: 3,
            scene: SceneSpec::gapped_walls(),
            demo: DemoConfig::default(),
            clustering: APConfig {
                preference: Preference::Value(-0.002),
                ..APConfig::default()
            },
            seed: 0,
        }
    }
}

/// The network input for a query in a scene.
pub fn scene_image(scene: &Scene, start: &Config, goal: &Config) -> Result<WorkspaceImage> {
    let raster = rasterize(scene, IMAGE_SIZE, IMAGE_SIZE);
    assemble_input(&raster, &build_condition(start, goal)?)
}

/// Samples a query, demonstrates it, clusters the demonstration and encodes
/// the ordered exemplars.
pub fn build_example<R: Rng>(
    scene_id: u64,
    scene: &Scene,
    query: &QuerySpec,
    demo: &DemoConfig,
    clustering: &APConfig,
    rng: &mut R,
) -> Result<std::result::Result<TrainingExample, SkipReason>> {
    let Ok((start, goal)) = query.sample(scene, rng) else {
        return Ok(Err(SkipReason::NoQuery));
    };
    let Some(raw) = collect_demo(scene, &start, &goal, demo, rng)? else {
        return Ok(Err(SkipReason::DemoFailed));
    };
    let demo_length = raw.windows(2).map(|w| w[0].distance(&w[1])).sum();
    let clusters = affinity_propagate(&raw, clustering)?;
    let order: Vec<usize> = (0..raw.len()).collect();
    let exemplars = order_exemplars(&clusters, &raw, &order)?;
    let target = encode_path(&exemplars, MATRIX_ROWS, MATRIX_COLS)?;
    Ok(Ok(TrainingExample {
        scene_id,
        scene: scene.clone(),
        y0: scene_image(scene, &start, &goal)?,
        start,
        goal,
        target,
        raw_waypoints: raw,
        demo_length,
    }))
}

/// Scene for `scene_id` under `master` seed.
pub fn scene_for(master: u64, scene_id: u64, spec: &SceneSpec) -> Result<Scene> {
    generate_scene(derive_seed(master, SCENE_STREAM, scene_id), spec)
}

/// Per-(scene, pair) generator for queries and demonstrations.
pub fn query_rng(master: u64, scene_id: u64, pair: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, QUERY_STREAM, scene_id.wrapping_mul(1024).wrapping_add(pair as u64)))
}

/// Builds the whole training set from `cfg.seed`. Examples are built in
/// parallel and returned in (scene, pair) order; skips are logged.
pub fn generate_dataset(cfg: &DatasetConfig) -> Result<Vec<TrainingExample>> {
    cfg.scene.validate()?;
    cfg.clustering.validate()?;
    if cfg.scenes as u64 >= HELD_OUT_BASE {
        return Err(Error::Config("too many training scenes".into()));
    }
    let jobs: Vec<(u64, usize)> = (0..cfg.scenes as u64)
        .flat_map(|s| (0..cfg.pairs_per_scene).map(move |p| (s, p)))
        .collect();
    let built: Vec<Option<TrainingExample>> = jobs
        .par_iter()
        .map(|&(sid, pair)| {
            let scene = scene_for(cfg.seed, sid, &cfg.scene)?;
            let mut rng = query_rng(cfg.seed, sid, pair);
            match build_example(sid, &scene, &cfg.scene.query, &cfg.demo, &cfg.clustering, &mut rng)? {
                Ok(ex) => Ok(Some(ex)),
                Err(reason) => {
                    log::warn!("scene {sid} pair {pair}: skipped ({reason:?})");
                    Ok(None)
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(built.into_iter().flatten().collect())
}
