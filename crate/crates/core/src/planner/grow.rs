use std::time::{Duration, Instant};

use rand::Rng;

use super::{check_query, extract_path, PlanResult, PlannerConfig, PlannerKind, Provenance, SearchTree};
use crate::error::Result;
use crate::workspace::{Config, Scene};

/// Source of `q_rand`, one call per iteration `h` (1-based).
pub(crate) trait Sampler<R: Rng> {
    fn sample(&mut self, h: usize, scene: &Scene, rng: &mut R, prov: &mut Provenance) -> Option<Config>;
}

/// Goal-biased uniform rejection sampler of the free space.
pub(crate) struct Uniform {
    pub goal: Config,
    pub goal_bias: f64,
    pub tries: usize,
}

impl Uniform {
    pub fn new(goal: &Config, cfg: &PlannerConfig) -> Self {
        Self {
            goal: goal.clone(),
            goal_bias: cfg.goal_bias,
            tries: cfg.sample_free_tries,
        }
    }

    pub fn draw<R: Rng>(&self, scene: &Scene, rng: &mut R, prov: &mut Provenance) -> Option<Config> {
        if self.goal_bias > 0.0 && rng.gen::<f64>() < self.goal_bias {
            prov.goal += 1;
            return Some(self.goal.clone());
        }
        let d = self.goal.dim();
        for _ in 0..self.tries {
            let q = Config::clamped((0..d).map(|_| rng.gen::<f64>()).collect());
            if scene.is_free(&q) {
                prov.uniform += 1;
                return Some(q);
            }
        }
        prov.sample_free_failures += 1;
        None
    }
}

impl<R: Rng> Sampler<R> for Uniform {
    fn sample(&mut self, _h: usize, scene: &Scene, rng: &mut R, prov: &mut Provenance) -> Option<Config> {
        self.draw(scene, rng, prov)
    }
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

fn default_gamma(d: usize) -> f64 {
    let df = d as f64;
    2.0 * (1.0 + 1.0 / df).powf(1.0 / df) * (1.0 / unit_ball_volume(d)).powf(1.0 / df)
}

/// Wall-clock bookkeeping for one planning call.
pub(crate) struct Clock {
    start: Instant,
    budget: Option<Duration>,
}

impl Clock {
    pub fn start(cfg: &PlannerConfig) -> Self {
        Self {
            start: Instant::now(),
            budget: cfg.time_budget.map(Duration::from_secs_f64),
        }
    }

    fn expired(&self) -> bool {
        self.budget.is_some_and(|b| self.start.elapsed() >= b)
    }

    fn seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

struct Star {
    children: Vec<Vec<usize>>,
    gamma: f64,
}

impl Star {
    /// Inserts `q` under the cheapest collision-free neighbor and rewires
    /// neighbors through it when that shortens their cost-to-come.
    fn insert(&mut self, tree: &mut SearchTree, scene: &Scene, q: Config, nearest: usize, eta: f64) -> usize {
        let n = tree.len() as f64 + 1.0;
        let d = q.dim() as f64;
        let radius = (self.gamma * (n.ln() / n).powf(1.0 / d)).min(eta);
        let near: Vec<usize> = (0..tree.len())
            .filter(|&j| tree.vertices[j].distance(&q) <= radius)
            .collect();
        let mut parent = nearest;
        let mut best = tree.costs[nearest] + tree.vertices[nearest].distance(&q);
        for &j in &near {
            let c = tree.costs[j] + tree.vertices[j].distance(&q);
            if c < best && j != nearest && scene.motion_free(&tree.vertices[j], &q) {
                parent = j;
                best = c;
            }
        }
        let v = tree.push(q, parent);
        self.children[parent].push(v);
        self.children.push(Vec::new());
        for &j in &near {
            if j == parent {
                continue;
            }
            let c = tree.costs[v] + tree.vertices[v].distance(&tree.vertices[j]);
            if c < tree.costs[j] && scene.motion_free(&tree.vertices[v], &tree.vertices[j]) {
                let old = tree.parents[j].expect("root is never rewired");
                self.children[old].retain(|&x| x != j);
                tree.parents[j] = Some(v);
                self.children[v].push(j);
                let delta = c - tree.costs[j];
                let mut stack = vec![j];
                while let Some(x) = stack.pop() {
                    tree.costs[x] += delta;
                    stack.extend_from_slice(&self.children[x]);
                }
            }
        }
        v
    }

    fn attach(&mut self, tree: &mut SearchTree, q: Config, parent: usize) -> usize {
        let v = tree.push(q, parent);
        self.children[parent].push(v);
        self.children.push(Vec::new());
        v
    }
}

/// The shared extend loop. RRT and the biased planner stop at the first
/// solution; RRT* keeps refining until its budget runs out.
#[allow(clippy::too_many_arguments)]
pub(crate) fn grow<R: Rng, S: Sampler<R>>(
    kind: PlannerKind,
    scene: &Scene,
    start: &Config,
    goal: &Config,
    cfg: &PlannerConfig,
    sampler: &mut S,
    rng: &mut R,
    clock: Clock,
    mut prov: Provenance,
) -> Result<PlanResult> {
    let mut tree = SearchTree::new(start.clone());
    let mut star = (kind == PlannerKind::RrtStar).then(|| Star {
        children: vec![Vec::new()],
        gamma: cfg.rewire_gamma.unwrap_or_else(|| default_gamma(start.dim())),
    });
    let eta = cfg.step_eta;
    let mut goal_vertices: Vec<usize> = Vec::new();
    let mut goal_added = false;
    let mut first_length = None;
    let mut iterations = 0;

    // The root gets the same goal test as every inserted vertex.
    let mut fresh = Some(0);
    loop {
        if let Some(v) = fresh.take() {
            let dg = tree.vertices[v].distance(goal);
            let reached = if dg <= cfg.goal_tolerance {
                Some(v)
            } else if !goal_added && dg <= eta && scene.motion_free(&tree.vertices[v], goal) {
                goal_added = true;
                Some(match star.as_mut() {
                    Some(s) => s.attach(&mut tree, goal.clone(), v),
                    None => tree.push(goal.clone(), v),
                })
            } else {
                None
            };
            if let Some(g) = reached {
                goal_vertices.push(g);
                first_length.get_or_insert(tree.costs[g]);
            }
        }
        if !goal_vertices.is_empty() && star.is_none() {
            break;
        }
        if iterations >= cfg.max_samples || clock.expired() {
            break;
        }
        iterations += 1;
        let Some(q_rand) = sampler.sample(iterations, scene, rng, &mut prov) else {
            continue;
        };
        let near = tree.nearest(&q_rand);
        let dist = tree.vertices[near].distance(&q_rand);
        if dist == 0.0 {
            continue;
        }
        let q_new = if dist <= eta {
            q_rand
        } else {
            tree.vertices[near].lerp(&q_rand, eta / dist)
        };
        if !scene.motion_free(&tree.vertices[near], &q_new) {
            continue;
        }
        fresh = Some(match star.as_mut() {
            Some(s) => s.insert(&mut tree, scene, q_new, near, eta),
            None => tree.push(q_new, near),
        });
    }

    let elapsed = clock.seconds();
    let best = goal_vertices
        .iter()
        .copied()
        .min_by(|&a, &b| tree.costs[a].total_cmp(&tree.costs[b]).then(a.cmp(&b)));
    let (path, length) = match best {
        Some(g) => extract_path(&tree, g)?,
        None => (Vec::new(), 0.0),
    };
    Ok(PlanResult {
        planner: kind,
        success: best.is_some(),
        path,
        length,
        first_length,
        iterations,
        elapsed,
        provenance: prov,
        tree,
    })
}

/// Goal-biased RRT; stops at the first path found.
pub fn rrt<R: Rng>(scene: &Scene, start: &Config, goal: &Config, cfg: &PlannerConfig, rng: &mut R) -> Result<PlanResult> {
    cfg.validate()?;
    check_query(scene, start, goal)?;
    let clock = Clock::start(cfg);
    let mut sampler = Uniform::new(goal, cfg);
    grow(PlannerKind::Rrt, scene, start, goal, cfg, &mut sampler, rng, clock, Provenance::default())
}

/// RRT* with rewiring inside `min(γ(log n / n)^{1/d}, step_eta)`; runs for the
/// whole budget and returns the cheapest goal vertex.
pub fn rrt_star<R: Rng>(scene: &Scene, start: &Config, goal: &Config, cfg: &PlannerConfig, rng: &mut R) -> Result<PlanResult> {
    cfg.validate()?;
    check_query(scene, start, goal)?;
    let clock = Clock::start(cfg);
    let mut sampler = Uniform::new(goal, cfg);
    grow(PlannerKind::RrtStar, scene, start, goal, cfg, &mut sampler, rng, clock, Provenance::default())
}
