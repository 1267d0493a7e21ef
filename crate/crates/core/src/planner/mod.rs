//! RRT, RRT* and exemplar-biased RRT over `[0, 1]^d`.

mod biased;
mod grow;
mod record;

pub use biased::{biased_rrt, gaussian_tail_fraction, BiasConfig, ExemplarSource, FixedExemplars, GeneratorSource};
pub use grow::{rrt, rrt_star};
pub use record::{read_records, write_records, RunRecord};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workspace::{Config, Scene};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Rrt,
    RrtStar,
    BiasedRrt,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::Rrt, PlannerKind::RrtStar, PlannerKind::BiasedRrt];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Rrt => "rrt",
            PlannerKind::RrtStar => "rrt_star",
            PlannerKind::BiasedRrt => "biased_rrt",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown planner `{s}` (expected rrt, rrt_star or biased_rrt)")))
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Largest extension per iteration (C-space units).
    pub step_eta: f64,
    pub goal_tolerance: f64,
    /// Probability of proposing the goal instead of a uniform sample.
    pub goal_bias: f64,
    /// Iteration bound `l`.
    pub max_samples: usize,
    /// Wall-clock budget in seconds; `None` leaves only `max_samples`.
    pub time_budget: Option<f64>,
    /// Rejection attempts per uniform free sample.
    pub sample_free_tries: usize,
    /// RRT* neighborhood constant; `None` uses `2(1 + 1/d)^{1/d}·(1/ζ_d)^{1/d}`
    /// (free volume bounded by 1).
    pub rewire_gamma: Option<f64>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            step_eta: 0.05,
            goal_tolerance: 0.01,
            goal_bias: 0.05,
            max_samples: 20_000,
            time_budget: None,
            sample_free_tries: 1000,
            rewire_gamma: None,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_eta > 0.0) || !(self.goal_tolerance >= 0.0) {
            return Err(Error::usage("step_eta must be > 0 and goal_tolerance ≥ 0"));
        }
        if !(0.0..1.0).contains(&self.goal_bias) {
            return Err(Error::usage("goal_bias must lie in [0, 1)"));
        }
        if self.max_samples == 0 || self.sample_free_tries == 0 {
            return Err(Error::usage("max_samples and sample_free_tries must be positive"));
        }
        if let Some(t) = self.time_budget {
            if !(t > 0.0) {
                return Err(Error::usage("time_budget must be positive"));
            }
        }
        Ok(())
    }

    pub fn with_budget(mut self, seconds: f64) -> Self {
        self.time_budget = Some(seconds);
        self
    }
}

/// Tree rooted at vertex 0 (the start).
#[derive(Clone, Debug, PartialEq)]
pub struct SearchTree {
    pub vertices: Vec<Config>,
    /// `None` only for the root.
    pub parents: Vec<Option<usize>>,
    /// Cost-to-come along tree edges.
    pub costs: Vec<f64>,
}

impl SearchTree {
    pub fn new(root: Config) -> Self {
        Self {
            vertices: vec![root],
            parents: vec![None],
            costs: vec![0.0],
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn push(&mut self, q: Config, parent: usize) -> usize {
        let cost = self.costs[parent] + self.vertices[parent].distance(&q);
        self.vertices.push(q);
        self.parents.push(Some(parent));
        self.costs.push(cost);
        self.vertices.len() - 1
    }

    pub fn nearest(&self, q: &Config) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, v) in self.vertices.iter().enumerate() {
            let d = v.distance_sq(q);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// Root-to-`goal_vertex` chain and its length.
pub fn extract_path(tree: &SearchTree, goal_vertex: usize) -> Result<(Vec<Config>, f64)> {
    if goal_vertex >= tree.len() {
        return Err(Error::usage(format!(
            "vertex {goal_vertex} not in a tree of {} vertices",
            tree.len()
        )));
    }
    let mut chain = vec![goal_vertex];
    let mut v = goal_vertex;
    while let Some(p) = tree.parents[v] {
        chain.push(p);
        v = p;
        if chain.len() > tree.len() {
            return Err(Error::usage("parent links contain a cycle"));
        }
    }
    chain.reverse();
    let path: Vec<Config> = chain.iter().map(|&i| tree.vertices[i].clone()).collect();
    let length = path.windows(2).map(|w| w[0].distance(&w[1])).sum();
    Ok((path, length))
}

/// Where each iteration's sample came from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Provenance {
    /// Goal proposed directly (goal bias).
    pub goal: usize,
    /// Uniform free samples.
    pub uniform: usize,
    /// Uniform samples drawn because the σ schedule was exhausted.
    pub uniform_after_schedule: usize,
    /// Uniform samples drawn because a probe found nothing free.
    pub uniform_after_probe_failure: usize,
    /// Accepted exemplar-neighborhood samples.
    pub biased: usize,
    /// Gaussian candidates drawn by probes, accepted or not.
    pub probe_draws: usize,
    /// Iterations whose uniform rejection sampler gave up.
    pub sample_free_failures: usize,
    /// Highest σ level reached.
    pub level: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub planner: PlannerKind,
    pub success: bool,
    /// Start to goal; empty on failure.
    pub path: Vec<Config>,
    /// Length of `path` (C-space units); 0 on failure.
    pub length: f64,
    /// Length of the first solution found (RRT* keeps improving on it).
    pub first_length: Option<f64>,
    pub iterations: usize,
    pub elapsed: f64,
    pub provenance: Provenance,
    pub tree: SearchTree,
}

pub(crate) fn check_query(scene: &Scene, start: &Config, goal: &Config) -> Result<()> {
    let d = scene.dof();
    if start.dim() != d || goal.dim() != d {
        return Err(Error::usage(format!("query dimension does not match the robot's {d} DOF")));
    }
    if !scene.is_free(start) {
        return Err(Error::usage("start configuration is in collision"));
    }
    if !scene.is_free(goal) {
        return Err(Error::usage("goal configuration is in collision"));
    }
    Ok(())
}
