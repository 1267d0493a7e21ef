use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::grow::{grow, Clock, Sampler, Uniform};
use super::{check_query, PlanResult, PlannerConfig, PlannerKind, Provenance};
use crate::diffusion::{sample_noise, NoiseSchedule};
use crate::encoding::WorkspaceImage;
use crate::error::{Error, Result};
use crate::wgan::{generate_exemplars, GeneratorModel};
use crate::workspace::{Config, Scene};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasConfig {
    /// Strictly increasing standard deviations `σ₀ < … < σ_k`.
    pub sigma: Vec<f64>,
    /// Iterations spent on each σ level.
    pub m: usize,
    /// Gaussian candidates tried per iteration before falling back to a
    /// uniform sample.
    pub probe_budget: usize,
    /// Diffusion timestep for the generator query; `None` uses the
    /// checkpoint's value.
    pub inference_t: Option<usize>,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self {
            sigma: vec![0.0, 0.02, 0.05, 0.1, 0.2, 0.4],
            m: 50,
            probe_budget: 16,
            inference_t: None,
        }
    }
}

impl BiasConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_empty() || self.sigma[0] < 0.0 || !self.sigma.iter().all(|s| s.is_finite()) {
            return Err(Error::usage("σ schedule must be nonempty, finite and start at ≥ 0"));
        }
        if self.sigma.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::usage("σ schedule must be strictly increasing"));
        }
        if self.m == 0 || self.probe_budget == 0 {
            return Err(Error::usage("m and probe_budget must be positive"));
        }
        Ok(())
    }

    /// Index of the last σ level, `k`.
    pub fn last_level(&self) -> usize {
        self.sigma.len() - 1
    }

    /// Number of iterations `h` that still see a σ level: those with
    /// `⌊h / m⌋ ≤ k`.
    pub fn biased_iterations(&self) -> usize {
        self.m * self.sigma.len() - 1
    }
}

/// Produces the exemplar set `q̄` for one planning call.
pub trait ExemplarSource {
    fn dim(&self) -> usize;
    fn exemplars(&self, rng: &mut dyn RngCore) -> Result<Vec<Config>>;
}

/// A fixed exemplar list (hand-placed or precomputed).
#[derive(Clone, Debug, PartialEq)]
pub struct FixedExemplars(pub Vec<Config>);

impl ExemplarSource for FixedExemplars {
    fn dim(&self) -> usize {
        self.0.first().map_or(0, Config::dim)
    }

    fn exemplars(&self, _rng: &mut dyn RngCore) -> Result<Vec<Config>> {
        Ok(self.0.clone())
    }
}

/// Queries a trained generator: fresh noise `ε_t` per call, diffuse the scene
/// image to step `t`, decode the predicted matrix.
pub struct GeneratorSource<'a> {
    pub generator: &'a GeneratorModel,
    pub image: &'a WorkspaceImage,
    pub schedule: &'a NoiseSchedule,
    pub t: usize,
}

impl ExemplarSource for GeneratorSource<'_> {
    fn dim(&self) -> usize {
        self.generator.dim()
    }

    fn exemplars(&self, rng: &mut dyn RngCore) -> Result<Vec<Config>> {
        let noise = sample_noise(self.image.tensor().shape(), rng);
        generate_exemplars(self.generator, self.image, self.t, self.schedule, &noise)
    }
}

/// `q̄ + σ·z`, `z` standard normal per coordinate, before clamping.
fn perturb<R: Rng + ?Sized>(center: &Config, sigma: f64, rng: &mut R) -> Vec<f64> {
    center
        .as_slice()
        .iter()
        .map(|&c| c + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Fraction of per-coordinate perturbations with `|q − q̄| > σ` over
/// `draws` draws of the sampler's Gaussian.
pub fn gaussian_tail_fraction<R: Rng>(sigma: f64, draws: usize, rng: &mut R) -> f64 {
    let center = Config::clamped(vec![0.5]);
    let mut outside = 0usize;
    for _ in 0..draws {
        let q = perturb(&center, sigma, rng);
        if (q[0] - 0.5).abs() > sigma {
            outside += 1;
        }
    }
    outside as f64 / draws as f64
}

struct Biased {
    exemplars: Vec<Config>,
    sigma: Vec<f64>,
    m: usize,
    probe_budget: usize,
    level: usize,
    fallback: Uniform,
}

impl<R: Rng> Sampler<R> for Biased {
    fn sample(&mut self, h: usize, scene: &Scene, rng: &mut R, prov: &mut Provenance) -> Option<Config> {
        if h.is_multiple_of(self.m) {
            self.level += 1;
        }
        prov.level = self.level;
        match self.sigma.get(self.level) {
            Some(&sigma) if !self.exemplars.is_empty() => {
                for _ in 0..self.probe_budget {
                    let e = &self.exemplars[rng.gen_range(0..self.exemplars.len())];
                    let q = Config::clamped(perturb(e, sigma, rng));
                    prov.probe_draws += 1;
                    if scene.is_free(&q) {
                        prov.biased += 1;
                        return Some(q);
                    }
                }
                prov.uniform_after_probe_failure += 1;
            }
            _ => prov.uniform_after_schedule += 1,
        }
        self.fallback.draw(scene, rng, prov)
    }
}

/// RRT whose samples come from Gaussians around generated exemplars.
///
/// A single level `s` starts at 0 and rises every `m` iterations. While
/// `s ≤ k`, each iteration probes up to `probe_budget` candidates around
/// uniformly chosen exemplars with standard deviation `σ_s` and takes the
/// first free one; if none is free, or once `s > k`, it uses the same
/// goal-biased uniform sampler as [`super::rrt`]. Exemplar generation runs
/// inside the time budget.
pub fn biased_rrt<R: Rng>(
    scene: &Scene,
    start: &Config,
    goal: &Config,
    source: &dyn ExemplarSource,
    cfg: &PlannerConfig,
    bias: &BiasConfig,
    rng: &mut R,
) -> Result<PlanResult> {
    cfg.validate()?;
    bias.validate()?;
    check_query(scene, start, goal)?;
    if source.dim() != scene.dof() {
        return Err(Error::usage(format!(
            "exemplar source is {}-dimensional but the robot has {} DOF",
            source.dim(),
            scene.dof()
        )));
    }
    let clock = Clock::start(cfg);
    let exemplars = source.exemplars(rng)?;
    if exemplars.iter().any(|e| e.dim() != scene.dof()) {
        return Err(Error::usage("exemplar dimension does not match the robot"));
    }
    let mut sampler = Biased {
        exemplars,
        sigma: bias.sigma.clone(),
        m: bias.m,
        probe_budget: bias.probe_budget,
        level: 0,
        fallback: Uniform::new(goal, cfg),
    };
    grow(PlannerKind::BiasedRrt, scene, start, goal, cfg, &mut sampler, rng, clock, Provenance::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workspace::{Bounds, Obstacle, RobotModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(v: &[f64]) -> Config {
        Config::new(v.to_vec()).unwrap()
    }

    #[test]
    fn bias_config_validation() {
        assert!(BiasConfig::default().validate().is_ok());
        let bad = BiasConfig {
            sigma: vec![0.1, 0.1],
            ..BiasConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(BiasConfig::default().biased_iterations(), 299);
    }

    #[test]
    fn corridor_solved_by_biased_samples_only() {
        // Horizontal corridor y ∈ [0.45, 0.55] between two slabs.
        let s = Scene::new(
            Bounds::unit(),
            vec![
                Obstacle::rect([0.0, 0.0], [1.0, 0.45]).unwrap(),
                Obstacle::rect([0.0, 0.55], [1.0, 1.0]).unwrap(),
            ],
            RobotModel::Point,
        )
        .unwrap();
        let (start, goal) = (c(&[0.05, 0.5]), c(&[0.95, 0.5]));
        let ex = FixedExemplars((0..=18).map(|i| c(&[0.05 + 0.05 * i as f64, 0.5])).collect());
        let cfg = PlannerConfig::default();
        let bias = BiasConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = biased_rrt(&s, &start, &goal, &ex, &cfg, &bias, &mut rng).unwrap();
        assert!(r.success);
        let p = r.provenance;
        assert_eq!(p.uniform + p.goal + p.sample_free_failures, 0, "{p:?}");
        assert_eq!(p.biased, r.iterations);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = Scene::empty(RobotModel::Point);
        let ex = FixedExemplars(vec![c(&[0.5, 0.5, 0.5])]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = biased_rrt(
            &s,
            &c(&[0.1, 0.1]),
            &c(&[0.9, 0.9]),
            &ex,
            &PlannerConfig::default(),
            &BiasConfig::default(),
            &mut rng,
        );
        assert!(r.is_err());
    }
}
