//! Forward noising of workspace images.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensorad::Tensor;

pub const DEFAULT_STEPS: usize = 100;
pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.1;

/// Per-step retention `alpha[t-1] = α_t` and cumulative `beta_hat[t-1] = Π_{s≤t} α_s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct NoiseSchedule {
    alpha: Vec<f64>,
    beta_hat: Vec<f64>,
}

impl NoiseSchedule {
    pub fn from_alpha(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::usage("schedule needs at least one step"));
        }
        if alpha.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(Error::usage("every α_t must lie in (0, 1]"));
        }
        let mut acc = 1.0;
        let beta_hat: Vec<f64> = alpha
            .iter()
            .map(|a| {
                acc *= a;
                acc
            })
            .collect();
        if *beta_hat.last().unwrap() <= 0.0 {
            return Err(Error::usage("cumulative retention underflowed to zero"));
        }
        Ok(Self { alpha, beta_hat })
    }

    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    /// `α_t` for `1 ≤ t ≤ T`.
    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t - 1]
    }

    /// `β̂_t` for `1 ≤ t ≤ T`.
    pub fn beta_hat(&self, t: usize) -> f64 {
        self.beta_hat[t - 1]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta_hats(&self) -> &[f64] {
        &self.beta_hat
    }

    pub fn check_t(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::usage(format!("timestep {t} outside 1..={}", self.steps())));
        }
        Ok(())
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        make_schedule(DEFAULT_STEPS, DEFAULT_BETA_START, DEFAULT_BETA_END).unwrap()
    }
}

impl TryFrom<Vec<f64>> for NoiseSchedule {
    type Error = Error;
    fn try_from(alpha: Vec<f64>) -> Result<Self> {
        Self::from_alpha(alpha)
    }
}

impl From<NoiseSchedule> for Vec<f64> {
    fn from(s: NoiseSchedule) -> Self {
        s.alpha
    }
}

/// The three numbers that define a linear schedule, as stored in
/// configuration files and checkpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            beta_start: DEFAULT_BETA_START,
            beta_end: DEFAULT_BETA_END,
        }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<NoiseSchedule> {
        make_schedule(self.steps, self.beta_start, self.beta_end)
    }

    /// Default inference timestep, `T/4` (at least 1).
    pub fn default_inference_t(&self) -> usize {
        (self.steps / 4).max(1)
    }
}

/// `α_t = 1 − β_t` with `β_t` linear from `beta_start` (t = 1) to `beta_end` (t = T).
pub fn make_schedule(steps: usize, beta_start: f64, beta_end: f64) -> Result<NoiseSchedule> {
    if steps == 0 {
        return Err(Error::usage("schedule needs at least one step"));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::usage(format!(
            "need 0 < beta_start ≤ beta_end < 1, got {beta_start}, {beta_end}"
        )));
    }
    let alpha = (0..steps)
        .map(|i| {
            let frac = if steps == 1 { 0.0 } else { i as f64 / (steps - 1) as f64 };
            1.0 - (beta_start + frac * (beta_end - beta_start))
        })
        .collect();
    NoiseSchedule::from_alpha(alpha)
}

fn mix(x: &Tensor, keep: f64, noise: &Tensor) -> Result<Tensor> {
    if x.shape() != noise.shape() {
        return Err(Error::usage(format!(
            "noise shape {:?} differs from input shape {:?}",
            noise.shape(),
            x.shape()
        )));
    }
    let (a, b) = (keep.sqrt(), (1.0 - keep).sqrt());
    Ok(x.zip(noise, |x, e| a * x + b * e))
}

/// One noising step: `√α_t·x + √(1−α_t)·noise`.
pub fn forward_step(x_prev: &Tensor, t: usize, schedule: &NoiseSchedule, noise: &Tensor) -> Result<Tensor> {
    schedule.check_t(t)?;
    mix(x_prev, schedule.alpha(t), noise)
}

/// Jump straight to step `t`: `√β̂_t·x₀ + √(1−β̂_t)·noise`.
pub fn diffuse(x0: &Tensor, t: usize, schedule: &NoiseSchedule, noise: &Tensor) -> Result<Tensor> {
    schedule.check_t(t)?;
    mix(x0, schedule.beta_hat(t), noise)
}

/// Standard-normal tensor of the given shape.
pub fn sample_noise<R: Rng + ?Sized>(shape: &[usize], rng: &mut R) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Tensor::from_parts(shape.to_vec(), data)
}
