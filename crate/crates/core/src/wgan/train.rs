use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{critic_objective, generator_step};
use super::{CriticModel, GeneratorModel};
use crate::diffusion::{diffuse, sample_noise, NoiseSchedule};
use crate::error::{Error, Result};
use crate::tensorad::{AdamConfig, AdamState, Tensor};

/// One training pair: the clean scene image `y₀` and its demonstration matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSample {
    pub y0: Tensor,
    pub target: Tensor,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch: usize,
    pub lambda_gp: f64,
    pub n_critic: usize,
    pub epochs: usize,
    /// Generator updates per epoch; `None` means one pass over the data,
    /// `ceil(len / batch)`.
    pub steps_per_epoch: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            batch: 64,
            lambda_gp: 10.0,
            n_critic: 5,
            epochs: 10,
            steps_per_epoch: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be a finite value ≥ 0, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("adam betas must lie in [0, 1)".into()));
        }
        if self.batch == 0 || self.n_critic == 0 || self.epochs == 0 || self.steps_per_epoch == Some(0) {
            return Err(Error::Config("batch, n_critic, epochs and steps_per_epoch must be positive".into()));
        }
        if !(self.lambda_gp >= 0.0 && self.lambda_gp.is_finite()) {
            return Err(Error::Config("lambda_gp must be a finite value ≥ 0".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            ..AdamConfig::default()
        }
    }
}

/// Means over the steps of one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub critic_loss: f64,
    pub generator_loss: f64,
    pub wasserstein: f64,
    pub penalty: f64,
}

struct Batch {
    cond: Vec<Tensor>,
    target: Vec<Tensor>,
    y_t: Vec<Tensor>,
}

fn draw_batch(data: &[TrainSample], size: usize, schedule: &NoiseSchedule, rng: &mut ChaCha8Rng) -> Result<Batch> {
    let mut b = Batch {
        cond: Vec::with_capacity(size),
        target: Vec::with_capacity(size),
        y_t: Vec::with_capacity(size),
    };
    for _ in 0..size {
        let s = &data[rng.gen_range(0..data.len())];
        let t = rng.gen_range(1..=schedule.steps());
        let noise = sample_noise(s.y0.shape(), rng);
        b.y_t.push(diffuse(&s.y0, t, schedule, &noise)?);
        b.cond.push(s.y0.clone());
        b.target.push(s.target.clone());
    }
    Ok(b)
}

/// Adversarial training. Every generator update is preceded by `n_critic`
/// critic updates; each batch item gets its own uniformly drawn timestep and
/// noise. All randomness comes from `seed`, so equal inputs give equal
/// results. `progress` sees each epoch's statistics as it completes.
pub fn train(
    data: &[TrainSample],
    gen: &mut GeneratorModel,
    critic: &mut CriticModel,
    cfg: &TrainConfig,
    schedule: &NoiseSchedule,
    seed: u64,
    mut progress: impl FnMut(&EpochStats),
) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    let first = data.first().ok_or_else(|| Error::usage("training needs at least one sample"))?;
    let want_in = gen.net().input_shape();
    for s in data {
        if s.y0.shape() != want_in || s.target.shape() != gen.net().output_shape() {
            return Err(Error::usage("training sample shapes do not match the generator"));
        }
    }
    // Shape check of the critic against the first pair.
    critic.score(&first.target, &first.y0)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gen_opt = AdamState::new(cfg.adam(), gen.params());
    let mut critic_opt = AdamState::new(cfg.adam(), critic.params());
    let steps = cfg.steps_per_epoch.unwrap_or(data.len().div_ceil(cfg.batch));
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut acc = EpochStats {
            epoch,
            critic_loss: 0.0,
            generator_loss: 0.0,
            wasserstein: 0.0,
            penalty: 0.0,
        };
        for _ in 0..steps {
            for _ in 0..cfg.n_critic {
                let b = draw_batch(data, cfg.batch, schedule, &mut rng)?;
                let mix: Vec<f64> = (0..cfg.batch).map(|_| rng.gen::<f64>()).collect();
                let fake: Vec<Tensor> = b
                    .y_t
                    .par_iter()
                    .map(|y| gen.predict(y))
                    .collect::<Result<_>>()?;
                let step = critic_objective(critic, &b.target, &fake, &b.cond, cfg.lambda_gp, &mix)?;
                critic_opt.update(critic.params_mut(), &step.grads)?;
                acc.critic_loss += step.loss;
                acc.wasserstein += step.wasserstein;
                acc.penalty += step.penalty;
            }
            let b = draw_batch(data, cfg.batch, schedule, &mut rng)?;
            let step = generator_step(gen, critic, &b.y_t, &b.cond)?;
            gen_opt.update(gen.params_mut(), &step.grads)?;
            acc.generator_loss += step.loss;
        }
        let nc = (steps * cfg.n_critic) as f64;
        acc.critic_loss /= nc;
        acc.wasserstein /= nc;
        acc.penalty /= nc;
        acc.generator_loss /= steps as f64;
        log::debug!(
            "epoch {epoch}: critic {:.5} generator {:.5} w {:.5} gp {:.5}",
            acc.critic_loss,
            acc.generator_loss,
            acc.wasserstein,
            acc.penalty
        );
        progress(&acc);
        trace.push(acc);
    }
    Ok(trace)
}
