use std::path::Path;

use serde::{Deserialize, Serialize};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{train, Architecture, Checkpoint, CriticModel, EpochStats, GeneratorModel, TrainConfig, TrainSample};
use crate::config::{load_toml, parse_toml};
use crate::diffusion::ScheduleConfig;
use crate::error::{Error, Result};

/// Every key accepted in a training configuration file, with its meaning.
pub const TRAINING_KEYS: &[(&str, &str)] = &[
    ("lr", "Adam step size for both networks (default 4e-5)"),
    ("beta1", "Adam first-moment decay (default 0)"),
    ("beta2", "Adam second-moment decay (default 0.9)"),
    ("batch", "items per critic/generator batch (default 64)"),
    ("lambda_gp", "gradient-penalty weight (default 10)"),
    ("n_critic", "critic updates per generator update (default 5)"),
    ("epochs", "number of epochs (default 10)"),
    ("steps_per_epoch", "generator updates per epoch (default: one pass over the data)"),
    ("diffusion_steps", "noise schedule length T (default 100)"),
    ("beta_start", "first noise increment of the linear schedule (default 1e-4)"),
    ("beta_end", "last noise increment of the linear schedule (default 0.1)"),
    ("inference_t", "timestep used when generating exemplars (default T/4)"),
    ("channels", "output channels of the three strided convolutions (default [16, 32, 32])"),
    ("bottleneck", "width of the generator's dense bottleneck (default 128)"),
    ("slope", "leaky-ReLU negative slope (default 0.2)"),
    ("seed", "training seed (default 0)"),
];

/// Flat key-value training configuration, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingFile {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch: usize,
    pub lambda_gp: f64,
    pub n_critic: usize,
    pub epochs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_per_epoch: Option<usize>,
    pub diffusion_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inference_t: Option<usize>,
    pub channels: [usize; 3],
    pub bottleneck: usize,
    pub slope: f64,
    pub seed: u64,
}

impl Default for TrainingFile {
    fn default() -> Self {
        let t = TrainConfig::default();
        let s = ScheduleConfig::default();
        let a = Architecture::default();
        Self {
            lr: t.lr,
            beta1: t.beta1,
            beta2: t.beta2,
            batch: t.batch,
            lambda_gp: t.lambda_gp,
            n_critic: t.n_critic,
            epochs: t.epochs,
            steps_per_epoch: t.steps_per_epoch,
            diffusion_steps: s.steps,
            beta_start: s.beta_start,
            beta_end: s.beta_end,
            inference_t: None,
            channels: a.channels,
            bottleneck: a.bottleneck,
            slope: a.slope,
            seed: 0,
        }
    }
}

impl TrainingFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = parse_toml(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: Self = load_toml(path)?;
        file.validate().map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok(file)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        let schedule = self.schedule();
        schedule.build().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(t) = self.inference_t {
            if t == 0 || t > schedule.steps {
                return Err(Error::Config(format!(
                    "key `inference_t`: {t} outside 1..={}",
                    schedule.steps
                )));
            }
        }
        if self.channels.contains(&0) || self.bottleneck == 0 {
            return Err(Error::Config("keys `channels`/`bottleneck` must be positive".into()));
        }
        if !(self.slope > 0.0 && self.slope < 1.0) {
            return Err(Error::Config("key `slope` must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            batch: self.batch,
            lambda_gp: self.lambda_gp,
            n_critic: self.n_critic,
            epochs: self.epochs,
            steps_per_epoch: self.steps_per_epoch,
        }
    }

    pub fn schedule(&self) -> ScheduleConfig {
        ScheduleConfig {
            steps: self.diffusion_steps,
            beta_start: self.beta_start,
            beta_end: self.beta_end,
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            channels: self.channels,
            bottleneck: self.bottleneck,
            slope: self.slope,
        }
    }

    pub fn inference_t(&self) -> usize {
        self.inference_t
            .unwrap_or_else(|| self.schedule().default_inference_t())
    }

    /// Initializes both networks from `seed`, trains them on `samples` and
    /// packs the result as a checkpoint. The robot dimension is read off the
    /// first target.
    pub fn fit(&self, samples: &[TrainSample], progress: impl FnMut(&EpochStats)) -> Result<(Checkpoint, Vec<EpochStats>)> {
        self.validate()?;
        let first = samples
            .first()
            .ok_or_else(|| Error::usage("training needs at least one sample"))?;
        let dim = first.target.shape()[0];
        let arch = self.architecture();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut gen = GeneratorModel::initialized(dim, &arch, &mut rng)?;
        let mut critic = CriticModel::initialized(dim, &arch, &mut rng)?;
        let schedule = self.schedule().build()?;
        let trace = train(samples, &mut gen, &mut critic, &self.train_config(), &schedule, self.seed, progress)?;
        let ck = Checkpoint::new(gen, Some(critic), self.schedule(), self.inference_t())?;
        Ok((ck, trace))
    }
}
