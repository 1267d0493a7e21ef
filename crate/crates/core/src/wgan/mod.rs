//! Conditional WGAN-GP that maps a noised workspace image to a waypoint matrix.

mod checkpoint;
mod config;
mod objective;
mod train;

pub use checkpoint::{Checkpoint, CheckpointHeader};
pub use config::{TrainingFile, TRAINING_KEYS};
pub use objective::{
    assemble_critic_input, critic_input, critic_objective, generator_objective, generator_step,
    CriticStep, GeneratorStep,
};
pub use train::{train, EpochStats, TrainConfig, TrainSample};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::{diffuse, NoiseSchedule};
use crate::encoding::{decode_matrix, PathMatrix, WorkspaceImage, IMAGE_CHANNELS, IMAGE_SIZE, MATRIX_COLS, MATRIX_ROWS};
use crate::error::{Error, Result};
use crate::tensorad::{Layer, NetSpec, Params, Tensor};
use crate::workspace::Config;

/// Layer widths of the default generator and critic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// Output channels of the three strided convolutions.
    pub channels: [usize; 3],
    pub bottleneck: usize,
    pub slope: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            channels: [16, 32, 32],
            bottleneck: 128,
            slope: 0.2,
        }
    }
}

impl Architecture {
    fn encoder(&self, in_ch: usize) -> Vec<Layer> {
        let mut layers = Vec::new();
        let mut c = in_ch;
        for &out in &self.channels {
            layers.push(Layer::Conv2d {
                in_ch: c,
                out_ch: out,
                kernel: 4,
                stride: 2,
                padding: 1,
            });
            layers.push(Layer::LeakyRelu { slope: self.slope });
            c = out;
        }
        layers.push(Layer::Flatten);
        layers
    }

    /// `[5, 32, 32] → [dim, 8, 8]`: three stride-2 convolutions to 4×4, a dense
    /// bottleneck, then two upsample + 3×3 convolution stages from 2×2 to 8×8.
    pub fn generator_spec(&self, dim: usize) -> Result<NetSpec> {
        let [_, c2, c3] = self.channels;
        let side = IMAGE_SIZE / 8;
        let mut layers = self.encoder(IMAGE_CHANNELS);
        layers.extend([
            Layer::Dense {
                input: c3 * side * side,
                output: self.bottleneck,
            },
            Layer::LeakyRelu { slope: self.slope },
            Layer::Dense {
                input: self.bottleneck,
                output: c3 * (MATRIX_ROWS / 4) * (MATRIX_COLS / 4),
            },
            Layer::LeakyRelu { slope: self.slope },
            Layer::Reshape {
                shape: vec![c3, MATRIX_ROWS / 4, MATRIX_COLS / 4],
            },
            Layer::UpsampleNearest { factor: 2 },
            Layer::Conv2d {
                in_ch: c3,
                out_ch: c2,
                kernel: 3,
                stride: 1,
                padding: 1,
            },
            Layer::LeakyRelu { slope: self.slope },
            Layer::UpsampleNearest { factor: 2 },
            Layer::Conv2d {
                in_ch: c2,
                out_ch: dim,
                kernel: 3,
                stride: 1,
                padding: 1,
            },
            Layer::Sigmoid,
        ]);
        NetSpec::new(&[IMAGE_CHANNELS, IMAGE_SIZE, IMAGE_SIZE], layers)
    }

    /// `[dim + 5, 32, 32] → [1]`: three stride-2 convolutions and a dense head.
    pub fn critic_spec(&self, dim: usize) -> Result<NetSpec> {
        let c3 = self.channels[2];
        let side = IMAGE_SIZE / 8;
        let mut layers = self.encoder(dim + IMAGE_CHANNELS);
        layers.push(Layer::Dense {
            input: c3 * side * side,
            output: 1,
        });
        NetSpec::new(&[dim + IMAGE_CHANNELS, IMAGE_SIZE, IMAGE_SIZE], layers)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorModel {
    net: NetSpec,
    params: Params,
}

impl GeneratorModel {
    /// The network must end in a sigmoid so every output lies in `[0, 1]`,
    /// and produce a `[d, rows, cols]` tensor.
    pub fn new(net: NetSpec, params: Params) -> Result<Self> {
        if !matches!(net.layers().last(), Some(Layer::Sigmoid)) {
            return Err(Error::usage("generator must end with a sigmoid"));
        }
        if net.output_shape().len() != 3 || net.input_shape().len() != 3 {
            return Err(Error::usage("generator maps [c, h, w] images to [d, rows, cols]"));
        }
        check_params(&net, &params)?;
        Ok(Self { net, params })
    }

    pub fn initialized<R: Rng>(dim: usize, arch: &Architecture, rng: &mut R) -> Result<Self> {
        let net = arch.generator_spec(dim)?;
        let params = net.init_params(rng);
        Self::new(net, params)
    }

    pub fn net(&self) -> &NetSpec {
        &self.net
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    pub fn dim(&self) -> usize {
        self.net.output_shape()[0]
    }

    /// Raw `[d, rows, cols]` output for one input image `y_t`.
    pub fn predict(&self, y_t: &Tensor) -> Result<Tensor> {
        self.net.eval(&self.params, y_t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticModel {
    net: NetSpec,
    params: Params,
}

impl CriticModel {
    pub fn new(net: NetSpec, params: Params) -> Result<Self> {
        if net.output_shape().iter().product::<usize>() != 1 {
            return Err(Error::usage("critic must produce a single score"));
        }
        if !net.is_twice_differentiable() {
            return Err(Error::usage("critic must be twice differentiable"));
        }
        if net.input_shape().len() != 3 {
            return Err(Error::usage("critic input must be [c, h, w]"));
        }
        check_params(&net, &params)?;
        Ok(Self { net, params })
    }

    pub fn initialized<R: Rng>(dim: usize, arch: &Architecture, rng: &mut R) -> Result<Self> {
        let net = arch.critic_spec(dim)?;
        let params = net.init_params(rng);
        Self::new(net, params)
    }

    pub fn net(&self) -> &NetSpec {
        &self.net
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    /// Score of a waypoint matrix under the condition image.
    pub fn score(&self, path: &Tensor, cond: &Tensor) -> Result<f64> {
        let x = assemble_critic_input(path, cond)?;
        Ok(self.net.eval(&self.params, &x)?.item())
    }
}

fn check_params(net: &NetSpec, params: &Params) -> Result<()> {
    let want = net.param_shapes();
    if want.len() != params.len()
        || want.iter().zip(params.tensors()).any(|(s, t)| s.as_slice() != t.shape())
    {
        return Err(Error::usage("parameters do not match the network"));
    }
    Ok(())
}

/// Consecutive slots closer than this are reported once.
pub const DUPLICATE_SLOT_DISTANCE: f64 = 1e-3;

/// Noises the scene image to step `t`, runs the generator and reads the
/// waypoint slots back in order. Consecutive slots that (nearly) coincide are
/// merged, so at most `rows × cols` exemplars come back, each in `[0, 1]^d`.
pub fn generate_exemplars(
    gen: &GeneratorModel,
    image: &WorkspaceImage,
    t: usize,
    schedule: &NoiseSchedule,
    noise: &Tensor,
) -> Result<Vec<Config>> {
    let y_t = diffuse(image.tensor(), t, schedule, noise)?;
    let raw = gen.predict(&y_t)?.map(|v| v.clamp(0.0, 1.0));
    let slots = decode_matrix(&PathMatrix::from_tensor(raw)?);
    let mut out: Vec<Config> = Vec::with_capacity(slots.len());
    for q in slots {
        if out.last().is_none_or(|p| p.distance(&q) >= DUPLICATE_SLOT_DISTANCE) {
            out.push(q);
        }
    }
    Ok(out)
}
