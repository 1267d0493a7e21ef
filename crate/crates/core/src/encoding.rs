//! Waypoint matrices and the 5-channel network input.
//!
//! A path is stored as a `[d, rows, cols]` tensor: component `k` of the
//! waypoint in slot `s` lives at `[k, s / cols, s % cols]`, slots in path order
//! (row-major). Unused trailing slots repeat the last waypoint.

use crate::error::{Error, Result};
use crate::tensorad::Tensor;
use crate::workspace::{Config, Raster, RASTER_CHANNELS};

pub const MATRIX_ROWS: usize = 8;
pub const MATRIX_COLS: usize = 8;
pub const IMAGE_SIZE: usize = 32;
pub const IMAGE_CHANNELS: usize = RASTER_CHANNELS + 1;
/// Width of the sinusoidal encoding that fills the condition channel.
pub const PE_MODEL_DIM: usize = 32;
const PE_BASE: f64 = 10000.0;

#[derive(Clone, Debug, PartialEq)]
pub struct PathMatrix {
    values: Tensor,
    used_slots: usize,
}

impl PathMatrix {
    /// Wraps raw values (for example a generator output). All slots count as
    /// used.
    pub fn from_tensor(values: Tensor) -> Result<Self> {
        let [_, r, c] = values.shape() else {
            return Err(Error::usage("path matrix must be [d, rows, cols]"));
        };
        let used_slots = r * c;
        Self::with_used(values, used_slots)
    }

    pub fn with_used(values: Tensor, used_slots: usize) -> Result<Self> {
        let [d, r, c] = values.shape() else {
            return Err(Error::usage("path matrix must be [d, rows, cols]"));
        };
        if *d == 0 || used_slots == 0 || used_slots > r * c {
            return Err(Error::usage("path matrix needs d ≥ 1 and 1 ≤ used_slots ≤ slots"));
        }
        if values.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::usage("path matrix entries must lie in [0,1]"));
        }
        Ok(Self { values, used_slots })
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn slot_count(&self) -> usize {
        self.values.shape()[1] * self.values.shape()[2]
    }

    pub fn used_slots(&self) -> usize {
        self.used_slots
    }

    /// Configuration stored in `slot`.
    pub fn slot(&self, slot: usize) -> Config {
        let n = self.slot_count();
        Config::clamped(
            (0..self.dim())
                .map(|k| self.values.data()[k * n + slot])
                .collect(),
        )
    }
}

/// Indices of `cap` waypoints spread uniformly over `0..n`, first and last
/// included, strictly increasing when `n > cap`.
pub fn subsample_indices(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    if cap == 1 {
        return vec![0];
    }
    (0..cap)
        .map(|j| ((j * (n - 1)) as f64 / (cap - 1) as f64).round() as usize)
        .collect()
}

pub fn encode_path(waypoints: &[Config], rows: usize, cols: usize) -> Result<PathMatrix> {
    let first = waypoints
        .first()
        .ok_or_else(|| Error::usage("cannot encode an empty path"))?;
    let d = first.dim();
    if waypoints.iter().any(|w| w.dim() != d) {
        return Err(Error::usage("waypoints have mixed dimensions"));
    }
    let cap = rows * cols;
    if cap == 0 {
        return Err(Error::usage("matrix must have at least one slot"));
    }
    let chosen: Vec<&Config> = subsample_indices(waypoints.len(), cap)
        .into_iter()
        .map(|i| &waypoints[i])
        .collect();
    let used = chosen.len();
    let mut data = vec![0.0; d * cap];
    for s in 0..cap {
        let w = chosen[s.min(used - 1)];
        for (k, &v) in w.as_slice().iter().enumerate() {
            data[k * cap + s] = v;
        }
    }
    PathMatrix::with_used(Tensor::new(&[d, rows, cols], data)?, used)
}

/// The used slots, in order.
pub fn decode_matrix(m: &PathMatrix) -> Vec<Config> {
    (0..m.used_slots()).map(|s| m.slot(s)).collect()
}

/// Start/goal conditioning channel, `[32, 32]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionChannel {
    grid: Tensor,
}

impl ConditionChannel {
    pub fn grid(&self) -> &Tensor {
        &self.grid
    }

    /// Reads back `(start, goal)` for configurations of dimension `d`.
    pub fn start_goal(&self, d: usize) -> (Config, Config) {
        let v = self.grid.data();
        (
            Config::clamped(v[..d].to_vec()),
            Config::clamped(v[d..2 * d].to_vec()),
        )
    }
}

/// Sinusoidal encoding value at `(pos, i)` for model width `PE_MODEL_DIM`.
pub fn positional_encoding(pos: usize, i: usize) -> f64 {
    let pair = (i / 2) * 2;
    let angle = pos as f64 / PE_BASE.powf(pair as f64 / PE_MODEL_DIM as f64);
    if i.is_multiple_of(2) {
        angle.sin()
    } else {
        angle.cos()
    }
}

/// Cells `0..d` hold `start`, `d..2d` hold `goal`; remaining cell `2d + j`
/// holds `(PE(j / 32, j % 32) + 1) / 2`.
pub fn build_condition(start: &Config, goal: &Config) -> Result<ConditionChannel> {
    let d = start.dim();
    if goal.dim() != d {
        return Err(Error::usage("start and goal dimensions differ"));
    }
    let n = IMAGE_SIZE * IMAGE_SIZE;
    if 2 * d > n {
        return Err(Error::usage("configuration too large for the condition channel"));
    }
    let mut data = Vec::with_capacity(n);
    data.extend_from_slice(start.as_slice());
    data.extend_from_slice(goal.as_slice());
    for j in 0..n - 2 * d {
        let pe = positional_encoding(j / PE_MODEL_DIM, j % PE_MODEL_DIM);
        data.push((pe + 1.0) / 2.0);
    }
    Ok(ConditionChannel {
        grid: Tensor::new(&[IMAGE_SIZE, IMAGE_SIZE], data)?,
    })
}

/// The `[5, 32, 32]` network input: four scene channels plus the condition.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkspaceImage {
    tensor: Tensor,
}

impl WorkspaceImage {
    pub fn from_tensor(tensor: Tensor) -> Result<Self> {
        if tensor.shape() != [IMAGE_CHANNELS, IMAGE_SIZE, IMAGE_SIZE] {
            return Err(Error::usage(format!(
                "workspace image must be [{IMAGE_CHANNELS}, {IMAGE_SIZE}, {IMAGE_SIZE}], got {:?}",
                tensor.shape()
            )));
        }
        if tensor.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::usage("workspace image values must lie in [0,1]"));
        }
        Ok(Self { tensor })
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = IMAGE_SIZE * IMAGE_SIZE;
        &self.tensor.data()[c * n..(c + 1) * n]
    }

    pub fn condition(&self) -> ConditionChannel {
        ConditionChannel {
            grid: Tensor::from_parts(
                vec![IMAGE_SIZE, IMAGE_SIZE],
                self.channel(RASTER_CHANNELS).to_vec(),
            ),
        }
    }
}

pub fn assemble_input(raster: &Raster, cond: &ConditionChannel) -> Result<WorkspaceImage> {
    if raster.shape() != [RASTER_CHANNELS, IMAGE_SIZE, IMAGE_SIZE] {
        return Err(Error::usage(format!(
            "scene raster must be [{RASTER_CHANNELS}, {IMAGE_SIZE}, {IMAGE_SIZE}], got {:?}",
            raster.shape()
        )));
    }
    let mut data = raster.data().to_vec();
    data.extend_from_slice(cond.grid.data());
    WorkspaceImage::from_tensor(Tensor::new(&[IMAGE_CHANNELS, IMAGE_SIZE, IMAGE_SIZE], data)?)
}
