//! Checkpoint file.
//!
//! ```text
//! magic          8 bytes  "WGRRTCKP"
//! version        u32      = 1
//! header length  u64, then that many bytes of JSON (CheckpointHeader)
//! generator      u64 length, then a tensorad weights blob
//! critic         u64 length (0 when absent), then a tensorad weights blob
//! ```
//! Integers are little-endian.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CriticModel, GeneratorModel};
use crate::diffusion::ScheduleConfig;
use crate::error::{Error, Result};
use crate::tensorad::weights;

const MAGIC: &[u8; 8] = b"WGRRTCKP";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub dim: usize,
    pub rows: usize,
    pub cols: usize,
    pub schedule: ScheduleConfig,
    pub inference_t: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub generator: GeneratorModel,
    pub critic: Option<CriticModel>,
}

impl Checkpoint {
    pub fn new(generator: GeneratorModel, critic: Option<CriticModel>, schedule: ScheduleConfig, inference_t: usize) -> Result<Self> {
        let out = generator.net().output_shape();
        let header = CheckpointHeader {
            dim: out[0],
            rows: out[1],
            cols: out[2],
            schedule,
            inference_t,
        };
        let ck = Self {
            header,
            generator,
            critic,
        };
        ck.validate()?;
        Ok(ck)
    }

    fn validate(&self) -> Result<()> {
        let h = &self.header;
        h.schedule.build()?;
        if h.inference_t == 0 || h.inference_t > h.schedule.steps {
            return Err(Error::usage("inference timestep outside the schedule"));
        }
        if self.generator.net().output_shape() != [h.dim, h.rows, h.cols] {
            return Err(Error::usage("header does not match the generator output"));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let mut put = |bytes: &[u8]| {
            out.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
            out.extend_from_slice(bytes);
        };
        put(&serde_json::to_vec(&self.header).expect("header serializes"));
        put(&weights::encode(self.generator.net(), self.generator.params()));
        match &self.critic {
            Some(c) => put(&weights::encode(c.net(), c.params())),
            None => put(&[]),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::usage(format!("checkpoint: {m}"));
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let mut rest = &bytes[12..];
        let mut take = || -> Result<&[u8]> {
            if rest.len() < 8 {
                return Err(bad("truncated"));
            }
            let n = u64::from_le_bytes(rest[..8].try_into().unwrap()) as usize;
            if rest.len() - 8 < n {
                return Err(bad("truncated"));
            }
            let chunk = &rest[8..8 + n];
            rest = &rest[8 + n..];
            Ok(chunk)
        };
        let header: CheckpointHeader =
            serde_json::from_slice(take()?).map_err(|e| bad(&format!("header: {e}")))?;
        let (gnet, gparams) = weights::decode(take()?)?;
        let generator = GeneratorModel::new(gnet, gparams)?;
        let cbytes = take()?;
        let critic = if cbytes.is_empty() {
            None
        } else {
            let (cnet, cparams) = weights::decode(cbytes)?;
            Some(CriticModel::new(cnet, cparams)?)
        };
        if !rest.is_empty() {
            return Err(bad("trailing bytes"));
        }
        let ck = Self {
            header,
            generator,
            critic,
        };
        ck.validate()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wgan::Architecture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let arch = Architecture {
            channels: [4, 4, 4],
            bottleneck: 8,
            slope: 0.2,
        };
        let g = GeneratorModel::initialized(2, &arch, &mut rng).unwrap();
        let c = CriticModel::initialized(2, &arch, &mut rng).unwrap();
        let ck = Checkpoint::new(g, Some(c), ScheduleConfig::default(), 25).unwrap();
        let bytes = ck.to_bytes();
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ck);
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let no_critic = Checkpoint {
            critic: None,
            ..ck.clone()
        };
        assert_eq!(Checkpoint::from_bytes(&no_critic.to_bytes()).unwrap(), no_critic);
        assert!(Checkpoint::new(ck.generator.clone(), None, ScheduleConfig::default(), 0).is_err());
    }
}
