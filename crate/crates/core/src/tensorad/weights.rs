//! Binary weights file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "TADWGHTS"
//! version      u32      = 1
//! input rank   u32, then that many u64 dims
//! layer count  u32
//! per layer:
//!   kind tag   u8       (1 conv2d, 2 dense, 3 leaky_relu, 4 relu, 5 tanh,
//!                        6 sigmoid, 7 flatten, 8 reshape, 9 upsample_nearest)
//!   hyper count u32, then that many u64 (conv2d: in,out,kernel,stride,pad;
//!                        dense: in,out; reshape: dims; upsample: factor)
//!   reals count u32, then that many f64 (leaky_relu: slope)
//!   tensor count u32
//!   per tensor: rank u32, dims u64 × rank, data f64 × Π dims
//! ```

use std::io::{Read, Write};

use super::net::{Layer, NetSpec, Params};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"TADWGHTS";
pub const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn encode(net: &NetSpec, params: &Params) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, net.input_shape().len() as u32);
    for &d in net.input_shape() {
        put_u64(&mut out, d as u64);
    }
    put_u32(&mut out, net.layers().len() as u32);
    let mut tensors = params.tensors();
    for layer in net.layers() {
        out.push(layer.tag());
        let (hyper, reals): (Vec<usize>, Vec<f64>) = match layer {
            Layer::Conv2d {
                in_ch,
                out_ch,
                kernel,
                stride,
                padding,
            } => (vec![*in_ch, *out_ch, *kernel, *stride, *padding], vec![]),
            Layer::Dense { input, output } => (vec![*input, *output], vec![]),
            Layer::LeakyRelu { slope } => (vec![], vec![*slope]),
            Layer::Reshape { shape } => (shape.clone(), vec![]),
            Layer::UpsampleNearest { factor } => (vec![*factor], vec![]),
            Layer::Relu | Layer::Tanh | Layer::Sigmoid | Layer::Flatten => (vec![], vec![]),
        };
        put_u32(&mut out, hyper.len() as u32);
        for h in hyper {
            put_u64(&mut out, h as u64);
        }
        put_u32(&mut out, reals.len() as u32);
        for r in reals {
            put_f64(&mut out, r);
        }
        let n = layer.param_shapes().len();
        put_u32(&mut out, n as u32);
        for t in tensors.by_ref().take(n) {
            put_u32(&mut out, t.shape().len() as u32);
            for &d in t.shape() {
                put_u64(&mut out, d as u64);
            }
            for &v in t.data() {
                put_f64(&mut out, v);
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::parse(0, what, format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8, what)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| Error::parse(0, what, "value too large"))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(NetSpec, Params)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(Error::parse(0, "magic", "not a weights file"));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::parse(0, "version", format!("unsupported version {version}")));
    }
    let rank = r.u32("input rank")? as usize;
    let input: Vec<usize> = (0..rank).map(|_| r.u64("input dim")).collect::<Result<_>>()?;
    let count = r.u32("layer count")? as usize;
    let mut layers = Vec::with_capacity(count);
    let mut tensors = Vec::new();
    for _ in 0..count {
        let tag = r.u8("kind tag")?;
        let nh = r.u32("hyper count")? as usize;
        let hyper: Vec<usize> = (0..nh).map(|_| r.u64("hyper")).collect::<Result<_>>()?;
        let nr = r.u32("reals count")? as usize;
        let reals: Vec<f64> = (0..nr).map(|_| r.f64("real")).collect::<Result<_>>()?;
        let bad = || Error::parse(0, "layer", format!("malformed layer with tag {tag}"));
        let layer = match (tag, hyper.as_slice(), reals.as_slice()) {
            (1, &[in_ch, out_ch, kernel, stride, padding], []) => Layer::Conv2d {
                in_ch,
                out_ch,
                kernel,
                stride,
                padding,
            },
            (2, &[input, output], []) => Layer::Dense { input, output },
            (3, [], &[slope]) => Layer::LeakyRelu { slope },
            (4, [], []) => Layer::Relu,
            (5, [], []) => Layer::Tanh,
            (6, [], []) => Layer::Sigmoid,
            (7, [], []) => Layer::Flatten,
            (8, dims, []) => Layer::Reshape {
                shape: dims.to_vec(),
            },
            (9, &[factor], []) => Layer::UpsampleNearest { factor },
            _ => return Err(bad()),
        };
        let nt = r.u32("tensor count")? as usize;
        if nt != layer.param_shapes().len() {
            return Err(bad());
        }
        for _ in 0..nt {
            let rank = r.u32("tensor rank")? as usize;
            let shape: Vec<usize> = (0..rank).map(|_| r.u64("tensor dim")).collect::<Result<_>>()?;
            let n: usize = shape.iter().product();
            let data: Vec<f64> = (0..n).map(|_| r.f64("tensor data")).collect::<Result<_>>()?;
            tensors.push(Tensor::from_parts(shape, data));
        }
        layers.push(layer);
    }
    if r.pos != bytes.len() {
        return Err(Error::parse(0, "trailer", "unexpected bytes after last layer"));
    }
    let net = NetSpec::new_first_order(&input, layers)?;
    let params = Params::new(tensors);
    if net
        .param_shapes()
        .iter()
        .zip(params.tensors())
        .any(|(s, t)| s.as_slice() != t.shape())
    {
        return Err(Error::parse(0, "tensor", "parameter shape does not match its layer"));
    }
    Ok((net, params))
}

pub fn write_to(w: &mut impl Write, net: &NetSpec, params: &Params) -> std::io::Result<()> {
    w.write_all(&encode(net, params))
}

pub fn read_from(r: &mut impl Read) -> Result<(NetSpec, Params)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::io("<weights stream>", e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn sample_net() -> NetSpec {
        NetSpec::new(
            &[2, 4, 4],
            vec![
                Layer::Conv2d {
                    in_ch: 2,
                    out_ch: 3,
                    kernel: 3,
                    stride: 1,
                    padding: 1,
                },
                Layer::LeakyRelu { slope: 0.2 },
                Layer::UpsampleNearest { factor: 2 },
                Layer::Flatten,
                Layer::Dense {
                    input: 192,
                    output: 4,
                },
                Layer::Reshape { shape: vec![1, 2, 2] },
                Layer::Tanh,
                Layer::Sigmoid,
            ],
        )
        .unwrap()
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let net = sample_net();
        let params = net.init_params(&mut ChaCha8Rng::seed_from_u64(3));
        let bytes = encode(&net, &params);
        let (net2, params2) = decode(&bytes).unwrap();
        assert_eq!(net, net2);
        for (a, b) in params.tensors().zip(params2.tensors()) {
            assert_eq!(a.shape(), b.shape());
            assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(encode(&net2, &params2), bytes);
    }

    #[test]
    fn truncation_and_bad_magic_are_errors() {
        let net = sample_net();
        let bytes = encode(&net, &net.zero_params());
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
    }
}
