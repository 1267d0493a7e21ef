use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::graph::{Graph, Var};
use super::kernels::ConvGeom;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// One layer of a feed-forward network. Images are `[c, h, w]`, vectors `[n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Layer {
    Conv2d {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Dense {
        input: usize,
        output: usize,
    },
    LeakyRelu {
        slope: f64,
    },
    /// Only accepted by [`NetSpec::new`] when twice-differentiability is not
    /// demanded.
    Relu,
    Tanh,
    Sigmoid,
    Flatten,
    Reshape {
        shape: Vec<usize>,
    },
    UpsampleNearest {
        factor: usize,
    },
}

impl Layer {
    pub(crate) fn tag(&self) -> u8 {
        match self {
            Layer::Conv2d { .. } => 1,
            Layer::Dense { .. } => 2,
            Layer::LeakyRelu { .. } => 3,
            Layer::Relu => 4,
            Layer::Tanh => 5,
            Layer::Sigmoid => 6,
            Layer::Flatten => 7,
            Layer::Reshape { .. } => 8,
            Layer::UpsampleNearest { .. } => 9,
        }
    }

    /// Shapes of the trainable tensors (weight then bias).
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            Layer::Conv2d {
                in_ch,
                out_ch,
                kernel,
                ..
            } => vec![vec![out_ch, in_ch, kernel, kernel], vec![out_ch]],
            Layer::Dense { input, output } => vec![vec![output, input], vec![output]],
            _ => vec![],
        }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let bad = |why: &str| Err(Error::usage(format!("{self:?} on input {input:?}: {why}")));
        match self {
            Layer::Conv2d {
                in_ch,
                out_ch,
                kernel,
                stride,
                padding,
            } => {
                let [c, h, w] = input else {
                    return bad("expected [c, h, w]");
                };
                if c != in_ch {
                    return bad("channel mismatch");
                }
                if *stride == 0 || *kernel == 0 || h + 2 * padding < *kernel || w + 2 * padding < *kernel {
                    return bad("kernel does not fit");
                }
                let g = ConvGeom {
                    in_ch: *in_ch,
                    out_ch: *out_ch,
                    kernel: *kernel,
                    stride: *stride,
                    padding: *padding,
                    in_h: *h,
                    in_w: *w,
                };
                Ok(g.output_shape().to_vec())
            }
            Layer::Dense { input: n, output } => {
                if input != [*n] {
                    return bad("expected a flat vector of matching length");
                }
                Ok(vec![*output])
            }
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::Reshape { shape } => {
                if shape.iter().product::<usize>() != input.iter().product::<usize>() {
                    return bad("element count mismatch");
                }
                Ok(shape.clone())
            }
            Layer::UpsampleNearest { factor } => {
                let [c, h, w] = input else {
                    return bad("expected [c, h, w]");
                };
                Ok(vec![*c, h * factor, w * factor])
            }
            Layer::LeakyRelu { .. } | Layer::Relu | Layer::Tanh | Layer::Sigmoid => {
                Ok(input.to_vec())
            }
        }
    }
}

/// An ordered stack of layers with a fixed input shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    output_shape: Vec<usize>,
}

impl NetSpec {
    /// Validates shapes layer by layer. Every layer must be differentiable
    /// twice wherever it is evaluated, so `Relu` is rejected here; use
    /// [`NetSpec::new_first_order`] for networks that never sit under a
    /// gradient penalty.
    pub fn new(input_shape: &[usize], layers: Vec<Layer>) -> Result<Self> {
        if let Some(l) = layers.iter().find(|l| matches!(l, Layer::Relu)) {
            return Err(Error::usage(format!(
                "{l:?} is not twice differentiable; use LeakyRelu"
            )));
        }
        Self::new_first_order(input_shape, layers)
    }

    pub fn new_first_order(input_shape: &[usize], layers: Vec<Layer>) -> Result<Self> {
        let mut shape = input_shape.to_vec();
        for layer in &layers {
            shape = layer.output_shape(&shape)?;
        }
        Ok(Self {
            input_shape: input_shape.to_vec(),
            layers,
            output_shape: shape,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn is_twice_differentiable(&self) -> bool {
        !self.layers.iter().any(|l| matches!(l, Layer::Relu))
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        self.layers.iter().flat_map(Layer::param_shapes).collect()
    }

    /// He-uniform weights scaled by fan-in, zero biases.
    pub fn init_params<R: Rng>(&self, rng: &mut R) -> Params {
        let mut tensors = Vec::new();
        for layer in &self.layers {
            for (i, shape) in layer.param_shapes().into_iter().enumerate() {
                let n: usize = shape.iter().product();
                let data = if i == 0 {
                    let fan_in = n / shape[0];
                    let bound = (6.0 / fan_in as f64).sqrt();
                    let dist = Uniform::new_inclusive(-bound, bound);
                    (0..n).map(|_| dist.sample(rng)).collect()
                } else {
                    vec![0.0; n]
                };
                tensors.push(Tensor::from_parts(shape, data));
            }
        }
        Params::new(tensors)
    }

    pub fn zero_params(&self) -> Params {
        Params::new(self.param_shapes().iter().map(|s| Tensor::zeros(s)).collect())
    }

    fn check_input(&self, shape: &[usize]) -> Result<()> {
        if shape != self.input_shape.as_slice() {
            return Err(Error::usage(format!(
                "network expects input {:?}, got {shape:?}",
                self.input_shape
            )));
        }
        Ok(())
    }

    fn check_params(&self, params: &Params) -> Result<()> {
        let want = self.param_shapes();
        if want.len() != params.len()
            || want
                .iter()
                .zip(params.tensors())
                .any(|(s, t)| s.as_slice() != t.shape())
        {
            return Err(Error::usage("parameter shapes do not match the network"));
        }
        Ok(())
    }

    /// Records the network on `graph`. `params` are the graph handles of the
    /// parameter tensors in [`NetSpec::param_shapes`] order.
    pub fn record(&self, graph: &mut Graph, params: &[Var], x: Var) -> Result<Var> {
        self.check_input(graph.shape(x))?;
        if params.len() != self.param_shapes().len() {
            return Err(Error::usage("wrong number of parameter handles"));
        }
        let mut h = x;
        let mut p = params.iter().copied();
        for layer in &self.layers {
            h = match layer {
                Layer::Conv2d {
                    stride, padding, ..
                } => {
                    let (w, b) = (p.next().unwrap(), p.next().unwrap());
                    let y = graph.conv2d(h, w, *stride, *padding);
                    let shape = graph.shape(y).to_vec();
                    let bb = graph.channel_broadcast(b, &shape);
                    graph.add(y, bb)
                }
                Layer::Dense { .. } => {
                    let (w, b) = (p.next().unwrap(), p.next().unwrap());
                    let y = graph.matvec(w, h);
                    graph.add(y, b)
                }
                Layer::LeakyRelu { slope } => graph.leaky_relu(h, *slope),
                Layer::Relu => graph.leaky_relu(h, 0.0),
                Layer::Tanh => graph.tanh(h),
                Layer::Sigmoid => graph.sigmoid(h),
                Layer::Flatten => {
                    let n = graph.value(h).len();
                    graph.reshape(h, &[n])
                }
                Layer::Reshape { shape } => graph.reshape(h, shape),
                Layer::UpsampleNearest { factor } => graph.upsample(h, *factor),
            };
        }
        Ok(h)
    }

    /// Plain evaluation without keeping the graph.
    pub fn eval(&self, params: &Params, x: &Tensor) -> Result<Tensor> {
        self.check_params(params)?;
        let mut g = Graph::new();
        let pv = params.attach(&mut g);
        let xv = g.leaf(x.clone());
        let y = self.record(&mut g, &pv, xv)?;
        Ok(g.value(y).clone())
    }

    /// Evaluates and keeps the trace for [`Trace::backward`].
    pub fn forward(&self, params: &Params, x: &Tensor) -> Result<Trace> {
        self.check_params(params)?;
        let mut graph = Graph::new();
        let params_v = params.attach(&mut graph);
        let input = graph.leaf(x.clone());
        let output = self.record(&mut graph, &params_v, input)?;
        Ok(Trace {
            graph,
            params: params_v,
            input,
            output,
        })
    }

    /// `‖∇ₓ f(x)‖₂` for a scalar-output network, recorded so that the
    /// returned trace can be differentiated with respect to the parameters.
    pub fn input_grad_norm_graph(&self, params: &Params, x: &Tensor) -> Result<Trace> {
        if !self.is_twice_differentiable() {
            return Err(Error::usage(
                "gradient-norm graph needs a twice-differentiable network",
            ));
        }
        if self.output_shape.iter().product::<usize>() != 1 {
            return Err(Error::usage("gradient norm needs a scalar-output network"));
        }
        let mut trace = self.forward(params, x)?;
        let g = &mut trace.graph;
        let dx = g.grad(trace.output, &[trace.input])[0];
        let norm = match dx {
            Some(dx) => {
                let sq = g.square(dx);
                let s = g.sum(sq);
                g.sqrt(s)
            }
            None => g.leaf(Tensor::scalar(0.0)),
        };
        trace.output = norm;
        Ok(trace)
    }
}

/// Parameter tensors of a network, shared cheaply with graphs.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    tensors: Vec<Arc<Tensor>>,
}

impl Params {
    pub fn new(tensors: Vec<Tensor>) -> Self {
        Self {
            tensors: tensors.into_iter().map(Arc::new).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.tensors.iter().map(|t| t.as_ref())
    }

    pub fn get(&self, i: usize) -> &Tensor {
        &self.tensors[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Tensor {
        Arc::make_mut(&mut self.tensors[i])
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    /// Adds every tensor as a shared leaf of `graph`.
    pub fn attach(&self, graph: &mut Graph) -> Vec<Var> {
        self.tensors
            .iter()
            .map(|t| graph.leaf_shared(Arc::clone(t)))
            .collect()
    }
}

/// A recorded forward evaluation.
#[derive(Debug)]
pub struct Trace {
    pub graph: Graph,
    pub params: Vec<Var>,
    pub input: Var,
    pub output: Var,
}

/// Gradients of one backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub params: Vec<Tensor>,
    pub input: Tensor,
}

impl Trace {
    pub fn output_value(&self) -> &Tensor {
        self.graph.value(self.output)
    }

    /// Propagates `seed` (shaped like the output) to parameters and input.
    pub fn backward(&mut self, seed: &Tensor) -> Result<Gradients> {
        if seed.shape() != self.graph.shape(self.output) {
            return Err(Error::usage("seed shape must match the output"));
        }
        let s = self.graph.leaf(seed.clone());
        let mut wrt = self.params.clone();
        wrt.push(self.input);
        let grads = self.graph.grad_with_seed(self.output, s, &wrt);
        let g = &self.graph;
        let materialize = |v: Var, d: Option<Var>| match d {
            Some(d) => g.value(d).clone(),
            None => Tensor::zeros(g.shape(v)),
        };
        let params = self
            .params
            .iter()
            .zip(&grads)
            .map(|(&v, &d)| materialize(v, d))
            .collect();
        let input = materialize(self.input, grads[self.params.len()]);
        Ok(Gradients { params, input })
    }
}
