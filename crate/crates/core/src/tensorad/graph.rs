//! Define-by-run computation graph with reverse-mode gradients.
//!
//! Every op evaluates eagerly when it is recorded. [`Graph::grad`] walks the
//! recorded nodes backwards and expresses each adjoint with the same recorded
//! ops, so a gradient is itself an ordinary node that can be differentiated
//! again. That is what the gradient penalty needs: `‖∇ₓf‖` is built by one
//! `grad` call and its parameter derivative comes from a second one.

use std::sync::Arc;

use super::kernels::{self, ConvGeom};
use super::tensor::Tensor;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    /// Elementwise `a / b`, with `0` wherever `b == 0`.
    Div(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Square(Var),
    Sqrt(Var),
    Tanh(Var),
    Sigmoid(Var),
    LeakyRelu(Var, f64),
    /// `g * (r > 0 ? 1 : slope)`; the mask input `r` is not differentiated.
    MaskScale(Var, Var, f64),
    Sum(Var),
    Broadcast(Var),
    Reshape(Var),
    MatVec(Var, Var),
    MatVecT(Var, Var),
    Outer(Var, Var),
    Conv(Var, Var, ConvGeom),
    ConvInputGrad(Var, Var, ConvGeom),
    ConvWeightGrad(Var, Var, ConvGeom),
    ChannelSum(Var),
    ChannelBroadcast(Var),
    Upsample(Var, usize),
    BlockSum(Var, usize),
    Concat(Var, Var),
    Slice(Var, usize),
    Pad(Var, usize),
}

#[derive(Debug)]
struct Node {
    value: Arc<Tensor>,
    op: Op,
}

/// Single-owner tape. Create one per sample (or per evaluation), record ops,
/// then ask for gradients.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node {
            value: Arc::new(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a leaf. Whether a leaf is differentiated is decided per
    /// [`Graph::grad`] call by the `wrt` list, not here.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Records a leaf that shares storage with the caller (parameters).
    pub fn leaf_shared(&mut self, value: Arc<Tensor>) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) {
        assert_eq!(
            self.shape(a),
            self.shape(b),
            "{what}: shape mismatch {:?} vs {:?}",
            self.shape(a),
            self.shape(b)
        );
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.same_shape(a, b, "add");
        let v = self.value(a).zip(self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.same_shape(a, b, "sub");
        let v = self.value(a).zip(self.value(b), |x, y| x - y);
        self.push(v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.same_shape(a, b, "mul");
        let v = self.value(a).zip(self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        self.same_shape(a, b, "div");
        let v = self
            .value(a)
            .zip(self.value(b), |x, y| if y == 0.0 { 0.0 } else { x / y });
        self.push(v, Op::Div(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x * c);
        self.push(v, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x + c);
        self.push(v, Op::AddScalar(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x * x);
        self.push(v, Op::Square(a))
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::sqrt);
        self.push(v, Op::Sqrt(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(v, Op::Sigmoid(a))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        self.push(v, Op::LeakyRelu(a, slope))
    }

    fn mask_scale(&mut self, g: Var, reference: Var, slope: f64) -> Var {
        self.same_shape(g, reference, "mask_scale");
        let v = self
            .value(g)
            .zip(self.value(reference), |x, r| if r > 0.0 { x } else { slope * x });
        self.push(v, Op::MaskScale(g, reference, slope))
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let v = Tensor::scalar(self.value(a).sum());
        self.push(v, Op::Sum(a))
    }

    /// Mean of all elements, as a scalar.
    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len() as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    /// Repeats a one-element tensor into `shape`.
    pub fn broadcast(&mut self, a: Var, shape: &[usize]) -> Var {
        assert_eq!(self.value(a).len(), 1, "broadcast needs a one-element tensor");
        let v = Tensor::filled(shape, self.value(a).item());
        self.push(v, Op::Broadcast(a))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Var {
        let v = (*self.nodes[a.0].value)
            .clone()
            .reshaped(shape)
            .expect("reshape: element count mismatch");
        self.push(v, Op::Reshape(a))
    }

    /// `W x` with `W: [rows, cols]`, `x: [cols]`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Var {
        let (rows, cols) = self.matrix_dims(w);
        assert_eq!(self.shape(x), [cols], "matvec: input length mismatch");
        let y = kernels::matvec(self.value(w).data(), self.value(x).data(), rows, cols);
        self.push(Tensor::from_parts(vec![rows], y), Op::MatVec(w, x))
    }

    /// `Wᵀ x` with `W: [rows, cols]`, `x: [rows]`.
    pub fn matvec_t(&mut self, w: Var, x: Var) -> Var {
        let (rows, cols) = self.matrix_dims(w);
        assert_eq!(self.shape(x), [rows], "matvec_t: input length mismatch");
        let y = kernels::matvec_t(self.value(w).data(), self.value(x).data(), rows, cols);
        self.push(Tensor::from_parts(vec![cols], y), Op::MatVecT(w, x))
    }

    pub fn outer(&mut self, a: Var, b: Var) -> Var {
        let (n, m) = (self.value(a).len(), self.value(b).len());
        let o = kernels::outer(self.value(a).data(), self.value(b).data());
        self.push(Tensor::from_parts(vec![n, m], o), Op::Outer(a, b))
    }

    fn matrix_dims(&self, w: Var) -> (usize, usize) {
        match self.shape(w) {
            [r, c] => (*r, *c),
            s => panic!("expected a matrix, got shape {s:?}"),
        }
    }

    fn conv_geom(&self, x: Var, w: Var, stride: usize, padding: usize) -> ConvGeom {
        let (in_ch, in_h, in_w) = match self.shape(x) {
            [c, h, w] => (*c, *h, *w),
            s => panic!("conv2d input must be [c, h, w], got {s:?}"),
        };
        let (out_ch, wc, k) = match self.shape(w) {
            [o, c, k1, k2] if k1 == k2 => (*o, *c, *k1),
            s => panic!("conv2d weight must be [o, c, k, k], got {s:?}"),
        };
        assert_eq!(wc, in_ch, "conv2d channel mismatch");
        assert!(in_h + 2 * padding >= k && in_w + 2 * padding >= k, "conv2d kernel too large");
        ConvGeom {
            in_ch,
            out_ch,
            kernel: k,
            stride,
            padding,
            in_h,
            in_w,
        }
    }

    /// Cross-correlation of `x: [c, h, w]` with `w: [o, c, k, k]` (no bias).
    pub fn conv2d(&mut self, x: Var, w: Var, stride: usize, padding: usize) -> Var {
        let g = self.conv_geom(x, w, stride, padding);
        self.conv_with(x, w, g)
    }

    fn conv_with(&mut self, x: Var, w: Var, g: ConvGeom) -> Var {
        let y = kernels::conv2d(self.value(x).data(), self.value(w).data(), &g);
        self.push(Tensor::from_parts(g.output_shape().to_vec(), y), Op::Conv(x, w, g))
    }

    fn conv_input_grad(&mut self, gy: Var, w: Var, g: ConvGeom) -> Var {
        let x = kernels::conv2d_input_grad(self.value(gy).data(), self.value(w).data(), &g);
        self.push(
            Tensor::from_parts(g.input_shape().to_vec(), x),
            Op::ConvInputGrad(gy, w, g),
        )
    }

    fn conv_weight_grad(&mut self, x: Var, gy: Var, g: ConvGeom) -> Var {
        let gw = kernels::conv2d_weight_grad(self.value(x).data(), self.value(gy).data(), &g);
        self.push(
            Tensor::from_parts(g.weight_shape().to_vec(), gw),
            Op::ConvWeightGrad(x, gy, g),
        )
    }

    /// Sums `[c, h, w]` over the spatial axes into `[c]`.
    pub fn channel_sum(&mut self, a: Var) -> Var {
        let shape = self.shape(a).to_vec();
        let c = shape[0];
        let plane = self.value(a).len() / c;
        let data = self.value(a).data();
        let v: Vec<f64> = (0..c)
            .map(|i| data[i * plane..(i + 1) * plane].iter().sum())
            .collect();
        self.push(Tensor::from_parts(vec![c], v), Op::ChannelSum(a))
    }

    /// Repeats `b: [c]` over the spatial axes of `shape = [c, h, w]`.
    pub fn channel_broadcast(&mut self, b: Var, shape: &[usize]) -> Var {
        assert_eq!(self.shape(b), [shape[0]], "channel_broadcast: channel mismatch");
        let plane: usize = shape[1..].iter().product();
        let mut v = Vec::with_capacity(shape[0] * plane);
        for &bc in self.value(b).data() {
            v.extend(std::iter::repeat_n(bc, plane));
        }
        self.push(Tensor::from_parts(shape.to_vec(), v), Op::ChannelBroadcast(b))
    }

    pub fn upsample(&mut self, a: Var, factor: usize) -> Var {
        let [c, h, w] = self.image_dims(a);
        let y = kernels::upsample(self.value(a).data(), c, h, w, factor);
        self.push(
            Tensor::from_parts(vec![c, h * factor, w * factor], y),
            Op::Upsample(a, factor),
        )
    }

    fn block_sum(&mut self, a: Var, factor: usize) -> Var {
        let [c, h, w] = self.image_dims(a);
        let y = kernels::block_sum(self.value(a).data(), c, h, w, factor);
        self.push(
            Tensor::from_parts(vec![c, h / factor, w / factor], y),
            Op::BlockSum(a, factor),
        )
    }

    fn image_dims(&self, a: Var) -> [usize; 3] {
        match self.shape(a) {
            [c, h, w] => [*c, *h, *w],
            s => panic!("expected [c, h, w], got {s:?}"),
        }
    }

    /// Concatenates along the leading axis.
    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let (sa, sb) = (self.shape(a), self.shape(b));
        assert_eq!(sa[1..], sb[1..], "concat: trailing shapes differ");
        let mut shape = sa.to_vec();
        shape[0] += sb[0];
        let mut v = self.value(a).data().to_vec();
        v.extend_from_slice(self.value(b).data());
        self.push(Tensor::from_parts(shape, v), Op::Concat(a, b))
    }

    /// Rows `start..start + len` of the leading axis.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Var {
        let shape = self.shape(a).to_vec();
        assert!(start + len <= shape[0], "slice out of range");
        let inner: usize = shape[1..].iter().product();
        let v = self.value(a).data()[start * inner..(start + len) * inner].to_vec();
        let mut out = shape;
        out[0] = len;
        self.push(Tensor::from_parts(out, v), Op::Slice(a, start))
    }

    /// Embeds `a` at leading offset `start` into zeros with `total` rows.
    fn pad(&mut self, a: Var, start: usize, total: usize) -> Var {
        let shape = self.shape(a).to_vec();
        let inner: usize = shape[1..].iter().product();
        let mut v = vec![0.0; total * inner];
        v[start * inner..(start + shape[0]) * inner].copy_from_slice(self.value(a).data());
        let mut out = shape;
        out[0] = total;
        self.push(Tensor::from_parts(out, v), Op::Pad(a, start))
    }

    /// Gradient of scalar `output` with respect to each of `wrt`, seeded with 1.
    ///
    /// Returned handles are graph nodes and may be differentiated again.
    /// Entries are `None` when `output` does not depend on that variable.
    pub fn grad(&mut self, output: Var, wrt: &[Var]) -> Vec<Option<Var>> {
        assert_eq!(self.value(output).len(), 1, "grad needs a scalar output");
        let seed = self.leaf(Tensor::filled(self.shape(output), 1.0));
        self.grad_with_seed(output, seed, wrt)
    }

    /// Vector-Jacobian product: propagates `seed` (shaped like `output`) back
    /// to `wrt`.
    pub fn grad_with_seed(&mut self, output: Var, seed: Var, wrt: &[Var]) -> Vec<Option<Var>> {
        assert_eq!(self.shape(seed), self.shape(output), "seed shape mismatch");
        let end = output.0 + 1;

        // Nodes on some path from a `wrt` variable; nothing else needs an adjoint.
        let mut reach = vec![false; end];
        for w in wrt {
            if w.0 < end {
                reach[w.0] = true;
            }
        }
        for i in 0..end {
            if !reach[i] {
                reach[i] = inputs(&self.nodes[i].op).iter().any(|j| reach[j.0]);
            }
        }

        let mut adj: Vec<Option<Var>> = vec![None; end];
        adj[output.0] = Some(seed);
        for i in (0..end).rev() {
            let Some(g) = adj[i] else { continue };
            if !reach[i] {
                continue;
            }
            let op = self.nodes[i].op.clone();
            let y = Var(i);
            let mut send = |graph: &mut Graph, to: Var, contrib: Var| {
                if !reach[to.0] {
                    return;
                }
                adj[to.0] = Some(match adj[to.0] {
                    Some(prev) => graph.add(prev, contrib),
                    None => contrib,
                });
            };
            match op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    send(self, a, g);
                    send(self, b, g);
                }
                Op::Sub(a, b) => {
                    send(self, a, g);
                    if reach[b.0] {
                        let nb = self.scale(g, -1.0);
                        send(self, b, nb);
                    }
                }
                Op::Mul(a, b) => {
                    if reach[a.0] {
                        let da = self.mul(g, b);
                        send(self, a, da);
                    }
                    if reach[b.0] {
                        let db = self.mul(g, a);
                        send(self, b, db);
                    }
                }
                Op::Div(a, b) => {
                    if reach[a.0] {
                        let da = self.div(g, b);
                        send(self, a, da);
                    }
                    if reach[b.0] {
                        let gy = self.mul(g, y);
                        let q = self.div(gy, b);
                        let db = self.scale(q, -1.0);
                        send(self, b, db);
                    }
                }
                Op::Scale(a, c) => {
                    let da = self.scale(g, c);
                    send(self, a, da);
                }
                Op::AddScalar(a) => send(self, a, g),
                Op::Square(a) => {
                    let two_a = self.scale(a, 2.0);
                    let da = self.mul(g, two_a);
                    send(self, a, da);
                }
                Op::Sqrt(a) => {
                    let two_y = self.scale(y, 2.0);
                    let da = self.div(g, two_y);
                    send(self, a, da);
                }
                Op::Tanh(a) => {
                    let y2 = self.square(y);
                    let neg = self.scale(y2, -1.0);
                    let d = self.add_scalar(neg, 1.0);
                    let da = self.mul(g, d);
                    send(self, a, da);
                }
                Op::Sigmoid(a) => {
                    let neg = self.scale(y, -1.0);
                    let one_minus = self.add_scalar(neg, 1.0);
                    let d = self.mul(y, one_minus);
                    let da = self.mul(g, d);
                    send(self, a, da);
                }
                Op::LeakyRelu(a, slope) => {
                    let da = self.mask_scale(g, a, slope);
                    send(self, a, da);
                }
                Op::MaskScale(a, r, slope) => {
                    let da = self.mask_scale(g, r, slope);
                    send(self, a, da);
                }
                Op::Sum(a) => {
                    let shape = self.shape(a).to_vec();
                    let da = self.broadcast(g, &shape);
                    send(self, a, da);
                }
                Op::Broadcast(a) => {
                    let s = self.sum(g);
                    let shape = self.shape(a).to_vec();
                    let da = if shape.is_empty() { s } else { self.reshape(s, &shape) };
                    send(self, a, da);
                }
                Op::Reshape(a) => {
                    let shape = self.shape(a).to_vec();
                    let da = self.reshape(g, &shape);
                    send(self, a, da);
                }
                Op::MatVec(w, x) => {
                    if reach[w.0] {
                        let dw = self.outer(g, x);
                        send(self, w, dw);
                    }
                    if reach[x.0] {
                        let dx = self.matvec_t(w, g);
                        send(self, x, dx);
                    }
                }
                Op::MatVecT(w, x) => {
                    if reach[w.0] {
                        let dw = self.outer(x, g);
                        send(self, w, dw);
                    }
                    if reach[x.0] {
                        let dx = self.matvec(w, g);
                        send(self, x, dx);
                    }
                }
                Op::Outer(a, b) => {
                    if reach[a.0] {
                        let da = self.matvec(g, b);
                        send(self, a, da);
                    }
                    if reach[b.0] {
                        let db = self.matvec_t(g, a);
                        send(self, b, db);
                    }
                }
                Op::Conv(x, w, geo) => {
                    if reach[x.0] {
                        let dx = self.conv_input_grad(g, w, geo);
                        send(self, x, dx);
                    }
                    if reach[w.0] {
                        let dw = self.conv_weight_grad(x, g, geo);
                        send(self, w, dw);
                    }
                }
                Op::ConvInputGrad(gy, w, geo) => {
                    if reach[gy.0] {
                        let d = self.conv_with(g, w, geo);
                        send(self, gy, d);
                    }
                    if reach[w.0] {
                        let dw = self.conv_weight_grad(g, gy, geo);
                        send(self, w, dw);
                    }
                }
                Op::ConvWeightGrad(x, gy, geo) => {
                    if reach[x.0] {
                        let dx = self.conv_input_grad(gy, g, geo);
                        send(self, x, dx);
                    }
                    if reach[gy.0] {
                        let d = self.conv_with(x, g, geo);
                        send(self, gy, d);
                    }
                }
                Op::ChannelSum(a) => {
                    let shape = self.shape(a).to_vec();
                    let da = self.channel_broadcast(g, &shape);
                    send(self, a, da);
                }
                Op::ChannelBroadcast(b) => {
                    let db = self.channel_sum(g);
                    send(self, b, db);
                }
                Op::Upsample(a, f) => {
                    let da = self.block_sum(g, f);
                    send(self, a, da);
                }
                Op::BlockSum(a, f) => {
                    let da = self.upsample(g, f);
                    send(self, a, da);
                }
                Op::Concat(a, b) => {
                    let (na, nb) = (self.shape(a)[0], self.shape(b)[0]);
                    if reach[a.0] {
                        let da = self.slice(g, 0, na);
                        send(self, a, da);
                    }
                    if reach[b.0] {
                        let db = self.slice(g, na, nb);
                        send(self, b, db);
                    }
                }
                Op::Slice(a, start) => {
                    let total = self.shape(a)[0];
                    let da = self.pad(g, start, total);
                    send(self, a, da);
                }
                Op::Pad(a, start) => {
                    let len = self.shape(a)[0];
                    let da = self.slice(g, start, len);
                    send(self, a, da);
                }
            }
        }
        wrt.iter()
            .map(|w| if w.0 < end { adj[w.0] } else { None })
            .collect()
    }
}

fn inputs(op: &Op) -> Vec<Var> {
    match *op {
        Op::Leaf => vec![],
        Op::Add(a, b)
        | Op::Sub(a, b)
        | Op::Mul(a, b)
        | Op::Div(a, b)
        | Op::MatVec(a, b)
        | Op::MatVecT(a, b)
        | Op::Outer(a, b)
        | Op::Conv(a, b, _)
        | Op::ConvInputGrad(a, b, _)
        | Op::ConvWeightGrad(a, b, _)
        | Op::Concat(a, b) => vec![a, b],
        // The mask reference carries no derivative.
        Op::MaskScale(a, _, _) => vec![a],
        Op::Scale(a, _)
        | Op::AddScalar(a)
        | Op::Square(a)
        | Op::Sqrt(a)
        | Op::Tanh(a)
        | Op::Sigmoid(a)
        | Op::LeakyRelu(a, _)
        | Op::Sum(a)
        | Op::Broadcast(a)
        | Op::Reshape(a)
        | Op::ChannelSum(a)
        | Op::ChannelBroadcast(a)
        | Op::Upsample(a, _)
        | Op::BlockSum(a, _)
        | Op::Slice(a, _)
        | Op::Pad(a, _) => vec![a],
    }
}
