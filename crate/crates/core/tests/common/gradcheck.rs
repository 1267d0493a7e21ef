use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wgan_rrt::tensorad::{Layer, NetSpec, Params, Tensor};
use wgan_rrt::wgan::{critic_objective, CriticModel};

/// Naive loop-by-loop forward pass, written without the library's kernels.
#[allow(clippy::needless_range_loop)]
pub fn reference_forward(layers: &[Layer], params: &[Vec<f64>], x: &[f64], shape: &[usize]) -> Vec<f64> {
    let mut h = x.to_vec();
    let mut shape = shape.to_vec();
    let mut p = params.iter();
    for layer in layers {
        match layer {
            Layer::Conv2d { in_ch, out_ch, kernel, stride, padding } => {
                let (w, b) = (p.next().unwrap(), p.next().unwrap());
                let (ih, iw) = (shape[1] as i64, shape[2] as i64);
                let (k, s, pad) = (*kernel as i64, *stride as i64, *padding as i64);
                let oh = (ih + 2 * pad - k) / s + 1;
                let ow = (iw + 2 * pad - k) / s + 1;
                let mut out = Vec::with_capacity(out_ch * (oh * ow) as usize);
                for o in 0..*out_ch {
                    for i in 0..oh {
                        for j in 0..ow {
                            let mut acc = b[o];
                            for c in 0..*in_ch {
                                for ki in 0..k {
                                    for kj in 0..k {
                                        let (r, col) = (i * s + ki - pad, j * s + kj - pad);
                                        if r < 0 || col < 0 || r >= ih || col >= iw {
                                            continue;
                                        }
                                        let wi = ((o * in_ch + c) as i64 * k + ki) * k + kj;
                                        let xi = (c as i64 * ih + r) * iw + col;
                                        acc += w[wi as usize] * h[xi as usize];
                                    }
                                }
                            }
                            out.push(acc);
                        }
                    }
                }
                h = out;
                shape = vec![*out_ch, oh as usize, ow as usize];
            }
            Layer::Dense { input, output } => {
                let (w, b) = (p.next().unwrap(), p.next().unwrap());
                h = (0..*output).map(|o| b[o] + (0..*input).map(|i| w[o * input + i] * h[i]).sum::<f64>()).collect();
                shape = vec![*output];
            }
            Layer::LeakyRelu { slope } => h.iter_mut().for_each(|v| *v = if *v > 0.0 { *v } else { slope * *v }),
            Layer::Relu => h.iter_mut().for_each(|v| *v = v.max(0.0)),
            Layer::Tanh => h.iter_mut().for_each(|v| *v = v.tanh()),
            Layer::Sigmoid => h.iter_mut().for_each(|v| *v = 1.0 / (1.0 + (-*v).exp())),
            Layer::Flatten => shape = vec![h.len()],
            Layer::Reshape { shape: s } => shape = s.clone(),
            Layer::UpsampleNearest { factor } => {
                let (c, ih, iw) = (shape[0], shape[1], shape[2]);
                let (oh, ow) = (ih * factor, iw * factor);
                let mut out = vec![0.0; c * oh * ow];
                for ch in 0..c {
                    for i in 0..oh {
                        for j in 0..ow {
                            out[(ch * oh + i) * ow + j] = h[(ch * ih + i / factor) * iw + j / factor];
                        }
                    }
                }
                h = out;
                shape = vec![c, oh, ow];
            }
        }
    }
    h
}

pub fn param_vecs(params: &Params) -> Vec<Vec<f64>> {
    params.tensors().map(|t| t.data().to_vec()).collect()
}

/// Below this norm a gradient counts as zero: central differences of an
/// exactly flat loss still return rounding noise around 1e-11.
pub const GRAD_FLOOR: f64 = 1e-6;

/// `‖a − b‖ / max(‖a‖, ‖b‖, GRAD_FLOOR)`.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm(a).max(norm(b)).max(GRAD_FLOOR)
}

pub const LAYER_KINDS: [&str; 7] = ["conv2d", "dense", "leaky_relu", "tanh", "sigmoid", "upsample", "reshape"];

/// A small network exercising one layer kind, followed by a dense head so
/// there are always parameters to check.
pub fn random_net(kind: &str, rng: &mut ChaCha8Rng) -> (NetSpec, Params, Tensor) {
    let c = rng.gen_range(1..=3);
    let side = rng.gen_range(3..=5);
    let image = vec![c, side, side];
    let (input, mut layers): (Vec<usize>, Vec<Layer>) = match kind {
        "conv2d" => {
            let kernel = rng.gen_range(1..=3);
            let padding = rng.gen_range(0..=1);
            let stride = rng.gen_range(1..=2);
            (
                image.clone(),
                vec![Layer::Conv2d { in_ch: c, out_ch: rng.gen_range(1..=3), kernel, stride, padding }, Layer::Flatten],
            )
        }
        "dense" => {
            let n = rng.gen_range(2..=8);
            (vec![n], vec![Layer::Dense { input: n, output: rng.gen_range(2..=6) }])
        }
        "leaky_relu" => (image.clone(), vec![Layer::LeakyRelu { slope: rng.gen_range(0.05..0.5) }, Layer::Flatten]),
        "tanh" => (image.clone(), vec![Layer::Tanh, Layer::Flatten]),
        "sigmoid" => (image.clone(), vec![Layer::Sigmoid, Layer::Flatten]),
        "upsample" => (image.clone(), vec![Layer::UpsampleNearest { factor: rng.gen_range(1..=3) }, Layer::Flatten]),
        "reshape" => (image.clone(), vec![Layer::Reshape { shape: vec![side, c, side] }, Layer::Tanh, Layer::Flatten]),
        other => panic!("unknown layer kind {other}"),
    };
    let probe = NetSpec::new(&input, layers.clone()).unwrap();
    let n = probe.output_shape().iter().product();
    layers.extend([Layer::Dense { input: n, output: 2 }, Layer::Tanh]);
    let net = NetSpec::new(&input, layers).unwrap();
    let mut params = net.init_params(rng);
    // Nonzero biases so every term is exercised.
    for i in 0..params.len() {
        for v in params.get_mut(i).data_mut() {
            if *v == 0.0 {
                *v = 0.1 * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
    let n_in: usize = input.iter().product();
    let x = Tensor::new(&input, (0..n_in).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
    (net, params, x)
}

pub struct GradCheck {
    pub forward: f64,
    pub params: f64,
    pub input: f64,
}

/// Compares reverse-mode gradients of `Σ w ⊙ net(x)` with central differences
/// of the reference forward pass.
pub fn check_network(net: &NetSpec, params: &Params, x: &Tensor, rng: &mut ChaCha8Rng) -> GradCheck {
    const H: f64 = 1e-5;
    let out_n: usize = net.output_shape().iter().product();
    let w: Vec<f64> = (0..out_n).map(|_| rng.sample(StandardNormal)).collect();
    let pv = param_vecs(params);
    let loss = |pv: &[Vec<f64>], x: &[f64]| -> f64 {
        reference_forward(net.layers(), pv, x, net.input_shape()).iter().zip(&w).map(|(a, b)| a * b).sum()
    };

    let reference = reference_forward(net.layers(), &pv, x.data(), net.input_shape());
    let forward = rel_error(net.eval(params, x).unwrap().data(), &reference);

    let mut trace = net.forward(params, x).unwrap();
    let seed = Tensor::new(net.output_shape(), w.clone()).unwrap();
    let grads = trace.backward(&seed).unwrap();

    let mut worst_param: f64 = 0.0;
    for (ti, g) in grads.params.iter().enumerate() {
        let mut fd = Vec::with_capacity(g.len());
        for k in 0..g.len() {
            let mut plus = pv.clone();
            plus[ti][k] += H;
            let mut minus = pv.clone();
            minus[ti][k] -= H;
            fd.push((loss(&plus, x.data()) - loss(&minus, x.data())) / (2.0 * H));
        }
        worst_param = worst_param.max(rel_error(g.data(), &fd));
    }
    let mut fd = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let mut plus = x.data().to_vec();
        plus[k] += H;
        let mut minus = x.data().to_vec();
        minus[k] -= H;
        fd.push((loss(&pv, &plus) - loss(&pv, &minus)) / (2.0 * H));
    }
    GradCheck { forward, params: worst_param, input: rel_error(grads.input.data(), &fd) }
}

/// A small random critic over `[2, 2, 2]` paths and `[3, 4, 4]` conditions.
pub fn random_critic(rng: &mut ChaCha8Rng) -> CriticModel {
    let act = match rng.gen_range(0..3) {
        0 => Layer::LeakyRelu { slope: 0.2 },
        1 => Layer::Tanh,
        _ => Layer::Sigmoid,
    };
    let hidden = rng.gen_range(1..=3);
    let net = NetSpec::new(
        &[5, 4, 4],
        vec![
            Layer::Conv2d { in_ch: 5, out_ch: hidden, kernel: 3, stride: 1, padding: 1 },
            act,
            Layer::Flatten,
            Layer::Dense { input: hidden * 16, output: 1 },
        ],
    )
    .unwrap();
    let params = net.init_params(rng);
    CriticModel::new(net, params).unwrap()
}

/// Relative error between the critic-loss parameter gradient (which carries
/// the gradient penalty through second-order differentiation) and central
/// differences of the loss itself.
pub fn check_penalty(rng: &mut ChaCha8Rng) -> f64 {
    const H: f64 = 1e-5;
    let critic = random_critic(rng);
    let mut draw = |shape: &[usize]| {
        let n: usize = shape.iter().product();
        Tensor::new(shape, (0..n).map(|_| rng.gen::<f64>()).collect()).unwrap()
    };
    let real = vec![draw(&[2, 2, 2]), draw(&[2, 2, 2])];
    let fake = vec![draw(&[2, 2, 2]), draw(&[2, 2, 2])];
    let cond = vec![draw(&[3, 4, 4]), draw(&[3, 4, 4])];
    let mix = [rng.gen::<f64>(), rng.gen::<f64>()];
    let lambda = 10.0;
    let step = critic_objective(&critic, &real, &fake, &cond, lambda, &mix).unwrap();
    let loss_at = |params: Params| -> f64 {
        let c = CriticModel::new(critic.net().clone(), params).unwrap();
        critic_objective(&c, &real, &fake, &cond, lambda, &mix).unwrap().loss
    };
    let mut worst: f64 = 0.0;
    for (ti, g) in step.grads.iter().enumerate() {
        let mut fd = Vec::with_capacity(g.len());
        for k in 0..g.len() {
            let mut plus = critic.params().clone();
            plus.get_mut(ti).data_mut()[k] += H;
            let mut minus = critic.params().clone();
            minus.get_mut(ti).data_mut()[k] -= H;
            fd.push((loss_at(plus) - loss_at(minus)) / (2.0 * H));
        }
        worst = worst.max(rel_error(g.data(), &fd));
    }
    worst
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
