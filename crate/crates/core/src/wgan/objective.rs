//! Critic and generator losses, one graph per batch item.
//!
//! Per-item gradients are computed independently (in parallel) and summed in
//! item order, so results do not depend on the thread schedule.

use rayon::prelude::*;

use super::{CriticModel, GeneratorModel};
use crate::error::{Error, Result};
use crate::tensorad::{kernels, Graph, Tensor, Var};

fn upsample_factor(path: &[usize], cond: &[usize]) -> Result<usize> {
    match (path, cond) {
        ([_, r, c], [_, h, w]) if *r > 0 && h % r == 0 && w % c == 0 && h / r == w / c => Ok(h / r),
        _ => Err(Error::usage(format!(
            "cannot align path matrix {path:?} with condition image {cond:?}"
        ))),
    }
}

/// Critic input as a plain tensor: the path matrix upsampled (nearest) to the
/// image size, followed by the image channels.
pub fn assemble_critic_input(path: &Tensor, cond: &Tensor) -> Result<Tensor> {
    let f = upsample_factor(path.shape(), cond.shape())?;
    let [d, r, c] = [path.shape()[0], path.shape()[1], path.shape()[2]];
    let mut data = if f == 1 {
        path.data().to_vec()
    } else {
        kernels::upsample(path.data(), d, r, c, f)
    };
    data.extend_from_slice(cond.data());
    let mut shape = cond.shape().to_vec();
    shape[0] += d;
    Tensor::new(&shape, data)
}

/// Graph version of [`assemble_critic_input`].
pub fn critic_input(g: &mut Graph, path: Var, cond: Var) -> Result<Var> {
    let f = upsample_factor(g.shape(path), g.shape(cond))?;
    let up = if f == 1 { path } else { g.upsample(path, f) };
    Ok(g.concat(up, cond))
}

fn materialize(g: &Graph, vars: &[Var], grads: &[Option<Var>]) -> Vec<Tensor> {
    vars.iter()
        .zip(grads)
        .map(|(&v, d)| match d {
            Some(d) => g.value(*d).clone(),
            None => Tensor::zeros(g.shape(v)),
        })
        .collect()
}

/// Sums per-item gradient lists in order and multiplies by `scale`.
fn reduce(parts: Vec<Vec<Tensor>>, scale: f64) -> Vec<Tensor> {
    let mut it = parts.into_iter();
    let mut acc = it.next().unwrap_or_default();
    for part in it {
        for (a, p) in acc.iter_mut().zip(part) {
            for (x, y) in a.data_mut().iter_mut().zip(p.data()) {
                *x += y;
            }
        }
    }
    for a in &mut acc {
        for x in a.data_mut() {
            *x *= scale;
        }
    }
    acc
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticStep {
    /// `mean f(fake) − mean f(real) + λ·mean (‖∇f(x̂)‖ − 1)²`.
    pub loss: f64,
    /// `mean f(real) − mean f(fake)`.
    pub wasserstein: f64,
    /// `mean (‖∇f(x̂)‖ − 1)²`; zero when `λ = 0` (the term is then skipped).
    pub penalty: f64,
    /// Gradient of `loss` for every critic parameter.
    pub grads: Vec<Tensor>,
}

struct CriticItem {
    real: f64,
    fake: f64,
    penalty: f64,
    grads: Vec<Tensor>,
}

fn critic_item(critic: &CriticModel, real: &Tensor, fake: &Tensor, cond: &Tensor, lambda: f64, u: f64) -> Result<CriticItem> {
    if real.shape() != fake.shape() {
        return Err(Error::usage("real and fake path matrices differ in shape"));
    }
    let net = critic.net();
    let real_in = assemble_critic_input(real, cond)?;
    let fake_in = assemble_critic_input(fake, cond)?;
    let mut g = Graph::new();
    let params = critic.params().attach(&mut g);
    let xr = g.leaf(real_in.clone());
    let sr = net.record(&mut g, &params, xr)?;
    let xf = g.leaf(fake_in.clone());
    let sf = net.record(&mut g, &params, xf)?;
    let (sr, sf) = (g.sum(sr), g.sum(sf));
    let mut total = g.sub(sf, sr);
    let mut penalty = 0.0;
    if lambda != 0.0 {
        let hat = real_in.zip(&fake_in, |r, f| u * r + (1.0 - u) * f);
        let xh = g.leaf(hat);
        let sh = net.record(&mut g, &params, xh)?;
        let sh = g.sum(sh);
        let norm = match g.grad(sh, &[xh])[0] {
            Some(dx) => {
                let sq = g.square(dx);
                let s = g.sum(sq);
                g.sqrt(s)
            }
            None => g.leaf(Tensor::scalar(0.0)),
        };
        let centered = g.add_scalar(norm, -1.0);
        let pen = g.square(centered);
        penalty = g.value(pen).item();
        let weighted = g.scale(pen, lambda);
        total = g.add(total, weighted);
    }
    let grads = g.grad(total, &params);
    Ok(CriticItem {
        real: g.value(sr).item(),
        fake: g.value(sf).item(),
        penalty,
        grads: materialize(&g, &params, &grads),
    })
}

/// Critic loss (to be minimized) and its parameter gradients.
///
/// `x̂ = u·real + (1 − u)·fake` is formed on the full critic input (path
/// channels and condition alike, the condition being shared), and the
/// penalty uses the gradient of the critic with respect to that input.
pub fn critic_objective(
    critic: &CriticModel,
    real: &[Tensor],
    fake: &[Tensor],
    cond: &[Tensor],
    lambda_gp: f64,
    mix_draws: &[f64],
) -> Result<CriticStep> {
    let b = real.len();
    if b == 0 || fake.len() != b || cond.len() != b || mix_draws.len() != b {
        return Err(Error::usage("critic batches must be nonempty and aligned"));
    }
    if mix_draws.iter().any(|u| !(0.0..=1.0).contains(u)) {
        return Err(Error::usage("interpolation draws must lie in [0, 1]"));
    }
    let items: Vec<CriticItem> = (0..b)
        .into_par_iter()
        .map(|i| critic_item(critic, &real[i], &fake[i], &cond[i], lambda_gp, mix_draws[i]))
        .collect::<Result<_>>()?;
    let n = b as f64;
    let mean = |f: &dyn Fn(&CriticItem) -> f64| items.iter().map(f).sum::<f64>() / n;
    let (mr, mf, mp) = (mean(&|c| c.real), mean(&|c| c.fake), mean(&|c| c.penalty));
    Ok(CriticStep {
        loss: mf - mr + lambda_gp * mp,
        wasserstein: mr - mf,
        penalty: mp,
        grads: reduce(items.into_iter().map(|c| c.grads).collect(), 1.0 / n),
    })
}

/// `−mean(scores)` and its derivative with respect to each score.
pub fn generator_objective(scores: &[f64]) -> (f64, Vec<f64>) {
    if scores.is_empty() {
        return (0.0, Vec::new());
    }
    let n = scores.len() as f64;
    (-scores.iter().sum::<f64>() / n, vec![-1.0 / n; scores.len()])
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorStep {
    pub loss: f64,
    pub scores: Vec<f64>,
    /// Gradient of `loss` for every generator parameter.
    pub grads: Vec<Tensor>,
}

/// Runs generator and critic on each `(y_t, cond)` pair and backpropagates
/// [`generator_objective`] through the critic into the generator.
pub fn generator_step(gen: &GeneratorModel, critic: &CriticModel, y_t: &[Tensor], cond: &[Tensor]) -> Result<GeneratorStep> {
    let b = y_t.len();
    if b == 0 || cond.len() != b {
        return Err(Error::usage("generator batches must be nonempty and aligned"));
    }
    let mut traces: Vec<(Graph, Var, Vec<Var>)> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut g = Graph::new();
            let gp = gen.params().attach(&mut g);
            let cp = critic.params().attach(&mut g);
            let y = g.leaf(y_t[i].clone());
            let fake = gen.net().record(&mut g, &gp, y)?;
            let c = g.leaf(cond[i].clone());
            let x = critic_input(&mut g, fake, c)?;
            let s = critic.net().record(&mut g, &cp, x)?;
            Ok((g, s, gp))
        })
        .collect::<Result<_>>()?;
    let scores: Vec<f64> = traces.iter().map(|(g, s, _)| g.value(*s).item()).collect();
    let (loss, dscores) = generator_objective(&scores);
    let parts: Vec<Vec<Tensor>> = traces
        .par_iter_mut()
        .zip(dscores.par_iter())
        .map(|((g, s, gp), &ds)| {
            let seed = g.leaf(Tensor::filled(g.shape(*s), ds));
            let grads = g.grad_with_seed(*s, seed, gp);
            materialize(g, gp, &grads)
        })
        .collect();
    Ok(GeneratorStep {
        loss,
        scores,
        grads: reduce(parts, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensorad::{Layer, NetSpec, Params};

    fn linear_critic(weights: Vec<f64>, in_shape: &[usize]) -> CriticModel {
        let n: usize = in_shape.iter().product();
        let net = NetSpec::new(
            in_shape,
            vec![Layer::Flatten, Layer::Dense { input: n, output: 1 }],
        )
        .unwrap();
        let params = Params::new(vec![
            Tensor::new(&[1, n], weights).unwrap(),
            Tensor::zeros(&[1]),
        ]);
        CriticModel::new(net, params).unwrap()
    }

    #[test]
    fn unit_linear_critic_identical_batches() {
        let n = 2 * 4 * 4;
        let w: Vec<f64> = (0..n).map(|i| if i == 3 { 1.0 } else { 0.0 }).collect();
        let critic = linear_critic(w, &[2, 4, 4]);
        let real = vec![Tensor::filled(&[1, 2, 2], 0.4); 3];
        let cond = vec![Tensor::filled(&[1, 4, 4], 0.1); 3];
        let step = critic_objective(&critic, &real, &real, &cond, 10.0, &[0.1, 0.5, 0.9]).unwrap();
        assert!(step.loss.abs() < 1e-12, "{}", step.loss);
        assert!(step.penalty.abs() < 1e-12);
    }

    #[test]
    fn constant_critic_without_penalty() {
        let critic = linear_critic(vec![0.0; 32], &[2, 4, 4]);
        let real = vec![Tensor::filled(&[1, 2, 2], 0.9)];
        let fake = vec![Tensor::filled(&[1, 2, 2], 0.2)];
        let cond = vec![Tensor::zeros(&[1, 4, 4])];
        let step = critic_objective(&critic, &real, &fake, &cond, 0.0, &[0.3]).unwrap();
        assert_eq!(step.loss, 0.0);
    }

    #[test]
    fn generator_objective_arithmetic() {
        assert_eq!(generator_objective(&[0.0, 0.0]).0, 0.0);
        let (l, d) = generator_objective(&[1.0, 3.0]);
        assert_eq!(l, -2.0);
        assert_eq!(d, vec![-0.5, -0.5]);
    }

    #[test]
    fn misaligned_batches_rejected() {
        let critic = linear_critic(vec![0.0; 32], &[2, 4, 4]);
        let a = vec![Tensor::zeros(&[1, 2, 2])];
        let c = vec![Tensor::zeros(&[1, 4, 4])];
        assert!(critic_objective(&critic, &a, &[], &c, 1.0, &[0.5]).is_err());
        assert!(critic_objective(&critic, &a, &a, &c, 1.0, &[]).is_err());
        assert!(assemble_critic_input(&Tensor::zeros(&[1, 3, 3]), &c[0]).is_err());
    }
}
