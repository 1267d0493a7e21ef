//! Reverse-mode differentiation: fit a tiny network with Adam, then take the
//! gradient of an input-gradient norm (double backward).
//!
//! cargo run --release --example autodiff

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wgan_rrt::tensorad::{AdamConfig, AdamState, Layer, NetSpec, Tensor};

fn main() -> wgan_rrt::Result<()> {
    let net = NetSpec::new(
        &[2],
        vec![
            Layer::Dense { input: 2, output: 16 },
            Layer::Tanh,
            Layer::Dense { input: 16, output: 1 },
        ],
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut params = net.init_params(&mut rng);
    let target = |x: &[f64]| (3.0 * x[0]).sin() * x[1];
    let data: Vec<(Tensor, f64)> = (0..64)
        .map(|_| {
            let x = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let y = target(&x);
            (Tensor::new(&[2], x).unwrap(), y)
        })
        .collect();
    let mut adam = AdamState::new(
        AdamConfig {
            lr: 1e-2,
            beta1: 0.9,
            ..AdamConfig::default()
        },
        &params,
    );
    for epoch in 0..=300 {
        let mut grads: Vec<Tensor> = net.param_shapes().iter().map(|s| Tensor::zeros(s)).collect();
        let mut loss = 0.0;
        for (x, y) in &data {
            let mut trace = net.forward(&params, x)?;
            let err = trace.output_value().item() - y;
            loss += err * err / data.len() as f64;
            let g = trace.backward(&Tensor::filled(&[1], 2.0 * err / data.len() as f64))?;
            for (acc, gi) in grads.iter_mut().zip(&g.params) {
                acc.data_mut().iter_mut().zip(gi.data()).for_each(|(a, b)| *a += b);
            }
        }
        adam.update(&mut params, &grads)?;
        if epoch % 60 == 0 {
            println!("epoch {epoch:>3}: mse {loss:.5}");
        }
    }

    // ‖∇ₓ f(x)‖ as a differentiable graph, then its parameter gradient.
    let x = Tensor::new(&[2], vec![0.3, -0.4])?;
    let mut trace = net.input_grad_norm_graph(&params, &x)?;
    let norm = trace.output_value().clone();
    let g = trace.backward(&Tensor::filled(norm.shape(), 1.0))?;
    let total: f64 = g.params.iter().map(|t| t.norm().powi(2)).sum::<f64>().sqrt();
    println!("input-gradient norm at {:?}: {:.4}; its parameter gradient has norm {total:.4}", x.data(), norm.data()[0]);
    Ok(())
}
