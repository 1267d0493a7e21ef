//! The forward noising process: iterate single steps or jump with the closed
//! form, and compare the two.
//!
//! cargo run --release --example diffusion

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wgan_rrt::diffusion::{diffuse, forward_step, sample_noise, NoiseSchedule};
use wgan_rrt::tensorad::Tensor;

fn main() -> wgan_rrt::Result<()> {
    let schedule = NoiseSchedule::default();
    for t in [1, 25, 50, 100] {
        println!("t = {t:>3}: alpha {:.4}, cumulative product {:.5}", schedule.alpha(t), schedule.beta_hat(t));
    }
    let x0 = Tensor::filled(&[1], 0.8);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 20_000;
    for t in [1, 25, 100] {
        let (mut closed, mut iterated) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let eps = sample_noise(&[1], &mut rng);
            closed.push(diffuse(&x0, t, &schedule, &eps)?.item());
            let mut x = x0.clone();
            for s in 1..=t {
                let eps = sample_noise(&[1], &mut rng);
                x = forward_step(&x, s, &schedule, &eps)?;
            }
            iterated.push(x.item());
        }
        let stats = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64)
        };
        let (cm, cv) = stats(&closed);
        let (im, iv) = stats(&iterated);
        println!("t = {t:>3}: closed form mean {cm:.4} var {cv:.4} | iterated mean {im:.4} var {iv:.4}");
    }
    Ok(())
}
