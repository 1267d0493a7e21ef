mod common;

use common::gradcheck::{param_vecs, random_critic, reference_forward, rel_error, rng};
use rand::Rng;
use rand_distr::StandardNormal;
use wgan_rrt::diffusion::{NoiseSchedule, ScheduleConfig};
use wgan_rrt::tensorad::{Layer, NetSpec, Params, Tensor};
use wgan_rrt::wgan::{
    critic_objective, generator_step, train, Architecture, Checkpoint, CriticModel, GeneratorModel, TrainConfig,
    TrainSample,
};

fn uniform(shape: &[usize], r: &mut impl Rng) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| r.gen::<f64>()).collect()).unwrap()
}

/// Nearest-neighbour upsampling of a `[2, 2, 2]` path to 4×4, followed by the
/// condition channels.
fn critic_input_oracle(path: &Tensor, cond: &Tensor) -> Vec<f64> {
    let mut v = Vec::new();
    for c in 0..2 {
        for i in 0..4 {
            for j in 0..4 {
                v.push(path.data()[c * 4 + (i / 2) * 2 + j / 2]);
            }
        }
    }
    v.extend_from_slice(cond.data());
    v
}

#[test]
fn critic_loss_terms_match_recomputation() {
    let mut r = rng(31);
    for _ in 0..10 {
        let critic = random_critic(&mut r);
        let b = 3;
        let real: Vec<Tensor> = (0..b).map(|_| uniform(&[2, 2, 2], &mut r)).collect();
        let fake: Vec<Tensor> = (0..b).map(|_| uniform(&[2, 2, 2], &mut r)).collect();
        let cond: Vec<Tensor> = (0..b).map(|_| uniform(&[3, 4, 4], &mut r)).collect();
        let mix: Vec<f64> = (0..b).map(|_| r.gen()).collect();
        let lambda = 10.0;
        let step = critic_objective(&critic, &real, &fake, &cond, lambda, &mix).unwrap();

        let pv = param_vecs(critic.params());
        let score = |x: &[f64]| reference_forward(critic.net().layers(), &pv, x, &[5, 4, 4])[0];
        let (mut sr, mut sf, mut pen) = (0.0, 0.0, 0.0);
        for i in 0..b {
            let xr = critic_input_oracle(&real[i], &cond[i]);
            let xf = critic_input_oracle(&fake[i], &cond[i]);
            sr += score(&xr);
            sf += score(&xf);
            // ‖∇f(x̂)‖ by central differences of the reference forward pass.
            let hat: Vec<f64> = xr.iter().zip(&xf).map(|(a, c)| mix[i] * a + (1.0 - mix[i]) * c).collect();
            let h = 1e-6;
            let mut norm_sq = 0.0;
            for k in 0..hat.len() {
                let mut p = hat.clone();
                p[k] += h;
                let mut m = hat.clone();
                m[k] -= h;
                norm_sq += ((score(&p) - score(&m)) / (2.0 * h)).powi(2);
            }
            pen += (norm_sq.sqrt() - 1.0).powi(2);
        }
        let n = b as f64;
        assert!((step.wasserstein - (sr - sf) / n).abs() < 1e-12);
        assert!((step.penalty - pen / n).abs() < 1e-7, "{} vs {}", step.penalty, pen / n);
        assert!((step.loss - ((sf - sr) / n + lambda * pen / n)).abs() < 1e-6);
    }
}

/// `[1, 1, 1] → [1, 1, 1]` generator with exactly two parameters.
fn two_parameter_generator(w: f64, b: f64) -> GeneratorModel {
    let net = NetSpec::new(
        &[1, 1, 1],
        vec![Layer::Flatten, Layer::Dense { input: 1, output: 1 }, Layer::Reshape { shape: vec![1, 1, 1] }, Layer::Sigmoid],
    )
    .unwrap();
    let params = Params::new(vec![Tensor::new(&[1, 1], vec![w]).unwrap(), Tensor::new(&[1], vec![b]).unwrap()]);
    GeneratorModel::new(net, params).unwrap()
}

#[test]
fn two_parameter_generator_gradient_matches_finite_differences() {
    let mut r = rng(32);
    let net = NetSpec::new(
        &[2, 1, 1],
        vec![Layer::Flatten, Layer::Dense { input: 2, output: 3 }, Layer::Tanh, Layer::Dense { input: 3, output: 1 }],
    )
    .unwrap();
    let critic = CriticModel::new(net.clone(), net.init_params(&mut r)).unwrap();
    let y: Vec<Tensor> = (0..4).map(|_| Tensor::new(&[1, 1, 1], vec![r.sample(StandardNormal)]).unwrap()).collect();
    let cond: Vec<Tensor> = (0..4).map(|_| uniform(&[1, 1, 1], &mut r)).collect();
    for _ in 0..10 {
        let (w, b): (f64, f64) = (r.sample(StandardNormal), r.sample(StandardNormal));
        let step = generator_step(&two_parameter_generator(w, b), &critic, &y, &cond).unwrap();
        // Loss recomputed by hand: −mean critic(σ(w·y + b), cond).
        let loss = |w: f64, b: f64| -> f64 {
            let pv = param_vecs(critic.params());
            -(0..4)
                .map(|i| {
                    let g = 1.0 / (1.0 + (-(w * y[i].data()[0] + b)).exp());
                    reference_forward(critic.net().layers(), &pv, &[g, cond[i].data()[0]], &[2, 1, 1])[0]
                })
                .sum::<f64>()
                / 4.0
        };
        assert!((step.loss - loss(w, b)).abs() < 1e-12);
        let h = 1e-6;
        let fd = [(loss(w + h, b) - loss(w - h, b)) / (2.0 * h), (loss(w, b + h) - loss(w, b - h)) / (2.0 * h)];
        let an = [step.grads[0].data()[0], step.grads[1].data()[0]];
        assert!(rel_error(&an, &fd) < 1e-6, "{an:?} vs {fd:?}");
    }
}

#[test]
fn generator_outputs_stay_in_the_unit_interval() {
    let mut r = rng(33);
    let gen = GeneratorModel::initialized(3, &Architecture::default(), &mut r).unwrap();
    for i in 0..10_000 {
        // Mix ordinary, large and extreme inputs.
        let scale = [1.0, 10.0, 1e3][i % 3];
        let x = Tensor::new(&[5, 32, 32], (0..5 * 1024).map(|_| scale * r.sample::<f64, _>(StandardNormal)).collect()).unwrap();
        let out = gen.predict(&x).unwrap();
        assert_eq!(out.shape(), &[3, 8, 8]);
        assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

fn tiny_training_run(seed: u64) -> Vec<u8> {
    let mut r = rng(34);
    let arch = Architecture { channels: [2, 2, 2], bottleneck: 4, slope: 0.2 };
    let data: Vec<TrainSample> = (0..3)
        .map(|_| TrainSample { y0: uniform(&[5, 32, 32], &mut r), target: uniform(&[2, 8, 8], &mut r) })
        .collect();
    let mut init = rng(seed);
    let mut gen = GeneratorModel::initialized(2, &arch, &mut init).unwrap();
    let mut critic = CriticModel::initialized(2, &arch, &mut init).unwrap();
    let cfg = TrainConfig { batch: 2, n_critic: 2, epochs: 2, steps_per_epoch: Some(2), lr: 1e-3, ..TrainConfig::default() };
    let stats = train(&data, &mut gen, &mut critic, &cfg, &NoiseSchedule::default(), seed, |_| {}).unwrap();
    assert_eq!(stats.len(), 2);
    Checkpoint::new(gen, Some(critic), ScheduleConfig::default(), 25).unwrap().to_bytes()
}

#[test]
fn training_is_deterministic_and_checkpoints_round_trip() {
    let a = tiny_training_run(5);
    assert_eq!(a, tiny_training_run(5));
    assert_ne!(a, tiny_training_run(6));
    let ck = Checkpoint::from_bytes(&a).unwrap();
    assert_eq!(ck.to_bytes(), a);
    assert!(Checkpoint::from_bytes(&a[..a.len() - 1]).is_err());
    let mut bad = a.clone();
    bad[0] = b'X';
    assert!(Checkpoint::from_bytes(&bad).is_err());
}

/// Per-entry RMS distance from `out` to the closer of two matrices.
fn nearest_mode_rms(out: &Tensor, modes: &[Tensor; 2]) -> f64 {
    modes
        .iter()
        .map(|m| {
            let ss: f64 = out.data().iter().zip(m.data()).map(|(a, b)| (a - b) * (a - b)).sum();
            (ss / out.len() as f64).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn two_mode_dataset_is_not_averaged() {
    let mut r = rng(35);
    let y0 = uniform(&[5, 32, 32], &mut r);
    let modes = [Tensor::filled(&[2, 8, 8], 0.25), Tensor::filled(&[2, 8, 8], 0.75)];
    let data: Vec<TrainSample> = modes.iter().map(|m| TrainSample { y0: y0.clone(), target: m.clone() }).collect();
    let arch = Architecture { channels: [8, 8, 8], bottleneck: 32, slope: 0.2 };
    let mut init = rng(36);
    let mut gen = GeneratorModel::initialized(2, &arch, &mut init).unwrap();
    let mut critic = CriticModel::initialized(2, &arch, &mut init).unwrap();
    let schedule = NoiseSchedule::default();
    let cfg = TrainConfig { batch: 16, epochs: 1, steps_per_epoch: Some(600), lr: 1e-3, ..TrainConfig::default() };
    train(&data, &mut gen, &mut critic, &cfg, &schedule, 37, |_| {}).unwrap();

    let mut close = 0;
    for _ in 0..100 {
        let t = r.gen_range(1..=schedule.steps());
        let noise = Tensor::new(&[5, 32, 32], (0..5 * 1024).map(|_| r.sample(StandardNormal)).collect()).unwrap();
        let y_t = wgan_rrt::diffusion::diffuse(&y0, t, &schedule, &noise).unwrap();
        if nearest_mode_rms(&gen.predict(&y_t).unwrap(), &modes) < 0.1 {
            close += 1;
        }
    }
    // The midpoint of the two modes sits about 0.25 RMS from each.
    assert!(close >= 80, "{close}/100 outputs near a mode");
}
