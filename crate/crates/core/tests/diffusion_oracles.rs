use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wgan_rrt::diffusion::{diffuse, forward_step, make_schedule, sample_noise, NoiseSchedule};
use wgan_rrt::tensorad::Tensor;

#[test]
fn cumulative_retention_matches_log_sum() {
    for (steps, b0, b1) in [(100, 1e-4, 0.1), (1000, 1e-4, 0.02), (7, 0.05, 0.5)] {
        let s = make_schedule(steps, b0, b1).unwrap();
        let mut log_sum = 0.0;
        for t in 1..=steps {
            let beta = if steps == 1 { b0 } else { b0 + (b1 - b0) * (t - 1) as f64 / (steps - 1) as f64 };
            assert!((s.alpha(t) - (1.0 - beta)).abs() < 1e-15);
            log_sum += (1.0 - beta).ln();
            assert!((s.beta_hat(t) - log_sum.exp()).abs() <= 1e-12 * log_sum.exp().max(1e-300), "t={t}");
        }
    }
}

/// Iterates single steps with independent noise, then folds the noise terms
/// into the one draw that the closed form would need.
#[test]
fn iterated_steps_equal_the_closed_form_for_matching_noise() {
    let sched = NoiseSchedule::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let shape = [2, 4, 4];
    let x0 = sample_noise(&shape, &mut rng).map(|v| 0.5 + 0.1 * v);
    for t in [1, 2, 10, 25, 50, 100] {
        let mut x = x0.clone();
        let mut folded = vec![0.0; 32];
        for s in 1..=t {
            let eps = sample_noise(&shape, &mut rng);
            x = forward_step(&x, s, &sched, &eps).unwrap();
            // Coefficient of ε_s in x_t: √(1−α_s)·Π_{r>s} √α_r.
            let tail: f64 = (s + 1..=t).map(|r| sched.alpha(r)).product();
            let coef = ((1.0 - sched.alpha(s)) * tail).sqrt();
            for (f, e) in folded.iter_mut().zip(eps.data()) {
                *f += coef * e;
            }
        }
        let norm = (1.0 - sched.beta_hat(t)).sqrt();
        let eps_bar = Tensor::new(&shape, folded.iter().map(|v| v / norm).collect()).unwrap();
        let closed = diffuse(&x0, t, &sched, &eps_bar).unwrap();
        for (a, b) in closed.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-10, "t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn timestep_zero_and_past_the_end_are_rejected() {
    let s = NoiseSchedule::default();
    let x = Tensor::zeros(&[1, 2, 2]);
    assert!(diffuse(&x, 0, &s, &x).is_err());
    assert!(diffuse(&x, 101, &s, &x).is_err());
    assert!(forward_step(&x, 0, &s, &x).is_err());
    assert!(diffuse(&x, 1, &s, &Tensor::zeros(&[1, 2, 3])).is_err());
}
