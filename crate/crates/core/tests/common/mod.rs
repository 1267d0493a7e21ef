#![allow(dead_code)]

pub mod checker;
pub mod gradcheck;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wgan_rrt::workspace::Config;

pub fn cfg(v: &[f64]) -> Config {
    Config::new(v.to_vec()).unwrap()
}

/// 30 points in three blobs of σ = 0.02 whose centers are at least 0.4 apart.
pub fn three_blobs(seed: u64) -> Vec<Config> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = loop {
        let c: Vec<[f64; 2]> = (0..3).map(|_| [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)]).collect();
        let far = (0..3).all(|i| (i + 1..3).all(|j| (c[i][0] - c[j][0]).hypot(c[i][1] - c[j][1]) >= 0.4));
        if far {
            break c;
        }
    };
    (0..30)
        .map(|i| {
            let c = centers[i % 3];
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            Config::clamped(vec![c[0] + 0.02 * x, c[1] + 0.02 * y])
        })
        .collect()
}

/// Best net similarity over every choice of three exemplars, each point
/// assigned to its closest chosen exemplar.
pub fn exhaustive_best_triple(points: &[Config]) -> f64 {
    let n = points.len();
    let d2 = |i: usize, k: usize| -> f64 {
        points[i].as_slice().iter().zip(points[k].as_slice()).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    let mut best = f64::NEG_INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let net: f64 = (0..n).map(|i| -d2(i, a).min(d2(i, b)).min(d2(i, c))).sum();
                best = best.max(net);
            }
        }
    }
    best
}

use wgan_rrt::dataset::{generate_scene, RobotSpec, SceneSpec};
use wgan_rrt::workspace::Scene;

/// Scene spec `i % 4`: point clutter, gapped walls, 2-link arm, 3-link arm.
pub fn mixed_spec(i: u64) -> SceneSpec {
    match i % 4 {
        0 => SceneSpec::clutter(RobotSpec::Point).unwrap(),
        1 => SceneSpec::gapped_walls(),
        2 => SceneSpec::clutter(RobotSpec::Arm { base: [0.5, 0.5], links: vec![0.25, 0.2] }).unwrap(),
        _ => SceneSpec::clutter(RobotSpec::Arm { base: [0.5, 0.5], links: vec![0.2, 0.15, 0.1] }).unwrap(),
    }
}

/// A seeded scene and a free start/goal pair from [`mixed_spec`].
pub fn mixed_query(i: u64) -> (Scene, Config, Config) {
    let spec = mixed_spec(i);
    let scene = generate_scene(1000 + i, &spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5000 + i);
    let (s, g) = spec.query.sample(&scene, &mut rng).unwrap();
    (scene, s, g)
}
