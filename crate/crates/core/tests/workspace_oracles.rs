use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wgan_rrt::workspace::{distance_transform, forward_kinematics, rasterize, Bounds, Config, Obstacle, RobotModel, Scene};

fn c(v: &[f64]) -> Config {
    Config::new(v.to_vec()).unwrap()
}

fn rect_distance(p: [f64; 2], min: [f64; 2], max: [f64; 2]) -> f64 {
    let dx = (min[0] - p[0]).max(0.0).max(p[0] - max[0]);
    let dy = (min[1] - p[1]).max(0.0).max(p[1] - max[1]);
    dx.hypot(dy)
}

#[test]
fn arm_collision_matches_dense_link_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let robot = RobotModel::planar_arm([0.5, 0.5], vec![0.2, 0.15]).unwrap();
    let mut collisions = 0;
    for _ in 0..500 {
        let (x, y) = (rng.gen_range(0.1..0.8), rng.gen_range(0.1..0.8));
        let (w, h) = (rng.gen_range(0.02..0.2), rng.gen_range(0.02..0.2));
        let (min, max) = ([x, y], [x + w, y + h]);
        let scene = Scene::new(Bounds::unit(), vec![Obstacle::rect(min, max).unwrap()], robot.clone()).unwrap();
        let q = c(&[rng.gen(), rng.gen()]);
        let links = forward_kinematics(&robot, &q).unwrap();
        // Dense sampling along every link: smallest distance to the box.
        let mut clearance = f64::INFINITY;
        for [a, b] in &links {
            for i in 0..=2000 {
                let s = i as f64 / 2000.0;
                let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                clearance = clearance.min(rect_distance(p, min, max));
            }
        }
        let in_bounds = links.iter().all(|[_, b]| (0.0..=1.0).contains(&b[0]) && (0.0..=1.0).contains(&b[1]));
        if !in_bounds {
            assert!(!scene.is_free(&q));
            continue;
        }
        if clearance == 0.0 {
            collisions += 1;
            assert!(!scene.is_free(&q), "sampled link point inside the box at {q:?}");
        } else if clearance > 2e-4 {
            assert!(scene.is_free(&q), "links clear by {clearance} but reported in collision at {q:?}");
        }
    }
    assert!(collisions > 20, "too few colliding cases to be informative ({collisions})");
}

#[test]
fn forward_kinematics_matches_complex_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let links: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..0.15)).collect();
        let base = [rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)];
        let robot = RobotModel::planar_arm(base, links.clone()).unwrap();
        let q = c(&[rng.gen(), rng.gen(), rng.gen()]);
        // Endpoint = base + Σ_j L_j · Π_{k≤j} e^{iθ_k}, with the product
        // accumulated by complex multiplication rather than angle sums.
        let (mut re, mut im) = (1.0f64, 0.0f64);
        let (mut x, mut y) = (base[0], base[1]);
        for (l, &qj) in links.iter().zip(q.as_slice()) {
            let theta = 2.0 * std::f64::consts::PI * qj - std::f64::consts::PI;
            let (cr, ci) = (theta.cos(), theta.sin());
            (re, im) = (re * cr - im * ci, re * ci + im * cr);
            x += l * re;
            y += l * im;
        }
        let end = forward_kinematics(&robot, &q).unwrap()[2][1];
        assert!((end[0] - x).abs() < 1e-12 && (end[1] - y).abs() < 1e-12, "{end:?} vs ({x}, {y})");
    }
}

/// Length of the part of segment `a → b` inside the disc.
fn chord_inside_disc(a: [f64; 2], b: [f64; 2], center: [f64; 2], r: f64) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let f = [a[0] - center[0], a[1] - center[1]];
    let qa = d[0] * d[0] + d[1] * d[1];
    let qb = 2.0 * (f[0] * d[0] + f[1] * d[1]);
    let qc = f[0] * f[0] + f[1] * f[1] - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return 0.0;
    }
    let s = disc.sqrt();
    let t0 = ((-qb - s) / (2.0 * qa)).clamp(0.0, 1.0);
    let t1 = ((-qb + s) / (2.0 * qa)).clamp(0.0, 1.0);
    (t1 - t0) * qa.sqrt()
}

fn fine_oracle(scene: &Scene, a: &Config, b: &Config, spacing: f64) -> bool {
    let n = (a.distance(b) / spacing).ceil().max(1.0) as usize;
    (0..=n).all(|i| scene.is_free(&a.lerp(b, i as f64 / n as f64)))
}

/// Random segments passing within ±0.01 of the disc boundary.
fn near_tangent_cases(seed: u64, n: usize) -> Vec<(Scene, Config, Config, [f64; 2], f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let center = [rng.gen_range(0.35..0.65), rng.gen_range(0.35..0.65)];
        let r = rng.gen_range(0.05..0.2);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let offset = r + rng.gen_range(-0.01..0.01);
        let foot = [center[0] + offset * phi.cos(), center[1] + offset * phi.sin()];
        let dir = [-phi.sin(), phi.cos()];
        let (s0, s1) = (rng.gen_range(0.05..0.3), rng.gen_range(0.05..0.3));
        let a = [foot[0] - s0 * dir[0], foot[1] - s0 * dir[1]];
        let b = [foot[0] + s1 * dir[0], foot[1] + s1 * dir[1]];
        let inside = |p: [f64; 2]| (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]);
        if !inside(a) || !inside(b) || (a[0] - center[0]).hypot(a[1] - center[1]) <= r || (b[0] - center[0]).hypot(b[1] - center[1]) <= r {
            continue;
        }
        let scene = Scene::new(Bounds::unit(), vec![Obstacle::disc(center, r).unwrap()], RobotModel::Point).unwrap();
        out.push((scene, c(&a), c(&b), center, r));
    }
    out
}

#[test]
fn continuous_motion_check_agrees_with_fine_oracle_near_tangency() {
    let mut disagreements = 0;
    for (scene, a, b, center, r) in near_tangent_cases(3, 1000) {
        let spacing = scene.default_resolution() / 10.0;
        let exact = scene.motion_free(&a, &b);
        let oracle = fine_oracle(&scene, &a, &b, spacing);
        if exact != oracle {
            // Only a chord shorter than the oracle's own spacing may slip through it.
            let chord = chord_inside_disc(
                [a.as_slice()[0], a.as_slice()[1]],
                [b.as_slice()[0], b.as_slice()[1]],
                center,
                r,
            );
            assert!(!exact && oracle && chord < spacing, "disagreement with chord {chord}");
            disagreements += 1;
        }
    }
    assert!(disagreements <= 5, "{disagreements} disagreements");
}

#[test]
fn discrete_segment_check_misses_only_short_chords() {
    let (mut agree, mut total) = (0, 0);
    for (scene, a, b, center, r) in near_tangent_cases(4, 1000) {
        let res = scene.default_resolution();
        let discrete = scene.segment_free(&a, &b, res);
        let oracle = fine_oracle(&scene, &a, &b, res / 10.0);
        total += 1;
        if discrete == oracle {
            agree += 1;
            continue;
        }
        let chord = chord_inside_disc(
            [a.as_slice()[0], a.as_slice()[1]],
            [b.as_slice()[0], b.as_slice()[1]],
            center,
            r,
        );
        assert!(discrete && !oracle, "discrete check rejected a motion the fine oracle accepts");
        assert!(chord < res, "missed a chord of {chord} at resolution {res}");
    }
    assert!(agree as f64 >= 0.9 * total as f64, "{agree}/{total}");
}

fn brute_distance(occ: &[bool], h: usize, w: usize, row_step: f64, col_step: f64) -> Vec<f64> {
    let set: Vec<(usize, usize)> = (0..h * w).filter(|&k| occ[k]).map(|k| (k / w, k % w)).collect();
    (0..h * w)
        .map(|k| {
            let (r, c) = (k / w, k % w);
            set.iter()
                .map(|&(r2, c2)| ((r as f64 - r2 as f64) * row_step).hypot((c as f64 - c2 as f64) * col_step))
                .fold(f64::INFINITY, f64::min)
        })
        .map(|d| if d.is_finite() { d } else { 0.0 })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_transform_matches_brute_force(
        h in 1usize..12,
        w in 1usize..12,
        bits in proptest::collection::vec(proptest::bool::weighted(0.15), 144),
        row_step in 0.01f64..0.2,
        col_step in 0.01f64..0.2,
    ) {
        let occ = &bits[..h * w];
        let fast = distance_transform(occ, h, w, row_step, col_step);
        let slow = brute_distance(occ, h, w, row_step, col_step);
        for (f, s) in fast.iter().zip(&slow) {
            prop_assert!((f - s).abs() < 1e-12, "{f} vs {s}");
        }
    }

    #[test]
    fn point_motion_free_implies_finer_discrete_check(
        discs in proptest::collection::vec((0.1f64..0.9, 0.1f64..0.9, 0.02f64..0.15), 1..6),
        a in (0.0f64..1.0, 0.0f64..1.0),
        b in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let obstacles = discs.iter().map(|&(x, y, r)| Obstacle::disc([x, y], r).unwrap()).collect();
        let scene = Scene::new(Bounds::unit(), obstacles, RobotModel::Point).unwrap();
        let (a, b) = (c(&[a.0, a.1]), c(&[b.0, b.1]));
        if scene.motion_free(&a, &b) {
            prop_assert!(scene.segment_free(&a, &b, scene.default_resolution() / 4.0));
            prop_assert!(scene.segment_free(&a, &b, scene.default_resolution() / 40.0));
        }
    }

    #[test]
    fn arm_motion_free_implies_finer_discrete_check(
        boxes in proptest::collection::vec((0.05f64..0.85, 0.05f64..0.85, 0.02f64..0.1), 1..4),
        a in (0.0f64..1.0, 0.0f64..1.0),
        b in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let obstacles = boxes.iter().map(|&(x, y, s)| Obstacle::rect([x, y], [x + s, y + s]).unwrap()).collect();
        let robot = RobotModel::planar_arm([0.5, 0.5], vec![0.2, 0.2]).unwrap();
        let scene = Scene::new(Bounds::unit(), obstacles, robot).unwrap();
        let (a, b) = (c(&[a.0, a.1]), c(&[b.0, b.1]));
        if a.distance(&b) < 0.2 && scene.motion_free(&a, &b) {
            prop_assert!(scene.segment_free(&a, &b, scene.default_resolution() / 4.0));
            prop_assert!(scene.segment_free(&a, &b, 1e-4));
        }
    }
}

#[test]
fn raster_distance_channel_matches_brute_force_and_grows_along_rays() {
    let scene = Scene::new(Bounds::unit(), vec![Obstacle::disc([0.5, 0.5], 0.12).unwrap()], RobotModel::Point).unwrap();
    let raster = rasterize(&scene, 32, 32);
    let plane = 32 * 32;
    let occ: Vec<bool> = raster.data()[..plane].iter().map(|&v| v > 0.5).collect();
    let brute = brute_distance(&occ, 32, 32, 1.0 / 32.0, 1.0 / 32.0);
    let max = brute.iter().cloned().fold(0.0, f64::max);
    let dist = &raster.data()[plane..2 * plane];
    for k in 0..plane {
        assert!((dist[k] - brute[k] / max).abs() < 1e-12);
        if occ[k] {
            assert_eq!(dist[k], 0.0);
        }
    }
    // Rays from the center cell along the axes and diagonals.
    for (dr, dc) in [(0i32, 1i32), (1, 0), (0, -1), (-1, 0), (1, 1), (-1, -1), (1, -1), (-1, 1)] {
        let (mut r, mut c) = (16i32, 16i32);
        let mut last = 0.0;
        while (0..32).contains(&r) && (0..32).contains(&c) {
            let v = dist[(r * 32 + c) as usize];
            assert!(v >= last, "distance decreased along ray ({dr}, {dc})");
            last = v;
            r += dr;
            c += dc;
        }
    }
}
