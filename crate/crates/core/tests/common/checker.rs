//! Collision re-checking written from scratch: its own forward kinematics,
//! closest-point disc tests and Liang–Barsky clipping for boxes.

use wgan_rrt::workspace::{Config, Obstacle, RobotModel, Scene};

fn segment_hits_disc(a: [f64; 2], b: [f64; 2], c: [f64; 2], r: f64) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 { 0.0 } else { (((c[0] - a[0]) * d[0] + (c[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) };
    let p = [a[0] + t * d[0], a[1] + t * d[1]];
    (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) <= r * r
}

fn segment_hits_box(a: [f64; 2], b: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..2 {
        let d = b[k] - a[k];
        for (p, q) in [(-d, a[k] - lo[k]), (d, hi[k] - a[k])] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let t = q / p;
                if p < 0.0 {
                    t0 = t0.max(t);
                } else {
                    t1 = t1.min(t);
                }
            }
        }
    }
    t0 <= t1
}

fn hits(o: &Obstacle, a: [f64; 2], b: [f64; 2]) -> bool {
    match *o {
        Obstacle::Disc { center, radius } => segment_hits_disc(a, b, center, radius),
        Obstacle::Rect { min, max } => segment_hits_box(a, b, min, max),
    }
}

pub fn config_free(scene: &Scene, q: &Config) -> bool {
    let v = q.as_slice();
    if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return false;
    }
    let bounds = scene.bounds();
    let inside = |p: [f64; 2]| p[0] >= bounds.min[0] && p[0] <= bounds.max[0] && p[1] >= bounds.min[1] && p[1] <= bounds.max[1];
    match scene.robot() {
        RobotModel::Point => {
            let p = [
                bounds.min[0] + v[0] * (bounds.max[0] - bounds.min[0]),
                bounds.min[1] + v[1] * (bounds.max[1] - bounds.min[1]),
            ];
            scene.obstacles().iter().all(|o| !hits(o, p, p))
        }
        RobotModel::PlanarArm { base, links } => {
            let mut p = *base;
            let mut theta = 0.0;
            if !inside(p) {
                return false;
            }
            for (l, &qj) in links.iter().zip(v) {
                theta += std::f64::consts::TAU * qj - std::f64::consts::PI;
                let next = [p[0] + l * theta.cos(), p[1] + l * theta.sin()];
                if !inside(next) || scene.obstacles().iter().any(|o| hits(o, p, next)) {
                    return false;
                }
                p = next;
            }
            true
        }
    }
}

/// Checks every configuration along the edge no more than `spacing` apart.
pub fn edge_free(scene: &Scene, a: &Config, b: &Config, spacing: f64) -> bool {
    let n = (a.distance(b) / spacing).ceil().max(1.0) as usize;
    (0..=n).all(|i| {
        let s = i as f64 / n as f64;
        let q: Vec<f64> = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x + s * (y - x)).collect();
        config_free(scene, &Config::clamped(q))
    })
}

/// Why a returned path is invalid, if it is.
pub fn path_violation(scene: &Scene, path: &[Config], start: &Config, goal: &Config, goal_tolerance: f64) -> Option<String> {
    let (first, last) = (path.first()?, path.last()?);
    if first != start {
        return Some(format!("starts at {first:?}, not {start:?}"));
    }
    if last.distance(goal) > goal_tolerance + 1e-12 {
        return Some(format!("ends {} from the goal", last.distance(goal)));
    }
    let spacing = scene.default_resolution() / 4.0;
    for (i, w) in path.windows(2).enumerate() {
        if !edge_free(scene, &w[0], &w[1], spacing) {
            return Some(format!("edge {i} collides at resolution {spacing}"));
        }
    }
    None
}
