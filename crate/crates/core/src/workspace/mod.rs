//! Scenes, configurations and collision checking.
//!
//! Configuration space is always the unit hypercube `[0,1]^d`. A point robot
//! maps `q` affinely onto the workspace bounds; an n-link planar arm maps each
//! component to a joint angle in `[-π, π]` (so `0.5` is zero angle).

mod format;
mod raster;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use format::{parse_scene, write_scene};
pub use raster::{distance_transform, rasterize, Raster, RASTER_CHANNELS};

pub type Point2 = [f64; 2];

/// A configuration: `d` components, each in `[0,1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Config(Vec<f64>);

impl Config {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::usage("configuration must have at least one component"));
        }
        if let Some(v) = q.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::usage(format!("configuration component {v} outside [0,1]")));
        }
        Ok(Self(q))
    }

    /// Clamps every component into `[0,1]`; NaN becomes 0.
    pub fn clamped(q: Vec<f64>) -> Self {
        Self(
            q.into_iter()
                .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &Config) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(&self, other: &Config) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// `self + s·(other − self)` for `s ∈ [0,1]`.
    pub fn lerp(&self, other: &Config, s: f64) -> Config {
        Config(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (a + s * (b - a)).clamp(0.0, 1.0))
                .collect(),
        )
    }
}

impl TryFrom<Vec<f64>> for Config {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Config::new(v)
    }
}

impl From<Config> for Vec<f64> {
    fn from(c: Config) -> Self {
        c.0
    }
}

/// Axis-aligned workspace box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point2,
    pub max: Point2,
}

impl Bounds {
    pub fn new(min: Point2, max: Point2) -> Result<Self> {
        if !(max[0] > min[0] && max[1] > min[1]) {
            return Err(Error::usage(format!("bounds {min:?}..{max:?} have no extent")));
        }
        Ok(Self { min, max })
    }

    pub fn unit() -> Self {
        Self {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
        }
    }

    pub fn extent(&self) -> Point2 {
        [self.max[0] - self.min[0], self.max[1] - self.min[1]]
    }

    pub fn contains(&self, p: Point2) -> bool {
        (self.min[0]..=self.max[0]).contains(&p[0]) && (self.min[1]..=self.max[1]).contains(&p[1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Obstacle {
    Disc { center: Point2, radius: f64 },
    Rect { min: Point2, max: Point2 },
}

impl Obstacle {
    pub fn disc(center: Point2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::usage(format!("disc radius {radius} must be positive")));
        }
        Ok(Obstacle::Disc { center, radius })
    }

    pub fn rect(min: Point2, max: Point2) -> Result<Self> {
        if !(min[0] < max[0] && min[1] < max[1]) {
            return Err(Error::usage(format!("rectangle {min:?}..{max:?} is empty")));
        }
        Ok(Obstacle::Rect { min, max })
    }

    /// Closed-set containment.
    pub fn contains(&self, p: Point2) -> bool {
        match *self {
            Obstacle::Disc { center, radius } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                dx * dx + dy * dy <= radius * radius
            }
            Obstacle::Rect { min, max } => {
                p[0] >= min[0] && p[0] <= max[0] && p[1] >= min[1] && p[1] <= max[1]
            }
        }
    }

    /// Whether the closed segment `a–b` touches the obstacle.
    pub fn intersects_segment(&self, a: Point2, b: Point2) -> bool {
        match *self {
            Obstacle::Disc { center, radius } => {
                point_segment_distance_sq(center, a, b) <= radius * radius
            }
            Obstacle::Rect { min, max } => segment_hits_box(a, b, min, max),
        }
    }

    /// Distance from the closed segment `a–b` to the obstacle, 0 when they touch.
    pub fn segment_distance(&self, a: Point2, b: Point2) -> f64 {
        match *self {
            Obstacle::Disc { center, radius } => {
                (point_segment_distance_sq(center, a, b).sqrt() - radius).max(0.0)
            }
            Obstacle::Rect { min, max } => {
                if segment_hits_box(a, b, min, max) {
                    return 0.0;
                }
                let to_box = |p: Point2| {
                    let dx = (min[0] - p[0]).max(p[0] - max[0]).max(0.0);
                    let dy = (min[1] - p[1]).max(p[1] - max[1]).max(0.0);
                    dx * dx + dy * dy
                };
                let corners = [min, [max[0], min[1]], max, [min[0], max[1]]];
                corners
                    .iter()
                    .map(|&c| point_segment_distance_sq(c, a, b))
                    .chain([to_box(a), to_box(b)])
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            }
        }
    }

    /// Restricts the obstacle to `bounds`; `None` if nothing is left.
    fn clip(self, bounds: &Bounds) -> Option<Self> {
        match self {
            Obstacle::Disc { center, radius } => {
                let near = [
                    center[0].clamp(bounds.min[0], bounds.max[0]),
                    center[1].clamp(bounds.min[1], bounds.max[1]),
                ];
                let (dx, dy) = (near[0] - center[0], near[1] - center[1]);
                // Discs keep their shape; only the part inside the bounds can
                // ever be reached by the robot.
                (dx * dx + dy * dy < radius * radius).then_some(self)
            }
            Obstacle::Rect { min, max } => {
                let lo = [min[0].max(bounds.min[0]), min[1].max(bounds.min[1])];
                let hi = [max[0].min(bounds.max[0]), max[1].min(bounds.max[1])];
                (lo[0] < hi[0] && lo[1] < hi[1]).then_some(Obstacle::Rect { min: lo, max: hi })
            }
        }
    }
}

fn point_segment_distance_sq(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = [a[0] + t * ab[0] - p[0], a[1] + t * ab[1] - p[1]];
    c[0] * c[0] + c[1] * c[1]
}

/// Liang–Barsky clip of the segment against a closed box.
fn segment_hits_box(a: Point2, b: Point2, min: Point2, max: Point2) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for axis in 0..2 {
        if d[axis] == 0.0 {
            if a[axis] < min[axis] || a[axis] > max[axis] {
                return false;
            }
            continue;
        }
        let inv = 1.0 / d[axis];
        let (mut lo, mut hi) = ((min[axis] - a[axis]) * inv, (max[axis] - a[axis]) * inv);
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        t0 = t0.max(lo);
        t1 = t1.min(hi);
        if t0 > t1 {
            return false;
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobotModel {
    Point,
    PlanarArm { base: Point2, links: Vec<f64> },
}

pub const MAX_DOF: usize = 7;

impl RobotModel {
    pub fn planar_arm(base: Point2, links: Vec<f64>) -> Result<Self> {
        if !(2..=MAX_DOF).contains(&links.len()) {
            return Err(Error::usage(format!(
                "planar arm needs 2..={MAX_DOF} links, got {}",
                links.len()
            )));
        }
        if let Some(l) = links.iter().find(|l| !(**l > 0.0)) {
            return Err(Error::usage(format!("link length {l} must be positive")));
        }
        Ok(RobotModel::PlanarArm { base, links })
    }

    /// Configuration-space dimension.
    pub fn dof(&self) -> usize {
        match self {
            RobotModel::Point => 2,
            RobotModel::PlanarArm { links, .. } => links.len(),
        }
    }
}

/// Maps a scaled joint value to an angle in `[-π, π]`.
pub fn joint_angle(q: f64) -> f64 {
    (q - 0.5) * 2.0 * PI
}

/// Link segments of a planar arm, base first, with cumulative angles.
///
/// Unlike the [`RobotModel::planar_arm`] constructor this accepts any link
/// count, so a single link can be inspected on its own.
pub fn forward_kinematics(robot: &RobotModel, q: &Config) -> Result<Vec<[Point2; 2]>> {
    let RobotModel::PlanarArm { base, links } = robot else {
        return Err(Error::usage("forward kinematics needs a planar arm"));
    };
    if q.dim() != links.len() {
        return Err(Error::usage(format!(
            "arm has {} joints but configuration has {} components",
            links.len(),
            q.dim()
        )));
    }
    let mut p = *base;
    let mut angle = 0.0;
    let mut segments = Vec::with_capacity(links.len());
    for (len, &qi) in links.iter().zip(q.as_slice()) {
        angle += joint_angle(qi);
        let next = [p[0] + len * angle.cos(), p[1] + len * angle.sin()];
        segments.push([p, next]);
        p = next;
    }
    Ok(segments)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    bounds: Bounds,
    obstacles: Vec<Obstacle>,
    robot: RobotModel,
}

impl Scene {
    /// Obstacles are clipped to `bounds`; those entirely outside are dropped.
    pub fn new(bounds: Bounds, obstacles: Vec<Obstacle>, robot: RobotModel) -> Result<Self> {
        let bounds = Bounds::new(bounds.min, bounds.max)?;
        if let RobotModel::PlanarArm { base, links } = &robot {
            RobotModel::planar_arm(*base, links.clone())?;
        }
        let obstacles = obstacles
            .into_iter()
            .filter_map(|o| o.clip(&bounds))
            .collect();
        Ok(Self {
            bounds,
            obstacles,
            robot,
        })
    }

    pub fn empty(robot: RobotModel) -> Self {
        Self {
            bounds: Bounds::unit(),
            obstacles: Vec::new(),
            robot,
        }
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn robot(&self) -> &RobotModel {
        &self.robot
    }

    pub fn dof(&self) -> usize {
        self.robot.dof()
    }

    /// Workspace position of a point robot at `q`.
    pub fn point_position(&self, q: &Config) -> Point2 {
        let e = self.bounds.extent();
        [
            self.bounds.min[0] + q.as_slice()[0] * e[0],
            self.bounds.min[1] + q.as_slice()[1] * e[1],
        ]
    }

    /// C-space step used by [`Scene::segment_free`] when none is given:
    /// 1/64 of the hypercube diagonal.
    pub fn default_resolution(&self) -> f64 {
        (self.dof() as f64).sqrt() / 64.0
    }

    /// True iff the robot at `q` touches no obstacle and stays in bounds.
    pub fn is_free(&self, q: &Config) -> bool {
        match &self.robot {
            RobotModel::Point => {
                let p = self.point_position(q);
                self.obstacles.iter().all(|o| !o.contains(p))
            }
            RobotModel::PlanarArm { .. } => {
                let Ok(segments) = forward_kinematics(&self.robot, q) else {
                    return false;
                };
                segments.iter().all(|&[a, b]| {
                    self.bounds.contains(b) && self.obstacles.iter().all(|o| !o.intersects_segment(a, b))
                }) && segments.first().is_none_or(|s| self.bounds.contains(s[0]))
            }
        }
    }

    /// Checks `is_free` at evenly spaced configurations no more than
    /// `resolution` apart along the straight C-space segment, endpoints
    /// included. Symmetric in its endpoints.
    pub fn segment_free(&self, a: &Config, b: &Config, resolution: f64) -> bool {
        assert!(resolution > 0.0, "resolution must be positive");
        // Interpolate from a canonical endpoint so that (a, b) and (b, a)
        // visit bit-identical configurations.
        let (from, to) = if a.as_slice() <= b.as_slice() { (a, b) } else { (b, a) };
        let steps = (from.distance(to) / resolution).ceil().max(1.0) as usize;
        if !self.is_free(from) || !self.is_free(to) {
            return false;
        }
        (1..steps).all(|i| self.is_free(&from.lerp(to, i as f64 / steps as f64)))
    }
}

impl Scene {
    /// Smallest workspace distance between the arm at `q` and any obstacle or
    /// the bounds' boundary; negative or zero when in collision.
    fn arm_clearance(&self, q: &Config) -> f64 {
        let Ok(segments) = forward_kinematics(&self.robot, q) else {
            return f64::NEG_INFINITY;
        };
        let b = &self.bounds;
        let inside = |p: Point2| {
            (p[0] - b.min[0])
                .min(b.max[0] - p[0])
                .min(p[1] - b.min[1])
                .min(b.max[1] - p[1])
        };
        let mut clear = inside(segments[0][0]);
        for &[a, e] in &segments {
            clear = clear.min(inside(e));
            for o in &self.obstacles {
                clear = clear.min(o.segment_distance(a, e));
            }
        }
        clear
    }

    /// Continuous check of the straight C-space motion `a → b`.
    ///
    /// A point robot sweeps a straight workspace segment, which is tested
    /// exactly. For an arm, no point of the body moves farther than
    /// `2π·|Δq|·√(Σ Rⱼ²)` (`Rⱼ` the reach beyond joint `j`), so an interval is
    /// accepted once the clearance at its midpoint exceeds that bound for half
    /// its length, and bisected otherwise. A `true` answer therefore implies
    /// [`Scene::segment_free`] at every resolution.
    pub fn motion_free(&self, a: &Config, b: &Config) -> bool {
        match &self.robot {
            RobotModel::Point => {
                let (pa, pb) = (self.point_position(a), self.point_position(b));
                self.obstacles.iter().all(|o| !o.intersects_segment(pa, pb))
            }
            RobotModel::PlanarArm { links, .. } => {
                let mut reach = 0.0;
                let mut sum_sq = 0.0;
                for l in links.iter().rev() {
                    reach += l;
                    sum_sq += reach * reach;
                }
                let rate = 2.0 * PI * sum_sq.sqrt();
                if !(self.arm_clearance(a) > 0.0 && self.arm_clearance(b) > 0.0) {
                    return false;
                }
                let mut stack = vec![(a.clone(), b.clone())];
                while let Some((x, y)) = stack.pop() {
                    let len = x.distance(&y);
                    let mid = x.lerp(&y, 0.5);
                    let clear = self.arm_clearance(&mid);
                    if clear <= 0.0 || len < 1e-9 {
                        return false;
                    }
                    if clear > rate * len / 2.0 {
                        continue;
                    }
                    stack.push((mid.clone(), y));
                    stack.push((x, mid));
                }
                true
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[f64]) -> Config {
        Config::new(v.to_vec()).unwrap()
    }

    fn disc_scene() -> Scene {
        Scene::new(
            Bounds::unit(),
            vec![Obstacle::disc([0.5, 0.5], 0.1).unwrap()],
            RobotModel::Point,
        )
        .unwrap()
    }

    #[test]
    fn empty_scene_is_free() {
        let s = Scene::empty(RobotModel::Point);
        assert!(s.is_free(&c(&[0.3, 0.9])));
        assert!(s.segment_free(&c(&[0.0, 0.0]), &c(&[1.0, 1.0]), 0.01));
    }

    #[test]
    fn disc_center_is_in_collision() {
        assert!(!disc_scene().is_free(&c(&[0.5, 0.5])));
    }

    #[test]
    fn degenerate_segment() {
        let s = disc_scene();
        let q = c(&[0.1, 0.1]);
        assert!(s.segment_free(&q, &q, 0.01));
    }

    #[test]
    fn segment_through_disc() {
        let s = disc_scene();
        assert!(!s.segment_free(&c(&[0.2, 0.5]), &c(&[0.8, 0.5]), 0.01));
        assert!(s.segment_free(&c(&[0.2, 0.2]), &c(&[0.8, 0.2]), 0.01));
    }

    #[test]
    fn config_range_is_enforced() {
        assert!(Config::new(vec![0.5, 1.2]).is_err());
        assert!(Config::new(vec![]).is_err());
        assert_eq!(Config::clamped(vec![-0.2, 1.5]).as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn obstacles_are_clipped() {
        let s = Scene::new(
            Bounds::unit(),
            vec![
                Obstacle::rect([-1.0, 0.2], [0.3, 0.4]).unwrap(),
                Obstacle::rect([2.0, 2.0], [3.0, 3.0]).unwrap(),
                Obstacle::disc([1.5, 1.5], 0.2).unwrap(),
            ],
            RobotModel::Point,
        )
        .unwrap();
        assert_eq!(
            s.obstacles(),
            &[Obstacle::Rect {
                min: [0.0, 0.2],
                max: [0.3, 0.4]
            }]
        );
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(Obstacle::disc([0.0, 0.0], 0.0).is_err());
        assert!(Obstacle::rect([0.5, 0.0], [0.4, 1.0]).is_err());
        assert!(Bounds::new([0.0, 0.0], [0.0, 1.0]).is_err());
        assert!(RobotModel::planar_arm([0.0, 0.0], vec![0.3]).is_err());
        assert!(RobotModel::planar_arm([0.0, 0.0], vec![0.3; 8]).is_err());
        assert!(RobotModel::planar_arm([0.0, 0.0], vec![0.3, -0.1]).is_err());
    }

    #[test]
    fn zero_angle_chain_is_colinear() {
        let arm = RobotModel::planar_arm([0.5, 0.5], vec![0.1, 0.2, 0.05]).unwrap();
        let segs = forward_kinematics(&arm, &c(&[0.5, 0.5, 0.5])).unwrap();
        let ends: Vec<Point2> = segs.iter().map(|s| s[1]).collect();
        for (e, x) in ends.iter().zip([0.6, 0.8, 0.85]) {
            assert!((e[0] - x).abs() < 1e-12);
            assert!((e[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_turn_single_link() {
        let arm = RobotModel::PlanarArm {
            base: [0.2, 0.3],
            links: vec![0.4],
        };
        let segs = forward_kinematics(&arm, &c(&[0.75])).unwrap();
        assert!((segs[0][1][0] - 0.2).abs() < 1e-12);
        assert!((segs[0][1][1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn fk_requires_arm() {
        assert!(forward_kinematics(&RobotModel::Point, &c(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn arm_link_through_rectangle() {
        // Link 1 along +x from (0.5, 0.5) to (0.7, 0.5); link 2 turned +90°
        // runs up to (0.7, 0.7) through the box.
        let scene = Scene::new(
            Bounds::unit(),
            vec![Obstacle::rect([0.65, 0.6], [0.75, 0.65]).unwrap()],
            RobotModel::planar_arm([0.5, 0.5], vec![0.2, 0.2]).unwrap(),
        )
        .unwrap();
        assert!(!scene.is_free(&c(&[0.5, 0.75])));
        assert!(scene.is_free(&c(&[0.5, 0.5])));
    }

    #[test]
    fn arm_must_stay_in_bounds() {
        let scene = Scene::new(
            Bounds::unit(),
            vec![],
            RobotModel::planar_arm([0.5, 0.5], vec![0.3, 0.3]).unwrap(),
        )
        .unwrap();
        assert!(!scene.is_free(&c(&[0.5, 0.5])));
        assert!(scene.is_free(&c(&[0.5, 1.0])));
    }
}
