//! Plain-text scene records.
//!
//! ```text
//! scene 1
//! bounds <min_x> <min_y> <max_x> <max_y>
//! robot point
//! robot arm <base_x> <base_y> <link_1> ... <link_d>
//! disc <center_x> <center_y> <radius>
//! rect <min_x> <min_y> <max_x> <max_y>
//! end
//! ```
//!
//! One `robot` line, any number of `disc`/`rect` lines. Blank lines and lines
//! starting with `#` are ignored. Reals are written in shortest round-trip form.

use std::fmt::Write;

use super::{Bounds, Obstacle, RobotModel, Scene};
use crate::error::{Error, Result};

pub fn write_scene(scene: &Scene) -> String {
    let mut s = String::from("scene 1\n");
    let b = scene.bounds();
    writeln!(s, "bounds {} {} {} {}", b.min[0], b.min[1], b.max[0], b.max[1]).unwrap();
    match scene.robot() {
        RobotModel::Point => s.push_str("robot point\n"),
        RobotModel::PlanarArm { base, links } => {
            write!(s, "robot arm {} {}", base[0], base[1]).unwrap();
            for l in links {
                write!(s, " {l}").unwrap();
            }
            s.push('\n');
        }
    }
    for o in scene.obstacles() {
        match o {
            Obstacle::Disc { center, radius } => {
                writeln!(s, "disc {} {} {}", center[0], center[1], radius).unwrap()
            }
            Obstacle::Rect { min, max } => {
                writeln!(s, "rect {} {} {} {}", min[0], min[1], max[0], max[1]).unwrap()
            }
        }
    }
    s.push_str("end\n");
    s
}

fn reals(line: usize, field: &str, words: &[&str], want: Option<usize>) -> Result<Vec<f64>> {
    if let Some(n) = want {
        if words.len() != n {
            return Err(Error::parse(
                line,
                field,
                format!("expected {n} numbers, found {}", words.len()),
            ));
        }
    }
    words
        .iter()
        .map(|w| {
            w.parse::<f64>()
                .map_err(|e| Error::parse(line, field, format!("`{w}`: {e}")))
        })
        .collect()
}

pub fn parse_scene(text: &str) -> Result<Scene> {
    let mut header = false;
    let mut bounds = None;
    let mut robot = None;
    let mut obstacles = Vec::new();
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last = line;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let words: Vec<&str> = raw.split_whitespace().collect();
        let wrap = |field: &str, e: Error| match e {
            Error::Usage(m) => Error::parse(line, field, m),
            other => other,
        };
        match (words[0], header) {
            ("scene", false) => {
                if words.get(1) != Some(&"1") {
                    return Err(Error::parse(line, "scene", "unsupported scene format version"));
                }
                header = true;
            }
            (_, false) => return Err(Error::parse(line, "scene", "missing `scene 1` header")),
            ("bounds", true) => {
                let v = reals(line, "bounds", &words[1..], Some(4))?;
                bounds = Some(Bounds::new([v[0], v[1]], [v[2], v[3]]).map_err(|e| wrap("bounds", e))?);
            }
            ("robot", true) => {
                let r = match words.get(1).copied() {
                    Some("point") if words.len() == 2 => RobotModel::Point,
                    Some("arm") => {
                        let v = reals(line, "robot", &words[2..], None)?;
                        if v.len() < 4 {
                            return Err(Error::parse(line, "robot", "arm needs a base and at least two links"));
                        }
                        RobotModel::planar_arm([v[0], v[1]], v[2..].to_vec())
                            .map_err(|e| wrap("robot", e))?
                    }
                    _ => return Err(Error::parse(line, "robot", "expected `point` or `arm ...`")),
                };
                if robot.replace(r).is_some() {
                    return Err(Error::parse(line, "robot", "duplicate robot line"));
                }
            }
            ("disc", true) => {
                let v = reals(line, "disc", &words[1..], Some(3))?;
                obstacles.push(Obstacle::disc([v[0], v[1]], v[2]).map_err(|e| wrap("disc", e))?);
            }
            ("rect", true) => {
                let v = reals(line, "rect", &words[1..], Some(4))?;
                obstacles
                    .push(Obstacle::rect([v[0], v[1]], [v[2], v[3]]).map_err(|e| wrap("rect", e))?);
            }
            ("end", true) => {
                let bounds = bounds.ok_or_else(|| Error::parse(line, "bounds", "missing"))?;
                let robot = robot.ok_or_else(|| Error::parse(line, "robot", "missing"))?;
                return Scene::new(bounds, obstacles, robot).map_err(|e| wrap("scene", e));
            }
            (other, true) => {
                return Err(Error::parse(line, other, "unknown record field"));
            }
        }
    }
    Err(Error::parse(last, "end", "record ended without `end`"))
}
