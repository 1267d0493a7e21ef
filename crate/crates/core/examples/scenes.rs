//! Build a scene, query collisions for the point robot and a planar arm, and
//! render the network's scene channels.
//!
//! cargo run --release --example scenes

use wgan_rrt::workspace::{forward_kinematics, parse_scene, rasterize, write_scene, Bounds, Config, Obstacle, RobotModel, Scene};

fn main() -> wgan_rrt::Result<()> {
    let obstacles = vec![
        Obstacle::disc([0.5, 0.5], 0.15)?,
        Obstacle::rect([0.1, 0.7], [0.3, 0.9])?,
    ];
    let point = Scene::new(Bounds::unit(), obstacles.clone(), RobotModel::Point)?;
    let a = Config::new(vec![0.1, 0.5])?;
    let b = Config::new(vec![0.9, 0.5])?;
    let c = Config::new(vec![0.5, 0.1])?;
    println!("point robot: {a:?} free = {}", point.is_free(&a));
    println!("  straight motion a→b free = {}", point.motion_free(&a, &b));
    println!("  detour a→c→b free = {}", point.motion_free(&a, &c) && point.motion_free(&c, &b));

    // Joint values in [0,1] are fractions of a full turn.
    let arm = Scene::new(Bounds::unit(), obstacles, RobotModel::planar_arm([0.5, 0.05], vec![0.3, 0.25])?)?;
    for q in [[0.25, 0.0], [0.1, 0.05], [0.4, 0.9]] {
        let q = Config::new(q.to_vec())?;
        let links = forward_kinematics(arm.robot(), &q)?;
        let tip = links.last().map(|l| l[1]).unwrap_or_default();
        println!("arm at {:?}: tip ({:.3}, {:.3}), free = {}", q.as_slice(), tip[0], tip[1], arm.is_free(&q));
    }

    let raster = rasterize(&point, 32, 32);
    println!("\noccupancy (row 31 on top):");
    for r in (0..32).rev() {
        let row: String = (0..32)
            .map(|c| if raster.data()[r * 32 + c] > 0.5 { '#' } else { '.' })
            .collect();
        println!("  {row}");
    }

    let text = write_scene(&point);
    println!("\nscene file:\n{text}");
    assert_eq!(parse_scene(&text)?, point);
    Ok(())
}
