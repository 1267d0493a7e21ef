//! Encode an ordered waypoint list as a path matrix, build the start/goal
//! condition channel and assemble the 5×32×32 network input.
//!
//! cargo run --release --example encoding

use wgan_rrt::encoding::{assemble_input, build_condition, decode_matrix, encode_path, MATRIX_COLS, MATRIX_ROWS};
use wgan_rrt::workspace::{rasterize, Config, RobotModel, Scene};

fn main() -> wgan_rrt::Result<()> {
    let path: Vec<Config> = (0..=10)
        .map(|i| {
            let s = i as f64 / 10.0;
            Config::new(vec![0.1 + 0.8 * s, 0.5 + 0.3 * (std::f64::consts::PI * s).sin()])
        })
        .collect::<Result<_, _>>()?;
    let m = encode_path(&path, MATRIX_ROWS, MATRIX_COLS)?;
    println!("path matrix {:?}, {} of {} slots used", m.values().shape(), m.used_slots(), m.slot_count());
    for (k, name) in ["x", "y"].iter().enumerate() {
        println!("channel {name}:");
        for r in 0..MATRIX_ROWS {
            let row: Vec<String> = (0..MATRIX_COLS)
                .map(|c| format!("{:.2}", m.values().data()[k * 64 + r * MATRIX_COLS + c]))
                .collect();
            println!("  {}", row.join(" "));
        }
    }
    let back = decode_matrix(&m);
    println!("decoded {} waypoints; first {:?}, last {:?}", back.len(), back[0].as_slice(), back[back.len() - 1].as_slice());

    let (start, goal) = (path[0].clone(), path[path.len() - 1].clone());
    let cond = build_condition(&start, &goal)?;
    let (s, g) = cond.start_goal(2);
    println!("condition channel holds start {:?} and goal {:?}", s.as_slice(), g.as_slice());
    let image = assemble_input(&rasterize(&Scene::empty(RobotModel::Point), 32, 32), &cond)?;
    println!("network input {:?}", image.tensor().shape());
    Ok(())
}
