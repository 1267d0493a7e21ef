//! Cluster a densified demonstration with affinity propagation and order the
//! exemplars along the path.
//!
//! cargo run --release --example clustering

use wgan_rrt::affinity::{affinity_propagate, order_exemplars, APConfig, Preference};
use wgan_rrt::dataset::densify;
use wgan_rrt::workspace::Config;

fn main() -> wgan_rrt::Result<()> {
    let corners = [[0.05, 0.1], [0.4, 0.15], [0.5, 0.8], [0.95, 0.9]];
    let coarse: Vec<Config> = corners.iter().map(|c| Config::new(c.to_vec())).collect::<Result<_, _>>()?;
    let dense = densify(&coarse, 0.02);
    println!("{} densified waypoints", dense.len());
    let order: Vec<usize> = (0..dense.len()).collect();
    for preference in [Preference::Median, Preference::Value(-0.01), Preference::Value(-0.002)] {
        let cfg = APConfig {
            preference,
            ..APConfig::default()
        };
        let result = affinity_propagate(&dense, &cfg)?;
        let exemplars = order_exemplars(&result, &dense, &order)?;
        let radii = result.cluster_radii(&dense);
        println!(
            "{preference:?}: {} exemplars after {} iterations (converged {}), largest cluster radius {:.3}",
            exemplars.len(),
            result.iterations,
            result.converged,
            radii.iter().cloned().fold(0.0, f64::max)
        );
        let shown: Vec<String> = exemplars
            .iter()
            .map(|e| format!("({:.2},{:.2})", e.as_slice()[0], e.as_slice()[1]))
            .collect();
        println!("  {}", shown.join(" "));
    }
    Ok(())
}
