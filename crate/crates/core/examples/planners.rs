//! Run RRT, RRT* and the exemplar-biased RRT on one gapped-wall scene. The
//! biased planner gets exemplars from the scene's own RRT* demonstration, a
//! stand-in for a trained generator.
//!
//! cargo run --release --example planners

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wgan_rrt::affinity::{affinity_propagate, order_exemplars, APConfig, Preference};
use wgan_rrt::dataset::{collect_demo, scene_for, DemoConfig, SceneSpec, HELD_OUT_BASE};
use wgan_rrt::planner::{biased_rrt, rrt, rrt_star, BiasConfig, FixedExemplars, PlanResult, PlannerConfig};

fn show(name: &str, r: &PlanResult) {
    println!(
        "{name:<12} success {:<5} iterations {:>6} time {:.4} s length {:.3}",
        r.success, r.iterations, r.elapsed, r.length
    );
}

fn main() -> wgan_rrt::Result<()> {
    let spec = SceneSpec::gapped_walls();
    let scene = scene_for(0, HELD_OUT_BASE + 3, &spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (start, goal) = spec.query.sample(&scene, &mut rng)?;
    println!("scene with {} obstacles, start {:?}, goal {:?}", scene.obstacles().len(), start.as_slice(), goal.as_slice());

    let Some(demo) = collect_demo(&scene, &start, &goal, &DemoConfig::default(), &mut rng)? else {
        println!("the demonstration planner found no path; try another scene");
        return Ok(());
    };
    let ap = APConfig {
        preference: Preference::Value(-0.002),
        ..APConfig::default()
    };
    let order: Vec<usize> = (0..demo.len()).collect();
    let exemplars = order_exemplars(&affinity_propagate(&demo, &ap)?, &demo, &order)?;
    println!("{} exemplars from a {}-point demonstration\n", exemplars.len(), demo.len());

    let bias = BiasConfig {
        m: 300,
        ..BiasConfig::default()
    };
    for budget in [0.05, 0.1, 0.25] {
        println!("budget {budget} s");
        let cfg = PlannerConfig {
            max_samples: usize::MAX,
            ..PlannerConfig::default()
        }
        .with_budget(budget);
        show("rrt", &rrt(&scene, &start, &goal, &cfg, &mut ChaCha8Rng::seed_from_u64(1))?);
        show("rrt_star", &rrt_star(&scene, &start, &goal, &cfg, &mut ChaCha8Rng::seed_from_u64(1))?);
        let src = FixedExemplars(exemplars.clone());
        let r = biased_rrt(&scene, &start, &goal, &src, &cfg, &bias, &mut ChaCha8Rng::seed_from_u64(1))?;
        show("biased_rrt", &r);
        println!("             provenance {:?}", r.provenance);
    }
    Ok(())
}
