//! Train the generator and critic briefly on a handful of examples, save a
//! checkpoint and query it for exemplars.
//!
//! cargo run --release --example training

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wgan_rrt::dataset::{generate_dataset, DatasetConfig};
use wgan_rrt::planner::{ExemplarSource, GeneratorSource};
use wgan_rrt::wgan::{Checkpoint, TrainingFile};

fn main() -> wgan_rrt::Result<()> {
    let data = generate_dataset(&DatasetConfig {
        scenes: 4,
        pairs_per_scene: 1,
        seed: 5,
        ..DatasetConfig::default()
    })?;
    let samples: Vec<_> = data.iter().map(|e| e.to_sample()).collect();
    let file = TrainingFile {
        batch: 8,
        epochs: 5,
        steps_per_epoch: Some(4),
        lr: 1e-3,
        ..TrainingFile::default()
    };
    let (ck, _) = file.fit(&samples, |s| {
        println!(
            "epoch {}: critic {:.4} generator {:.4} wasserstein {:.4} penalty {:.4}",
            s.epoch, s.critic_loss, s.generator_loss, s.wasserstein, s.penalty
        )
    })?;
    let path = std::env::temp_dir().join("wgan-rrt-example.ckpt");
    ck.save(&path)?;
    let ck = Checkpoint::load(&path)?;
    println!("checkpoint {} header {:?}", path.display(), ck.header);

    let schedule = ck.header.schedule.build()?;
    let ex = &data[0];
    let source = GeneratorSource {
        generator: &ck.generator,
        image: &ex.y0,
        schedule: &schedule,
        t: ck.header.inference_t,
    };
    let generated = source.exemplars(&mut ChaCha8Rng::seed_from_u64(0))?;
    println!(
        "generated {} exemplars for example 0 (target has {}); {} are collision-free",
        generated.len(),
        ex.target.used_slots(),
        generated.iter().filter(|q| ex.scene.is_free(q)).count()
    );
    Ok(())
}
