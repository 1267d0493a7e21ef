//! Generate a small training set, save it as JSON lines, reload it and print
//! the per-example summary.
//!
//! cargo run --release --example dataset

use wgan_rrt::dataset::{generate_dataset, inspect, load_dataset, save_dataset, DatasetConfig};

fn main() -> wgan_rrt::Result<()> {
    let cfg = DatasetConfig {
        scenes: 6,
        pairs_per_scene: 2,
        seed: 42,
        ..DatasetConfig::default()
    };
    let examples = generate_dataset(&cfg)?;
    println!("{} of {} examples built", examples.len(), cfg.scenes * cfg.pairs_per_scene);
    let dir = std::env::temp_dir().join("wgan-rrt-example");
    std::fs::create_dir_all(&dir).map_err(|e| wgan_rrt::Error::io(&dir, e))?;
    let path = dir.join("dataset.jsonl");
    save_dataset(&path, &examples, Some(&cfg))?;
    let (header, back) = load_dataset(&path)?;
    assert_eq!(back, examples);
    println!("saved and reloaded {} ({} examples)\n", path.display(), header.examples);
    for line in inspect(&back) {
        println!("{line}");
    }
    for ex in back.iter().take(1) {
        let free = ex.exemplars().iter().filter(|q| ex.scene.is_free(q)).count();
        println!("\nexample 0: {free} of {} decoded exemplars are collision-free", ex.exemplars().len());
    }
    Ok(())
}
