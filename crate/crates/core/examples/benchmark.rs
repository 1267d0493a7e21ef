//! A miniature held-out benchmark with an untrained generator, written out as
//! text, CSV and SVG.
//!
//! cargo run --release --example benchmark

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wgan_rrt::bench::{held_out_queries, run_benchmark, write_csv, write_svg, BenchConfig, Guidance};
use wgan_rrt::diffusion::NoiseSchedule;
use wgan_rrt::wgan::{Architecture, GeneratorModel};

fn main() -> wgan_rrt::Result<()> {
    let cfg = BenchConfig {
        scenes: 8,
        budgets: vec![0.05, 0.1],
        ..BenchConfig::default()
    };
    let queries = held_out_queries(&cfg)?;
    let generator = GeneratorModel::initialized(2, &Architecture::default(), &mut ChaCha8Rng::seed_from_u64(0))?;
    let schedule = NoiseSchedule::default();
    let guidance = Guidance {
        generator: &generator,
        schedule: &schedule,
        inference_t: 25,
    };
    let (report, records) = run_benchmark(&queries, &cfg, Some(guidance))?;
    print!("{}", report.to_text());
    let dir = std::env::temp_dir().join("wgan-rrt-bench-example");
    std::fs::create_dir_all(&dir).map_err(|e| wgan_rrt::Error::io(&dir, e))?;
    let csv = dir.join("report.csv");
    write_csv(&report, std::fs::File::create(&csv).map_err(|e| wgan_rrt::Error::io(&csv, e))?)?;
    let svg = dir.join("report.svg");
    std::fs::File::create(&svg)
        .and_then(|f| write_svg(&report, f))
        .map_err(|e| wgan_rrt::Error::io(&svg, e))?;
    println!("{} runs; wrote {} and {}", records.len(), csv.display(), svg.display());
    Ok(())
}
