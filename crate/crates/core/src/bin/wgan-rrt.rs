use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use wgan_rrt::bench::{held_out_queries, run_benchmark, write_csv, write_svg, BenchConfig, Guidance};
use wgan_rrt::config::load_toml;
use wgan_rrt::dataset::{generate_dataset, inspect, load_dataset, save_dataset, scene_image, DatasetConfig};
use wgan_rrt::planner::{
    biased_rrt, read_records, rrt, rrt_star, write_records, BiasConfig, GeneratorSource, PlannerConfig, PlannerKind, RunRecord,
};
use wgan_rrt::wgan::{Checkpoint, TrainingFile};
use wgan_rrt::workspace::{parse_scene, Config};
use wgan_rrt::{Error, Result};

#[derive(Parser)]
#[command(name = "wgan-rrt", version, about = "Learned exemplar sampling for RRT")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random scenes, RRT* demonstrations and training targets.
    GenData {
        /// Dataset settings (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        scenes: Option<usize>,
        #[arg(long)]
        pairs_per_scene: Option<usize>,
        #[arg(long, default_value = "dataset.jsonl")]
        out: PathBuf,
    },
    /// Train the generator and critic on a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Training settings (TOML, flat keys).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        steps_per_epoch: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long, default_value = "generator.ckpt")]
        out: PathBuf,
    },
    /// Plan one query in a scene file.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        /// Comma-separated start configuration.
        #[arg(long, value_parser = parse_config)]
        start: Config,
        #[arg(long, value_parser = parse_config)]
        goal: Config,
        #[arg(long, default_value = "rrt", value_parser = parse_planner)]
        planner: PlannerKind,
        /// Required by biased_rrt.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Planner and bias settings (TOML with `[planner]` and `[bias]` tables).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Wall-clock budget in seconds.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        max_samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Append the run record (JSON lines) to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare rrt, rrt_star and biased_rrt on held-out scenes.
    Bench {
        /// Benchmark settings (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        scenes: Option<usize>,
        /// Comma-separated budgets in seconds.
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', value_parser = parse_planner)]
        planners: Option<Vec<PlannerKind>>,
        #[arg(long)]
        workers: Option<usize>,
        /// Cap iterations at `budget · samples_per_second` instead of timing
        /// runs, making results deterministic.
        #[arg(long)]
        no_wall_clock: bool,
        #[arg(long, default_value = "bench-out")]
        out_dir: PathBuf,
    },
    /// Summarize a dataset, checkpoint or run-record file.
    Inspect { path: PathBuf },
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PlanFile {
    planner: PlannerConfig,
    bias: BiasConfig,
}

fn parse_config(s: &str) -> std::result::Result<Config, String> {
    let values: std::result::Result<Vec<f64>, _> = s.split(',').map(|v| v.trim().parse::<f64>()).collect();
    Config::new(values.map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn parse_planner(s: &str) -> std::result::Result<PlannerKind, String> {
    PlannerKind::from_name(s).map_err(|e| e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn gen_data(config: Option<PathBuf>, seed: Option<u64>, scenes: Option<usize>, pairs: Option<usize>, out: &Path) -> Result<()> {
    let mut cfg: DatasetConfig = config.as_deref().map(load_toml).transpose()?.unwrap_or_default();
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.scenes = scenes.unwrap_or(cfg.scenes);
    cfg.pairs_per_scene = pairs.unwrap_or(cfg.pairs_per_scene);
    let examples = generate_dataset(&cfg)?;
    save_dataset(out, &examples, Some(&cfg))?;
    println!(
        "wrote {} examples ({} requested) to {}",
        examples.len(),
        cfg.scenes * cfg.pairs_per_scene,
        out.display()
    );
    Ok(())
}

fn train(data: &Path, config: Option<PathBuf>, seed: Option<u64>, epochs: Option<usize>, steps: Option<usize>, lr: Option<f64>, out: &Path) -> Result<()> {
    let mut file = match config {
        Some(p) => TrainingFile::load(&p)?,
        None => TrainingFile::default(),
    };
    file.seed = seed.unwrap_or(file.seed);
    file.epochs = epochs.unwrap_or(file.epochs);
    file.steps_per_epoch = steps.or(file.steps_per_epoch);
    file.lr = lr.unwrap_or(file.lr);
    let (_, examples) = load_dataset(data)?;
    let samples: Vec<_> = examples.iter().map(|e| e.to_sample()).collect();
    let (ck, _) = file.fit(&samples, |s| {
        println!(
            "epoch {:>4}  critic {:>10.5}  generator {:>10.5}  wasserstein {:>9.5}  penalty {:>8.5}",
            s.epoch, s.critic_loss, s.generator_loss, s.wasserstein, s.penalty
        )
    })?;
    ck.save(out)?;
    println!("saved checkpoint to {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn plan(
    scene: &Path,
    start: Config,
    goal: Config,
    planner: PlannerKind,
    checkpoint: Option<PathBuf>,
    config: Option<PathBuf>,
    budget: Option<f64>,
    max_samples: Option<usize>,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let text = std::fs::read_to_string(scene).map_err(|e| Error::io(scene, e))?;
    let scene = parse_scene(&text)?;
    let file: PlanFile = config.as_deref().map(load_toml).transpose()?.unwrap_or_default();
    let mut pc = file.planner;
    pc.time_budget = budget.or(pc.time_budget);
    pc.max_samples = max_samples.unwrap_or(pc.max_samples);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let result = match planner {
        PlannerKind::Rrt => rrt(&scene, &start, &goal, &pc, &mut rng)?,
        PlannerKind::RrtStar => rrt_star(&scene, &start, &goal, &pc, &mut rng)?,
        PlannerKind::BiasedRrt => {
            let path = checkpoint.ok_or_else(|| Error::Config("biased_rrt needs --checkpoint".into()))?;
            let ck = Checkpoint::load(&path)?;
            if ck.header.dim != scene.dof() {
                return Err(Error::Config(format!(
                    "{} predicts {}-DOF paths but the scene robot has {} DOF",
                    path.display(),
                    ck.header.dim,
                    scene.dof()
                )));
            }
            let schedule = ck.header.schedule.build()?;
            let image = scene_image(&scene, &start, &goal)?;
            let source = GeneratorSource {
                generator: &ck.generator,
                image: &image,
                schedule: &schedule,
                t: file.bias.inference_t.unwrap_or(ck.header.inference_t),
            };
            biased_rrt(&scene, &start, &goal, &source, &pc, &file.bias, &mut rng)?
        }
    };
    println!(
        "{}: {} after {} iterations in {:.4} s, path length {:.4} ({} waypoints)",
        planner,
        if result.success { "solved" } else { "failed" },
        result.iterations,
        result.elapsed,
        result.length,
        result.path.len()
    );
    println!("provenance {:?}", result.provenance);
    for q in &result.path {
        let parts: Vec<String> = q.as_slice().iter().map(|v| format!("{v:.5}")).collect();
        println!("  {}", parts.join(" "));
    }
    if let Some(out) = out {
        let record = RunRecord::from_result(0, seed, pc.time_budget.unwrap_or(0.0), &result);
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&out)
            .map_err(|e| Error::io(&out, e))?;
        write_records(&mut f, &[record]).map_err(|e| Error::io(&out, e))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench(
    config: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    seed: Option<u64>,
    scenes: Option<usize>,
    budgets: Option<Vec<f64>>,
    planners: Option<Vec<PlannerKind>>,
    workers: Option<usize>,
    no_wall_clock: bool,
    out_dir: &Path,
) -> Result<()> {
    let mut cfg: BenchConfig = config.as_deref().map(load_toml).transpose()?.unwrap_or_default();
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.scenes = scenes.unwrap_or(cfg.scenes);
    cfg.budgets = budgets.unwrap_or(cfg.budgets);
    cfg.planners = planners.unwrap_or(cfg.planners);
    cfg.workers = workers.or(cfg.workers);
    cfg.wall_clock &= !no_wall_clock;
    cfg.validate()?;
    let ck = checkpoint.as_deref().map(Checkpoint::load).transpose()?;
    let schedule = ck.as_ref().map(|c| c.header.schedule.build()).transpose()?;
    let guidance = ck.as_ref().zip(schedule.as_ref()).map(|(c, s)| Guidance {
        generator: &c.generator,
        schedule: s,
        inference_t: c.header.inference_t,
    });
    if let (Some(g), Ok(model)) = (guidance, cfg.scene.robot.model()) {
        if g.generator.dim() != model.dof() {
            return Err(Error::Config(format!(
                "checkpoint predicts {}-DOF paths but the benchmark robot has {} DOF",
                g.generator.dim(),
                model.dof()
            )));
        }
    }
    let queries = held_out_queries(&cfg)?;
    let (report, records) = run_benchmark(&queries, &cfg, guidance)?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let text = report.to_text();
    print!("{text}");
    let write = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| -> Result<()> {
        let path = out_dir.join(name);
        let mut w = create(&path)?;
        f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))
    };
    write("report.txt", &|w| w.write_all(text.as_bytes()))?;
    write("report.svg", &|w| write_svg(&report, w))?;
    write("runs.jsonl", &|w| write_records(w, &records))?;
    let csv_path = out_dir.join("report.csv");
    write_csv(&report, create(&csv_path)?)?;
    println!("wrote report.txt, report.csv, report.svg and runs.jsonl to {}", out_dir.display());
    Ok(())
}

fn inspect_file(path: &Path) -> Result<()> {
    let mut head = [0u8; 8];
    let n = File::open(path)
        .and_then(|mut f| f.read(&mut head))
        .map_err(|e| Error::io(path, e))?;
    if &head[..n] == b"WGRRTCKP" {
        let ck = Checkpoint::load(path)?;
        println!("checkpoint {}", path.display());
        println!("  header {:?}", ck.header);
        println!("  generator parameters {}", ck.generator.params().count());
        match &ck.critic {
            Some(c) => println!("  critic parameters {}", c.params().count()),
            None => println!("  no critic"),
        }
        return Ok(());
    }
    let first = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if first.starts_with("{\"scene_id\"") {
        let records = read_records(BufReader::new(first.as_bytes()))?;
        for r in &records {
            println!(
                "scene {:<12} {:<10} budget {:>6} success {:<5} time {:.4} length {:.4} iterations {}",
                r.scene_id, r.planner, r.budget_s, r.success, r.wall_time_s, r.path_length, r.iterations
            );
        }
        return Ok(());
    }
    let (header, examples) = load_dataset(path)?;
    println!("dataset {} ({} examples)", path.display(), header.examples);
    for line in inspect(&examples) {
        println!("{line}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData {
            config,
            seed,
            scenes,
            pairs_per_scene,
            out,
        } => gen_data(config, seed, scenes, pairs_per_scene, &out),
        Command::Train {
            data,
            config,
            seed,
            epochs,
            steps_per_epoch,
            lr,
            out,
        } => train(&data, config, seed, epochs, steps_per_epoch, lr, &out),
        Command::Plan {
            scene,
            start,
            goal,
            planner,
            checkpoint,
            config,
            budget,
            max_samples,
            seed,
            out,
        } => plan(&scene, start, goal, planner, checkpoint, config, budget, max_samples, seed, out),
        Command::Bench {
            config,
            checkpoint,
            seed,
            scenes,
            budgets,
            planners,
            workers,
            no_wall_clock,
            out_dir,
        } => bench(config, checkpoint, seed, scenes, budgets, planners, workers, no_wall_clock, &out_dir),
        Command::Inspect { path } => inspect_file(&path),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
