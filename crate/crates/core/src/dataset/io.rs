use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{DatasetConfig, TrainingExample};
use crate::encoding::{PathMatrix, WorkspaceImage, IMAGE_CHANNELS, IMAGE_SIZE, MATRIX_COLS, MATRIX_ROWS};
use crate::error::{Error, Result};
use crate::tensorad::Tensor;
use crate::workspace::{Config, Scene};

const FORMAT: &str = "wgan-rrt-dataset";
const VERSION: u32 = 1;

/// First line of a dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub examples: usize,
    /// Generation settings, when the file came from `generate_dataset`.
    pub config: Option<DatasetConfig>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    scene_id: u64,
    scene: Scene,
    start: Config,
    goal: Config,
    /// `[5, 32, 32]`, row-major.
    y0: Vec<f64>,
    /// `[d, 8, 8]`, row-major.
    target: Vec<f64>,
    used_slots: usize,
    raw_waypoints: Vec<Config>,
    demo_length: f64,
}

impl Record {
    fn from_example(ex: &TrainingExample) -> Self {
        Self {
            scene_id: ex.scene_id,
            scene: ex.scene.clone(),
            start: ex.start.clone(),
            goal: ex.goal.clone(),
            y0: ex.y0.tensor().data().to_vec(),
            target: ex.target.values().data().to_vec(),
            used_slots: ex.target.used_slots(),
            raw_waypoints: ex.raw_waypoints.clone(),
            demo_length: ex.demo_length,
        }
    }

    fn into_example(self, line: usize) -> Result<TrainingExample> {
        let d = self.scene.dof();
        let bad = |field: &str, e: Error| Error::parse(line, field, e.to_string());
        let y0 = Tensor::new(&[IMAGE_CHANNELS, IMAGE_SIZE, IMAGE_SIZE], self.y0)
            .and_then(WorkspaceImage::from_tensor)
            .map_err(|e| bad("y0", e))?;
        let target = Tensor::new(&[d, MATRIX_ROWS, MATRIX_COLS], self.target)
            .and_then(|t| PathMatrix::with_used(t, self.used_slots))
            .map_err(|e| bad("target", e))?;
        if self.start.dim() != d || self.goal.dim() != d {
            return Err(Error::parse(line, "start", format!("expected {d} coordinates")));
        }
        Ok(TrainingExample {
            scene_id: self.scene_id,
            scene: self.scene,
            start: self.start,
            goal: self.goal,
            y0,
            target,
            raw_waypoints: self.raw_waypoints,
            demo_length: self.demo_length,
        })
    }
}

fn parse_line<T: DeserializeOwned>(line: usize, text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = match e.path().to_string() {
            p if p == "." => "record".to_string(),
            p => p,
        };
        Error::parse(line, field, e.into_inner().to_string())
    })
}

pub fn write_dataset(w: &mut impl Write, examples: &[TrainingExample], config: Option<&DatasetConfig>) -> std::io::Result<()> {
    let header = DatasetHeader {
        format: FORMAT.into(),
        version: VERSION,
        examples: examples.len(),
        config: config.cloned(),
    };
    serde_json::to_writer(&mut *w, &header)?;
    w.write_all(b"\n")?;
    for ex in examples {
        serde_json::to_writer(&mut *w, &Record::from_example(ex))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_dataset(r: impl BufRead) -> Result<(DatasetHeader, Vec<TrainingExample>)> {
    let mut lines = r.lines().enumerate();
    let header: DatasetHeader = match lines.next() {
        Some((_, Ok(text))) => parse_line(1, &text)?,
        Some((_, Err(e))) => return Err(Error::parse(1, "header", e.to_string())),
        None => return Err(Error::parse(1, "header", "empty file")),
    };
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::parse(
            1,
            "format",
            format!("expected {FORMAT} v{VERSION}, got {} v{}", header.format, header.version),
        ));
    }
    let mut out = Vec::with_capacity(header.examples);
    for (i, text) in lines {
        let line = i + 1;
        let text = text.map_err(|e| Error::parse(line, "record", e.to_string()))?;
        if text.trim().is_empty() {
            continue;
        }
        let rec: Record = parse_line(line, &text)?;
        out.push(rec.into_example(line)?);
    }
    if out.len() != header.examples {
        return Err(Error::parse(
            out.len() + 2,
            "record",
            format!("header announces {} examples, file holds {}", header.examples, out.len()),
        ));
    }
    Ok((header, out))
}

pub fn save_dataset(path: &Path, examples: &[TrainingExample], config: Option<&DatasetConfig>) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_dataset(&mut w, examples, config)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: &Path) -> Result<(DatasetHeader, Vec<TrainingExample>)> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(f))
}

/// One summary line per example.
pub fn inspect(examples: &[TrainingExample]) -> Vec<String> {
    let fmt = |c: &Config| {
        let parts: Vec<String> = c.as_slice().iter().map(|v| format!("{v:.3}")).collect();
        format!("({})", parts.join(", "))
    };
    examples
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            format!(
                "#{i:<4} scene {:<6} obstacles {:<3} start {} goal {} waypoints {:<4} exemplars {:<3} demo length {:.4}",
                ex.scene_id,
                ex.scene.obstacles().len(),
                fmt(&ex.start),
                fmt(&ex.goal),
                ex.raw_waypoints.len(),
                ex.target.used_slots(),
                ex.demo_length,
            )
        })
        .collect()
}
