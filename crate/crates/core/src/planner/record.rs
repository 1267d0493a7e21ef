use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{PlanResult, PlannerKind, Provenance};
use crate::error::{Error, Result};
use crate::workspace::Config;

/// One planning run, stored as a JSON object per line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub scene_id: u64,
    pub planner: PlannerKind,
    pub seed: u64,
    pub budget_s: f64,
    pub success: bool,
    pub wall_time_s: f64,
    /// C-space units (radians for arms, see the benchmark report).
    pub path_length: f64,
    pub iterations: usize,
    pub provenance: Provenance,
    pub waypoints: Vec<Config>,
}

impl RunRecord {
    pub fn from_result(scene_id: u64, seed: u64, budget_s: f64, r: &PlanResult) -> Self {
        Self {
            scene_id,
            planner: r.planner,
            seed,
            budget_s,
            success: r.success,
            wall_time_s: r.elapsed,
            path_length: r.length,
            iterations: r.iterations,
            provenance: r.provenance,
            waypoints: r.path.clone(),
        }
    }
}

pub fn write_records(w: &mut impl Write, records: &[RunRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records(r: impl BufRead) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(i + 1, "record", e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut de = serde_json::Deserializer::from_str(&line);
        let rec: RunRecord = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let field = e.path().to_string();
            Error::parse(i + 1, field, e.into_inner().to_string())
        })?;
        out.push(rec);
    }
    Ok(out)
}
