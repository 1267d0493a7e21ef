use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{PlannerKind, RunRecord};

/// Published Baxter results (planner, budget s, success %, time mean ± sd,
/// length mean ± sd in rad), shown next to desk-scale reports for context.
pub const REFERENCE_TABLE: [(&str, f64, f64, f64, f64, f64, f64); 9] = [
    ("RRT", 0.1, 35.0, 0.07, 0.02, 10.12, 3.18),
    ("RRT*", 0.1, 30.0, 0.1, 0.0, 10.04, 3.11),
    ("RRT-WGAN", 0.1, 63.0, 0.06, 0.01, 9.91, 2.86),
    ("RRT", 0.2, 60.0, 0.11, 0.04, 10.65, 3.25),
    ("RRT*", 0.2, 58.0, 0.2, 0.0, 10.57, 3.20),
    ("RRT-WGAN", 0.2, 75.0, 0.08, 0.04, 10.4, 3.15),
    ("RRT", 0.5, 94.0, 0.15, 0.1, 10.91, 3.33),
    ("RRT*", 0.5, 87.0, 0.5, 0.0, 10.73, 3.15),
    ("RRT-WGAN", 0.5, 87.0, 0.11, 0.1, 10.81, 3.32),
];

/// One (planner, budget) row. Time and length statistics cover successful
/// runs only and are NaN when there are none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub planner: PlannerKind,
    pub budget_s: f64,
    pub n: usize,
    pub success_rate: f64,
    pub time_mean: f64,
    pub time_sd: f64,
    pub len_mean: f64,
    pub len_sd: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    /// Sorted by budget, then planner.
    pub cells: Vec<CellStats>,
    /// Factor applied to C-space path lengths.
    pub length_scale: f64,
    pub length_unit: String,
}

/// Mean and sample standard deviation; `(NaN, NaN)` for no values, sd 0 for one.
fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl BenchReport {
    pub fn from_records(records: &[RunRecord], length_scale: f64, length_unit: &str) -> Self {
        let mut groups: BTreeMap<(u64, PlannerKind), Vec<&RunRecord>> = BTreeMap::new();
        for r in records {
            groups.entry((r.budget_s.to_bits(), r.planner)).or_default().push(r);
        }
        let mut cells: Vec<CellStats> = groups
            .into_iter()
            .map(|((bits, planner), runs)| {
                let ok: Vec<&&RunRecord> = runs.iter().filter(|r| r.success).collect();
                let times: Vec<f64> = ok.iter().map(|r| r.wall_time_s).collect();
                let lens: Vec<f64> = ok.iter().map(|r| r.path_length * length_scale).collect();
                let (time_mean, time_sd) = mean_sd(&times);
                let (len_mean, len_sd) = mean_sd(&lens);
                CellStats {
                    planner,
                    budget_s: f64::from_bits(bits),
                    n: runs.len(),
                    success_rate: ok.len() as f64 / runs.len() as f64,
                    time_mean,
                    time_sd,
                    len_mean,
                    len_sd,
                }
            })
            .collect();
        cells.sort_by(|a, b| a.budget_s.total_cmp(&b.budget_s).then(a.planner.cmp(&b.planner)));
        Self {
            cells,
            length_scale,
            length_unit: length_unit.to_string(),
        }
    }

    pub fn cell(&self, planner: PlannerKind, budget_s: f64) -> Option<&CellStats> {
        self.cells.iter().find(|c| c.planner == planner && c.budget_s == budget_s)
    }

    pub fn budgets(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.cells.iter().map(|c| c.budget_s).collect();
        b.dedup();
        b
    }

    /// Aligned text table with a footer describing the statistics.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<11} {:>8} {:>5} {:>8} {:>19} {:>19}",
            "planner",
            "budget_s",
            "n",
            "success",
            "time_s (mean±sd)",
            format!("len_{} (mean±sd)", self.length_unit)
        );
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{:<11} {:>8.3} {:>5} {:>7.1}% {:>9.4} ± {:<7.4} {:>9.4} ± {:<7.4}",
                c.planner.name(),
                c.budget_s,
                c.n,
                100.0 * c.success_rate,
                c.time_mean,
                c.time_sd,
                c.len_mean,
                c.len_sd
            );
        }
        let _ = writeln!(
            s,
            "\nTime and length statistics cover successful runs only; failed runs count toward n and the success rate."
        );
        let _ = writeln!(s, "\nPublished 7-DOF reference (not comparable in absolute terms):");
        for (p, b, succ, tm, ts, lm, ls) in REFERENCE_TABLE {
            let _ = writeln!(s, "  {p:<9} {b:>4.1}s {succ:>3.0}%  {tm:.2} ± {ts:.2} s  {lm:.2} ± {ls:.2} rad");
        }
        s
    }
}

pub fn write_csv(report: &BenchReport, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if report.cells.is_empty() {
        out.write_record(["planner", "budget_s", "n", "success_rate", "time_mean", "time_sd", "len_mean", "len_sd"])
            .map_err(csv_error)?;
    }
    for c in &report.cells {
        out.serialize(c).map_err(csv_error)?;
    }
    out.flush().map_err(|e| Error::usage(format!("writing CSV: {e}")))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(line, "csv", e.to_string())
}

/// Rows of a CSV written by [`write_csv`].
pub fn read_csv(r: impl Read) -> Result<Vec<CellStats>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(csv_error))
        .collect()
}

const COLORS: [&str; 3] = ["#4c72b0", "#dd8452", "#55a868"];

/// Grouped bars of success rate: one group per budget, one bar per planner.
pub fn write_svg(report: &BenchReport, mut w: impl Write) -> std::io::Result<()> {
    let budgets = report.budgets();
    let mut planners: Vec<PlannerKind> = report.cells.iter().map(|c| c.planner).collect();
    planners.sort();
    planners.dedup();
    let (width, height) = (640.0, 360.0);
    let (left, right, top, bottom) = (60.0, 150.0, 30.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let group_w = plot_w / budgets.len().max(1) as f64;
    let bar_w = group_w * 0.8 / planners.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle">Success rate by planning budget</text>"#, left + plot_w / 2.0);
    for tick in 0..=4 {
        let frac = tick as f64 / 4.0;
        let y = top + plot_h * (1.0 - frac);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, left + plot_w);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.0}%</text>"#, left - 6.0, y + 4.0, frac * 100.0);
    }
    for (gi, &b) in budgets.iter().enumerate() {
        let gx = left + gi as f64 * group_w + group_w * 0.1;
        for (pi, &p) in planners.iter().enumerate() {
            let Some(c) = report.cell(p, b) else { continue };
            let h = plot_h * c.success_rate;
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="{}"><title>{} {b} s: {:.1}%</title></rect>"#,
                gx + pi as f64 * bar_w,
                top + plot_h - h,
                bar_w * 0.9,
                COLORS[pi % COLORS.len()],
                p.name(),
                c.success_rate * 100.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{b} s</text>"#,
            left + (gi as f64 + 0.5) * group_w,
            top + plot_h + 20.0
        );
    }
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{:.1}" stroke="black"/>"#, top + plot_h);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="black"/>"#, top + plot_h, left + plot_w);
    for (pi, p) in planners.iter().enumerate() {
        let y = top + 10.0 + pi as f64 * 20.0;
        let x = width - right + 15.0;
        let _ = writeln!(s, r#"<rect x="{x}" y="{:.1}" width="12" height="12" fill="{}"/>"#, y - 10.0, COLORS[pi % COLORS.len()]);
        let _ = writeln!(s, r#"<text x="{}" y="{y:.1}">{}</text>"#, x + 18.0, p.name());
    }
    s.push_str("</svg>\n");
    w.write_all(s.as_bytes())
}
