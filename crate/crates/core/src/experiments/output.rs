use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::runs::{CompareRow, CurvePoint, HeatmapCell, PlanNodeRow, SweepRow};
use super::{GraphInput, Scenario};
use crate::error::{Error, Result};

pub const SCHEMA_SWEEP: &str = "bisis.sweep.v1";
pub const SCHEMA_HEATMAP: &str = "bisis.heatmap.v1";
pub const SCHEMA_CURVE: &str = "bisis.curve.v1";
pub const SCHEMA_COMPARE: &str = "bisis.compare.v1";
pub const SCHEMA_PLAN: &str = "bisis.plan.v1";

/// A row type with a fixed column layout. The first column of every file is
/// `schema`, carrying the versioned schema tag.
trait CsvRow {
    const SCHEMA: &'static str;
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl CsvRow for SweepRow {
    const SCHEMA: &'static str = SCHEMA_SWEEP;
    const HEADER: &'static [&'static str] = &[
        "epsilon",
        "avg_x",
        "avg_y",
        "margin",
        "budget_spent",
        "residual",
        "iterations",
    ];
    fn fields(&self) -> Vec<String> {
        vec![
            num(self.epsilon),
            num(self.avg_x),
            num(self.avg_y),
            num(self.margin),
            num(self.budget_spent),
            num(self.residual),
            self.iterations.to_string(),
        ]
    }
}

impl CsvRow for HeatmapCell {
    const SCHEMA: &'static str = SCHEMA_HEATMAP;
    const HEADER: &'static [&'static str] = &[
        "tau1",
        "avg_x_star",
        "budget",
        "avg_x",
        "avg_y",
        "margin",
        "survived",
        "below_curve",
    ];
    fn fields(&self) -> Vec<String> {
        vec![
            num(self.tau1),
            num(self.avg_x_star),
            num(self.budget),
            num(self.avg_x),
            num(self.avg_y),
            num(self.margin),
            self.survived.to_string(),
            self.below_curve.to_string(),
        ]
    }
}

impl CsvRow for CurvePoint {
    const SCHEMA: &'static str = SCHEMA_CURVE;
    const HEADER: &'static [&'static str] = &["tau1", "avg_x_star", "c_min"];
    fn fields(&self) -> Vec<String> {
        vec![num(self.tau1), num(self.avg_x_star), num(self.c_min)]
    }
}

impl CsvRow for CompareRow {
    const SCHEMA: &'static str = SCHEMA_COMPARE;
    const HEADER: &'static [&'static str] = &[
        "method",
        "cost_mode",
        "epsilon",
        "netshield_k",
        "avg_x",
        "avg_y",
        "margin",
        "budget_spent",
    ];
    fn fields(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            self.cost_mode.clone(),
            opt(self.epsilon),
            opt(self.netshield_k),
            num(self.avg_x),
            num(self.avg_y),
            num(self.margin),
            num(self.budget_spent),
        ]
    }
}

impl CsvRow for PlanNodeRow {
    const SCHEMA: &'static str = SCHEMA_PLAN;
    const HEADER: &'static [&'static str] = &[
        "node",
        "node_id",
        "w",
        "nu",
        "u_critical",
        "alpha",
        "u",
        "x",
        "y",
    ];
    fn fields(&self) -> Vec<String> {
        vec![
            self.node.to_string(),
            self.node_id.to_string(),
            num(self.w),
            num(self.nu),
            num(self.u_critical),
            num(self.alpha),
            num(self.u),
            num(self.x),
            num(self.y),
        ]
    }
}

fn write_rows<R: CsvRow, W: Write>(rows: &[R], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Output(e.to_string());
    let mut header = vec!["schema"];
    header.extend_from_slice(R::HEADER);
    w.write_record(&header).map_err(err)?;
    for row in rows {
        let mut rec = vec![R::SCHEMA.to_string()];
        rec.extend(row.fields());
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    write_rows(rows, out)
}

pub fn write_heatmap_csv<W: Write>(rows: &[HeatmapCell], out: W) -> Result<()> {
    write_rows(rows, out)
}

pub fn write_curve_csv<W: Write>(rows: &[CurvePoint], out: W) -> Result<()> {
    write_rows(rows, out)
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], out: W) -> Result<()> {
    write_rows(rows, out)
}

pub fn write_plan_csv<W: Write>(rows: &[PlanNodeRow], out: W) -> Result<()> {
    write_rows(rows, out)
}

/// Internal index to file id mapping, so outputs can be joined with the input.
pub fn write_node_ids<W: Write>(ids: &[i64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Output(e.to_string());
    w.write_record(["node", "node_id"]).map_err(err)?;
    for (i, id) in ids.iter().enumerate() {
        w.write_record([i.to_string(), id.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}

/// Run provenance written next to the CSV outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub graph_source: String,
    pub graph_sha256: String,
    pub nodes: usize,
    pub edges: usize,
    pub duplicates_dropped: usize,
    pub seed: u64,
    pub workers: usize,
    pub wall_seconds: f64,
    pub outputs: Vec<String>,
    pub checks: Vec<(String, bool)>,
    pub scenario: Scenario,
}

impl Manifest {
    pub fn new(command: &str, scenario: &Scenario, input: &GraphInput) -> Self {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            graph_source: input.source.clone(),
            graph_sha256: input.graph.content_hash(),
            nodes: input.graph.n(),
            edges: input.graph.num_edges(),
            duplicates_dropped: input.duplicates_dropped,
            seed: scenario.seed,
            workers: rayon::current_num_threads(),
            wall_seconds: 0.0,
            outputs: Vec::new(),
            checks: Vec::new(),
            scenario: scenario.clone(),
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Output(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
