//! On-disk records: run history (JSON lines), best sample, manifest and
//! trace header.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use realize_core::ce::Outcome;
use realize_core::{CeConfig, IterationRecord, ParamVector};
use serde::{Deserialize, Serialize};

use crate::inputs::{input_err, Failure, FileRef};

pub const HISTORY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutLine {
    pub spec: String,
    pub kind: String,
    pub offset: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub version: u32,
    pub scenario: FileRef,
    pub domain: FileRef,
    pub problem: FileRef,
    pub plan: Vec<String>,
    pub layout: Vec<LayoutLine>,
    pub config: CeConfig,
    /// Samples kept per iteration for plotting.
    pub plot_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLine {
    pub index: usize,
    pub values: Vec<f64>,
    pub goal_ok: bool,
    pub all_actions_ok: bool,
    pub total_cost: f64,
}

impl SampleLine {
    pub fn new(index: usize, p: &ParamVector, o: &Outcome) -> Self {
        Self {
            index,
            values: p.values.clone(),
            goal_ok: o.goal_ok,
            all_actions_ok: o.all_actions_ok,
            total_cost: o.total_cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesLine {
    pub iter: usize,
    pub samples: Vec<SampleLine>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// A goal-feasible sample was found.
    Feasible,
    /// Only samples whose actions all succeeded.
    BestEffort,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestLine {
    pub status: Status,
    pub converged: bool,
    pub iterations: usize,
    pub iter: Option<usize>,
    pub sample: Option<SampleLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistoryLine {
    Header(Header),
    Iteration(IterationRecord),
    Samples(SamplesLine),
    Best(BestLine),
}

/// Append-only JSON-lines writer, flushed after every line.
pub struct LineWriter {
    out: BufWriter<File>,
}

impl LineWriter {
    pub fn create(path: &Path) -> Result<Self, Failure> {
        let f = File::create(path).map_err(|e| input_err(path, e))?;
        Ok(Self { out: BufWriter::new(f) })
    }

    pub fn write<T: Serialize>(&mut self, line: &T) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, line)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }
}

pub struct History {
    pub header: Header,
    pub iterations: Vec<IterationRecord>,
    pub samples: Vec<SamplesLine>,
    pub best: Option<BestLine>,
}

pub fn read_history(path: &Path, text: &str) -> Result<History, Failure> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let bad = |n: usize, e: &dyn std::fmt::Display| input_err(path, format!("line {}: {e}", n + 1));
    let header = match lines.next() {
        Some((n, l)) => match serde_json::from_str(l).map_err(|e| bad(n, &e))? {
            HistoryLine::Header(h) => h,
            _ => return Err(bad(n, &"expected a history header")),
        },
        None => return Err(input_err(path, "empty history")),
    };
    if header.version != HISTORY_VERSION {
        return Err(input_err(path, format!("history version {} (expected {HISTORY_VERSION})", header.version)));
    }
    let mut h = History { header, iterations: Vec::new(), samples: Vec::new(), best: None };
    for (n, l) in lines {
        match serde_json::from_str(l).map_err(|e| bad(n, &e))? {
            HistoryLine::Header(_) => return Err(bad(n, &"second header")),
            HistoryLine::Iteration(r) => h.iterations.push(r),
            HistoryLine::Samples(s) => h.samples.push(s),
            HistoryLine::Best(b) => h.best = Some(b),
        }
    }
    Ok(h)
}

/// The `best.json` file: enough to replay one parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestFile {
    pub status: Status,
    pub plan: Vec<String>,
    pub layout: Vec<LayoutLine>,
    pub iter: usize,
    pub index: usize,
    pub total_cost: f64,
    pub values: Vec<f64>,
}

/// Parameter values from either a `best.json` object or a bare JSON array.
pub fn read_sample_values(path: &Path, text: &str) -> Result<Vec<f64>, Failure> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| input_err(path, e))?;
    let arr = match &v {
        serde_json::Value::Array(_) => &v,
        serde_json::Value::Object(m) => m.get("values").ok_or_else(|| input_err(path, "no `values` field"))?,
        _ => return Err(input_err(path, "expected an array or an object with `values`")),
    };
    serde_json::from_value(arr.clone()).map_err(|e| input_err(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub history: FileRef,
    pub best: Option<FileRef>,
}

/// Reproducibility record of one `realize` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: FileRef,
    pub domain: FileRef,
    pub problem: FileRef,
    pub config_file: Option<FileRef>,
    pub config: CeConfig,
    pub status: Status,
    pub outputs: Outputs,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

pub const TRACE_KIND: &str = "trace";

/// First line of a trace file; the records follow, one per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub kind: String,
    pub v: u32,
    pub scenario: FileRef,
    pub plan: Vec<String>,
    pub values: Vec<f64>,
    pub stride: usize,
    pub goal_ok: bool,
    pub total_cost: f64,
}

pub fn read_trace(path: &Path) -> Result<(TraceHeader, Vec<realize_core::sim::TraceRecord>), Failure> {
    let f = File::open(path).map_err(|e| input_err(path, e))?;
    let mut lines = BufReader::new(f).lines().enumerate();
    let bad = |n: usize, e: &dyn std::fmt::Display| input_err(path, format!("line {}: {e}", n + 1));
    let header: TraceHeader = match lines.next() {
        Some((n, l)) => serde_json::from_str(&l.map_err(|e| bad(n, &e))?).map_err(|e| bad(n, &e))?,
        None => return Err(input_err(path, "empty trace")),
    };
    if header.kind != TRACE_KIND || header.v != realize_core::sim::TRACE_VERSION {
        return Err(input_err(path, format!("not a version {} trace", realize_core::sim::TRACE_VERSION)));
    }
    let mut records = Vec::new();
    for (n, l) in lines {
        let l = l.map_err(|e| bad(n, &e))?;
        if l.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&l).map_err(|e| bad(n, &e))?);
    }
    Ok((header, records))
}
