//! CSV evaluation reports and their summaries.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One `(instance, method, k, gap)` evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub instance_id: String,
    pub class: String,
    pub method: String,
    /// `None` for budget-agnostic methods (written as `-`).
    #[serde(serialize_with = "ser_budget", deserialize_with = "de_budget")]
    pub k: Option<usize>,
    pub regret_pct: Option<f64>,
    pub infeasible: bool,
    pub v_full: f64,
    pub v_reduced: Option<f64>,
    pub z_realized: Option<f64>,
    pub t_select_s: f64,
    pub t_solve_s: f64,
    pub status: String,
    pub mip_gap: f64,
    pub threads: usize,
}

fn ser_budget<S: Serializer>(k: &Option<usize>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match k {
        Some(k) => s.serialize_str(&k.to_string()),
        None => s.serialize_str("-"),
    }
}

fn de_budget<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<usize>, D::Error> {
    let text = String::deserialize(d)?;
    match text.as_str() {
        "-" => Ok(None),
        t => t.parse().map(Some).map_err(serde::de::Error::custom),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowKey {
    pub instance_id: String,
    pub method: String,
    pub k: Option<usize>,
    /// Gap bits, so the key is hashable and exact.
    pub gap_bits: u64,
}

impl RowKey {
    pub fn new(instance_id: &str, method: &str, k: Option<usize>, gap: f64) -> Self {
        RowKey {
            instance_id: instance_id.to_string(),
            method: method.to_string(),
            k,
            gap_bits: gap.to_bits(),
        }
    }
}

impl EvalRow {
    pub fn key(&self) -> RowKey {
        RowKey::new(&self.instance_id, &self.method, self.k, self.mip_gap)
    }
}

pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<EvalRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Parse {
            context: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

/// Append-only report file. Rows whose key is already present are
/// skipped unless the sink was opened with `force`.
pub struct ReportSink {
    path: PathBuf,
    done: HashSet<RowKey>,
    writer: Mutex<csv::Writer<File>>,
}

impl ReportSink {
    /// Opens (or creates) the report. With `force`, existing rows whose key
    /// is in `redo` are dropped so they can be recomputed.
    pub fn open(path: impl AsRef<Path>, force: bool, redo: &HashSet<RowKey>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut existing = if path.exists() { read_rows(&path)? } else { Vec::new() };
        let rewrite = force && existing.iter().any(|r| redo.contains(&r.key()));
        if rewrite {
            existing.retain(|r| !redo.contains(&r.key()));
            let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
            for r in &existing {
                w.serialize(r).map_err(|e| csv_error(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        let fresh = !path.exists() || std::fs::metadata(&path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        Ok(ReportSink {
            done: existing.iter().map(EvalRow::key).collect(),
            path,
            writer: Mutex::new(writer),
        })
    }

    pub fn is_done(&self, key: &RowKey) -> bool {
        self.done.contains(key)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, row: &EvalRow) -> Result<()> {
        let mut w = self.writer.lock().expect("report writer poisoned");
        w.serialize(row).map_err(|e| csv_error(&self.path, e))?;
        w.flush().map_err(|e| Error::io(&self.path, e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub k: Option<usize>,
    pub mip_gap: f64,
    pub instances: usize,
    /// Mean over rows with a finite realized cost.
    pub mean_regret_pct: Option<f64>,
    pub total_time_s: f64,
    pub infeasible_pct: f64,
}

/// Aggregates rows per `(method, k, gap)`.
pub fn summarize(rows: &[EvalRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, Option<usize>, u64), Vec<&EvalRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.method.clone(), r.k, r.mip_gap.to_bits()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((method, k, gap), rs)| {
            let regrets: Vec<f64> = rs.iter().filter_map(|r| r.regret_pct).collect();
            let infeasible = rs.iter().filter(|r| r.infeasible).count();
            SummaryRow {
                method,
                k,
                mip_gap: f64::from_bits(gap),
                instances: rs.len(),
                mean_regret_pct: (!regrets.is_empty()).then(|| regrets.iter().sum::<f64>() / regrets.len() as f64),
                total_time_s: rs.iter().map(|r| r.t_select_s + r.t_solve_s).sum(),
                infeasible_pct: 100.0 * infeasible as f64 / rs.len() as f64,
            }
        })
        .collect()
}

pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<24} {:>4} {:>8} {:>5} {:>12} {:>12} {:>9}\n",
        "method", "k", "gap", "n", "regret_%", "time_s", "infeas_%"
    );
    for s in summary {
        let k = s.k.map_or("-".to_string(), |k| k.to_string());
        let regret = s.mean_regret_pct.map_or("-".to_string(), |r| format!("{r:.3}"));
        out.push_str(&format!(
            "{:<24} {:>4} {:>8} {:>5} {:>12} {:>12.3} {:>9.1}\n",
            s.method, k, s.mip_gap, s.instances, regret, s.total_time_s, s.infeasible_pct
        ));
    }
    out
}
