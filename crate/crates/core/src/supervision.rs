//! Marginal-gain supervision files (JSON lines, one object per instance).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prise::PriseTrace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupervisionLine {
    pub instance_id: String,
    #[serde(rename = "S")]
    pub num_scenarios: usize,
    pub order: Vec<usize>,
    /// Gains aligned with `order`.
    pub gains: Vec<f64>,
    /// `g_dense[j]` is the gain at which `j` was selected, 0 if never selected.
    pub g_dense: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_full: Option<f64>,
    /// Per-step candidate scores, when recorded during selection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_scores: Option<Vec<Vec<(usize, f64)>>>,
}

impl SupervisionLine {
    pub fn from_trace(instance_id: impl Into<String>, num_scenarios: usize, trace: &PriseTrace, v_full: Option<f64>) -> Self {
        let candidate_scores: Option<Vec<_>> = trace.records.iter().map(|r| r.candidate_scores.clone()).collect();
        SupervisionLine {
            instance_id: instance_id.into(),
            num_scenarios,
            order: trace.order(),
            gains: trace.gains(),
            g_dense: trace.dense_gains(num_scenarios),
            v_full,
            candidate_scores: candidate_scores.filter(|c| !c.is_empty()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(format!("supervision for {}: {m}", self.instance_id)));
        if self.g_dense.len() != self.num_scenarios {
            return bad(format!("g_dense has {} entries, S = {}", self.g_dense.len(), self.num_scenarios));
        }
        if self.gains.len() != self.order.len() {
            return bad("gains and order differ in length".into());
        }
        let mut seen = vec![false; self.num_scenarios];
        for (&j, &g) in self.order.iter().zip(&self.gains) {
            if j >= self.num_scenarios || seen[j] {
                return bad(format!("order entry {j} out of range or repeated"));
            }
            seen[j] = true;
            if self.g_dense[j] != g {
                return bad(format!("g_dense[{j}] disagrees with its gain"));
            }
        }
        if let Some(j) = (0..self.num_scenarios).find(|&j| !seen[j] && self.g_dense[j] != 0.0) {
            return bad(format!("unselected scenario {j} has nonzero gain"));
        }
        if self.g_dense.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return bad("gains must be finite and nonnegative".into());
        }
        Ok(())
    }
}

pub fn write_supervision(lines: &[SupervisionLine], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for line in lines {
        let json = serde_json::to_string(line).map_err(|e| Error::Validation(e.to_string()))?;
        writeln!(out, "{json}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Writes one line per `(instance_id, S, trace, v_full)`.
pub fn export_supervision<'a, I>(traces: I, path: impl AsRef<Path>) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, usize, &'a PriseTrace, Option<f64>)>,
{
    let lines: Vec<SupervisionLine> = traces
        .into_iter()
        .map(|(id, s, trace, v)| SupervisionLine::from_trace(id, s, trace, v))
        .collect();
    write_supervision(&lines, path)
}

pub fn read_supervision(path: impl AsRef<Path>) -> Result<Vec<SupervisionLine>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    for (no, text) in BufReader::new(file).lines().enumerate() {
        let text = text.map_err(|e| Error::io(path, e))?;
        if text.trim().is_empty() {
            continue;
        }
        let line: SupervisionLine = serde_json::from_str(&text).map_err(|e| Error::Parse {
            context: format!("{}:{}", path.display(), no + 1),
            message: e.to_string(),
        })?;
        line.validate()?;
        lines.push(line);
    }
    Ok(lines)
}
