//! Runtime as a function of the scenario count, on truncated scenario sets.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{load_instances, select_for, thread_pool, Method, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{evaluate_subset, value_of_set};
use crate::instance::Instance;
use crate::milp::{SolveStatus, Solver};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub instance_id: String,
    pub class: String,
    pub method: String,
    #[serde(rename = "S")]
    pub num_scenarios: usize,
    pub k: usize,
    pub regret_pct: Option<f64>,
    pub infeasible: bool,
    pub t_select_s: f64,
    pub t_solve_s: f64,
    pub status: String,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingSummaryRow {
    pub method: String,
    #[serde(rename = "S")]
    pub num_scenarios: usize,
    pub s_ratio: f64,
    pub mean_select_s: f64,
    pub mean_solve_s: f64,
    /// Relative to the smallest S of the same method.
    pub select_ratio: f64,
    pub solve_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ScalingOutcome {
    pub rows: Vec<ScalingRow>,
    pub summary: Vec<ScalingSummaryRow>,
}

fn scaling_rows(cfg: &RunConfig, id: &str, inst: &Instance, s_values: &[usize], k: usize) -> Result<Vec<ScalingRow>> {
    let base = Solver::highs(cfg.settings.clone());
    let mut rows = Vec::new();
    for &s in s_values {
        let truncated = inst.with_scenario_prefix(s)?;
        let all: Vec<usize> = (0..s).collect();
        let full = value_of_set(&truncated, &all, &base)?;
        if full.status == SolveStatus::Infeasible {
            // Regret is undefined without a feasible full problem.
            continue;
        }
        let v_full = full.require()?;
        for method in &cfg.methods {
            let (subset, t_select) = if *method == Method::Exact {
                (all.clone(), 0.0)
            } else {
                let sel = select_for(cfg, &Default::default(), method, id, &truncated, &base)?;
                (sel.subsets[0].clone(), sel.seconds[0])
            };
            let mut row = ScalingRow {
                instance_id: id.to_string(),
                class: inst.class.tag().to_string(),
                method: method.label(),
                num_scenarios: s,
                k,
                regret_pct: None,
                infeasible: false,
                t_select_s: t_select,
                t_solve_s: 0.0,
                status: String::new(),
                threads: cfg.threads,
            };
            match evaluate_subset(&truncated, &subset, v_full, &base, &base) {
                Ok(e) => {
                    row.regret_pct = e.regret_pct;
                    row.infeasible = e.infeasible;
                    row.t_solve_s = e.solve_seconds;
                    row.status = if e.infeasible { "recourse_infeasible".into() } else { e.reduced_status };
                }
                Err(Error::Solver(msg)) => row.status = format!("failed: {msg}"),
                Err(e) => return Err(e),
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn summarize_scaling(rows: &[ScalingRow]) -> Vec<ScalingSummaryRow> {
    let mut groups: BTreeMap<(String, usize), Vec<&ScalingRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.method.clone(), r.num_scenarios)).or_default().push(r);
    }
    let means: Vec<(String, usize, f64, f64)> = groups
        .into_iter()
        .map(|((m, s), rs)| {
            let n = rs.len() as f64;
            (
                m,
                s,
                rs.iter().map(|r| r.t_select_s).sum::<f64>() / n,
                rs.iter().map(|r| r.t_solve_s).sum::<f64>() / n,
            )
        })
        .collect();
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else if a == b { 1.0 } else { f64::INFINITY };
    means
        .iter()
        .map(|(m, s, sel, sol)| {
            // BTreeMap order puts the smallest S of each method first.
            let (_, s0, sel0, sol0) = means.iter().find(|(m0, ..)| m0 == m).expect("method present");
            ScalingSummaryRow {
                method: m.clone(),
                num_scenarios: *s,
                s_ratio: *s as f64 / *s0 as f64,
                mean_select_s: *sel,
                mean_solve_s: *sol,
                select_ratio: ratio(*sel, *sel0),
                solve_ratio: ratio(*sol, *sol0),
            }
        })
        .collect()
}

pub fn format_scaling(summary: &[ScalingSummaryRow]) -> String {
    let mut out = format!(
        "{:<24} {:>5} {:>7} {:>12} {:>12} {:>9} {:>9}\n",
        "method", "S", "S_ratio", "select_s", "solve_s", "sel_ratio", "sol_ratio"
    );
    for r in summary {
        out.push_str(&format!(
            "{:<24} {:>5} {:>7.2} {:>12.5} {:>12.5} {:>9.2} {:>9.2}\n",
            r.method, r.num_scenarios, r.s_ratio, r.mean_select_s, r.mean_solve_s, r.select_ratio, r.solve_ratio
        ));
    }
    out
}

/// Runs every method at budget `k` on the first `s` scenarios of each
/// instance, for each `s` in `s_values`. Rows are written to `cfg.out`.
pub fn cmd_scenario_scaling(cfg: &RunConfig, s_values: &[usize], k: usize) -> Result<ScalingOutcome> {
    let cfg = RunConfig {
        budgets: vec![k],
        ..cfg.clone()
    };
    cfg.validate()?;
    if s_values.is_empty() {
        return Err(Error::param("no scenario counts given"));
    }
    if let Some(s) = s_values.iter().find(|&&s| s < k) {
        return Err(Error::param(format!("scenario count {s} is below the budget k = {k}")));
    }
    let mut s_values = s_values.to_vec();
    s_values.sort_unstable();
    s_values.dedup();
    let instances = load_instances(&cfg.dataset, cfg.splits.as_deref())?;
    if let Some((id, inst)) = instances.iter().find(|(_, i)| i.num_scenarios() < *s_values.last().unwrap()) {
        return Err(Error::param(format!(
            "scenario count {} exceeds the {} scenarios of {id}",
            s_values.last().unwrap(),
            inst.num_scenarios()
        )));
    }
    if cfg.methods.iter().any(|m| matches!(m, Method::Ranking(_))) {
        return Err(Error::param("external rankings cover the native scenario count only; not usable for scaling"));
    }
    let sink_path = cfg.out.clone();
    let pool = thread_pool(cfg.threads)?;
    let per_instance = pool.install(|| {
        instances
            .par_iter()
            .map(|(id, inst)| scaling_rows(&cfg, id, inst, &s_values, k))
            .collect::<Result<Vec<Vec<ScalingRow>>>>()
    })?;
    let rows: Vec<ScalingRow> = per_instance.into_iter().flatten().collect();
    let mut w = csv::Writer::from_path(&sink_path).map_err(|e| Error::Parse {
        context: sink_path.display().to_string(),
        message: e.to_string(),
    })?;
    for r in &rows {
        w.serialize(r).map_err(|e| Error::Parse {
            context: sink_path.display().to_string(),
            message: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| Error::io(&sink_path, e))?;
    let summary = summarize_scaling(&rows);
    Ok(ScalingOutcome { rows, summary })
}
