use std::num::NonZeroU32;
use std::time::Instant;

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem, Sense};

use super::{ConstraintSense, MilpModel, SolveResult, SolveSettings, SolveStatus, VarKind};
use crate::error::Result;

/// Contract for an external branch-and-bound solver.
///
/// Implementations must be callable concurrently on distinct models; every
/// call owns its own solver environment.
pub trait MilpBackend: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, model: &MilpModel, settings: &SolveSettings) -> Result<SolveResult>;
}

/// HiGHS through its C API.
#[derive(Clone, Copy, Debug, Default)]
pub struct HighsBackend;

impl MilpBackend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve(&self, model: &MilpModel, settings: &SolveSettings) -> Result<SolveResult> {
        let start = Instant::now();
        if model.num_vars() == 0 {
            // The bindings cannot report a solution status for an empty
            // model; only constant rows remain to check.
            let feasible = model.constraints.iter().all(|c| match c.sense {
                ConstraintSense::Le => 0.0 <= c.rhs,
                ConstraintSense::Ge => 0.0 >= c.rhs,
                ConstraintSense::Eq => c.rhs == 0.0,
            });
            let status = if feasible { SolveStatus::Optimal } else { SolveStatus::Infeasible };
            return Ok(SolveResult::from_values(model, status, Vec::new(), start.elapsed().as_secs_f64()));
        }

        let mut costs = vec![0.0; model.num_vars()];
        for &(var, c) in &model.objective {
            costs[var.0] += c;
        }
        let mut problem = RowProblem::default();
        let cols: Vec<_> = model
            .variables
            .iter()
            .zip(&costs)
            .map(|(v, &cost)| {
                let integer = matches!(v.kind, VarKind::Binary | VarKind::Integer);
                problem.add_column_with_integrality(cost, v.lower..=v.upper, integer)
            })
            .collect();
        for con in &model.constraints {
            let terms: Vec<_> = con.terms.iter().map(|&(v, c)| (cols[v.0], c)).collect();
            match con.sense {
                ConstraintSense::Le => problem.add_row(..=con.rhs, terms),
                ConstraintSense::Ge => problem.add_row(con.rhs.., terms),
                ConstraintSense::Eq => problem.add_row(con.rhs..=con.rhs, terms),
            }
        }

        let mut highs = problem.optimise(Sense::Minimise);
        highs.make_quiet();
        highs.set_option("mip_rel_gap", settings.mip_gap);
        highs.set_option("random_seed", 0);
        if let Some(limit) = settings.time_limit {
            highs.set_option("time_limit", limit);
        }
        highs.set_threads(NonZeroU32::new(settings.threads.max(1)).expect("nonzero"));

        let solved = match highs.try_solve() {
            Ok(solved) => solved,
            Err(_) => {
                return Ok(SolveResult::from_values(
                    model,
                    SolveStatus::Failed,
                    Vec::new(),
                    start.elapsed().as_secs_f64(),
                ))
            }
        };
        let has_primal = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
        let gap = || {
            let g = solved.mip_gap();
            g.is_finite().then_some(g).unwrap_or(0.0)
        };
        let status = match solved.status() {
            HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
            HighsModelStatus::Infeasible | HighsModelStatus::UnboundedOrInfeasible => SolveStatus::Infeasible,
            HighsModelStatus::ReachedTimeLimit => SolveStatus::TimeLimit {
                gap: has_primal.then(gap),
            },
            HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt
            | HighsModelStatus::ReachedMemoryLimit
                if has_primal =>
            {
                SolveStatus::Feasible { gap: gap() }
            }
            _ => SolveStatus::Failed,
        };
        let values = if status.has_solution() {
            solved.get_solution().columns().to_vec()
        } else {
            Vec::new()
        };
        Ok(SolveResult::from_values(model, status, values, start.elapsed().as_secs_f64()))
    }
}
