//! Sequential lookahead scenario selection.
//!
//! At every step each unselected scenario is scored by the restricted value
//! of the current set extended with that scenario; the best one is added
//! and its marginal gain recorded as supervision. The loop stops once the
//! budget is reached or the best gain no longer exceeds the tolerance.
//!
//! A run that stops early can be completed up to the budget: each extra
//! scenario is the one with the highest recourse cost under the current
//! reduced solution. Completion steps carry no gain and are not supervision.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{compression_budget_from_values, value_of_set, CompressionBudget};
use crate::milp::{SolveStatus, Solver};
use crate::problem::TwoStageProblem;

#[derive(Clone, Debug, PartialEq)]
pub struct PriseConfig {
    /// Maximum number of scenarios to select (K).
    pub budget: usize,
    /// Gain tolerance; a step whose gain is `<= eps` ends the run.
    pub eps: f64,
    /// Keep every candidate's score for each step.
    pub record_candidate_scores: bool,
    /// After an early stop, extend the selection to `budget` scenarios.
    pub complete_to_budget: bool,
}

impl PriseConfig {
    pub fn new(budget: usize) -> Self {
        PriseConfig {
            budget,
            eps: 0.0,
            record_candidate_scores: false,
            complete_to_budget: true,
        }
    }
}

/// One accepted step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupervisionRecord {
    pub step: usize,
    /// Selected set before this step, in selection order.
    pub selected_before: Vec<usize>,
    pub chosen: usize,
    pub gain: f64,
    /// Restricted value after adding `chosen`.
    pub value_after: f64,
    /// `(scenario, score)` for every candidate of this step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_scores: Option<Vec<(usize, f64)>>,
    /// Wall-clock time spent scoring the candidates of this step.
    #[serde(default)]
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    BudgetReached,
    GainBelowTolerance,
}

/// A scenario appended after the gain-driven steps ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionStep {
    pub chosen: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriseTrace {
    pub records: Vec<SupervisionRecord>,
    pub stop: StopReason,
    #[serde(default)]
    pub completion: Vec<CompletionStep>,
}

impl PriseTrace {
    /// Gain-driven selection order.
    pub fn order(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.chosen).collect()
    }

    /// Selection order followed by the completion; every prefix is a nested
    /// reduced set.
    pub fn full_order(&self) -> Vec<usize> {
        self.records
            .iter()
            .map(|r| r.chosen)
            .chain(self.completion.iter().map(|c| c.chosen))
            .collect()
    }

    pub fn gains(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gain).collect()
    }

    /// Number of gain-driven selections.
    pub fn k_hat(&self) -> usize {
        self.records.len()
    }

    /// Reduced set for budget `k`: the first `k` of [`Self::full_order`]
    /// (fewer if the run stopped early without completion).
    pub fn prefix(&self, k: usize) -> Vec<usize> {
        self.full_order().into_iter().take(k).collect()
    }

    /// Restricted value of the first `k` selections (0 for `k = 0`).
    pub fn value_at(&self, k: usize) -> f64 {
        match k.min(self.records.len()) {
            0 => 0.0,
            k => self.records[k - 1].value_after,
        }
    }

    /// Dense gain vector over `num_scenarios` entries; unselected ones are 0.
    pub fn dense_gains(&self, num_scenarios: usize) -> Vec<f64> {
        let mut g = vec![0.0; num_scenarios];
        for r in &self.records {
            g[r.chosen] = r.gain;
        }
        g
    }

    /// Selection time spent on the first `k` steps. The scoring pass that
    /// ended the gain-driven phase is charged to the first completion step.
    pub fn seconds_at(&self, k: usize) -> f64 {
        let steps = self.records.iter().map(|r| r.seconds).chain(self.completion.iter().map(|c| c.seconds));
        steps.take(k).sum()
    }

    /// Full permutation: the full order, then the remaining scenarios by
    /// index.
    pub fn ranking_order(&self, num_scenarios: usize) -> Vec<usize> {
        let mut order = self.full_order();
        let mut seen = vec![false; num_scenarios];
        for &j in &order {
            seen[j] = true;
        }
        order.extend((0..num_scenarios).filter(|&j| !seen[j]));
        order
    }

    pub fn compression_budget(&self, v_full: f64, tol: f64) -> CompressionBudget {
        let chain: Vec<(usize, f64)> = self.records.iter().map(|r| (r.step + 1, r.value_after)).collect();
        compression_budget_from_values(v_full, &chain, tol)
    }
}

/// A solver failure in the middle of a run, with the steps completed so far.
#[derive(Debug)]
pub struct PriseFailure {
    pub partial: PriseTrace,
    pub error: Error,
}

impl std::fmt::Display for PriseFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "lookahead selection aborted after {} steps: {}", self.partial.records.len(), self.error)
    }
}

impl std::error::Error for PriseFailure {}

impl From<PriseFailure> for Error {
    fn from(f: PriseFailure) -> Self {
        match f.error {
            Error::Solver(msg) => Error::Solver(format!("after {} steps: {msg}", f.partial.records.len())),
            other => other,
        }
    }
}

/// Relative tolerance under which two candidate scores count as tied.
const TIE_TOL: f64 = 1e-9;

/// Index of the best score; ties go to the smallest scenario index.
fn argmax(scores: &[(usize, f64)]) -> (usize, f64) {
    let mut best = scores[0];
    for &(s, v) in &scores[1..] {
        let tol = TIE_TOL * best.1.abs().max(1.0);
        if v > best.1 + tol || ((v - best.1).abs() <= tol && s < best.0) {
            best = (s, v);
        }
    }
    best
}

pub fn prise_select<P: TwoStageProblem + ?Sized>(
    problem: &P,
    config: &PriseConfig,
    solver: &Solver,
) -> Result<PriseTrace, PriseFailure> {
    let num = problem.num_scenarios();
    let fail = |records: Vec<SupervisionRecord>, error: Error| PriseFailure {
        partial: PriseTrace {
            records,
            stop: StopReason::GainBelowTolerance,
            completion: Vec::new(),
        },
        error,
    };
    if config.budget == 0 || config.budget > num {
        return Err(fail(
            Vec::new(),
            Error::param(format!("budget must be in 1..={num}, got {}", config.budget)),
        ));
    }
    if !(config.eps >= 0.0) {
        return Err(fail(Vec::new(), Error::param(format!("eps must be >= 0, got {}", config.eps))));
    }

    let mut selected: Vec<usize> = Vec::with_capacity(config.budget);
    let mut in_set = vec![false; num];
    let mut records = Vec::new();
    let mut v_prev = 0.0;
    while selected.len() < config.budget {
        let started = Instant::now();
        let candidates: Vec<usize> = (0..num).filter(|&s| !in_set[s]).collect();
        let scored = candidates
            .par_iter()
            .map(|&s| {
                let mut subset = selected.clone();
                subset.push(s);
                value_of_set(problem, &subset, solver)?.require().map(|v| (s, v))
            })
            .collect::<Result<Vec<(usize, f64)>>>();
        let scores = match scored {
            Ok(scores) => scores,
            Err(e) => return Err(fail(records, e)),
        };
        let (chosen, score) = argmax(&scores);
        let gain = score - v_prev;
        if gain <= config.eps {
            let mut trace = PriseTrace {
                records,
                stop: StopReason::GainBelowTolerance,
                completion: Vec::new(),
            };
            if config.complete_to_budget {
                let last_scoring = started.elapsed().as_secs_f64();
                match complete(problem, &selected, config.budget, solver) {
                    Ok(mut steps) => {
                        if let Some(first) = steps.first_mut() {
                            first.seconds += last_scoring;
                        }
                        trace.completion = steps;
                    }
                    Err(e) => return Err(PriseFailure { partial: trace, error: e }),
                }
            }
            return Ok(trace);
        }
        records.push(SupervisionRecord {
            step: selected.len(),
            selected_before: selected.clone(),
            chosen,
            gain,
            value_after: score,
            candidate_scores: config.record_candidate_scores.then_some(scores),
            seconds: started.elapsed().as_secs_f64(),
        });
        selected.push(chosen);
        in_set[chosen] = true;
        v_prev = score;
    }
    Ok(PriseTrace {
        records,
        stop: StopReason::BudgetReached,
        completion: Vec::new(),
    })
}

/// Extends `selected` to `len` scenarios. Each added scenario has the
/// highest recourse cost under the reduced solution of the current set
/// (an infeasible recourse counts as infinite; ties go to the smallest
/// index). From the empty set the smallest index is taken.
pub fn complete<P: TwoStageProblem + ?Sized>(
    problem: &P,
    selected: &[usize],
    len: usize,
    solver: &Solver,
) -> Result<Vec<CompletionStep>> {
    let num = problem.num_scenarios();
    let mut current = selected.to_vec();
    let mut in_set = vec![false; num];
    for &s in selected {
        in_set[s] = true;
    }
    let mut steps = Vec::new();
    while current.len() < len.min(num) {
        let started = Instant::now();
        let candidates: Vec<usize> = (0..num).filter(|&s| !in_set[s]).collect();
        let chosen = if current.is_empty() {
            candidates[0]
        } else {
            let reduced = value_of_set(problem, &current, solver)?;
            reduced.require()?;
            let first_stage = reduced
                .first_stage
                .ok_or_else(|| Error::Solver("reduced solution has no first stage".into()))?;
            let costs = candidates
                .par_iter()
                .map(|&s| {
                    let result = solver.solve(&problem.recourse_model(&first_stage, s)?)?;
                    match (result.status, result.objective) {
                        (SolveStatus::Infeasible, _) => Ok((s, f64::INFINITY)),
                        (status, Some(cost)) if status.has_solution() => Ok((s, cost)),
                        (status, _) => Err(Error::Solver(format!("recourse of scenario {s} returned status {status}"))),
                    }
                })
                .collect::<Result<Vec<(usize, f64)>>>()?;
            argmax(&costs).0
        };
        current.push(chosen);
        in_set[chosen] = true;
        steps.push(CompletionStep {
            chosen,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::DecisionTable;

    #[test]
    fn non_submodular_trace() {
        let table = DecisionTable::non_submodular_example();
        let trace = prise_select(&table, &PriseConfig::new(3), &Solver::default()).unwrap();
        assert_eq!(trace.order(), vec![2, 0, 1]);
        let gains: Vec<f64> = trace.gains().iter().map(|g| g.round()).collect();
        assert_eq!(gains, vec![5.0, 1.0, 2.0]);
        // Gains are not decreasing; nothing may reorder them.
        assert!(trace.gains()[1] < trace.gains()[2]);
        assert_eq!(trace.stop, StopReason::BudgetReached);
        assert_eq!(trace.value_at(3).round(), 8.0);
        assert_eq!(trace.dense_gains(3).iter().map(|g| g.round()).collect::<Vec<_>>(), vec![1.0, 2.0, 5.0]);
        assert_eq!(trace.compression_budget(8.0, 0.01), CompressionBudget::Converged(3));
    }

    #[test]
    fn budget_one_picks_best_singleton() {
        let table = DecisionTable::non_submodular_example();
        let trace = prise_select(&table, &PriseConfig::new(1), &Solver::default()).unwrap();
        assert_eq!(trace.order(), vec![2]);
    }

    #[test]
    fn single_scenario() {
        let table = DecisionTable::new(vec![vec![3.0], vec![7.0]]).unwrap();
        let trace = prise_select(&table, &PriseConfig::new(1), &Solver::default()).unwrap();
        assert_eq!(trace.order(), vec![0]);
        assert!((trace.gains()[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn large_eps_yields_empty_trace() {
        let table = DecisionTable::non_submodular_example();
        let config = PriseConfig {
            eps: 100.0,
            ..PriseConfig::new(3)
        };
        let trace = prise_select(&table, &config, &Solver::default()).unwrap();
        assert!(trace.records.is_empty());
        assert_eq!(trace.stop, StopReason::GainBelowTolerance);
        assert_eq!(trace.dense_gains(3), vec![0.0; 3]);
    }

    #[test]
    fn zero_gain_stops_early() {
        // Scenario 1 is dominated by scenario 0 under every decision.
        let table = DecisionTable::new(vec![vec![5.0, 4.0], vec![6.0, 1.0]]).unwrap();
        let trace = prise_select(&table, &PriseConfig::new(2), &Solver::default()).unwrap();
        assert_eq!(trace.order(), vec![0]);
        assert_eq!(trace.stop, StopReason::GainBelowTolerance);
    }

    #[test]
    fn early_stop_is_completed_by_costliest_recourse() {
        // Decision 0 is optimal for every subset containing scenario 0, so
        // the gains vanish after one step; the completion ranks the rest by
        // their cost under decision 0: 4 (s1), 4 (s3), 1 (s2).
        let table = DecisionTable::new(vec![vec![5.0, 4.0, 1.0, 4.0], vec![6.0; 4]]).unwrap();
        let trace = prise_select(&table, &PriseConfig::new(4), &Solver::default()).unwrap();
        assert_eq!(trace.order(), vec![0]);
        assert_eq!(trace.stop, StopReason::GainBelowTolerance);
        assert_eq!(trace.full_order(), vec![0, 1, 3, 2]);
        assert_eq!(trace.prefix(2), vec![0, 1]);
        assert_eq!(trace.ranking_order(4), vec![0, 1, 3, 2]);
        assert_eq!(trace.dense_gains(4), vec![5.0, 0.0, 0.0, 0.0]);
        assert!(trace.seconds_at(4) >= trace.seconds_at(1));

        let bare = PriseConfig {
            complete_to_budget: false,
            ..PriseConfig::new(4)
        };
        let trace = prise_select(&table, &bare, &Solver::default()).unwrap();
        assert!(trace.completion.is_empty());
        assert_eq!(trace.prefix(4), vec![0]);
        assert_eq!(trace.ranking_order(4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn completion_from_empty_set_starts_at_smallest_index() {
        let table = DecisionTable::new(vec![vec![0.0, 0.0, 0.0]]).unwrap();
        let trace = prise_select(&table, &PriseConfig::new(2), &Solver::default()).unwrap();
        assert!(trace.records.is_empty());
        assert_eq!(trace.full_order(), vec![0, 1]);
    }

    #[test]
    fn ties_prefer_smallest_index() {
        let table = DecisionTable::new(vec![vec![2.0, 2.0, 2.0]]).unwrap();
        let trace = prise_select(&table, &PriseConfig::new(1), &Solver::default()).unwrap();
        assert_eq!(trace.order(), vec![0]);
        assert_eq!(argmax(&[(3, 1.0), (1, 1.0 + 1e-12), (2, 0.5)]), (1, 1.0 + 1e-12));
    }

    #[test]
    fn candidate_scores_are_recorded_on_request() {
        let table = DecisionTable::non_submodular_example();
        let config = PriseConfig {
            record_candidate_scores: true,
            ..PriseConfig::new(2)
        };
        let trace = prise_select(&table, &config, &Solver::default()).unwrap();
        let first = trace.records[0].candidate_scores.as_ref().unwrap();
        assert_eq!(first.len(), 3);
        assert_eq!(trace.records[1].candidate_scores.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn invalid_budget() {
        let table = DecisionTable::non_submodular_example();
        let err = prise_select(&table, &PriseConfig::new(4), &Solver::default()).unwrap_err();
        assert!(matches!(err.error, Error::Param(_)));
        assert!(prise_select(&table, &PriseConfig::new(0), &Solver::default()).is_err());
    }
}
