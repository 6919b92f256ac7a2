//! Restricted objective values, realized full-scenario cost, regret,
//! CFLP infeasibility rate and compression budget.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, ProblemClass};
use crate::milp::{FirstStage, SolveStatus, Solver};
use crate::problem::TwoStageProblem;

/// Optimal value of the problem restricted to a scenario subset.
#[derive(Clone, Debug, PartialEq)]
pub struct SetValue {
    /// `None` when the solver returned no solution (see `status`).
    pub value: Option<f64>,
    pub first_stage: Option<FirstStage>,
    pub status: SolveStatus,
    pub seconds: f64,
}

impl SetValue {
    pub fn require(&self) -> Result<f64> {
        self.value
            .ok_or_else(|| Error::Solver(format!("restricted problem returned status {}", self.status)))
    }

    fn require_first_stage(&self) -> Result<&FirstStage> {
        self.first_stage
            .as_ref()
            .ok_or_else(|| Error::Solver(format!("restricted problem returned status {}", self.status)))
    }
}

/// V(R); the empty set has value 0 by convention and costs no solve.
pub fn value_of_set<P: TwoStageProblem + ?Sized>(problem: &P, subset: &[usize], solver: &Solver) -> Result<SetValue> {
    if subset.is_empty() {
        return Ok(SetValue {
            value: Some(0.0),
            first_stage: None,
            status: SolveStatus::Optimal,
            seconds: 0.0,
        });
    }
    let model = problem.reduced_model(subset)?;
    let result = solver.solve(&model)?;
    Ok(SetValue {
        value: result.objective,
        first_stage: result.status.has_solution().then(|| result.first_stage.rounded()),
        status: result.status,
        seconds: result.seconds,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRecourse {
    pub status: SolveStatus,
    pub cost: Option<f64>,
}

/// Z(x) = first-stage cost + worst recourse cost over every scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct FullCost {
    pub first_stage_cost: f64,
    pub recourse: Vec<ScenarioRecourse>,
    /// `None` if some scenario has no feasible (or no solved) recourse.
    pub value: Option<f64>,
    pub worst_scenario: Option<usize>,
    pub seconds: f64,
}

impl FullCost {
    pub fn infeasible_scenarios(&self) -> Vec<usize> {
        self.recourse
            .iter()
            .enumerate()
            .filter(|(_, r)| r.status == SolveStatus::Infeasible)
            .map(|(s, _)| s)
            .collect()
    }

    pub fn is_infeasible(&self) -> bool {
        self.recourse.iter().any(|r| r.status == SolveStatus::Infeasible)
    }

    pub fn has_failures(&self) -> bool {
        self.recourse
            .iter()
            .any(|r| r.status != SolveStatus::Infeasible && r.cost.is_none())
    }
}

/// Evaluates Z(x) with one recourse solve per scenario.
pub fn full_cost<P: TwoStageProblem + ?Sized>(problem: &P, first_stage: &FirstStage, solver: &Solver) -> Result<FullCost> {
    let start = Instant::now();
    let first_stage_cost = problem.first_stage_cost(first_stage)?;
    let recourse = (0..problem.num_scenarios())
        .into_par_iter()
        .map(|s| {
            let model = problem.recourse_model(first_stage, s)?;
            let r = solver.solve(&model)?;
            Ok(ScenarioRecourse {
                status: r.status,
                cost: r.objective,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Max in index order; ties keep the first scenario.
    let mut worst: Option<(usize, f64)> = None;
    let mut complete = true;
    for (s, r) in recourse.iter().enumerate() {
        match r.cost {
            Some(c) if worst.map_or(true, |(_, w)| c > w) => worst = Some((s, c)),
            Some(_) => {}
            None => complete = false,
        }
    }
    Ok(FullCost {
        first_stage_cost,
        value: if complete { worst.map(|(_, w)| first_stage_cost + w) } else { None },
        worst_scenario: worst.map(|(s, _)| s),
        recourse,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `(Z - V(Xi)) / V(Xi) * 100`.
pub fn regret_percent(realized: f64, v_full: f64) -> f64 {
    (realized - v_full) / v_full * 100.0
}

/// Regret evaluation of one reduced set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetEvaluation {
    pub v_full: f64,
    pub v_reduced: Option<f64>,
    pub z_realized: Option<f64>,
    /// `None` when the reduced solution has infeasible recourse somewhere.
    pub regret_pct: Option<f64>,
    pub infeasible: bool,
    pub reduced_status: String,
    pub recourse_status: String,
    pub solve_seconds: f64,
}

/// Solves the reduced problem with `reduced_solver`, then evaluates the
/// realized cost of its first stage with `recourse_solver`.
pub fn evaluate_subset<P: TwoStageProblem + ?Sized>(
    problem: &P,
    subset: &[usize],
    v_full: f64,
    reduced_solver: &Solver,
    recourse_solver: &Solver,
) -> Result<SubsetEvaluation> {
    if !(v_full > 0.0) {
        return Err(Error::param(format!("regret needs V(full) > 0, got {v_full}")));
    }
    let reduced = value_of_set(problem, subset, reduced_solver)?;
    let first_stage = reduced.require_first_stage()?;
    let z = full_cost(problem, first_stage, recourse_solver)?;
    if z.has_failures() {
        return Err(Error::Solver("recourse solve failed while evaluating Z(x)".into()));
    }
    let infeasible = z.is_infeasible();
    Ok(SubsetEvaluation {
        v_full,
        v_reduced: reduced.value,
        z_realized: z.value,
        regret_pct: z.value.map(|zv| regret_percent(zv, v_full)),
        infeasible,
        reduced_status: reduced.status.to_string(),
        recourse_status: if infeasible { "infeasible".into() } else { "optimal".into() },
        solve_seconds: reduced.seconds,
    })
}

/// Regret of a reduced set, computing V(Xi) with the same solver.
pub fn regret<P: TwoStageProblem + ?Sized>(problem: &P, subset: &[usize], solver: &Solver) -> Result<SubsetEvaluation> {
    let all: Vec<usize> = (0..problem.num_scenarios()).collect();
    let v_full = value_of_set(problem, &all, solver)?.require()?;
    evaluate_subset(problem, subset, v_full, solver, solver)
}

/// Percentage of CFLP instances whose reduced solution at budget `k` leaves
/// some scenario of the full set without feasible recourse.
pub fn infeasibility_rate<F>(instances: &[Instance], k: usize, select: F, solver: &Solver) -> Result<f64>
where
    F: Fn(&Instance, usize) -> Result<Vec<usize>> + Sync,
{
    if let Some(inst) = instances.iter().find(|i| i.class != ProblemClass::FacilityLocation) {
        return Err(Error::param(format!(
            "infeasibility rate is defined for CFLP only, got {}",
            inst.class
        )));
    }
    if instances.is_empty() {
        return Err(Error::param("no instances"));
    }
    let flags = instances
        .par_iter()
        .map(|inst| {
            let subset = select(inst, k)?;
            let reduced = value_of_set(inst, &subset, solver)?;
            let z = full_cost(inst, reduced.require_first_stage()?, solver)?;
            Ok(z.is_infeasible())
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(100.0 * flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompressionBudget {
    Converged(usize),
    NotConverged,
}

impl CompressionBudget {
    pub fn converged(self) -> Option<usize> {
        match self {
            CompressionBudget::Converged(k) => Some(k),
            CompressionBudget::NotConverged => None,
        }
    }
}

/// Smallest budget whose value closes the gap to `v_full` within `tol`
/// (relative). `chain[i] = (|R|, V(R))` along a nested sequence.
pub fn compression_budget_from_values(v_full: f64, chain: &[(usize, f64)], tol: f64) -> CompressionBudget {
    chain
        .iter()
        .find(|(_, v)| (v_full - v) / v_full <= tol)
        .map_or(CompressionBudget::NotConverged, |&(k, _)| CompressionBudget::Converged(k))
}

/// Compression budget of a nested sequence of sets.
pub fn compression_budget<P: TwoStageProblem + ?Sized>(
    problem: &P,
    nested_sets: &[Vec<usize>],
    tol: f64,
    solver: &Solver,
) -> Result<CompressionBudget> {
    for pair in nested_sets.windows(2) {
        if !pair[0].iter().all(|s| pair[1].contains(s)) {
            return Err(Error::param(format!("sets {:?} and {:?} are not nested", pair[0], pair[1])));
        }
    }
    let all: Vec<usize> = (0..problem.num_scenarios()).collect();
    let v_full = value_of_set(problem, &all, solver)?.require()?;
    let mut chain = Vec::with_capacity(nested_sets.len());
    for set in nested_sets {
        let v = value_of_set(problem, set, solver)?.require()?;
        chain.push((set.len(), v));
        if (v_full - v) / v_full <= tol {
            break;
        }
    }
    Ok(compression_budget_from_values(v_full, &chain, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, DistributionSpec};
    use crate::problem::DecisionTable;

    fn exact() -> Solver {
        Solver::default()
    }

    #[test]
    fn table_subset_values() {
        let table = DecisionTable::non_submodular_example();
        let cases: [(&[usize], f64); 8] = [
            (&[], 0.0),
            (&[0], 1.0),
            (&[1], 1.0),
            (&[2], 5.0),
            (&[0, 1], 4.0),
            (&[0, 2], 6.0),
            (&[1, 2], 5.0),
            (&[0, 1, 2], 8.0),
        ];
        for (subset, expected) in cases {
            let v = value_of_set(&table, subset, &exact()).unwrap();
            assert_eq!(v.value.unwrap().round(), expected, "{subset:?}");
            assert!((v.value.unwrap() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn table_full_cost_and_regret() {
        let table = DecisionTable::non_submodular_example();
        let z = full_cost(&table, &table.decision(0), &exact()).unwrap();
        assert_eq!(z.value, Some(9.0));
        assert_eq!(z.worst_scenario, Some(0));
        // R = {s3} picks decision a; Z(a) = 9 against V = 8.
        let r = regret(&table, &[2], &exact()).unwrap();
        assert!((r.regret_pct.unwrap() - 12.5).abs() < 1e-9);
        let r = regret(&table, &[0, 1, 2], &exact()).unwrap();
        assert!(r.regret_pct.unwrap().abs() < 1e-9);
    }

    #[test]
    fn compression_budget_of_greedy_chain() {
        let table = DecisionTable::non_submodular_example();
        let chain = [(1, 5.0), (2, 6.0), (3, 8.0)];
        assert_eq!(compression_budget_from_values(8.0, &chain, 0.01), CompressionBudget::Converged(3));
        let sets = vec![vec![2], vec![2, 0], vec![2, 0, 1]];
        assert_eq!(compression_budget(&table, &sets, 0.01, &exact()).unwrap(), CompressionBudget::Converged(3));
        assert_eq!(
            compression_budget(&table, &[vec![0, 1, 2]], 0.01, &exact()).unwrap(),
            CompressionBudget::Converged(3)
        );
        assert_eq!(compression_budget_from_values(8.0, &[(1, 8.0)], 0.01), CompressionBudget::Converged(1));
        assert_eq!(compression_budget_from_values(8.0, &[(1, 5.0)], 0.01), CompressionBudget::NotConverged);
        assert!(matches!(
            compression_budget(&table, &[vec![0], vec![1, 2]], 0.01, &exact()),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn full_set_solution_realizes_full_value() {
        for class in [ProblemClass::Selection, ProblemClass::VertexCover, ProblemClass::FacilityLocation] {
            let m = (class == ProblemClass::FacilityLocation).then_some(8);
            let inst = generate_instance(class, 8, m, 6, &DistributionSpec::Uniform, 21).unwrap();
            let solver = exact();
            let all: Vec<usize> = (0..6).collect();
            let v = value_of_set(&inst, &all, &solver).unwrap();
            let z = full_cost(&inst, v.first_stage.as_ref().unwrap_or_else(|| panic!("{class}: {v:?}")), &solver).unwrap();
            let vf = v.value.unwrap();
            assert!((z.value.unwrap() - vf).abs() <= 2.0 * solver.settings.slack(vf), "{class}: {z:?} vs {vf}");
        }
    }

    #[test]
    fn restriction_consistency() {
        // Solving on R and re-evaluating on R alone reproduces the objective.
        let inst = generate_instance(ProblemClass::FacilityLocation, 6, Some(4), 8, &DistributionSpec::Uniform, 3).unwrap();
        let solver = exact();
        let subset = [1, 4, 6];
        let v = value_of_set(&inst, &subset, &solver).unwrap();
        let fs = v.first_stage.unwrap();
        let mut worst: f64 = 0.0;
        for &s in &subset {
            let model = inst.recourse_model(&fs, s).unwrap();
            worst = worst.max(solver.solve(&model).unwrap().objective.unwrap());
        }
        let total = inst.first_stage_cost(&fs).unwrap() + worst;
        let vr = v.value.unwrap();
        assert!((total - vr).abs() <= solver.settings.slack(vr), "{total} vs {vr}");
    }

    #[test]
    fn rate_rejects_non_cflp() {
        let inst = generate_instance(ProblemClass::Selection, 6, None, 3, &DistributionSpec::Uniform, 0).unwrap();
        let r = infeasibility_rate(&[inst], 1, |_, _| Ok(vec![0]), &exact());
        assert!(matches!(r, Err(Error::Param(_))));
    }

    #[test]
    fn full_budget_is_always_feasible() {
        let instances: Vec<Instance> = (0..3)
            .map(|seed| generate_instance(ProblemClass::FacilityLocation, 5, Some(5), 6, &DistributionSpec::Uniform, seed).unwrap())
            .collect();
        let rate = infeasibility_rate(&instances, 6, |_, k| Ok((0..k).collect()), &exact()).unwrap();
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn regret_requires_positive_reference() {
        let table = DecisionTable::non_submodular_example();
        assert!(matches!(evaluate_subset(&table, &[0], 0.0, &exact(), &exact()), Err(Error::Param(_))));
    }
}
