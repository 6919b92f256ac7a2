//! The interface the evaluator and the selectors need from a two-stage
//! robust problem over a finite scenario set.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::milp::{self, ConstraintScope, ConstraintSense, FirstStage, MilpModel, VarKind, VarRole};

pub trait TwoStageProblem: Sync {
    fn num_scenarios(&self) -> usize;

    /// Deterministic equivalent over `subset` (nonempty, in range).
    fn reduced_model(&self, subset: &[usize]) -> Result<MilpModel>;

    /// Model whose optimum is the recourse cost of `scenario` under a fixed
    /// first stage.
    fn recourse_model(&self, first_stage: &FirstStage, scenario: usize) -> Result<MilpModel>;

    fn first_stage_cost(&self, first_stage: &FirstStage) -> Result<f64>;
}

impl TwoStageProblem for Instance {
    fn num_scenarios(&self) -> usize {
        Instance::num_scenarios(self)
    }

    fn reduced_model(&self, subset: &[usize]) -> Result<MilpModel> {
        milp::build_reduced_model(self, subset)
    }

    fn recourse_model(&self, first_stage: &FirstStage, scenario: usize) -> Result<MilpModel> {
        milp::build_fixed_x_recourse(self, first_stage, scenario)
    }

    fn first_stage_cost(&self, first_stage: &FirstStage) -> Result<f64> {
        milp::build::first_stage_cost(self, first_stage)
    }
}

/// A problem with an explicit finite decision set and a table of total
/// costs `cost[decision][scenario]` (first stage plus recourse).
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTable {
    pub cost: Vec<Vec<f64>>,
}

impl DecisionTable {
    pub fn new(cost: Vec<Vec<f64>>) -> Result<Self> {
        let s = cost.first().map(Vec::len).unwrap_or(0);
        if s == 0 || cost.iter().any(|row| row.len() != s) {
            return Err(Error::param("decision table must be a nonempty rectangle"));
        }
        Ok(DecisionTable { cost })
    }

    /// Non-submodular three-decision, three-scenario example: decisions
    /// a, b, c against scenarios s1, s2, s3.
    pub fn non_submodular_example() -> Self {
        DecisionTable {
            cost: vec![vec![9.0, 1.0, 5.0], vec![1.0, 9.0, 6.0], vec![4.0, 4.0, 8.0]],
        }
    }

    pub fn num_decisions(&self) -> usize {
        self.cost.len()
    }

    /// One-hot first stage selecting `decision`.
    pub fn decision(&self, decision: usize) -> FirstStage {
        let mut x = vec![0.0; self.num_decisions()];
        x[decision] = 1.0;
        FirstStage::new(x)
    }

    fn chosen(&self, first_stage: &FirstStage) -> Result<usize> {
        let picked: Vec<usize> = first_stage
            .x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.5)
            .map(|(d, _)| d)
            .collect();
        match picked.as_slice() {
            [d] if first_stage.x.len() == self.num_decisions() => Ok(*d),
            _ => Err(Error::param("decision-table first stage must be one-hot")),
        }
    }
}

impl TwoStageProblem for DecisionTable {
    fn num_scenarios(&self) -> usize {
        self.cost[0].len()
    }

    fn reduced_model(&self, subset: &[usize]) -> Result<MilpModel> {
        let subset = milp::build::normalize_subset(subset, self.num_scenarios())?;
        let mut model = MilpModel::new();
        let u: Vec<_> = (0..self.num_decisions())
            .map(|d| model.add_var(format!("u_{d}"), VarKind::Binary, 0.0, 1.0, VarRole::FirstStage(d)))
            .collect();
        let eta = model.add_var("eta", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY, VarRole::Epigraph);
        model.set_cost(eta, 1.0);
        model.add_constraint(
            "choose_one",
            u.iter().map(|&v| (v, 1.0)).collect(),
            ConstraintSense::Eq,
            1.0,
            ConstraintScope::FirstStage,
        );
        for s in subset {
            let mut terms = vec![(eta, 1.0)];
            terms.extend(u.iter().enumerate().map(|(d, &v)| (v, -self.cost[d][s])));
            model.add_constraint(format!("epi_{s}"), terms, ConstraintSense::Ge, 0.0, ConstraintScope::Epigraph(s));
        }
        Ok(model)
    }

    fn recourse_model(&self, first_stage: &FirstStage, scenario: usize) -> Result<MilpModel> {
        if scenario >= self.num_scenarios() {
            return Err(Error::param(format!("scenario index {scenario} out of range")));
        }
        let d = self.chosen(first_stage)?;
        let value = self.cost[d][scenario];
        let mut model = MilpModel::new();
        let q = model.add_var(
            "q",
            VarKind::Continuous,
            value,
            value,
            VarRole::Recourse { scenario, index: 0 },
        );
        model.set_cost(q, 1.0);
        Ok(model)
    }

    fn first_stage_cost(&self, first_stage: &FirstStage) -> Result<f64> {
        self.chosen(first_stage).map(|_| 0.0)
    }
}
