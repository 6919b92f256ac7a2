//! Solver-independent mixed-integer programs.
//!
//! A [`MilpModel`] is a plain minimization problem whose variables carry a
//! role tag (first-stage, capacity, per-scenario recourse, epigraph). The
//! role tags let callers read the first-stage decision out of any solution
//! without knowing how the model was built.

mod backend;
pub(crate) mod build;
mod lp_format;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use backend::{HighsBackend, MilpBackend};
pub use build::{build_fixed_x_recourse, build_reduced_model};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarRole {
    /// Component `index` of the first-stage decision x.
    FirstStage(usize),
    /// First-stage capacity z of facility `index`.
    Capacity(usize),
    /// Recourse variable `index` of the copy for scenario `scenario`.
    Recourse { scenario: usize, index: usize },
    /// Epigraph variable bounding the worst-case recourse cost.
    Epigraph,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
    pub role: VarRole,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintSense {
    Le,
    Eq,
    Ge,
}

/// Which block of the deterministic equivalent a constraint belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintScope {
    FirstStage,
    Scenario(usize),
    /// `eta >= recourse cost of scenario`.
    Epigraph(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
    pub scope: ConstraintScope,
}

/// Minimization MILP.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Sparse objective; variables not listed have cost 0.
    pub objective: Vec<(VarId, f64)>,
    pub objective_offset: f64,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64, role: VarRole) -> VarId {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            kind,
            role,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: ConstraintSense,
        rhs: f64,
        scope: ConstraintScope,
    ) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
            scope,
        });
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        if cost != 0.0 {
            self.objective.push((var, cost));
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn count_role(&self, pred: impl Fn(&VarRole) -> bool) -> usize {
        self.variables.iter().filter(|v| pred(&v.role)).count()
    }

    pub fn epigraph(&self) -> Option<VarId> {
        self.variables
            .iter()
            .position(|v| v.role == VarRole::Epigraph)
            .map(VarId)
    }

    /// Objective value of a full column assignment.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// Structural checks: references, finite data, recourse isolation and,
    /// when `deterministic_equivalent`, exactly one epigraph variable.
    pub fn validate(&self, deterministic_equivalent: bool) -> Result<()> {
        let n = self.variables.len();
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::Validation(format!("variable {} has bounds [{}, {}]", v.name, v.lower, v.upper)));
            }
        }
        for &(var, c) in &self.objective {
            if var.0 >= n || !c.is_finite() {
                return Err(Error::Validation(format!("objective term ({}, {c}) is invalid", var.0)));
            }
        }
        for con in &self.constraints {
            if !con.rhs.is_finite() {
                return Err(Error::Validation(format!("constraint {} has rhs {}", con.name, con.rhs)));
            }
            for &(var, c) in &con.terms {
                let Some(v) = self.variables.get(var.0) else {
                    return Err(Error::Validation(format!(
                        "constraint {} references undeclared variable {}",
                        con.name, var.0
                    )));
                };
                if !c.is_finite() {
                    return Err(Error::Validation(format!("constraint {} has coefficient {c}", con.name)));
                }
                if let VarRole::Recourse { scenario, .. } = v.role {
                    let ok = matches!(con.scope, ConstraintScope::Scenario(s) | ConstraintScope::Epigraph(s) if s == scenario);
                    if !ok {
                        return Err(Error::Validation(format!(
                            "recourse variable {} of scenario {scenario} appears in constraint {} outside its block",
                            v.name, con.name
                        )));
                    }
                }
            }
        }
        if deterministic_equivalent {
            let etas = self.count_role(|r| *r == VarRole::Epigraph);
            if etas != 1 {
                return Err(Error::Validation(format!("expected exactly one epigraph variable, found {etas}")));
            }
        }
        Ok(())
    }

    /// CPLEX LP text, for debugging.
    pub fn to_lp_string(&self) -> String {
        lp_format::write_lp(self)
    }
}

/// Backend options shared by every solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSettings {
    /// Relative MIP gap at which a solve may stop.
    pub mip_gap: f64,
    /// Seconds; `None` means unbounded.
    pub time_limit: Option<f64>,
    pub threads: u32,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            mip_gap: 1e-4,
            time_limit: None,
            threads: 1,
        }
    }
}

impl SolveSettings {
    pub fn with_gap(mip_gap: f64) -> Self {
        SolveSettings {
            mip_gap,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.mip_gap) {
            return Err(Error::param(format!("mip_gap must lie in [0, 1), got {}", self.mip_gap)));
        }
        if self.threads == 0 {
            return Err(Error::param("thread count must be >= 1"));
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return Err(Error::param(format!("time limit must be positive, got {t}")));
            }
        }
        Ok(())
    }

    /// Absolute slack tolerated when comparing two solver values of
    /// magnitude around `reference`.
    pub fn slack(&self, reference: f64) -> f64 {
        1e-6 + self.mip_gap * reference.abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolveStatus {
    Optimal,
    /// Incumbent found but the run stopped early for a reason other than time.
    Feasible { gap: f64 },
    Infeasible,
    TimeLimit { gap: Option<f64> },
    /// Numerical trouble or any other backend failure.
    Failed,
}

impl SolveStatus {
    pub fn has_solution(&self) -> bool {
        matches!(
            self,
            SolveStatus::Optimal | SolveStatus::Feasible { .. } | SolveStatus::TimeLimit { gap: Some(_) }
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible { .. } => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::TimeLimit { .. } => "time_limit",
            SolveStatus::Failed => "failed",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// First-stage decision: open/select flags and, for CFLP, capacities.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FirstStage {
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub capacity: Vec<f64>,
}

impl FirstStage {
    pub fn new(x: Vec<f64>) -> Self {
        FirstStage { x, capacity: Vec::new() }
    }

    /// Rounds binary components so they can be used as fixed data.
    pub fn rounded(mut self) -> Self {
        for v in &mut self.x {
            *v = v.round();
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub first_stage: FirstStage,
    /// Recourse values keyed by scenario index.
    pub recourse: BTreeMap<usize, Vec<f64>>,
    pub values: Vec<f64>,
    pub seconds: f64,
}

impl SolveResult {
    pub(crate) fn from_values(model: &MilpModel, status: SolveStatus, values: Vec<f64>, seconds: f64) -> Self {
        if !status.has_solution() || values.len() != model.num_vars() {
            return SolveResult {
                status,
                objective: None,
                first_stage: FirstStage::default(),
                recourse: BTreeMap::new(),
                values: Vec::new(),
                seconds,
            };
        }
        let mut x = Vec::new();
        let mut capacity = Vec::new();
        let mut recourse: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (var, &val) in model.variables.iter().zip(&values) {
            match var.role {
                VarRole::FirstStage(i) => place(&mut x, i, val),
                VarRole::Capacity(i) => place(&mut capacity, i, val),
                VarRole::Recourse { scenario, index } => place(recourse.entry(scenario).or_default(), index, val),
                VarRole::Epigraph => {}
            }
        }
        SolveResult {
            status,
            objective: Some(model.evaluate(&values)),
            first_stage: FirstStage { x, capacity },
            recourse,
            values,
            seconds,
        }
    }
}

fn place(v: &mut Vec<f64>, i: usize, val: f64) {
    if v.len() <= i {
        v.resize(i + 1, 0.0);
    }
    v[i] = val;
}

/// A backend paired with settings; cheap to clone and share across threads.
#[derive(Clone)]
pub struct Solver {
    backend: Arc<dyn MilpBackend>,
    pub settings: SolveSettings,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver")
            .field("backend", &self.backend.name())
            .field("settings", &self.settings)
            .finish()
    }
}

impl Solver {
    pub fn new(backend: Arc<dyn MilpBackend>, settings: SolveSettings) -> Self {
        Solver { backend, settings }
    }

    pub fn highs(settings: SolveSettings) -> Self {
        Self::new(Arc::new(HighsBackend), settings)
    }

    pub fn with_settings(&self, settings: SolveSettings) -> Self {
        Solver {
            backend: Arc::clone(&self.backend),
            settings,
        }
    }

    pub fn solve(&self, model: &MilpModel) -> Result<SolveResult> {
        self.settings.validate()?;
        self.backend.solve(model, &self.settings)
    }
}

impl Default for Solver {
    fn default() -> Self {
        Self::highs(SolveSettings::default())
    }
}

/// Solves `model` with the default backend.
pub fn solve(model: &MilpModel, settings: &SolveSettings) -> Result<SolveResult> {
    Solver::highs(settings.clone()).solve(model)
}
