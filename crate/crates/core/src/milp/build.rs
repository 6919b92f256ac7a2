//! Deterministic-equivalent and fixed-first-stage models for the three
//! problem classes.

use std::collections::BTreeSet;

use super::{ConstraintScope, ConstraintSense, FirstStage, MilpModel, VarId, VarKind, VarRole};
use crate::error::{Error, Result};
use crate::instance::{Facilities, Instance, ProblemClass};

use ConstraintSense::{Eq, Ge, Le};

pub(crate) fn normalize_subset(subset: &[usize], num_scenarios: usize) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::param("reduced scenario set is empty"));
    }
    if let Some(&s) = subset.iter().find(|&&s| s >= num_scenarios) {
        return Err(Error::param(format!("scenario index {s} out of range 0..{num_scenarios}")));
    }
    Ok(subset.iter().copied().collect::<BTreeSet<_>>().into_iter().collect())
}

fn epigraph_var(model: &mut MilpModel) -> VarId {
    let eta = model.add_var("eta", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY, VarRole::Epigraph);
    model.set_cost(eta, 1.0);
    eta
}

/// Deterministic equivalent restricted to the scenarios in `subset`:
/// first-stage cost plus an epigraph variable bounding every listed
/// scenario's recourse cost.
pub fn build_reduced_model(inst: &Instance, subset: &[usize]) -> Result<MilpModel> {
    let subset = normalize_subset(subset, inst.num_scenarios())?;
    let mut model = MilpModel::new();
    match inst.class {
        ProblemClass::Selection => build_selection(inst, &subset, &mut model),
        ProblemClass::VertexCover => build_vertex_cover(inst, &subset, &mut model),
        ProblemClass::FacilityLocation => build_facility(inst, &subset, &mut model),
    }
    debug_assert!(model.validate(true).is_ok());
    Ok(model)
}

fn first_stage_binaries(inst: &Instance, model: &mut MilpModel) -> Vec<VarId> {
    (0..inst.n)
        .map(|i| {
            let x = model.add_var(format!("x_{i}"), VarKind::Binary, 0.0, 1.0, VarRole::FirstStage(i));
            model.set_cost(x, inst.first_stage_cost[i]);
            x
        })
        .collect()
}

fn recourse_binaries(n: usize, s: usize, model: &mut MilpModel) -> Vec<VarId> {
    (0..n)
        .map(|i| {
            model.add_var(
                format!("y_{s}_{i}"),
                VarKind::Binary,
                0.0,
                1.0,
                VarRole::Recourse { scenario: s, index: i },
            )
        })
        .collect()
}

fn add_epigraph_row(model: &mut MilpModel, eta: VarId, s: usize, cost_terms: impl IntoIterator<Item = (VarId, f64)>) {
    let mut terms = vec![(eta, 1.0)];
    terms.extend(cost_terms.into_iter().map(|(v, c)| (v, -c)));
    model.add_constraint(format!("epi_{s}"), terms, Ge, 0.0, ConstraintScope::Epigraph(s));
}

fn build_selection(inst: &Instance, subset: &[usize], model: &mut MilpModel) {
    let n = inst.n;
    let x = first_stage_binaries(inst, model);
    let eta = epigraph_var(model);
    for &s in subset {
        let d = inst.scenarios.row(s);
        let y = recourse_binaries(n, s, model);
        add_epigraph_row(model, eta, s, y.iter().zip(d).map(|(&v, &c)| (v, c)));
        let card = x.iter().chain(&y).map(|&v| (v, 1.0)).collect();
        model.add_constraint(
            format!("card_{s}"),
            card,
            Eq,
            inst.selection_size() as f64,
            ConstraintScope::Scenario(s),
        );
        for i in 0..n {
            model.add_constraint(
                format!("pair_{s}_{i}"),
                vec![(x[i], 1.0), (y[i], 1.0)],
                Le,
                1.0,
                ConstraintScope::Scenario(s),
            );
        }
    }
}

fn build_vertex_cover(inst: &Instance, subset: &[usize], model: &mut MilpModel) {
    let n = inst.n;
    let x = first_stage_binaries(inst, model);
    let eta = epigraph_var(model);
    for &s in subset {
        let d = inst.scenarios.row(s);
        let y = recourse_binaries(n, s, model);
        add_epigraph_row(model, eta, s, y.iter().zip(d).map(|(&v, &c)| (v, c)));
        for &(i, j) in &inst.edges {
            model.add_constraint(
                format!("cover_{s}_{i}_{j}"),
                vec![(x[i], 1.0), (y[i], 1.0), (x[j], 1.0), (y[j], 1.0)],
                Ge,
                1.0,
                ConstraintScope::Scenario(s),
            );
        }
        for i in 0..n {
            model.add_constraint(
                format!("excl_{s}_{i}"),
                vec![(y[i], 1.0), (x[i], 1.0)],
                Le,
                1.0,
                ConstraintScope::Scenario(s),
            );
        }
    }
}

fn facilities(inst: &Instance) -> &Facilities {
    inst.facilities.as_ref().expect("validated CFLP instance has facilities")
}

/// Transport block of scenario `s`: assignment variables `y_ij >= 0`, their
/// cost terms, per-facility load rows against `capacity_terms[j]` and
/// per-customer demand rows.
fn transport_block(
    inst: &Instance,
    s: usize,
    model: &mut MilpModel,
    capacity_rhs: impl Fn(usize) -> (Vec<(VarId, f64)>, f64),
) -> Vec<(VarId, f64)> {
    let fac = facilities(inst);
    let (n, m) = (inst.n, fac.len());
    let mut y = Vec::with_capacity(n * m);
    let mut cost = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let v = model.add_var(
                format!("y_{s}_{i}_{j}"),
                VarKind::Continuous,
                0.0,
                f64::INFINITY,
                VarRole::Recourse { scenario: s, index: i * m + j },
            );
            y.push(v);
            cost.push((v, fac.transport_cost[i][j]));
        }
    }
    for j in 0..m {
        let (mut terms, rhs) = capacity_rhs(j);
        terms.extend((0..n).map(|i| (y[i * m + j], 1.0)));
        model.add_constraint(format!("load_{s}_{j}"), terms, Le, rhs, ConstraintScope::Scenario(s));
    }
    let demand = inst.scenarios.row(s);
    for i in 0..n {
        let terms = (0..m).map(|j| (y[i * m + j], 1.0)).collect();
        model.add_constraint(format!("demand_{s}_{i}"), terms, Ge, demand[i], ConstraintScope::Scenario(s));
    }
    cost
}

fn build_facility(inst: &Instance, subset: &[usize], model: &mut MilpModel) {
    let fac = facilities(inst);
    let m = fac.len();
    let x: Vec<VarId> = (0..m)
        .map(|j| {
            let v = model.add_var(format!("x_{j}"), VarKind::Binary, 0.0, 1.0, VarRole::FirstStage(j));
            model.set_cost(v, fac.fixed_cost[j]);
            v
        })
        .collect();
    let z: Vec<VarId> = (0..m)
        .map(|j| {
            let v = model.add_var(format!("z_{j}"), VarKind::Continuous, 0.0, f64::INFINITY, VarRole::Capacity(j));
            model.set_cost(v, fac.capacity_cost[j]);
            v
        })
        .collect();
    for j in 0..m {
        model.add_constraint(
            format!("cap_{j}"),
            vec![(z[j], 1.0), (x[j], -fac.max_capacity[j])],
            Le,
            0.0,
            ConstraintScope::FirstStage,
        );
    }
    let eta = epigraph_var(model);
    for &s in subset {
        let cost = transport_block(inst, s, model, |j| (vec![(z[j], -1.0)], 0.0));
        add_epigraph_row(model, eta, s, cost);
    }
}

fn binary_vector(values: &[f64], what: &str) -> Result<Vec<bool>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if (v - 0.0).abs() < 1e-6 {
                Ok(false)
            } else if (v - 1.0).abs() < 1e-6 {
                Ok(true)
            } else {
                Err(Error::param(format!("{what}[{i}] = {v} is not binary")))
            }
        })
        .collect()
}

/// Capacities used when a CFLP first stage is fixed: the explicit `capacity`
/// vector when present, otherwise the maximal capacity of every open
/// facility.
pub(crate) fn effective_capacity(inst: &Instance, first_stage: &FirstStage) -> Result<Vec<f64>> {
    let fac = facilities(inst);
    let open = binary_vector(&first_stage.x, "x")?;
    if first_stage.capacity.is_empty() {
        return Ok(open
            .iter()
            .zip(&fac.max_capacity)
            .map(|(&o, &k)| if o { k } else { 0.0 })
            .collect());
    }
    if first_stage.capacity.len() != fac.len() {
        return Err(Error::param(format!(
            "capacity vector has {} entries, expected {}",
            first_stage.capacity.len(),
            fac.len()
        )));
    }
    for (j, (&z, &o)) in first_stage.capacity.iter().zip(&open).enumerate() {
        let cap = if o { fac.max_capacity[j] } else { 0.0 };
        if !(z.is_finite() && z >= -1e-6 && z <= cap + 1e-6 * cap.max(1.0)) {
            return Err(Error::param(format!("capacity z_{j} = {z} outside [0, {cap}]")));
        }
    }
    Ok(first_stage.capacity.iter().map(|z| z.max(0.0)).collect())
}

/// Recourse problem of scenario `s` with the first stage held fixed; its
/// optimum is the recourse cost Q(x, s).
pub fn build_fixed_x_recourse(inst: &Instance, first_stage: &FirstStage, s: usize) -> Result<MilpModel> {
    if s >= inst.num_scenarios() {
        return Err(Error::param(format!(
            "scenario index {s} out of range 0..{}",
            inst.num_scenarios()
        )));
    }
    let expected = inst.m().unwrap_or(inst.n);
    if first_stage.x.len() != expected {
        return Err(Error::param(format!(
            "first-stage vector has {} entries, expected {expected}",
            first_stage.x.len()
        )));
    }
    let mut model = MilpModel::new();
    match inst.class {
        ProblemClass::Selection => {
            let x = binary_vector(&first_stage.x, "x")?;
            let chosen = x.iter().filter(|&&b| b).count();
            let target = inst.selection_size();
            if chosen > target {
                return Err(Error::param(format!(
                    "first stage selects {chosen} items, more than the target {target}"
                )));
            }
            let y = recourse_binaries(inst.n, s, &mut model);
            for (i, (&v, &c)) in y.iter().zip(inst.scenarios.row(s)).enumerate() {
                model.set_cost(v, c);
                if x[i] {
                    model.add_constraint(format!("pair_{s}_{i}"), vec![(v, 1.0)], Le, 0.0, ConstraintScope::Scenario(s));
                }
            }
            let card = y.iter().map(|&v| (v, 1.0)).collect();
            model.add_constraint(format!("card_{s}"), card, Eq, (target - chosen) as f64, ConstraintScope::Scenario(s));
        }
        ProblemClass::VertexCover => {
            let x = binary_vector(&first_stage.x, "x")?;
            let y = recourse_binaries(inst.n, s, &mut model);
            for (i, (&v, &c)) in y.iter().zip(inst.scenarios.row(s)).enumerate() {
                model.set_cost(v, c);
                if x[i] {
                    model.add_constraint(format!("excl_{s}_{i}"), vec![(v, 1.0)], Le, 0.0, ConstraintScope::Scenario(s));
                }
            }
            for &(i, j) in &inst.edges {
                if !(x[i] || x[j]) {
                    model.add_constraint(
                        format!("cover_{s}_{i}_{j}"),
                        vec![(y[i], 1.0), (y[j], 1.0)],
                        Ge,
                        1.0,
                        ConstraintScope::Scenario(s),
                    );
                }
            }
        }
        ProblemClass::FacilityLocation => {
            let capacity = effective_capacity(inst, first_stage)?;
            let cost = transport_block(inst, s, &mut model, |j| (Vec::new(), capacity[j]));
            for (v, c) in cost {
                model.set_cost(v, c);
            }
        }
    }
    debug_assert!(model.validate(false).is_ok());
    Ok(model)
}

/// First-stage cost `c^T x` (plus `a^T z` and fixed costs for CFLP).
pub(crate) fn first_stage_cost(inst: &Instance, first_stage: &FirstStage) -> Result<f64> {
    match inst.class {
        ProblemClass::Selection | ProblemClass::VertexCover => {
            Ok(first_stage.x.iter().zip(&inst.first_stage_cost).map(|(x, c)| x.round() * c).sum())
        }
        ProblemClass::FacilityLocation => {
            let fac = facilities(inst);
            let z = effective_capacity(inst, first_stage)?;
            let fixed: f64 = first_stage.x.iter().zip(&fac.fixed_cost).map(|(x, f)| x.round() * f).sum();
            let capacity: f64 = z.iter().zip(&fac.capacity_cost).map(|(z, a)| z * a).sum();
            Ok(fixed + capacity)
        }
    }
}
