//! Independent oracles: exhaustive enumeration of first-stage and recourse
//! assignments for small SEL/VC instances, and decision tables.
#![allow(dead_code)]

use prise_core::instance::{DistributionSpec, Instance, ProblemClass};

fn bits(mask: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// Cheapest recourse for first stage `x` under scenario `s`, by trying every
/// binary recourse vector. `None` if no recourse vector is feasible.
pub fn brute_recourse(inst: &Instance, x: &[bool], s: usize) -> Option<f64> {
    let n = inst.n;
    let d = inst.scenarios.row(s);
    let mut best: Option<f64> = None;
    for ymask in 0..1usize << n {
        let y = bits(ymask, n);
        if (0..n).any(|i| x[i] && y[i]) {
            continue;
        }
        let feasible = match inst.class {
            ProblemClass::Selection => {
                x.iter().filter(|&&b| b).count() + y.iter().filter(|&&b| b).count() == n / 2
            }
            ProblemClass::VertexCover => inst.edges.iter().all(|&(i, j)| x[i] || y[i] || x[j] || y[j]),
            ProblemClass::FacilityLocation => panic!("no enumeration oracle for CFLP"),
        };
        if feasible {
            let cost: f64 = (0..n).filter(|&i| y[i]).map(|i| d[i]).sum();
            best = Some(best.map_or(cost, |b: f64| b.min(cost)));
        }
    }
    best
}

fn first_stage_cost(inst: &Instance, x: &[bool]) -> f64 {
    (0..inst.n).filter(|&i| x[i]).map(|i| inst.first_stage_cost[i]).sum()
}

/// min over x of c'x + max over `subset` of the recourse cost; 0 for the
/// empty set.
pub fn brute_value(inst: &Instance, subset: &[usize]) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for xmask in 0..1usize << inst.n {
        let x = bits(xmask, inst.n);
        let mut worst = 0.0f64;
        let mut ok = true;
        for &s in subset {
            match brute_recourse(inst, &x, s) {
                Some(q) => worst = worst.max(q),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            best = best.min(first_stage_cost(inst, &x) + worst);
        }
    }
    best
}

/// Realized cost of a binary first stage over all scenarios.
pub fn brute_full_cost(inst: &Instance, x: &[f64]) -> Option<f64> {
    let x: Vec<bool> = x.iter().map(|v| *v > 0.5).collect();
    let mut worst = 0.0f64;
    for s in 0..inst.num_scenarios() {
        worst = worst.max(brute_recourse(inst, &x, s)?);
    }
    Some(first_stage_cost(inst, &x) + worst)
}

/// min over decisions of the max over `subset` of the table entries.
pub fn table_value(cost: &[Vec<f64>], subset: &[usize]) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    cost.iter()
        .map(|row| subset.iter().map(|&s| row[s]).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Every nonempty subset of `0..s`, as sorted index lists.
pub fn nonempty_subsets(s: usize) -> Vec<Vec<usize>> {
    (1..1usize << s)
        .map(|mask| (0..s).filter(|&j| mask >> j & 1 == 1).collect())
        .collect()
}

/// Greedy lookahead computed from an arbitrary value oracle, with ties to
/// the smallest index and a strict-improvement stopping rule.
pub fn greedy_oracle(num_scenarios: usize, budget: usize, value: impl Fn(&[usize]) -> f64) -> (Vec<usize>, Vec<f64>) {
    let mut set = Vec::new();
    let mut gains = Vec::new();
    let mut prev = 0.0;
    while set.len() < budget {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..num_scenarios).filter(|j| !set.contains(j)) {
            let mut with = set.clone();
            with.push(j);
            let v = value(&with);
            if best.map_or(true, |(_, b)| v > b + 1e-9) {
                best = Some((j, v));
            }
        }
        let (j, v) = best.expect("candidate available");
        if v - prev <= 0.0 {
            break;
        }
        gains.push(v - prev);
        set.push(j);
        prev = v;
    }
    (set, gains)
}

pub fn small_instance(class: ProblemClass, n: usize, s: usize, seed: u64) -> Instance {
    prise_core::instance::generate_instance(class, n, None, s, &DistributionSpec::Uniform, seed).unwrap()
}
