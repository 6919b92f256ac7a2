//! Acceptance suite. Runs with a plain `main` so every criterion prints one
//! PASS/FAIL line; the process exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{brute_value, nonempty_subsets, table_value};
use prise_core::baselines::{maxsum_order, random_order};
use prise_core::eval::{compression_budget_from_values, evaluate_subset, value_of_set, CompressionBudget};
use prise_core::instance::{generate_instance, DistributionSpec, Instance, ProblemClass};
use prise_core::milp::{SolveSettings, SolveStatus, Solver};
use prise_core::prise::{prise_select, PriseConfig, PriseTrace};
use prise_core::problem::DecisionTable;
use prise_core::rng::derive_seed;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

/// Positional arguments select criteria by substring; none selects all.
fn selected(name: &str) -> bool {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()))
}

fn run(name: &str, results: &mut Vec<bool>, f: impl FnOnce() -> Outcome) {
    if !selected(name) {
        return;
    }
    let started = Instant::now();
    let out = f();
    println!(
        "{} {name}: {} [{:.1}s]",
        if out.pass { "PASS" } else { "FAIL" },
        out.detail,
        started.elapsed().as_secs_f64()
    );
    results.push(out.pass);
}

fn v(problem: &impl prise_core::TwoStageProblem, set: &[usize], solver: &Solver) -> f64 {
    value_of_set(problem, set, solver).unwrap().require().unwrap()
}

/// V(R) on the extended reals: an infeasible restriction is worth +inf.
fn v_ext(problem: &impl prise_core::TwoStageProblem, set: &[usize], solver: &Solver) -> f64 {
    let value = value_of_set(problem, set, solver).unwrap();
    match value.status {
        SolveStatus::Infeasible => f64::INFINITY,
        _ => value.require().unwrap(),
    }
}

fn all(s: usize) -> Vec<usize> {
    (0..s).collect()
}

fn counterexample() -> Outcome {
    let started = Instant::now();
    let table = DecisionTable::non_submodular_example();
    let solver = Solver::default();
    let expected: [(&[usize], f64); 7] = [
        (&[0], 1.0),
        (&[1], 1.0),
        (&[2], 5.0),
        (&[0, 1], 4.0),
        (&[0, 2], 6.0),
        (&[1, 2], 5.0),
        (&[0, 1, 2], 8.0),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (set, want) in expected {
        let got = v(&table, set, &solver);
        // Independent min-max over the table must agree with the listed value too.
        ok &= (got - want).abs() <= 1e-9 && table_value(&table.cost, set) == want;
        detail.push(format!("{set:?}={got}"));
    }
    let trace = prise_select(&table, &PriseConfig::new(3), &solver).unwrap();
    let gains = trace.gains();
    ok &= trace.order() == vec![2, 0, 1] && gains.iter().zip([5.0, 1.0, 2.0]).all(|(g, w)| (g - w).abs() <= 1e-9) && gains.len() == 3;
    let elapsed = started.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    Outcome {
        pass: ok,
        detail: format!(
            "V {} ; order {:?} gains {:?} ; {:.3}s < 1s",
            detail.join(" "),
            trace.order(),
            gains,
            elapsed.as_secs_f64()
        ),
    }
}

fn brute_force_equivalence() -> Outcome {
    let started = Instant::now();
    let solver = Solver::highs(SolveSettings::with_gap(0.0));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xB00);
    let (mut instances, mut subsets, mut mismatches) = (0, 0, 0);
    for class in [ProblemClass::Selection, ProblemClass::VertexCover] {
        for i in 0..30u64 {
            let n = rng.gen_range(2..=6);
            let s = rng.gen_range(1..=4);
            let inst = generate_instance(class, n, None, s, &DistributionSpec::Uniform, derive_seed(0xB00, i)).unwrap();
            instances += 1;
            for subset in nonempty_subsets(s) {
                subsets += 1;
                let got = v(&inst, &subset, &solver);
                if (got - brute_value(&inst, &subset)).abs() > 1e-6 {
                    mismatches += 1;
                }
            }
        }
    }
    let elapsed = started.elapsed();
    Outcome {
        pass: mismatches == 0 && instances >= 50 && elapsed < Duration::from_secs(120),
        detail: format!(
            "{instances} instances, {subsets} subsets, {mismatches} mismatches, {:.1}s < 120s",
            elapsed.as_secs_f64()
        ),
    }
}

fn monotonicity() -> Outcome {
    let solver = Solver::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x3070);
    let mut parts = Vec::new();
    let mut violations = 0;
    for class in [ProblemClass::Selection, ProblemClass::VertexCover, ProblemClass::FacilityLocation] {
        let mut pairs = 0;
        let mut infeasible = 0;
        for i in 0..100u64 {
            let s = rng.gen_range(2..=20);
            let (n, m) = match class {
                ProblemClass::FacilityLocation => (rng.gen_range(2..=10), Some(rng.gen_range(2..=10))),
                _ => (rng.gen_range(2..=20), None),
            };
            let inst = generate_instance(class, n, m, s, &DistributionSpec::Uniform, derive_seed(0x3070, i)).unwrap();
            let mut perm = all(s);
            perm.shuffle(&mut rng);
            let big = rng.gen_range(2..=s);
            let small = rng.gen_range(1..big);
            let (r, r2) = (&perm[..small], &perm[..big]);
            let (vr, vr2) = (v_ext(&inst, r, &solver), v_ext(&inst, r2, &solver));
            if vr2.is_infinite() {
                infeasible += 1;
            }
            if vr > vr2 + 1e-6 + solver.settings.mip_gap * vr2.abs() {
                violations += 1;
            }
            pairs += 1;
        }
        parts.push(format!("{class} {pairs} pairs ({infeasible} with infeasible superset)"));
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{}; {violations} violations", parts.join(", ")),
    }
}

/// PRISE trace plus MaxSum and Random orders for one SEL-20-50 instance.
struct SelRun {
    inst: Instance,
    v_full: f64,
    trace: PriseTrace,
    maxsum: Vec<usize>,
    random: Vec<usize>,
}

fn sel_runs(solver: &Solver) -> Vec<SelRun> {
    (0..20u64)
        .map(|i| {
            let inst = generate_instance(ProblemClass::Selection, 20, None, 50, &DistributionSpec::Uniform, derive_seed(0x5E1, i)).unwrap();
            let v_full = v(&inst, &all(50), solver);
            let trace = prise_select(&inst, &PriseConfig::new(8), solver).unwrap();
            let maxsum = maxsum_order(inst.scenarios.rows());
            let random = random_order(50, derive_seed(0xAB, inst.seed));
            SelRun {
                inst,
                v_full,
                trace,
                maxsum,
                random,
            }
        })
        .collect()
}

fn regret_ordering(runs: &[SelRun], solver: &Solver, started: Instant) -> Outcome {
    let budgets = [1usize, 2, 4, 6];
    let mut means = [[0.0f64; 4]; 3];
    for r in runs {
        for (bi, &k) in budgets.iter().enumerate() {
            let sets = [r.trace.prefix(k), r.maxsum[..k].to_vec(), r.random[..k].to_vec()];
            for (mi, set) in sets.iter().enumerate() {
                let e = evaluate_subset(&r.inst, set, r.v_full, solver, solver).unwrap();
                means[mi][bi] += e.regret_pct.expect("SEL recourse is always feasible") / runs.len() as f64;
            }
        }
    }
    let ordered = (1..4).all(|bi| means[0][bi] <= means[1][bi] && means[1][bi] <= means[2][bi]);
    let elapsed = started.elapsed();
    let fmt = |row: &[f64; 4]| row.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join("/");
    Outcome {
        pass: ordered && means[0][3] <= 2.0 && elapsed < Duration::from_secs(1800),
        detail: format!(
            "mean regret % at k=1/2/4/6: prise {} maxsum {} random {} ; prise k=6 <= 2 ; {:.0}s < 1800s",
            fmt(&means[0]),
            fmt(&means[1]),
            fmt(&means[2]),
            elapsed.as_secs_f64()
        ),
    }
}

/// Budget counted as S when the chain never closes the gap within K.
fn k_hat(budget: CompressionBudget, s: usize) -> usize {
    budget.converged().unwrap_or(s)
}

fn compression(runs: &[SelRun], solver: &Solver) -> Outcome {
    let s = 50.0;
    let (mut prise_mean, mut maxsum_mean) = (0.0, 0.0);
    let mut unconverged = 0;
    for r in runs {
        let p = r.trace.compression_budget(r.v_full, 0.01);
        let chain: Vec<(usize, f64)> = (1..=8).map(|k| (k, v(&r.inst, &r.maxsum[..k], solver))).collect();
        let m = compression_budget_from_values(r.v_full, &chain, 0.01);
        unconverged += usize::from(p.converged().is_none()) + usize::from(m.converged().is_none());
        prise_mean += k_hat(p, 50) as f64 / s / runs.len() as f64;
        maxsum_mean += k_hat(m, 50) as f64 / s / runs.len() as f64;
    }
    Outcome {
        pass: prise_mean < maxsum_mean,
        detail: format!(
            "mean k_hat/S prise {:.3} < maxsum {:.3} (K=8, {unconverged} chains counted as S)",
            prise_mean, maxsum_mean
        ),
    }
}

fn cflp_feasibility() -> Outcome {
    let solver = Solver::default();
    let (mut random1, mut maxsum1, mut prise6) = (0, 0, 0);
    let count = 20;
    let (mut used, mut excluded) = (0, 0);
    for i in 0.. {
        if used == count {
            break;
        }
        let inst = generate_instance(ProblemClass::FacilityLocation, 10, Some(10), 20, &DistributionSpec::Uniform, derive_seed(0xCF, i)).unwrap();
        // Instances without a feasible full problem have no regret and are
        // left out, as in the benchmark runner.
        let v_full = v_ext(&inst, &all(20), &solver);
        if v_full.is_infinite() {
            excluded += 1;
            continue;
        }
        used += 1;
        let infeasible = |set: &[usize]| evaluate_subset(&inst, set, v_full, &solver, &solver).unwrap().infeasible;
        random1 += usize::from(infeasible(&random_order(20, derive_seed(0xAB, inst.seed))[..1]));
        maxsum1 += usize::from(infeasible(&maxsum_order(inst.scenarios.rows())[..1]));
        let trace = prise_select(&inst, &PriseConfig::new(6), &solver).unwrap();
        prise6 += usize::from(infeasible(&trace.prefix(6)));
    }
    let pct = |c: usize| 100.0 * c as f64 / count as f64;
    Outcome {
        pass: pct(random1) >= 50.0 && pct(maxsum1) <= 10.0 && prise6 == 0,
        detail: format!(
            "{count} instances ({excluded} with infeasible full problem skipped); infeasible %: random k=1 {:.0} (>=50), maxsum k=1 {:.0} (<=10), prise k=6 {:.0} (=0)",
            pct(random1),
            pct(maxsum1),
            pct(prise6)
        ),
    }
}

fn gap_sweep() -> Outcome {
    let base = Solver::default();
    let loose = base.with_settings(SolveSettings::with_gap(0.25));
    let (mut t_tight, mut t_loose, mut r_tight, mut r_loose) = (0.0, 0.0, 0.0, 0.0);
    let count = 10;
    for i in 0..count as u64 {
        let inst = generate_instance(ProblemClass::VertexCover, 25, None, 12, &DistributionSpec::Uniform, derive_seed(0x7C, i)).unwrap();
        let v_full = v(&inst, &all(12), &base);
        let set = maxsum_order(inst.scenarios.rows())[..4].to_vec();
        let tight = evaluate_subset(&inst, &set, v_full, &base, &base).unwrap();
        let relaxed = evaluate_subset(&inst, &set, v_full, &loose, &base).unwrap();
        t_tight += tight.solve_seconds;
        t_loose += relaxed.solve_seconds;
        r_tight += tight.regret_pct.unwrap() / count as f64;
        r_loose += relaxed.regret_pct.unwrap() / count as f64;
    }
    Outcome {
        pass: t_loose < t_tight && r_loose - r_tight <= 5.0,
        detail: format!(
            "VC-25-12 maxsum k=4: solve time {t_loose:.3}s at gap 0.25 < {t_tight:.3}s at 1e-4 ; mean regret {r_loose:.2}% vs {r_tight:.2}% (+{:.2} pp <= 5)",
            r_loose - r_tight
        ),
    }
}

fn no_python() -> Outcome {
    // The library never spawns processes; prove it by hiding every
    // interpreter for an end-to-end pass through both file contracts.
    let saved = std::env::var_os("PATH");
    std::env::set_var("PATH", "");
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let result = (|| -> prise_core::Result<usize> {
        prise_core::bench::cmd_generate(&prise_core::bench::GenerateConfig {
            class: ProblemClass::Selection,
            n: 8,
            m: None,
            num_scenarios: 6,
            count: 2,
            dist: DistributionSpec::Uniform,
            seed: 3,
            out: data.clone(),
            force: false,
        })?;
        let ranking = tmp.path().join("rank.jsonl");
        prise_core::bench::cmd_export_supervision(&prise_core::bench::SupervisionConfig {
            dataset: data.clone(),
            splits: None,
            budget: 3,
            eps: 0.0,
            settings: SolveSettings::default(),
            threads: 1,
            out: tmp.path().join("sup.jsonl"),
            ranking_out: Some(ranking.clone()),
            record_candidate_scores: false,
        })?;
        let mut cfg = prise_core::bench::RunConfig::new(&data, tmp.path().join("r.csv"));
        cfg.methods = vec![prise_core::bench::Method::Ranking(ranking)];
        cfg.budgets = vec![1, 3];
        Ok(prise_core::bench::cmd_run(&cfg)?.rows.len())
    })();
    match saved {
        Some(p) => std::env::set_var("PATH", p),
        None => std::env::remove_var("PATH"),
    }
    Outcome {
        pass: matches!(result, Ok(4)),
        detail: format!("generate -> supervision -> ranking eval with empty PATH: {result:?} rows"),
    }
}

fn main() -> ExitCode {
    // `cargo test -- --list` is answered for tooling; positional arguments
    // filter criteria by name.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut results = Vec::new();
    run("counterexample-oracle", &mut results, counterexample);
    run("brute-force-equivalence", &mut results, brute_force_equivalence);
    run("monotonicity", &mut results, monotonicity);
    let solver = Solver::default();
    if selected("sel-regret-ordering") || selected("compression-budget") {
        let started = Instant::now();
        let runs = sel_runs(&solver);
        run("sel-regret-ordering", &mut results, || regret_ordering(&runs, &solver, started));
        run("compression-budget", &mut results, || compression(&runs, &solver));
    }
    run("cflp-feasibility", &mut results, cflp_feasibility);
    run("gap-sweep-vc", &mut results, gap_sweep);
    run("no-python", &mut results, no_python);
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
