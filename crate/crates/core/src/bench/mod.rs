//! Orchestration behind the command-line verbs: dataset generation,
//! method runs across budgets, gap sweeps, scenario-count scaling and
//! supervision export.

pub mod report;
mod scaling;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{read_rankings, select_kmeans, select_maxsum, select_random, top_k_from_ranking, write_rankings, Ranking};
use crate::error::{Error, Result};
use crate::eval::{evaluate_subset, value_of_set, SubsetEvaluation};
use crate::instance::{generate_instance, write_instance, Dataset, DatasetEntry, DistributionSpec, Instance, ProblemClass, Split};
use crate::milp::{SolveSettings, SolveStatus, Solver};
use crate::prise::{prise_select, PriseConfig, PriseTrace};
use crate::problem::TwoStageProblem;
use crate::rng::derive_seed;
use crate::supervision::{write_supervision, SupervisionLine};

pub use report::{format_summary, read_rows, summarize, EvalRow, ReportSink, RowKey, SummaryRow};
pub use scaling::{cmd_scenario_scaling, format_scaling, ScalingOutcome, ScalingRow, ScalingSummaryRow};

pub const DEFAULT_BUDGETS: [usize; 4] = [1, 2, 4, 6];

#[derive(Clone, Debug)]
pub struct GenerateConfig {
    pub class: ProblemClass,
    pub n: usize,
    pub m: Option<usize>,
    pub num_scenarios: usize,
    pub count: usize,
    pub dist: DistributionSpec,
    pub seed: u64,
    pub out: PathBuf,
    pub force: bool,
}

pub fn instance_stem(class: ProblemClass, n: usize, m: Option<usize>, num_scenarios: usize, ordinal: usize) -> String {
    let tag = class.tag().to_lowercase();
    match m {
        Some(m) => format!("{tag}-{n}x{m}-{num_scenarios}-{ordinal:04}"),
        None => format!("{tag}-{n}-{num_scenarios}-{ordinal:04}"),
    }
}

fn dir_is_nonempty(path: &Path) -> Result<bool> {
    match fs::read_dir(path) {
        Ok(mut it) => Ok(it.next().is_some()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(false),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// Writes `count` instances and a manifest with an 80/10/10 split.
pub fn cmd_generate(cfg: &GenerateConfig) -> Result<Dataset> {
    if cfg.count == 0 {
        return Err(Error::param("count must be positive"));
    }
    if dir_is_nonempty(&cfg.out)? && !cfg.force {
        return Err(Error::param(format!(
            "output directory {} is not empty (use --force to overwrite)",
            cfg.out.display()
        )));
    }
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let (train, val, _) = crate::instance::split_counts(cfg.count);
    let mut entries = Vec::with_capacity(cfg.count);
    for i in 0..cfg.count {
        let inst = generate_instance(cfg.class, cfg.n, cfg.m, cfg.num_scenarios, &cfg.dist, derive_seed(cfg.seed, i as u64))?;
        let id = instance_stem(cfg.class, cfg.n, cfg.m, cfg.num_scenarios, i);
        let file = format!("{id}.json");
        write_instance(&inst, cfg.out.join(&file))?;
        let split = if i < train {
            Split::Train
        } else if i < train + val {
            Split::Val
        } else {
            Split::Test
        };
        entries.push(DatasetEntry { id, file, split });
    }
    let dataset = Dataset::new(&cfg.out, cfg.class, entries);
    dataset.write_manifest()?;
    Ok(dataset)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    /// Full deterministic equivalent; budget-agnostic.
    Exact,
    Prise,
    Random,
    Kmeans,
    Maxsum,
    /// Top-k of an external ranking file.
    Ranking(PathBuf),
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Exact => "exact".into(),
            Method::Prise => "prise".into(),
            Method::Random => "random".into(),
            Method::Kmeans => "kmeans".into(),
            Method::Maxsum => "maxsum".into(),
            Method::Ranking(path) => {
                let stem = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
                format!("ranking:{stem}")
            }
        }
    }

    /// Whether the sets for increasing budgets are nested.
    fn nested(&self) -> bool {
        !matches!(self, Method::Kmeans | Method::Exact)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("ranking:") {
            if path.is_empty() {
                return Err(Error::param("ranking method needs a file: ranking:<path>"));
            }
            return Ok(Method::Ranking(PathBuf::from(path)));
        }
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Method::Exact),
            "prise" => Ok(Method::Prise),
            "random" => Ok(Method::Random),
            "kmeans" => Ok(Method::Kmeans),
            "maxsum" => Ok(Method::Maxsum),
            other => Err(Error::param(format!(
                "unknown method {other:?} (expected exact, prise, random, kmeans, maxsum or ranking:<file>)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub dataset: PathBuf,
    /// Splits to evaluate; all instances when `None`.
    pub splits: Option<Vec<Split>>,
    pub methods: Vec<Method>,
    pub budgets: Vec<usize>,
    /// Settings for V(full), selection and recourse evaluation.
    pub settings: SolveSettings,
    /// Gaps for the reduced solves; empty means `settings.mip_gap`.
    pub gaps: Vec<f64>,
    /// CSV report path.
    pub out: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub force: bool,
    /// PRISE gain tolerance.
    pub eps: f64,
    /// Directory receiving one LP file per instance (full model).
    pub lp_dump: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            dataset: dataset.into(),
            splits: None,
            methods: vec![Method::Exact, Method::Prise, Method::Random, Method::Kmeans, Method::Maxsum],
            budgets: DEFAULT_BUDGETS.to_vec(),
            settings: SolveSettings::default(),
            gaps: Vec::new(),
            out: out.into(),
            seed: 0,
            threads: 1,
            force: false,
            eps: 0.0,
            lp_dump: None,
        }
    }

    pub fn reduced_gaps(&self) -> Vec<f64> {
        if self.gaps.is_empty() {
            vec![self.settings.mip_gap]
        } else {
            self.gaps.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.settings.validate()?;
        if self.methods.is_empty() {
            return Err(Error::param("no methods given"));
        }
        if self.budgets.is_empty() || self.budgets[0] == 0 || self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param(format!(
                "budgets must be positive and strictly ascending, got {:?}",
                self.budgets
            )));
        }
        if let Some(g) = self.gaps.iter().find(|g| !(**g >= 0.0 && **g < 1.0)) {
            return Err(Error::param(format!("gap {g} outside [0, 1)")));
        }
        if self.threads == 0 {
            return Err(Error::param("threads must be positive"));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::param(format!("eps must be >= 0, got {}", self.eps)));
        }
        for m in &self.methods {
            if let Method::Ranking(path) = m {
                if !path.is_file() {
                    return Err(Error::param(format!("ranking file {} does not exist", path.display())));
                }
            }
        }
        Ok(())
    }

    fn max_budget(&self) -> usize {
        *self.budgets.last().expect("validated budgets")
    }
}

pub(crate) fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Solver(format!("cannot start worker pool: {e}")))
}

pub(crate) fn load_instances(dataset: &Path, splits: Option<&[Split]>) -> Result<Vec<(String, Instance)>> {
    let ds = Dataset::open(dataset)?;
    let instances = ds.load_all(splits)?;
    if let Some((id, inst)) = instances.iter().find(|(_, i)| i.class != ds.manifest.class) {
        return Err(Error::Validation(format!(
            "instance {id} is {} but the manifest says {}",
            inst.class, ds.manifest.class
        )));
    }
    if instances.is_empty() {
        return Err(Error::param(format!("dataset {} has no instances in the requested splits", dataset.display())));
    }
    Ok(instances)
}

/// Reads a ranking file and indexes it by instance id, checking that every
/// requested instance is covered with the right number of scenarios.
pub fn load_rankings_for(path: &Path, instances: &[(String, Instance)]) -> Result<HashMap<String, Ranking>> {
    let mut by_id = HashMap::new();
    for r in read_rankings(path)? {
        if by_id.contains_key(&r.instance_id) {
            return Err(Error::Validation(format!(
                "ranking file {} lists instance {} twice",
                path.display(),
                r.instance_id
            )));
        }
        by_id.insert(r.instance_id.clone(), r);
    }
    let missing: Vec<&str> = instances
        .iter()
        .filter(|(id, _)| !by_id.contains_key(id))
        .map(|(id, _)| id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Validation(format!(
            "ranking file {} lacks instances: {}",
            path.display(),
            missing.join(", ")
        )));
    }
    for (id, inst) in instances {
        by_id[id].validate(inst.num_scenarios())?;
    }
    Ok(by_id)
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    /// Report rows belonging to this run's plan (fresh and previously done).
    pub rows: Vec<EvalRow>,
    pub summary: Vec<SummaryRow>,
    pub computed: usize,
    pub skipped: usize,
    /// Instances left out because the full problem has no feasible solution,
    /// so regret is undefined.
    pub excluded: Vec<String>,
}

struct RunContext<'a> {
    cfg: &'a RunConfig,
    gaps: Vec<f64>,
    rankings: RankingIndex,
    sink: &'a ReportSink,
}

/// Per-instance selections for one method, by budget.
struct Selection {
    subsets: Vec<Vec<usize>>,
    seconds: Vec<f64>,
}

type RankingIndex = HashMap<String, HashMap<String, Ranking>>;

fn select_for(cfg: &RunConfig, rankings: &RankingIndex, method: &Method, id: &str, inst: &Instance, base: &Solver) -> Result<Selection> {
    let budgets = &cfg.budgets;
    let seed = derive_seed(cfg.seed, inst.seed);
    if *method == Method::Prise {
        let config = PriseConfig {
            eps: cfg.eps,
            ..PriseConfig::new(cfg.max_budget())
        };
        let trace: PriseTrace = prise_select(inst, &config, base)?;
        return Ok(Selection {
            subsets: budgets.iter().map(|&k| trace.prefix(k)).collect(),
            seconds: budgets.iter().map(|&k| trace.seconds_at(k)).collect(),
        });
    }
    let mut subsets = Vec::with_capacity(budgets.len());
    let mut seconds = Vec::with_capacity(budgets.len());
    for &k in budgets {
        let started = Instant::now();
        let subset = match method {
            Method::Random => select_random(inst, k, seed)?,
            Method::Kmeans => select_kmeans(inst, k, seed)?,
            Method::Maxsum => select_maxsum(inst, k)?,
            Method::Ranking(_) => top_k_from_ranking(&rankings[&method.label()][id], k)?,
            Method::Exact | Method::Prise => unreachable!(),
        };
        seconds.push(started.elapsed().as_secs_f64());
        subsets.push(subset);
    }
    Ok(Selection { subsets, seconds })
}

/// Evaluation that records solver failures as a row status instead of
/// aborting the whole run.
fn evaluate_or_status(
    inst: &Instance,
    subset: &[usize],
    v_full: f64,
    reduced: &Solver,
    base: &Solver,
) -> Result<std::result::Result<SubsetEvaluation, String>> {
    match evaluate_subset(inst, subset, v_full, reduced, base) {
        Ok(e) => Ok(Ok(e)),
        Err(Error::Solver(msg)) => Ok(Err(msg)),
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn make_row(
    ctx: &RunContext<'_>,
    id: &str,
    inst: &Instance,
    method: &str,
    k: Option<usize>,
    gap: f64,
    v_full: f64,
    t_select: f64,
    eval: &std::result::Result<SubsetEvaluation, String>,
) -> EvalRow {
    let mut row = EvalRow {
        instance_id: id.to_string(),
        class: inst.class.tag().to_string(),
        method: method.to_string(),
        k,
        regret_pct: None,
        infeasible: false,
        v_full,
        v_reduced: None,
        z_realized: None,
        t_select_s: t_select,
        t_solve_s: 0.0,
        status: String::new(),
        mip_gap: gap,
        threads: ctx.cfg.threads,
    };
    match eval {
        Ok(e) => {
            row.regret_pct = e.regret_pct;
            row.infeasible = e.infeasible;
            row.v_reduced = e.v_reduced;
            row.z_realized = e.z_realized;
            row.t_solve_s = e.solve_seconds;
            row.status = if e.infeasible {
                "recourse_infeasible".into()
            } else {
                e.reduced_status.clone()
            };
        }
        Err(msg) => row.status = format!("failed: {msg}"),
    }
    row
}

/// V along nested sets must not decrease beyond the solver tolerance.
pub fn check_nested_values(label: &str, chain: &[(usize, f64)], settings: &SolveSettings) -> Result<()> {
    for w in chain.windows(2) {
        let ((k0, v0), (k1, v1)) = (w[0], w[1]);
        if v0 > v1 + settings.slack(v1) {
            return Err(Error::Solver(format!(
                "{label}: V decreased from {v0} at k={k0} to {v1} at k={k1} on nested sets"
            )));
        }
    }
    Ok(())
}

/// Rows computed for one instance, or `None` if V(Ξ) is infeasible.
fn run_instance(ctx: &RunContext<'_>, id: &str, inst: &Instance) -> Result<Option<usize>> {
    let cfg = ctx.cfg;
    let pending = |method: &str, k: Option<usize>, gap: f64| !ctx.sink.is_done(&RowKey::new(id, method, k, gap));
    let any_pending = cfg.methods.iter().any(|m| {
        let label = m.label();
        ctx.gaps.iter().any(|&g| match m {
            Method::Exact => pending(&label, None, g),
            _ => cfg.budgets.iter().any(|&k| pending(&label, Some(k), g)),
        })
    });
    if !any_pending {
        return Ok(Some(0));
    }
    let s = inst.num_scenarios();
    if cfg.max_budget() > s {
        return Err(Error::param(format!("budget {} exceeds S = {s} on {id}", cfg.max_budget())));
    }
    let base = Solver::highs(cfg.settings.clone());
    let all: Vec<usize> = (0..s).collect();
    if let Some(dir) = &cfg.lp_dump {
        let path = dir.join(format!("{id}.lp"));
        fs::write(&path, inst.reduced_model(&all)?.to_lp_string()).map_err(|e| Error::io(&path, e))?;
    }
    let full = value_of_set(inst, &all, &base)?;
    if full.status == SolveStatus::Infeasible {
        return Ok(None);
    }
    let v_full = full.require()?;
    let mut computed = 0;
    for method in &cfg.methods {
        let label = method.label();
        if *method == Method::Exact {
            for &gap in &ctx.gaps {
                if !pending(&label, None, gap) {
                    continue;
                }
                let reduced = base.with_settings(SolveSettings { mip_gap: gap, ..cfg.settings.clone() });
                let eval = evaluate_or_status(inst, &all, v_full, &reduced, &base)?;
                ctx.sink.append(&make_row(ctx, id, inst, &label, None, gap, v_full, 0.0, &eval))?;
                computed += 1;
            }
            continue;
        }
        let todo: Vec<(usize, f64)> = (0..cfg.budgets.len())
            .flat_map(|bi| ctx.gaps.iter().map(move |&g| (bi, g)))
            .filter(|&(bi, g)| pending(&label, Some(cfg.budgets[bi]), g))
            .collect();
        if todo.is_empty() {
            continue;
        }
        let selection = select_for(cfg, &ctx.rankings, method, id, inst, &base)?;
        let mut chains: HashMap<u64, Vec<(usize, f64)>> = HashMap::new();
        for (bi, gap) in todo {
            let k = cfg.budgets[bi];
            let reduced = base.with_settings(SolveSettings { mip_gap: gap, ..cfg.settings.clone() });
            let eval = evaluate_or_status(inst, &selection.subsets[bi], v_full, &reduced, &base)?;
            if let Ok(e) = &eval {
                if let Some(v) = e.v_reduced {
                    chains.entry(gap.to_bits()).or_default().push((k, v));
                }
            }
            let row = make_row(ctx, id, inst, &label, Some(k), gap, v_full, selection.seconds[bi], &eval);
            ctx.sink.append(&row)?;
            computed += 1;
        }
        if method.nested() {
            for (gap, mut chain) in chains {
                chain.sort_by_key(|&(k, _)| k);
                let settings = SolveSettings { mip_gap: f64::from_bits(gap), ..cfg.settings.clone() };
                check_nested_values(&format!("{id} {label}"), &chain, &settings)?;
            }
        }
    }
    Ok(Some(computed))
}

/// Evaluates every method at every budget (and reduced-solve gap) on the
/// dataset, appending rows to the CSV report.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let instances = load_instances(&cfg.dataset, cfg.splits.as_deref())?;
    let mut rankings = HashMap::new();
    for m in &cfg.methods {
        if let Method::Ranking(path) = m {
            rankings.insert(m.label(), load_rankings_for(path, &instances)?);
        }
    }
    let gaps = cfg.reduced_gaps();
    let mut plan = HashSet::new();
    for (id, _) in &instances {
        for m in &cfg.methods {
            for &g in &gaps {
                match m {
                    Method::Exact => {
                        plan.insert(RowKey::new(id, &m.label(), None, g));
                    }
                    _ => {
                        for &k in &cfg.budgets {
                            plan.insert(RowKey::new(id, &m.label(), Some(k), g));
                        }
                    }
                }
            }
        }
    }
    if let Some(dir) = &cfg.lp_dump {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let sink = ReportSink::open(&cfg.out, cfg.force, &plan)?;
    let skipped = plan.iter().filter(|k| sink.is_done(k)).count();
    let ctx = RunContext {
        cfg,
        gaps,
        rankings,
        sink: &sink,
    };
    let pool = thread_pool(cfg.threads)?;
    let counts = pool.install(|| {
        instances
            .par_iter()
            .map(|(id, inst)| run_instance(&ctx, id, inst))
            .collect::<Result<Vec<Option<usize>>>>()
    })?;
    drop(sink);
    let excluded = instances
        .iter()
        .zip(&counts)
        .filter(|(_, c)| c.is_none())
        .map(|((id, _), _)| id.clone())
        .collect();
    let rows: Vec<EvalRow> = read_rows(&cfg.out)?.into_iter().filter(|r| plan.contains(&r.key())).collect();
    let summary = summarize(&rows);
    Ok(RunOutcome {
        rows,
        summary,
        computed: counts.iter().flatten().sum(),
        skipped,
        excluded,
    })
}

/// Re-runs the evaluation with each reduced-solve gap in `gaps`.
pub fn cmd_tolerance_sweep(cfg: &RunConfig, gaps: &[f64]) -> Result<RunOutcome> {
    if gaps.is_empty() {
        return Err(Error::param("no gaps given"));
    }
    let cfg = RunConfig {
        gaps: gaps.to_vec(),
        ..cfg.clone()
    };
    cmd_run(&cfg)
}

#[derive(Clone, Debug)]
pub struct SupervisionConfig {
    pub dataset: PathBuf,
    pub splits: Option<Vec<Split>>,
    pub budget: usize,
    pub eps: f64,
    pub settings: SolveSettings,
    pub threads: usize,
    pub out: PathBuf,
    /// Also write the selection orders as a ranking file.
    pub ranking_out: Option<PathBuf>,
    pub record_candidate_scores: bool,
}

/// Runs PRISE on every instance and writes the supervision file.
pub fn cmd_export_supervision(cfg: &SupervisionConfig) -> Result<Vec<SupervisionLine>> {
    cfg.settings.validate()?;
    if cfg.threads == 0 {
        return Err(Error::param("threads must be positive"));
    }
    let instances = load_instances(&cfg.dataset, cfg.splits.as_deref())?;
    let solver = Solver::highs(cfg.settings.clone());
    let config = PriseConfig {
        eps: cfg.eps,
        record_candidate_scores: cfg.record_candidate_scores,
        ..PriseConfig::new(cfg.budget)
    };
    let pool = thread_pool(cfg.threads)?;
    let traced = pool.install(|| {
        instances
            .par_iter()
            .map(|(id, inst)| {
                let trace = prise_select(inst, &config, &solver)?;
                let all: Vec<usize> = (0..inst.num_scenarios()).collect();
                let full = value_of_set(inst, &all, &solver)?;
                let v_full = match full.status {
                    SolveStatus::Infeasible => None,
                    _ => Some(full.require()?),
                };
                Ok((SupervisionLine::from_trace(id.clone(), inst.num_scenarios(), &trace, v_full), trace))
            })
            .collect::<Result<Vec<(SupervisionLine, PriseTrace)>>>()
    })?;
    let lines: Vec<SupervisionLine> = traced.iter().map(|(l, _)| l.clone()).collect();
    write_supervision(&lines, &cfg.out)?;
    if let Some(path) = &cfg.ranking_out {
        let rankings: Vec<Ranking> = traced
            .iter()
            .map(|(l, t)| Ranking::from_permutation(l.instance_id.clone(), "prise", t.ranking_order(l.num_scenarios)))
            .collect();
        write_rankings(&rankings, path)?;
    }
    Ok(lines)
}
