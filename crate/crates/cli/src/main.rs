use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use prise_core::bench::{
    cmd_export_supervision, cmd_generate, cmd_run, cmd_scenario_scaling, cmd_tolerance_sweep, format_scaling, format_summary,
    GenerateConfig, Method, RunConfig, RunOutcome, SupervisionConfig, DEFAULT_BUDGETS,
};
use prise_core::instance::{DistributionSpec, ProblemClass, Split};
use prise_core::{Error, Result, SolveSettings};

/// Scenario reduction benchmarks for two-stage robust optimization.
#[derive(Parser, Debug)]
#[command(name = "prise", version)]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (each MILP solve itself is single-threaded).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Relative MIP gap for every solve.
    #[arg(long, global = true, default_value_t = 1e-4)]
    mip_gap: f64,
    /// Per-solve time limit in seconds.
    #[arg(long, global = true)]
    time_limit: Option<f64>,
    /// Output path: dataset directory for `generate`, report or
    /// supervision file otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset of instances with a manifest.
    Generate(GenerateArgs),
    /// Evaluate methods across budgets and append to a CSV report.
    Run(RunArgs),
    /// Evaluate under several reduced-solve MIP gaps.
    SweepGap {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        gaps: Vec<f64>,
    },
    /// Runtime against truncated scenario counts at a fixed budget.
    ScaleS {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "prise,random,kmeans,maxsum")]
        methods: Vec<String>,
        #[arg(long = "s-values", value_delimiter = ',', required = true)]
        s_values: Vec<usize>,
        #[arg(long, short)]
        k: usize,
    },
    /// Run the lookahead selection and write marginal-gain supervision.
    ExportSupervision {
        #[command(flatten)]
        data: DataArgs,
        /// Maximum number of selected scenarios (K).
        #[arg(long, default_value_t = 6)]
        budget: usize,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Also write the selection orders as a ranking file.
        #[arg(long)]
        ranking_out: Option<PathBuf>,
        /// Store every candidate score of every step.
        #[arg(long)]
        candidate_scores: bool,
    },
    /// Evaluate an external ranking file across budgets.
    EvalRanking {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        ranking: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BUDGETS)]
        budgets: Vec<usize>,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// sel, vc or cflp.
    #[arg(long)]
    class: String,
    #[arg(long)]
    n: usize,
    /// Number of facilities (CFLP only).
    #[arg(long)]
    m: Option<usize>,
    /// Scenarios per instance.
    #[arg(long)]
    s: usize,
    #[arg(long)]
    count: usize,
    /// uniform, normal or multimodal.
    #[arg(long, default_value = "uniform")]
    dist: String,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Restrict to these splits (train, val, test).
    #[arg(long, value_delimiter = ',')]
    split: Vec<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// exact, prise, random, kmeans, maxsum or ranking:<file>.
    #[arg(long, value_delimiter = ',', default_value = "exact,prise,random,kmeans,maxsum")]
    methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BUDGETS)]
    budgets: Vec<usize>,
    /// PRISE gain tolerance.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Recompute rows already present in the report.
    #[arg(long)]
    force: bool,
    /// Write each instance's full deterministic equivalent as LP here.
    #[arg(long)]
    lp_dump: Option<PathBuf>,
}

fn settings(cli: &Cli) -> Result<SolveSettings> {
    let s = SolveSettings {
        time_limit: cli.time_limit,
        ..SolveSettings::with_gap(cli.mip_gap)
    };
    s.validate()?;
    Ok(s)
}

fn out_path(cli: &Cli) -> Result<PathBuf> {
    cli.out.clone().ok_or_else(|| Error::Param("--out is required".into()))
}

fn splits(data: &DataArgs) -> Result<Option<Vec<Split>>> {
    if data.split.is_empty() {
        return Ok(None);
    }
    data.split.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>().map(Some)
}

fn run_config(cli: &Cli, data: &DataArgs, methods: &[String]) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(&data.dataset, out_path(cli)?);
    cfg.splits = splits(data)?;
    cfg.methods = methods.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?;
    cfg.settings = settings(cli)?;
    cfg.seed = cli.seed;
    cfg.threads = cli.threads;
    Ok(cfg)
}

fn with_run_args(cli: &Cli, run: &RunArgs) -> Result<RunConfig> {
    let mut cfg = run_config(cli, &run.data, &run.methods)?;
    cfg.budgets = run.budgets.clone();
    cfg.eps = run.eps;
    cfg.force = run.force;
    cfg.lp_dump = run.lp_dump.clone();
    Ok(cfg)
}

fn report(outcome: &RunOutcome, cfg: &RunConfig) {
    println!(
        "{} rows computed, {} already present in {}",
        outcome.computed,
        outcome.skipped,
        cfg.out.display()
    );
    if !outcome.excluded.is_empty() {
        println!(
            "excluded {} instances whose full problem is infeasible: {}",
            outcome.excluded.len(),
            outcome.excluded.join(", ")
        );
    }
    print!("{}", format_summary(&outcome.summary));
}

fn execute(cli: &Cli) -> Result<()> {
    settings(cli)?;
    match &cli.command {
        Command::Generate(g) => {
            let class: ProblemClass = g.class.parse()?;
            let cfg = GenerateConfig {
                class,
                n: g.n,
                m: g.m,
                num_scenarios: g.s,
                count: g.count,
                dist: DistributionSpec::by_name(&g.dist, class)?,
                seed: cli.seed,
                out: out_path(cli)?,
                force: g.force,
            };
            let ds = cmd_generate(&cfg)?;
            let count = |s: Split| ds.manifest.entries.iter().filter(|e| e.split == s).count();
            println!(
                "wrote {} instances to {} (train {}, val {}, test {})",
                ds.manifest.entries.len(),
                ds.root.display(),
                count(Split::Train),
                count(Split::Val),
                count(Split::Test)
            );
        }
        Command::Run(run) => {
            let cfg = with_run_args(cli, run)?;
            report(&cmd_run(&cfg)?, &cfg);
        }
        Command::SweepGap { run, gaps } => {
            let cfg = with_run_args(cli, run)?;
            report(&cmd_tolerance_sweep(&cfg, gaps)?, &cfg);
        }
        Command::ScaleS { data, methods, s_values, k } => {
            let cfg = run_config(cli, data, methods)?;
            let outcome = cmd_scenario_scaling(&cfg, s_values, *k)?;
            println!("{} rows written to {}", outcome.rows.len(), cfg.out.display());
            print!("{}", format_scaling(&outcome.summary));
        }
        Command::ExportSupervision {
            data,
            budget,
            eps,
            ranking_out,
            candidate_scores,
        } => {
            let cfg = SupervisionConfig {
                dataset: data.dataset.clone(),
                splits: splits(data)?,
                budget: *budget,
                eps: *eps,
                settings: settings(cli)?,
                threads: cli.threads,
                out: out_path(cli)?,
                ranking_out: ranking_out.clone(),
                record_candidate_scores: *candidate_scores,
            };
            let lines = cmd_export_supervision(&cfg)?;
            println!("wrote supervision for {} instances to {}", lines.len(), cfg.out.display());
        }
        Command::EvalRanking {
            data,
            ranking,
            budgets,
            force,
        } => {
            let mut cfg = run_config(cli, data, &[])?;
            cfg.methods = vec![Method::Ranking(ranking.clone())];
            cfg.budgets = budgets.clone();
            cfg.force = *force;
            report(&cmd_run(&cfg)?, &cfg);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
