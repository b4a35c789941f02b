//! `fuzzyrepair`: evaluate, generate and optimize shift schedules, run
//! benchmark batches, check configuration changes and solve n-queens.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 the payload reports a
//! negative outcome (hard-invalid schedule, inconsistent or refused
//! configuration, knowledge base with diagnostics, unsolved board).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use fuzzyrepair::bench::{run_bench, summary_csv, trace_csv, BenchSpec};
use fuzzyrepair::consistency::{
    adopt_config, apply_edits, consistency_check, what_if_config, ConfigEdit, PairStore, ReferencePairDb, Snapshot,
    Verdict,
};
use fuzzyrepair::domain::queens::QueensBoard;
use fuzzyrepair::domain::shift::{
    default_reference_plan, initial_solution, reference_kb, shift_schema, validate_hard, OperationPlan, Schedule,
    ShiftInstance,
};
use fuzzyrepair::dynamic::EvaluationTree;
use fuzzyrepair::kb::KnowledgeBase;
use fuzzyrepair::optimizer::{run, Algorithm, OptimizerConfig, QueensProblem, ShiftProblem};

#[derive(Parser)]
#[command(name = "fuzzyrepair", version, about = "Fuzzy-constraint repair-based optimization")]
struct Cli {
    /// Random seed; each command documents its default.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Knowledge base JSON; the built-in reference KB when omitted.
    #[arg(long, global = true)]
    kb: Option<PathBuf>,
    /// Operation plan JSON; the built-in reference plan when omitted.
    #[arg(long, global = true)]
    plan: Option<PathBuf>,
    /// Output file or directory; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Progress on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a schedule CSV and print a JSON report.
    Evaluate {
        schedule: PathBuf,
        /// Number of worst violations listed.
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Optimize from an initial schedule; prints a JSON summary, writes the
    /// best schedule to --out.
    Optimize(OptimizeArgs),
    /// Generate an initial schedule CSV (seed defaults to 42).
    Initial,
    /// Parallel batches from one initial schedule; writes batch_<i>.csv and
    /// summary.csv into --out, prints the summary CSV.
    Bench {
        #[command(flatten)]
        opt: OptimizeArgs,
        #[arg(long, default_value_t = 4)]
        batches: usize,
        /// Comma-separated per-batch seeds; default seed, seed+1, ...
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Check a new configuration against a reference-pair database.
    CheckConfig(CheckArgs),
    /// Knowledge base utilities.
    Kb {
        #[command(subcommand)]
        command: KbCommand,
    },
    /// Solve n-queens; prints the board and run statistics as JSON.
    Queens {
        n: usize,
        #[arg(long, default_value = "random_hill")]
        algo: String,
        #[arg(long, default_value_t = 10_000)]
        max_evals: usize,
    },
}

#[derive(Subcommand)]
enum KbCommand {
    /// Print diagnostics of --kb (or the reference KB) as JSON.
    Validate,
}

#[derive(Args, Clone)]
struct OptimizeArgs {
    #[arg(long, default_value = "deepening1")]
    algo: String,
    #[arg(long)]
    max_evals: Option<usize>,
    #[arg(long)]
    tries: Option<usize>,
    #[arg(long)]
    worst_k: Option<usize>,
    #[arg(long)]
    tenure: Option<usize>,
    /// Initial schedule CSV; generated from --initial-seed when omitted.
    #[arg(long)]
    initial: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    initial_seed: u64,
    /// Trace CSV (eval_index,current,best).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Configuration the database starts from when it does not exist yet.
    #[arg(long)]
    kb_old: Option<PathBuf>,
    #[arg(long)]
    kb_new: Option<PathBuf>,
    /// JSON list of edits applied to the database configuration, instead
    /// of --kb-new.
    #[arg(long, conflicts_with = "kb_new")]
    edits: Option<PathBuf>,
    /// Pair store JSON; created when missing.
    #[arg(long)]
    db: PathBuf,
    #[arg(long, default_value = "default")]
    db_name: String,
    /// Adopt the new configuration on success, recording --best-after over
    /// --best-before as a new pair.
    #[arg(long, requires_all = ["best_before", "best_after"])]
    adopt: bool,
    #[arg(long)]
    best_before: Option<PathBuf>,
    #[arg(long)]
    best_after: Option<PathBuf>,
    /// Write a what-if report for the --candidate schedules to this file.
    #[arg(long)]
    what_if: Option<PathBuf>,
    #[arg(long = "candidate")]
    candidates: Vec<PathBuf>,
}

struct Ctx {
    seed: Option<u64>,
    kb: Option<PathBuf>,
    plan: Option<PathBuf>,
    out: Option<PathBuf>,
    verbose: bool,
}

impl Ctx {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn kb(&self) -> Result<KnowledgeBase> {
        match &self.kb {
            Some(p) => load_kb(p),
            None => Ok(reference_kb()),
        }
    }

    fn plan(&self) -> Result<OperationPlan> {
        let Some(p) = &self.plan else {
            return Ok(default_reference_plan());
        };
        let plan = OperationPlan::read_json(&read(p)?).with_context(|| format!("plan {}", p.display()))?;
        plan.validate().with_context(|| format!("plan {}", p.display()))?;
        Ok(plan)
    }

    /// Writes the payload to --out, or stdout.
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn load_kb(p: &Path) -> Result<KnowledgeBase> {
    Ok(KnowledgeBase::load(p)?)
}

fn load_schedule(p: &Path, plan: &OperationPlan) -> Result<Schedule> {
    Schedule::from_csv(&read(p)?, plan).with_context(|| format!("schedule {}", p.display()))
}

fn json_line(v: &Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(v).expect("json value serializes"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors; usage errors share code 1 with input errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let ctx = Ctx {
        seed: cli.seed,
        kb: cli.kb,
        plan: cli.plan,
        out: cli.out,
        verbose: cli.verbose,
    };
    let result = match cli.command {
        Command::Evaluate { schedule, top } => cmd_evaluate(&ctx, &schedule, top),
        Command::Optimize(a) => cmd_optimize(&ctx, &a),
        Command::Initial => cmd_initial(&ctx),
        Command::Bench { opt, batches, seeds } => cmd_bench(&ctx, &opt, batches, seeds),
        Command::CheckConfig(a) => cmd_check_config(&ctx, &a),
        Command::Kb { command: KbCommand::Validate } => cmd_kb_validate(&ctx),
        Command::Queens { n, algo, max_evals } => cmd_queens(&ctx, n, &algo, max_evals),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Evaluation report of `s`; `score` is the raw root aggregate, `objective`
/// the same with hard barriers applied.
fn report(kb: &KnowledgeBase, plan: &OperationPlan, s: &Schedule, top: usize) -> Result<(Value, bool)> {
    let hard: Vec<String> = match validate_hard(s, plan) {
        Ok(()) => Vec::new(),
        Err(v) => v.iter().map(|x| x.to_string()).collect(),
    };
    let tree = EvaluationTree::build(kb, &ShiftInstance { schedule: s, plan })?;
    let violations: Vec<Value> = tree
        .violations()
        .iter()
        .take(top)
        .map(|v| json!({"type": v.constraint_type, "name": v.name, "score": v.score, "weighted": v.weighted_score}))
        .collect();
    let hard_valid = hard.is_empty();
    let v = json!({
        "score": tree.root_score(),
        "objective": tree.objective(),
        "barrier_valid": tree.is_valid(),
        "hard_valid": hard_valid,
        "hard_violations": hard,
        "violations": violations,
    });
    Ok((v, hard_valid))
}

fn cmd_evaluate(ctx: &Ctx, schedule: &Path, top: usize) -> Result<bool> {
    let (kb, plan) = (ctx.kb()?, ctx.plan()?);
    let s = load_schedule(schedule, &plan)?;
    let (v, ok) = report(&kb, &plan, &s, top)?;
    ctx.emit(&json_line(&v))?;
    Ok(ok)
}

fn cmd_initial(ctx: &Ctx) -> Result<bool> {
    let plan = ctx.plan()?;
    let s = initial_solution(&plan, ctx.seed.unwrap_or(42))?;
    ctx.emit(&s.to_csv(&plan))?;
    Ok(true)
}

fn optimizer_config(ctx: &Ctx, a: &OptimizeArgs) -> Result<OptimizerConfig> {
    let algo = Algorithm::from_name(&a.algo).with_context(|| {
        let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
        format!("unknown algorithm `{}` (expected one of {})", a.algo, names.join(", "))
    })?;
    let mut cfg = OptimizerConfig::new(algo);
    cfg.seed = ctx.seed.unwrap_or(cfg.seed);
    cfg.max_evaluations = a.max_evals.unwrap_or(cfg.max_evaluations);
    cfg.tries_per_step = a.tries.unwrap_or(cfg.tries_per_step);
    cfg.worst_k = a.worst_k.unwrap_or(cfg.worst_k);
    cfg.tabu_tenure = a.tenure.unwrap_or(cfg.tabu_tenure);
    cfg.validate()?;
    Ok(cfg)
}

fn initial_for(a: &OptimizeArgs, plan: &OperationPlan) -> Result<Schedule> {
    match &a.initial {
        Some(p) => load_schedule(p, plan),
        None => Ok(initial_solution(plan, a.initial_seed)?),
    }
}

fn cmd_optimize(ctx: &Ctx, a: &OptimizeArgs) -> Result<bool> {
    let (kb, plan) = (ctx.kb()?, ctx.plan()?);
    let cfg = optimizer_config(ctx, a)?;
    let initial = initial_for(a, &plan)?;
    let p = ShiftProblem::new(&kb, plan.clone());
    ctx.log(format!("{} seed {} for {} evaluations", cfg.algorithm.name(), cfg.seed, cfg.max_evaluations));
    let r = run(&p, &initial, &cfg)?;
    if let Some(t) = &a.trace {
        fs::write(t, trace_csv(&r.trace)).with_context(|| format!("writing {}", t.display()))?;
    }
    if let Some(o) = &ctx.out {
        fs::write(o, r.best.to_csv(&plan)).with_context(|| format!("writing {}", o.display()))?;
    }
    let root = |s: &Schedule| EvaluationTree::build(&kb, &ShiftInstance { schedule: s, plan: &plan }).map(|t| t.root_score());
    let v = json!({
        "algorithm": cfg.algorithm.name(),
        "seed": cfg.seed,
        "evaluations": r.evaluations,
        "initial_score": root(&initial)?,
        "best_score": root(&r.best)?,
        "best_objective": r.best_score,
        "infeasible_offspring": r.infeasible_offspring,
    });
    print!("{}", json_line(&v));
    Ok(true)
}

fn cmd_bench(ctx: &Ctx, a: &OptimizeArgs, batches: usize, seeds: Vec<u64>) -> Result<bool> {
    let (kb, plan) = (ctx.kb()?, ctx.plan()?);
    let base = optimizer_config(ctx, a)?;
    let seeds = if seeds.is_empty() {
        if batches == 0 {
            bail!("--batches must be at least 1");
        }
        (0..batches as u64).map(|i| base.seed + i).collect()
    } else {
        seeds
    };
    let mut spec = BenchSpec::seeded(&base, &seeds, initial_for(a, &plan)?);
    spec.output = ctx.out.clone();
    let p = ShiftProblem::new(&kb, plan);
    ctx.log(format!("{} batches of {}", seeds.len(), base.algorithm.name()));
    let results = run_bench(&p, &spec)?;
    let rows: Vec<_> = results.iter().enumerate().map(|(i, r)| r.summary(i)).collect();
    print!("{}", summary_csv(&rows));
    Ok(true)
}

fn snapshot(p: &Path, plan: &OperationPlan) -> Result<Snapshot> {
    Ok(Snapshot::from_schedule(plan.clone(), load_schedule(p, plan)?))
}

fn cmd_check_config(ctx: &Ctx, a: &CheckArgs) -> Result<bool> {
    let plan = ctx.plan()?;
    let mut store = PairStore::load_or_default(&a.db)?;
    let db = match store.get(&a.db_name) {
        Ok(db) => db.clone(),
        Err(_) => {
            let old = match &a.kb_old {
                Some(p) => load_kb(p)?,
                None => ctx.kb()?,
            };
            ctx.log(format!("new database `{}`", a.db_name));
            ReferencePairDb::new(a.db_name.clone(), old)
        }
    };
    let new = match (&a.kb_new, &a.edits) {
        (Some(p), _) => load_kb(p)?,
        (None, Some(p)) => {
            let edits: Vec<ConfigEdit> =
                serde_json::from_str(&read(p)?).with_context(|| format!("edits {}", p.display()))?;
            apply_edits(&db.config, &edits)?
        }
        (None, None) => bail!("one of --kb-new or --edits is required"),
    };
    let verdict = consistency_check(&new, &db)?;
    if let Some(path) = &a.what_if {
        let cands = a
            .candidates
            .iter()
            .map(|c| {
                let name = c.file_stem().map_or_else(|| c.display().to_string(), |s| s.to_string_lossy().into_owned());
                Ok((name, snapshot(c, &plan)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let r = what_if_config(&new, &db, &cands)?;
        fs::write(path, json_line(&serde_json::to_value(&r)?)).with_context(|| format!("writing {}", path.display()))?;
    }
    let mut out = json!({"database": a.db_name, "pairs": db.pairs.len(), "result": verdict});
    let mut ok = verdict.is_consistent();
    if a.adopt && ok {
        let before = snapshot(a.best_before.as_deref().expect("required by clap"), &plan)?;
        let after = snapshot(a.best_after.as_deref().expect("required by clap"), &plan)?;
        match adopt_config(&new, &before, &after, &db) {
            Ok(next) => {
                out["adopted"] = json!(true);
                out["pairs"] = json!(next.pairs.len());
                store.replace(next);
                store.save(&a.db)?;
            }
            Err(e) => {
                out["adopted"] = json!(false);
                out["refused"] = json!(e.to_string());
                ok = false;
            }
        }
    } else if !store.databases.contains_key(&a.db_name) {
        store.replace(db);
        store.save(&a.db)?;
    }
    if let Verdict::Inconsistent(inv) = &verdict {
        ctx.log(format!("{} pair(s) inverted", inv.len()));
    }
    ctx.emit(&json_line(&out))?;
    Ok(ok)
}

fn cmd_kb_validate(ctx: &Ctx) -> Result<bool> {
    let kb = ctx.kb()?;
    let schema = (!kb.rules.is_empty()).then(shift_schema);
    let d = kb.diagnostics(schema);
    ctx.emit(&json_line(&json!({"name": kb.name, "diagnostics": d})))?;
    Ok(d.is_empty())
}

fn cmd_queens(ctx: &Ctx, n: usize, algo: &str, max_evals: usize) -> Result<bool> {
    if n < 4 {
        bail!("n must be at least 4");
    }
    let algorithm = Algorithm::from_name(algo).with_context(|| format!("unknown algorithm `{algo}`"))?;
    let mut cfg = OptimizerConfig::new(algorithm);
    cfg.seed = ctx.seed.unwrap_or(cfg.seed);
    cfg.max_evaluations = max_evals;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed);
    let board = QueensBoard::random(n, &mut rng);
    let r = run(&QueensProblem::new(n), &board, &cfg)?;
    let conflicts = r.best.conflicts();
    ctx.log(format!("{} evaluations, {conflicts} conflicts", r.evaluations));
    let v = json!({
        "n": n,
        "algorithm": algorithm.name(),
        "seed": cfg.seed,
        "evaluations": r.evaluations,
        "conflicts": conflicts,
        "solved": conflicts == 0,
        "rows": r.best.rows(),
    });
    ctx.emit(&json_line(&v))?;
    Ok(conflicts == 0)
}
