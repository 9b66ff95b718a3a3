use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use kos_core::kernel::{KernelState, Status};
use kos_core::reduce::normalize;
use kos_core::runtime::{recover, Action, Env, FileWal, RecoverError, Runtime};
use kos_core::search::{build_root_cause, counterfactual_contrib, failure_goal, Budget, Contribution, RootCauseOutcome};
use kos_core::surface::{parse_signals, parse_term_with, print_report, print_term, Diagnostic};
use kos_core::typeck::Checker;
use kos_core::{Fuel, Term};

const OK: u8 = 0;
const DIAGNOSTICS: u8 = 1;
const UNKNOWN: u8 = 2;
const DIVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "kos", version, about = "Proof-carrying knowledge state: check, run, replay and explain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
}

#[derive(Args)]
struct BudgetArgs {
    /// Reduction steps available to each judgment or search.
    #[arg(long, default_value_t = 1_000_000, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    fuel: u64,
    /// Largest proof size tried by search.
    #[arg(long, default_value_t = 64, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    depth: u64,
    #[arg(long = "timeout-ms", default_value_t = 5_000, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    timeout_ms: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Typecheck definition files.
    Check {
        #[arg(long, required = true)]
        defs: Vec<PathBuf>,
    },
    /// Print the normal form of a term and the number of logical steps.
    Normalize {
        #[arg(long)]
        defs: Vec<PathBuf>,
        term: String,
    },
    /// Feed a signal stream through the runtime, writing a fresh WAL.
    Run {
        #[arg(long, required = true)]
        defs: Vec<PathBuf>,
        #[arg(long)]
        signals: PathBuf,
        #[arg(long)]
        wal: PathBuf,
        /// Tear the write of this record (1-based) and fail the commit.
        #[arg(long = "inject-commit-fault", num_args = 0..=1, default_missing_value = "1")]
        inject_commit_fault: Option<u64>,
    },
    /// Rebuild state from a WAL and print its digest.
    Replay {
        #[arg(long, required = true)]
        defs: Vec<PathBuf>,
        #[arg(long)]
        wal: PathBuf,
    },
    /// Build a root-cause report for a failure item.
    Trace {
        #[arg(long, required = true)]
        defs: Vec<PathBuf>,
        /// Recover state from this WAL first.
        #[arg(long)]
        wal: Option<PathBuf>,
        failure: String,
    },
    /// Is a fact needed to explain a failure?
    Whatif {
        #[arg(long, required = true)]
        defs: Vec<PathBuf>,
        #[arg(long)]
        wal: Option<PathBuf>,
        #[arg(long)]
        remove: String,
        #[arg(long)]
        failure: String,
    },
}

/// Failure of a command: message lines for stderr and an exit code.
struct Fail(u8, Vec<String>);

impl Fail {
    fn diag(msg: impl Into<String>) -> Fail {
        Fail(DIAGNOSTICS, vec![msg.into()])
    }
}

type Outcome = Result<u8, Fail>;

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::diag(format!("{}: {e}", path.display())))
}

/// Concatenates definition files; diagnostics are mapped back to their file.
fn load_env(paths: &[PathBuf]) -> Result<Env, Fail> {
    let mut src = String::new();
    let mut starts = Vec::new();
    for p in paths {
        starts.push((src.lines().count() as u32, p));
        src.push_str(&read(p)?);
        if !src.ends_with('\n') {
            src.push('\n');
        }
    }
    Env::load(&src).map_err(|ds| {
        let locate = |d: &Diagnostic| {
            let (start, path) = starts.iter().rev().find(|(s, _)| *s < d.span.line).copied().unwrap_or((0, &paths[0]));
            let mut d = d.clone();
            d.span.line -= start;
            format!("{}:{d}", path.display())
        };
        Fail(DIAGNOSTICS, ds.iter().map(locate).collect())
    })
}

fn state_of(env: &Env, wal: Option<&Path>, budget: Budget) -> Result<KernelState, Fail> {
    match wal {
        None => Ok(env.initial.clone()),
        Some(w) => recover(w, env, budget).map(|r| r.state).map_err(recover_failure),
    }
}

fn recover_failure(e: RecoverError) -> Fail {
    match e {
        RecoverError::ReplayDivergence { .. } => Fail(DIVERGENCE, vec![e.to_string()]),
        RecoverError::Io(_) => Fail::diag(e.to_string()),
    }
}

fn action_text(a: &Action) -> String {
    match a {
        Action::Committed { record } => format!(
            "committed #{} {} clock {}->{} state {}",
            record.seq,
            record.event,
            record.clock_before,
            record.clock_after,
            record.state_after.short()
        ),
        Action::Rejected { event, reason } => format!("rejected {event}: {reason}"),
        Action::Deferred { signal, dependency } => {
            format!("deferred signal {signal} until {} is known", print_term(&dependency.literal))
        }
        Action::Completed { signal, event } => format!("completed signal {signal} as {event}"),
        Action::Dropped { signal, reason } => format!("dropped signal {signal}: {reason}"),
        Action::Abandoned { signal } => format!("abandoned signal {signal}"),
        Action::CommitFailed { event, cause } => format!("commit failed for {event}: {cause}"),
    }
}

fn run(cli: &Cli, budget: Budget) -> Outcome {
    match &cli.command {
        Command::Check { defs } => {
            let env = load_env(defs)?;
            let items = env.initial.knowledge.len();
            println!(
                "ok: {} declarations, {} events, {} facts, {} templates, {} watchers",
                env.defs.ctx.len(),
                env.defs.events.len(),
                items,
                env.templates.len(),
                env.watchers.len()
            );
            Ok(OK)
        }
        Command::Normalize { defs, term } => {
            let env = if defs.is_empty() { None } else { Some(load_env(defs)?) };
            let ctx = env.as_ref().map(|e| e.initial.view(&e.defs)).unwrap_or_default();
            let globals = ctx.entries().iter().map(|e| e.name().to_owned()).collect();
            let t = parse_term_with(term, &globals).map_err(|d| Fail::diag(d.to_string()))?;
            let mut fuel = Fuel::new(budget.fuel);
            Checker::new(&ctx, &mut fuel).infer(&t).map_err(|f| match f {
                kos_core::typeck::Failure::Unknown => Fail(UNKNOWN, vec!["unknown: fuel exhausted".into()]),
                f => Fail::diag(format!("ill-typed: {f}")),
            })?;
            let mut fuel = Fuel::new(budget.fuel);
            let n = normalize(&t, &ctx, &mut fuel)
                .map_err(|e| Fail(UNKNOWN, vec![format!("unknown: {e}")]))?;
            match cli.format {
                Format::Text => {
                    println!("{}", print_term(&n.term));
                    println!("steps: {}", n.logical_steps());
                }
                Format::Structured => println!(
                    "{}",
                    json!({"normal_form": print_term(&n.term), "steps": n.logical_steps(), "trace": n.trace.len()})
                ),
            }
            Ok(OK)
        }
        Command::Run { defs, signals, wal, inject_commit_fault } => {
            let env = load_env(defs)?;
            let stream = parse_signals(&read(signals)?).map_err(|d| Fail::diag(format!("{}:{d}", signals.display())))?;
            let store = FileWal::create(wal)
                .map_err(|e| Fail::diag(format!("{}: {e}", wal.display())))?
                .with_fault_at(*inject_commit_fault);
            let mut rt = Runtime::new(&env, store, budget);
            for s in stream {
                rt.inject(s).map_err(|e| Fail::diag(e.to_string()))?;
            }
            let actions = rt.run_to_quiescence();
            for a in &actions {
                match cli.format {
                    Format::Text => println!("{}", action_text(a)),
                    Format::Structured => println!("{}", serde_json::to_string(a).expect("actions serialize")),
                }
            }
            let digest = rt.state().state_hash();
            match cli.format {
                Format::Text => {
                    println!("records {}", rt.store().records());
                    println!("state {digest}");
                }
                Format::Structured => {
                    println!("{}", json!({"final": digest, "records": rt.store().records(), "clock": rt.state().clock}))
                }
            }
            if rt.is_halted() {
                return Err(Fail::diag("stopped after a failed commit; live state is the last committed one"));
            }
            Ok(OK)
        }
        Command::Replay { defs, wal } => {
            let env = load_env(defs)?;
            let r = recover(wal, &env, budget).map_err(recover_failure)?;
            if let Some((line, why)) = &r.discarded {
                eprintln!("discarded log tail from line {line}: {why:?}");
            }
            match cli.format {
                Format::Text => {
                    println!("records {}", r.records);
                    println!("state {}", r.state.state_hash());
                }
                Format::Structured => println!(
                    "{}",
                    json!({"final": r.state.state_hash(), "records": r.records, "clock": r.state.clock})
                ),
            }
            Ok(OK)
        }
        Command::Trace { defs, wal, failure } => {
            let env = load_env(defs)?;
            let state = state_of(&env, wal.as_deref(), budget)?;
            let report_ty = report_type(&env, &state, failure)?;
            let items: Vec<_> = state.get_knowledge().cloned().collect();
            let view = state.view(&env.defs);
            match build_root_cause(&view, &state.facts(&env.defs), &items, failure, &report_ty, budget) {
                RootCauseOutcome::Found(rc) => {
                    match cli.format {
                        Format::Text => print!("{}", print_report(&rc)),
                        Format::Structured => println!(
                            "{}",
                            json!({
                                "parts": rc.parts,
                                "verified": rc.leaves.iter().map(|l| l.render()).collect::<Vec<_>>(),
                                "report": print_term(&rc.report),
                            })
                        ),
                    }
                    Ok(OK)
                }
                RootCauseOutcome::NotFound => {
                    println!("not found: no report for `{failure}` within the search bound");
                    Ok(OK)
                }
                RootCauseOutcome::Unknown => Err(Fail(UNKNOWN, vec!["unknown: budget exhausted".into()])),
            }
        }
        Command::Whatif { defs, wal, remove, failure } => {
            let env = load_env(defs)?;
            let state = state_of(&env, wal.as_deref(), budget)?;
            let report_ty = report_type(&env, &state, failure)?;
            let view = state.view(&env.defs);
            let goal = failure_goal(&view, &report_ty, failure, budget)
                .ok_or_else(|| Fail::diag("the report type is not a dependent pair over the failure"))?;
            let verdict = counterfactual_contrib(&view, &state.facts(&env.defs), remove, &goal, budget)
                .map_err(|e| Fail::diag(e.to_string()))?;
            let word = match verdict {
                Contribution::Necessary => "Necessary",
                Contribution::Redundant => "Redundant",
                Contribution::Unknown => "Unknown",
            };
            match cli.format {
                Format::Text => println!("{word}"),
                Format::Structured => println!("{}", json!({"fact": remove, "failure": failure, "verdict": word})),
            }
            Ok(if verdict == Contribution::Unknown { UNKNOWN } else { OK })
        }
    }
}

fn report_type(env: &Env, state: &KernelState, failure: &str) -> Result<Term, Fail> {
    let item = state
        .knowledge
        .get(failure)
        .filter(|i| i.status == Status::Active)
        .ok_or_else(|| Fail::diag(format!("no active item `{failure}`")))?;
    env.report_type(&item.ty)
        .ok_or_else(|| Fail::diag(format!("no trace watcher covers the type of `{failure}`")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let b = &cli.budget;
    let budget = Budget::new(b.fuel, b.depth as usize, b.timeout_ms);
    match run(&cli, budget) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, lines)) => {
            for l in lines {
                eprintln!("{l}");
            }
            ExitCode::from(code)
        }
    }
}
