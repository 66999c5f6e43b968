use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use adaptive_pms::engine::{self, EngineConfig, DEFAULT_MAX_STEPS};
use adaptive_pms::lang::parse_action;
use adaptive_pms::lang::scenario::{parse_scenario, Scenario, ScriptedEvent, DEFAULT_SEARCH_BOUND};
use adaptive_pms::lang::validate::{validate, Severity};
use adaptive_pms::monitor::recover;
use adaptive_pms::sim::SimWorld;
use adaptive_pms::trace::{self, TraceFormat};
use adaptive_pms::WorldState;

const EXIT_INPUT: u8 = 1;
const EXIT_NO_PLAN: u8 = 4;

/// Engine stack size; deep procedure inlining recurses.
const STACK_BYTES: usize = 256 << 20;

#[derive(Parser)]
#[command(name = "pms", version, about = "Adaptive process-management engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario against the simulated environment and print its trace.
    Run {
        scenario: PathBuf,
        /// Seed for simulated task durations (overrides the scenario's `seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Maximum number of recovery work items per discrepancy.
        #[arg(long, default_value_t = DEFAULT_SEARCH_BOUND)]
        search_bound: u32,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        trace_format: Format,
        /// Write the trace here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Extra exogenous event, e.g. `40:disconnect(a3)`. Repeatable.
        #[arg(long, value_name = "TICK:ACTION")]
        inject: Vec<String>,
    },
    /// Parse and validate a scenario.
    Check { scenario: PathBuf },
    /// Compute a recovery prefix between two state dumps (one ground atom per line).
    Plan {
        scenario: PathBuf,
        expected: PathBuf,
        actual: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEARCH_BOUND)]
        search_bound: u32,
    },
    /// Re-execute a recorded NDJSON trace and verify every state digest.
    Replay { scenario: PathBuf, trace: PathBuf },
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<Scenario, String> {
    let text = read(path)?;
    parse_scenario(&text).map_err(|e| {
        let sep = |x: &adaptive_pms::error::SyntaxError| if x.line > 0 { ":" } else { ": " };
        e.0.iter().map(|x| format!("{}{}{x}", path.display(), sep(x))).collect::<Vec<_>>().join("\n")
    })
}

fn parse_inject(s: &str) -> Result<ScriptedEvent, String> {
    let (tick, action) = s.split_once(':').ok_or_else(|| format!("`{s}`: expected TICK:ACTION"))?;
    let tick = tick.trim().parse().map_err(|_| format!("`{s}`: bad tick"))?;
    let action = parse_action(action.trim()).map_err(|e| format!("`{s}`: {e}"))?;
    Ok(ScriptedEvent { tick, action })
}

fn explicit(m: &ArgMatches, id: &str) -> bool {
    m.subcommand().is_some_and(|(_, sub)| sub.value_source(id) == Some(ValueSource::CommandLine))
}

fn state_from_dump(path: &Path) -> Result<WorldState, String> {
    let text = read(path)?;
    let atoms = trace::parse_dump(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(WorldState::new(atoms))
}

fn execute(cli: Cli, matches: &ArgMatches) -> Result<u8, String> {
    match cli.command {
        Command::Run { scenario, seed, search_bound, max_steps, trace_format, out, inject } => {
            let mut scn = load(&scenario)?;
            for s in &inject {
                let ev = parse_inject(s)?;
                if !scn.domain.is_exogenous(&ev.action.name) {
                    return Err(format!("`{}` is not a declared exogenous action", ev.action.name));
                }
                scn.script.push(ev);
            }
            let bound = if explicit(matches, "search_bound") { search_bound } else { scn.search_bound };
            let cfg = EngineConfig { search_bound: bound, max_steps };
            let mut sim = SimWorld::new(&scn, seed.unwrap_or(scn.seed));
            let report = engine::run(&scn, &mut sim, &cfg);
            let fmt = match trace_format {
                Format::Json => TraceFormat::Json,
                Format::Text => TraceFormat::Text,
            };
            let text = trace::render(&report.trace, fmt);
            match out {
                Some(p) => fs::write(&p, text).map_err(|e| format!("{}: {e}", p.display()))?,
                None => print!("{text}"),
            }
            eprintln!(
                "{}: {} after {} ticks, {} discrepancies, {} recovery plans",
                scenario.display(),
                report.outcome.label(),
                report.ticks,
                report.discrepancies(),
                report.plans.len()
            );
            if let engine::Outcome::Error(e) = &report.outcome {
                eprintln!("error: {e}");
            }
            Ok(report.outcome.exit_code() as u8)
        }
        Command::Check { scenario } => {
            let scn = load(&scenario)?;
            let diags = validate(&scn);
            for d in &diags {
                println!("{}: {d}", scenario.display());
            }
            if diags.iter().any(|d| d.severity() == Severity::Error) {
                return Ok(EXIT_INPUT);
            }
            println!(
                "{}: ok ({} services, {} tasks, {} procs)",
                scenario.display(),
                scn.domain.services().len(),
                scn.domain.tasks.len(),
                scn.domain.procs.len()
            );
            Ok(0)
        }
        Command::Plan { scenario, expected, actual, search_bound } => {
            let scn = load(&scenario)?;
            let bound = if explicit(matches, "search_bound") { search_bound } else { scn.search_bound };
            let (exp, act) = (state_from_dump(&expected)?, state_from_dump(&actual)?);
            let mut n = 0;
            let mut fresh = || {
                n += 1;
                format!("rec{n}")
            };
            match recover(&scn.domain, &exp, &act, bound, &mut fresh).map_err(|e| e.to_string())? {
                Some(plan) => {
                    println!("{}", plan.prefix);
                    eprintln!("{} work items, {} configurations expanded", plan.items.len(), plan.stats.nodes);
                    Ok(0)
                }
                None => {
                    eprintln!("no recovery plan within {bound} work items");
                    Ok(EXIT_NO_PLAN)
                }
            }
        }
        Command::Replay { scenario, trace: path } => {
            let scn = load(&scenario)?;
            let records = trace::from_ndjson(&read(&path)?)?;
            let state = trace::replay(&scn, &records)?;
            println!("{}: {} records verified, final digest {}", path.display(), records.len(), state.digest());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PMS_LOG_LEVEL", "warn")).init();
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let worker = std::thread::Builder::new().stack_size(STACK_BYTES).spawn(move || execute(cli, &matches));
    let result = worker.expect("spawn engine thread").join().unwrap_or_else(|_| Err("engine panicked".into()));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
