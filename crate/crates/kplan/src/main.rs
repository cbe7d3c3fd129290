use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kplan::ground::{ground_program, GroundProgram, Grounding};
use kplan::kparse;
use kplan::plan::{self, Limits, Plan, PlanError};
use kplan::secure::{self, Reason, SecureError};
use kplan::transition::{self, probe_determined, probe_plain, StepMode, TransitionError};

const EXIT_FOUND: u8 = 0;
const EXIT_NONE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_CAP: u8 = 3;

#[derive(Parser)]
#[command(name = "kplan", about = "Planner for action programs with typed fluents")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a program and search for plans answering its goal query.
    Solve(SolveArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Program file.
    file: PathBuf,
    /// Background facts and rules.
    #[arg(long)]
    background: Option<PathBuf>,
    /// Report only plans that work from every initial state.
    #[arg(long)]
    secure: bool,
    /// Check the plan in this file instead of searching.
    #[arg(long)]
    check_plan: Option<PathBuf>,
    /// One action per step (default).
    #[arg(long, conflicts_with = "concurrent")]
    sequential: bool,
    /// Allow concurrent action sets.
    #[arg(long)]
    concurrent: bool,
    /// Stop after this many plans.
    #[arg(long, default_value_t = 1)]
    max_plans: usize,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
    /// Print the ground program and exit.
    #[arg(long)]
    dump_ground: bool,
    /// Print structural domain properties and exit.
    #[arg(long)]
    probe: bool,
}

#[derive(Serialize)]
struct JsonOut {
    result: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    plans: Vec<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counterexample: Option<JsonCounterexample>,
}

#[derive(Serialize)]
struct JsonCounterexample {
    reason: String,
    states: Vec<Vec<String>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Cmd::Solve(args) = cli.cmd;
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

enum CliError {
    Input(String),
    Cap(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Cap(_) => EXIT_CAP,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Cap(m) => f.write_str(m),
        }
    }
}

impl From<TransitionError> for CliError {
    fn from(e: TransitionError) -> Self {
        CliError::Cap(e.to_string())
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Transition(t) => t.into(),
            PlanError::NoQuery => CliError::Input(e.to_string()),
        }
    }
}

impl From<SecureError> for CliError {
    fn from(e: SecureError) -> Self {
        match e {
            SecureError::Transition(t) => t.into(),
            SecureError::Plan(p) => p.into(),
        }
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load(args: &SolveArgs) -> Result<(Grounding, usize), CliError> {
    let text = read(&args.file)?;
    let bg = args.background.as_ref().map(read).transpose()?;
    let prog =
        kparse::parse(&text, bg.as_deref()).map_err(|e| CliError::Input(e.to_string()))?;
    let unsafe_vars = kparse::check_safety(&prog);
    if !unsafe_vars.is_empty() {
        let msgs: Vec<String> = unsafe_vars
            .iter()
            .map(|d| format!("unsafe variable `{}` in `{}`", d.variable, d.statement))
            .collect();
        return Err(CliError::Input(msgs.join("\n")));
    }
    let background_rules = prog.background.rules.len();
    let grounding = ground_program(&prog).map_err(|e| CliError::Input(e.to_string()))?;
    Ok((grounding, background_rules))
}

fn named_plans(gp: &GroundProgram, plans: &[Plan]) -> Vec<Vec<Vec<String>>> {
    plans
        .iter()
        .map(|p| {
            p.iter()
                .map(|step| step.iter().map(|&a| gp.act_text(a).to_string()).collect())
                .collect()
        })
        .collect()
}

fn emit(args: &SolveArgs, gp: &GroundProgram, result: &str, plans: &[Plan], cex: Option<&secure::Counterexample>) {
    if args.json {
        let out = JsonOut {
            result: result.to_string(),
            plans: named_plans(gp, plans),
            counterexample: cex.map(|c| JsonCounterexample {
                reason: match c.reason {
                    Reason::NoInitialState => "no initial state".to_string(),
                    Reason::Stuck => "stuck".to_string(),
                    Reason::GoalMissed => "goal missed".to_string(),
                },
                states: c
                    .states
                    .iter()
                    .map(|s| transition::state_texts(gp, s))
                    .collect(),
            }),
        };
        println!("{}", serde_json::to_string_pretty(&out).expect("serialize"));
        return;
    }
    println!("{result}");
    for (i, p) in plans.iter().enumerate() {
        println!("PLAN {}:", i + 1);
        print!("{}", plan::format_plan(gp, p));
    }
    if let Some(c) = cex {
        let why = match c.reason {
            Reason::NoInitialState => "no legal initial state",
            Reason::Stuck => "plan cannot be executed from this trajectory",
            Reason::GoalMissed => "goal not established on this trajectory",
        };
        println!("COUNTEREXAMPLE ({why}):");
        for (i, s) in c.states.iter().enumerate() {
            println!("STATE {i}: {{{}}}", transition::state_texts(gp, s).join(", "));
        }
    }
}

fn run(args: &SolveArgs) -> Result<u8, CliError> {
    let (grounding, background_rules) = load(args)?;
    let gp = &grounding.ground;
    if args.dump_ground {
        print!("{}", gp.dump());
        return Ok(EXIT_FOUND);
    }
    let mode = if args.concurrent { StepMode::Concurrent } else { StepMode::Sequential };
    if args.probe {
        let horizon = gp.query.as_ref().map_or(0, |q| q.plan_length);
        let plain = probe_plain(background_rules, gp);
        let determined = probe_determined(gp, horizon, transition::DEFAULT_CAP)?;
        println!("plain: {}", plain.is_plain());
        println!("  background empty: {}", plain.background_empty);
        println!("  executability over fluents only: {}", plain.exec_bodies_fluent_only);
        println!("  effects without default negation: {}", plain.no_default_negation_in_effects);
        println!("  one action per step: {}", plain.one_action_per_step);
        println!("determined up to horizon {horizon}: {determined}");
        return Ok(EXIT_FOUND);
    }
    if let Some(plan_file) = &args.check_plan {
        let text = read(plan_file)?;
        let p = plan::parse_plan(gp, &text).map_err(CliError::Input)?;
        if args.secure {
            return match secure::check_secure(gp, &p, transition::DEFAULT_CAP)? {
                Ok(()) => {
                    emit(args, gp, "SECURE", std::slice::from_ref(&p), None);
                    Ok(EXIT_FOUND)
                }
                Err(cex) => {
                    emit(args, gp, "INSECURE", &[], Some(&cex));
                    Ok(EXIT_NONE)
                }
            };
        }
        return match plan::find_witness(gp, &p)? {
            Some(_) => {
                emit(args, gp, "OPTIMISTIC", std::slice::from_ref(&p), None);
                Ok(EXIT_FOUND)
            }
            None => {
                emit(args, gp, "NOT A PLAN", &[], None);
                Ok(EXIT_NONE)
            }
        };
    }
    let limits = Limits { max_plans: args.max_plans, ..Limits::default() };
    let plans = if args.secure {
        secure::secure_plans(gp, mode, limits)?
    } else {
        plan::optimistic_plans(gp, mode, limits)?
    };
    if plans.is_empty() {
        emit(args, gp, "NO PLAN", &[], None);
        Ok(EXIT_NONE)
    } else {
        emit(args, gp, "FOUND", &plans, None);
        Ok(EXIT_FOUND)
    }
}
