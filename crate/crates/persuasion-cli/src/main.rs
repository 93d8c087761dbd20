//! Command-line front end for the persuasion solver.
//!
//! Four subcommands wire the library into reproducible runs:
//!
//! * `generate` — write a seeded instance of one of the three families;
//! * `solve` — solve an instance by one method and report the strategy;
//! * `evaluate` — exact payoffs for a method, optionally cross-checked by
//!   seeded Monte Carlo simulation;
//! * `experiment` — sweep one parameter over a grid and write the
//!   tab-separated ratio table.
//!
//! Exit codes are stable: 0 success, 2 usage, 3 I/O, 4 computation. All
//! randomized behavior flows from the seed flags, and the parallelism degree
//! (the `--threads` flag, or the `PERSUASION_THREADS` environment variable)
//! never changes numerical output.

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use persuasion::solver::StrategyRepr;
use persuasion::{
    build_threat_meta_mdp, evaluate_method, gen_indset_gadget, gen_random,
    gen_roadnav_with_layout, load_instance, myopic_prior_policy, myopic_response, nosig_value,
    obedient_policy, parse_graph, rollout, save_instance, solve_mdp, sweep, uninformative,
    write_dat, ActionAdvice, AgentPolicy, EvalError, EvalResult, GeneralSignaling, InstanceError,
    Method, PersuasionMDP, RandomSpec, RoadNavSpec, StrategyRef, SweepConfig, SweepFamily,
    SweepParam, ThreatStrategy, TieBreak,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const USAGE: u8 = 2;
const IO: u8 = 3;
const COMPUTE: u8 = 4;

struct Failure {
    code: u8,
    error: anyhow::Error,
}

type CliResult<T = ()> = Result<T, Failure>;

trait WithCode<T> {
    fn code(self, code: u8) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> WithCode<T> for Result<T, E> {
    fn code(self, code: u8) -> CliResult<T> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

/// Generators and I/O fail for two reasons with different exit codes: bad
/// spec values are usage mistakes, unreadable or invalid files are I/O.
fn instance_code(e: &InstanceError) -> u8 {
    match e {
        InstanceError::InvalidSpec(_)
        | InstanceError::DiscountOutOfRange(_)
        | InstanceError::NotIndependent { .. } => USAGE,
        InstanceError::ParseError { .. }
        | InstanceError::InvariantViolation(_)
        | InstanceError::Io(_) => IO,
    }
}

fn eval_code(e: &EvalError) -> u8 {
    match e {
        EvalError::InvalidSweep(_) | EvalError::InvalidHorizon(_) => USAGE,
        EvalError::Instance(ie) => instance_code(ie),
        EvalError::PointFailure { source, .. } => eval_code(source),
        _ => COMPUTE,
    }
}

trait InstanceCode<T> {
    fn instance_code(self) -> CliResult<T>;
}

impl<T> InstanceCode<T> for Result<T, InstanceError> {
    fn instance_code(self) -> CliResult<T> {
        self.map_err(|e| Failure {
            code: instance_code(&e),
            error: e.into(),
        })
    }
}

fn load(path: &Path) -> CliResult<PersuasionMDP> {
    load_instance(path).map_err(|e| Failure {
        code: instance_code(&e),
        error: anyhow::Error::from(e).context(format!("loading {}", path.display())),
    })
}

#[derive(Parser)]
#[command(
    name = "persuasion",
    version,
    about = "Dynamic Bayesian persuasion in MDPs: generate, solve, evaluate, sweep"
)]
struct Cli {
    /// Worker threads for sweeps (overrides PERSUASION_THREADS; default: all
    /// cores). Thread count never changes numerical output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance file.
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// Solve an instance by one method and print the principal payoff.
    Solve(SolveArgs),
    /// Evaluate a method exactly, optionally adding a Monte Carlo estimate.
    Evaluate(EvaluateArgs),
    /// Sweep a parameter over a grid and write a `.dat` ratio table.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Subcommand)]
enum GenerateCmd {
    /// Uniformly random transitions and rewards.
    Random(RandomArgs),
    /// Road-navigation DAG with congestion-dependent costs.
    Roadnav(RoadnavArgs),
    /// Independent-set gadget built from an edge-list graph file.
    Indset(IndsetArgs),
}

#[derive(Args)]
struct RandomArgs {
    /// Number of states.
    #[arg(long, default_value_t = 10)]
    states: usize,
    /// Number of actions, available everywhere.
    #[arg(long, default_value_t = 10)]
    actions: usize,
    /// Number of external parameter values.
    #[arg(long, default_value_t = 10)]
    thetas: usize,
    /// Number of terminal states (less than --states).
    #[arg(long, default_value_t = 5)]
    terminals: usize,
    /// Alignment of agent rewards with the principal's, in [-1, 1].
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
    /// Principal discount in [0, 1).
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    /// Agent discount in [0, 1).
    #[arg(long, default_value_t = 0.8)]
    gamma_tilde: f64,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (default: random-<seed>.json).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RoadnavArgs {
    /// Number of road-network nodes.
    #[arg(long, default_value_t = 20)]
    nodes: usize,
    /// Target number of edges (dead-end patching may add more).
    #[arg(long, default_value_t = 100)]
    edges: usize,
    /// Number of congestion levels.
    #[arg(long, default_value_t = 3)]
    thetas: usize,
    /// Alignment of agent rewards with the principal's, in [-1, 1].
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    beta: f64,
    /// Principal discount in [0, 1).
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    /// Agent discount in [0, 1).
    #[arg(long, default_value_t = 0.8)]
    gamma_tilde: f64,
    /// Make every edge rank congestion levels identically.
    #[arg(long)]
    uniform_congestion: bool,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (default: roadnav-<seed>.json).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct IndsetArgs {
    /// Graph file: first line `n m`, then m lines `u v` (0-based).
    #[arg(long)]
    graph: PathBuf,
    /// Agent discount, in (0, 1/2).
    #[arg(long, default_value_t = 0.4)]
    gamma_tilde: f64,
    /// Principal discount in [0, 1).
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    /// Output path (default: indset.json).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Vertex-to-state mapping path (default: output with .map.json).
    #[arg(long)]
    map_output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file.
    #[arg(short, long)]
    instance: PathBuf,
    /// One of: nosig-myop, nosig-fs, myop, am, threat, full-control.
    #[arg(long)]
    method: Method,
    /// Write the JSON solve report here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Instance file.
    #[arg(short, long)]
    instance: PathBuf,
    /// One of: nosig-myop, nosig-fs, myop, am, threat, full-control.
    #[arg(long)]
    method: Method,
    /// Add a Monte Carlo estimate over this many trajectories.
    #[arg(long)]
    samples: Option<usize>,
    /// Simulation truncation horizon (default derived from the discounts).
    #[arg(long)]
    horizon: Option<usize>,
    /// Simulation seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON evaluation here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Sweep random instances; ratios are method / full-control.
    Random(ExperimentRandomArgs),
    /// Sweep road-navigation instances; ratios are full-control / method.
    Roadnav(ExperimentRoadnavArgs),
}

#[derive(Args)]
struct ExperimentRandomArgs {
    /// Fixed number of states.
    #[arg(long, default_value_t = 10)]
    states: usize,
    /// Fixed number of actions.
    #[arg(long, default_value_t = 10)]
    actions: usize,
    /// Fixed number of parameter values.
    #[arg(long, default_value_t = 10)]
    thetas: usize,
    /// Fixed number of terminal states.
    #[arg(long, default_value_t = 5)]
    terminals: usize,
    /// Fixed alignment parameter.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
    /// Fixed principal discount.
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    /// Fixed agent discount.
    #[arg(long, default_value_t = 0.8)]
    gamma_tilde: f64,
    /// Which parameter the grid varies: beta, gamma, gamma-tilde, states,
    /// actions, thetas, terminals.
    #[arg(long)]
    param: SweepParam,
    /// Comma-separated grid values, one table row each.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    grid: Vec<f64>,
    /// Instances per grid point (at least 2).
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Base seed; per-instance seeds derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output table path.
    #[arg(short, long, default_value = "sweep.dat")]
    output: PathBuf,
}

#[derive(Args)]
struct ExperimentRoadnavArgs {
    /// Fixed number of nodes.
    #[arg(long, default_value_t = 20)]
    nodes: usize,
    /// Fixed target edge count.
    #[arg(long, default_value_t = 100)]
    edges: usize,
    /// Fixed number of congestion levels.
    #[arg(long, default_value_t = 3)]
    thetas: usize,
    /// Fixed alignment parameter.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    beta: f64,
    /// Fixed principal discount.
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    /// Fixed agent discount.
    #[arg(long, default_value_t = 0.8)]
    gamma_tilde: f64,
    /// Make every edge rank congestion levels identically.
    #[arg(long)]
    uniform_congestion: bool,
    /// Which parameter the grid varies: beta, gamma, gamma-tilde, thetas,
    /// nodes, edges.
    #[arg(long)]
    param: SweepParam,
    /// Comma-separated grid values, one table row each.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    grid: Vec<f64>,
    /// Instances per grid point (at least 2).
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// Base seed; per-instance seeds derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output table path.
    #[arg(short, long, default_value = "sweep.dat")]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let threads = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var("PERSUASION_THREADS") {
            Ok(v) => Some(
                v.parse::<usize>()
                    .map_err(|e| anyhow!("PERSUASION_THREADS must be a thread count: {e}"))
                    .code(USAGE)?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(anyhow!("thread count must be at least 1")).code(USAGE);
        }
        // Fails only if a pool already exists, in which case that pool keeps
        // serving; the degree never affects numerical output.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    match cli.command {
        Command::Generate(cmd) => cmd_generate(cmd),
        Command::Solve(args) => cmd_solve(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Experiment(cmd) => cmd_experiment(cmd),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| anyhow!("serializing output: {e}"))
        .code(COMPUTE)?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| anyhow!("writing {}: {e}", path.display()))
        .code(IO)
}

fn summary(path: &Path, mdp: &PersuasionMDP, seed: Option<u64>, extra: &str) -> String {
    let seed = seed.map_or(String::new(), |s| format!(", seed {s}"));
    format!(
        "wrote {} ({} states, {} actions, {} thetas{seed}{extra})",
        path.display(),
        mdp.n_states(),
        mdp.n_actions(),
        mdp.n_thetas(),
    )
}

fn cmd_generate(cmd: GenerateCmd) -> CliResult {
    match cmd {
        GenerateCmd::Random(args) => {
            let spec = RandomSpec {
                n_states: args.states,
                n_actions: args.actions,
                n_thetas: args.thetas,
                n_terminals: args.terminals,
                beta: args.beta,
                gamma: args.gamma,
                gamma_tilde: args.gamma_tilde,
                seed: args.seed,
            };
            let mdp = gen_random(&spec).instance_code()?;
            let path = args
                .output
                .unwrap_or_else(|| PathBuf::from(format!("random-{}.json", args.seed)));
            save_instance(&mdp, &path).instance_code()?;
            println!("{}", summary(&path, &mdp, Some(args.seed), ""));
        }
        GenerateCmd::Roadnav(args) => {
            let spec = RoadNavSpec {
                n_nodes: args.nodes,
                n_edges: args.edges,
                n_thetas: args.thetas,
                beta: args.beta,
                gamma: args.gamma,
                gamma_tilde: args.gamma_tilde,
                uniform_congestion: args.uniform_congestion,
                seed: args.seed,
            };
            let (mdp, layout) = gen_roadnav_with_layout(&spec).instance_code()?;
            let path = args
                .output
                .unwrap_or_else(|| PathBuf::from(format!("roadnav-{}.json", args.seed)));
            save_instance(&mdp, &path).instance_code()?;
            let extra = format!(
                "; {} edges, {} patched",
                layout.edges.len(),
                layout.patched
            );
            println!("{}", summary(&path, &mdp, Some(args.seed), &extra));
        }
        GenerateCmd::Indset(args) => {
            let text = std::fs::read_to_string(&args.graph)
                .map_err(|e| anyhow!("reading {}: {e}", args.graph.display()))
                .code(IO)?;
            let graph = parse_graph(&text).instance_code()?;
            let (mdp, map) =
                gen_indset_gadget(&graph, args.gamma_tilde, args.gamma).instance_code()?;
            let path = args.output.unwrap_or_else(|| PathBuf::from("indset.json"));
            let map_path = args
                .map_output
                .unwrap_or_else(|| path.with_extension("map.json"));
            save_instance(&mdp, &path).instance_code()?;
            write_json(&map_path, &map)?;
            let extra = format!(
                "; {} vertices, {} edges",
                graph.n,
                graph.edges.len()
            );
            println!("{}", summary(&path, &mdp, None, &extra));
            println!("wrote {} (vertex-to-state mapping)", map_path.display());
        }
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> CliResult {
    let mdp = load(&args.instance)?;
    let report = persuasion::solve(&mdp, args.method).code(COMPUTE)?;
    if let Some(path) = &args.output {
        write_json(path, &report)?;
    }
    println!("{:.6}", report.principal_payoff);
    Ok(())
}

/// The committed strategy and the agent's responding policy behind a method
/// tag, in owned form, for simulation.
enum OwnedStrategy {
    General(GeneralSignaling),
    Advice(ActionAdvice),
    Threat(ThreatStrategy),
}

impl OwnedStrategy {
    fn as_ref(&self) -> StrategyRef<'_> {
        match self {
            OwnedStrategy::General(g) => StrategyRef::General(g),
            OwnedStrategy::Advice(a) => StrategyRef::Advice(a),
            OwnedStrategy::Threat(t) => StrategyRef::Threat(t),
        }
    }
}

fn advice_of(mdp: &PersuasionMDP, report: &persuasion::SolveReport) -> CliResult<ActionAdvice> {
    let Some(StrategyRepr::Advice { pi }) = &report.strategy else {
        return Err(anyhow!("solve report carries no advice strategy")).code(COMPUTE);
    };
    ActionAdvice::new(mdp, pi.clone()).code(COMPUTE)
}

fn method_pair(mdp: &PersuasionMDP, method: Method) -> CliResult<(OwnedStrategy, AgentPolicy)> {
    match method {
        Method::NosigMyop => Ok((
            OwnedStrategy::General(uninformative(mdp)),
            myopic_prior_policy(mdp),
        )),
        Method::NosigFs => {
            let (_, policy) = nosig_value(mdp).code(COMPUTE)?;
            Ok((OwnedStrategy::General(uninformative(mdp)), policy))
        }
        Method::Myop => {
            let report = persuasion::opt_sig_myop(mdp, &mdp.agent_reward).code(COMPUTE)?;
            let advice = advice_of(mdp, &report)?;
            let response = myopic_response(mdp, &advice);
            Ok((OwnedStrategy::Advice(advice), response))
        }
        Method::Am => {
            let report = persuasion::opt_sig_am(mdp).code(COMPUTE)?;
            let advice = advice_of(mdp, &report)?;
            let policy = obedient_policy(mdp, &advice);
            Ok((OwnedStrategy::Advice(advice), policy))
        }
        Method::Threat => {
            let (threat, _) = persuasion::threat_strategy(mdp).code(COMPUTE)?;
            let meta = build_threat_meta_mdp(mdp, &threat);
            let (_, response) = solve_mdp(&meta, TieBreak::AdvisedFirst).code(COMPUTE)?;
            Ok((OwnedStrategy::Threat(threat), response))
        }
        Method::FullControl => Err(anyhow!(
            "Monte Carlo simulation is not available for full-control; \
             use `evaluate --method full-control` without --samples"
        ))
        .code(USAGE),
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> CliResult {
    let mdp = load(&args.instance)?;
    let exact = evaluate_method(&mdp, args.method)
        .map_err(|e| Failure {
            code: eval_code(&e),
            error: e.into(),
        })?;
    println!("method: {}", args.method);
    println!("principal payoff: {:.6}", exact.principal_payoff);
    println!("agent payoff: {:.6}", exact.agent_payoff);

    let mut monte_carlo: Option<EvalResult> = None;
    if let Some(samples) = args.samples {
        let (strategy, policy) = method_pair(&mdp, args.method)?;
        let mc = rollout(
            &mdp,
            strategy.as_ref(),
            &policy,
            args.horizon,
            samples,
            args.seed,
        )
        .map_err(|e| Failure {
            code: eval_code(&e),
            error: e.into(),
        })?;
        let stats = mc.monte_carlo.as_ref().expect("rollout attaches statistics");
        let scale = (samples as f64).sqrt();
        println!(
            "monte carlo ({} samples, horizon {}): principal {:.6} (se {:.6}), agent {:.6} (se {:.6})",
            stats.n_samples,
            stats.horizon,
            mc.principal_payoff,
            stats.principal_sd / scale,
            mc.agent_payoff,
            stats.agent_sd / scale,
        );
        monte_carlo = Some(mc);
    }

    if let Some(path) = &args.output {
        match &monte_carlo {
            Some(mc) => write_json(path, &serde_json::json!({ "exact": exact, "monte_carlo": mc }))?,
            None => write_json(path, &exact)?,
        }
    }
    Ok(())
}

fn cmd_experiment(cmd: ExperimentCmd) -> CliResult {
    let (config, output) = match cmd {
        ExperimentCmd::Random(args) => (
            SweepConfig {
                family: SweepFamily::Random(RandomSpec {
                    n_states: args.states,
                    n_actions: args.actions,
                    n_thetas: args.thetas,
                    n_terminals: args.terminals,
                    beta: args.beta,
                    gamma: args.gamma,
                    gamma_tilde: args.gamma_tilde,
                    seed: 0,
                }),
                param: args.param,
                grid: args.grid,
                instances_per_point: args.instances,
                base_seed: args.seed,
            },
            args.output,
        ),
        ExperimentCmd::Roadnav(args) => (
            SweepConfig {
                family: SweepFamily::RoadNav(RoadNavSpec {
                    n_nodes: args.nodes,
                    n_edges: args.edges,
                    n_thetas: args.thetas,
                    beta: args.beta,
                    gamma: args.gamma,
                    gamma_tilde: args.gamma_tilde,
                    uniform_congestion: args.uniform_congestion,
                    seed: 0,
                }),
                param: args.param,
                grid: args.grid,
                instances_per_point: args.instances,
                base_seed: args.seed,
            },
            args.output,
        ),
    };
    let rows = sweep(&config).map_err(|e| Failure {
        code: eval_code(&e),
        error: e.into(),
    })?;
    let degenerate = rows.iter().filter(|r| r.degenerate).count();
    write_dat(&rows, &output)
        .map_err(|e| anyhow!("writing {}: {e}", output.display()))
        .code(IO)?;
    println!(
        "wrote {} ({} rows, {} instances per point{})",
        output.display(),
        rows.len(),
        config.instances_per_point,
        if degenerate > 0 {
            format!(", {degenerate} degenerate rows")
        } else {
            String::new()
        }
    );
    Ok(())
}
