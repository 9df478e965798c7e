use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use jellygym::agents::{pretrain_supervised, valid_mass, AgentConfig, JellyGym, PretrainConfig, RewardConfig};
use jellygym::engine::{generate_board, theoretical_move_count};
use jellygym::harness::{
    compare, evaluate, load_level_dir, report_to_string, selfcheck, train, write_report, Agent, AgentKind,
};
use jellygym::levels::{builtin_tiers, resolve_level, LevelSpec};
use jellygym::nn::{save_checkpoint, CheckpointMeta, Network};
use jellygym::rng::seeded;
use jellygym::Error;

#[derive(Parser)]
#[command(
    name = "jellygym",
    version,
    about = "Match-3 engine and automated playtesting agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the number of directed neighbour swaps on a full board.
    Enumerate {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
    },
    /// Supervised warm-up on valid moves of random boards.
    Pretrain {
        #[arg(long)]
        boards: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = PretrainConfig::default().passes)]
        passes: usize,
    },
    /// Train the DDQN agent on one level.
    Train(TrainArgs),
    /// Evaluate one agent on one level.
    Eval {
        /// Level file or builtin name (tier1..tier5).
        #[arg(long)]
        level: String,
        #[arg(long, value_enum)]
        agent: AgentArg,
        /// Checkpoint for the jellygym agent.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        matches: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate several agents on every level in a directory.
    Compare {
        /// Directory of level files, or `builtin`.
        #[arg(long)]
        levels: String,
        #[arg(long, value_enum, value_delimiter = ',')]
        agents: Vec<AgentArg>,
        #[arg(long)]
        matches: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
        /// Checkpoint for the jellygym agent.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Selfcheck,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    level: String,
    #[arg(long)]
    episodes: u32,
    #[arg(long)]
    seed: u64,
    /// Final checkpoint.
    #[arg(long)]
    out: PathBuf,
    /// Learning-curve CSV.
    #[arg(long)]
    curve: PathBuf,
    /// Start from this checkpoint instead of a fresh network.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long)]
    k1: Option<usize>,
    #[arg(long)]
    k2: Option<usize>,
    #[arg(long)]
    replay: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    gamma_min: Option<f64>,
    #[arg(long)]
    gamma_max: Option<f64>,
    #[arg(long)]
    alpha_rl: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AgentArg {
    Random,
    Smart,
    Jellygym,
}

impl From<AgentArg> for AgentKind {
    fn from(a: AgentArg) -> Self {
        match a {
            AgentArg::Random => AgentKind::Random,
            AgentArg::Smart => AgentKind::Smart,
            AgentArg::Jellygym => AgentKind::JellyGym,
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Enumerate { rows, cols } => {
            let n = theoretical_move_count(rows, cols).map_err(|e| Failure::Usage(e.to_string()))?;
            println!("{n}");
            Ok(())
        }
        Command::Pretrain {
            boards,
            out,
            seed,
            passes,
        } => run_pretrain(boards, &out, seed, passes),
        Command::Train(args) => run_train(args),
        Command::Eval {
            level,
            agent,
            model,
            matches,
            seed,
            report,
        } => {
            if matches == 0 {
                return Err(Failure::Usage("--matches must be at least 1".into()));
            }
            let level = resolve_level(&level)?;
            let agent = build_agent(agent.into(), model.as_deref(), seed)?;
            let row = evaluate(&agent, &level, matches, seed)?;
            let rows = [row];
            print!("{}", report_to_string(&rows));
            if let Some(path) = report {
                write_report(&path, &rows)?;
            }
            Ok(())
        }
        Command::Compare {
            levels,
            agents,
            matches,
            seed,
            report,
            model,
        } => {
            if matches == 0 || agents.is_empty() {
                return Err(Failure::Usage("need --matches >= 1 and at least one agent".into()));
            }
            let levels: Vec<LevelSpec> = if levels == "builtin" {
                builtin_tiers()
            } else {
                load_level_dir(Path::new(&levels))?
            };
            let agents = agents
                .into_iter()
                .map(|a| build_agent(a.into(), model.as_deref(), seed))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = compare(&levels, &agents, matches, seed, Some(&report))?;
            print!("{}", report_to_string(&rows));
            Ok(())
        }
        Command::Selfcheck => {
            let results = selfcheck();
            let mut ok = true;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                ok &= r.passed;
            }
            if ok {
                Ok(())
            } else {
                Err(Failure::Runtime(Error::Validation("self-check failed".into())))
            }
        }
    }
}

/// Without a checkpoint the jellygym agent is a freshly initialized network.
fn build_agent(kind: AgentKind, model: Option<&Path>, seed: u64) -> Result<Agent, Failure> {
    Ok(match kind {
        AgentKind::Random => Agent::Random,
        AgentKind::Smart => Agent::Smart,
        AgentKind::JellyGym => {
            let agent = match model {
                Some(path) => JellyGym::load(path, AgentConfig::default())?,
                None => JellyGym::new(AgentConfig::default(), &mut seeded(seed))?,
            };
            Agent::JellyGym(Box::new(agent))
        }
    })
}

fn run_pretrain(boards: usize, out: &Path, seed: u64, passes: usize) -> CliResult {
    if boards == 0 || passes == 0 {
        return Err(Failure::Usage("--boards and --passes must be at least 1".into()));
    }
    let mut rng = seeded(seed);
    let mut net = Network::<f64>::jellygym(&mut rng);
    let held_out: Vec<_> = (0..100)
        .map(|k| generate_board(9, 9, 6, None, &mut seeded(seed ^ 0x9e37_79b9_7f4a_7c15 ^ k)))
        .collect::<Result<_, _>>()?;
    let mass = |net: &Network<f64>| -> Result<f64, Error> {
        let total: f64 = held_out.iter().map(|b| valid_mass(net, b)).sum::<Result<f64, _>>()?;
        Ok(total / held_out.len() as f64)
    };
    let before = mass(&net)?;
    let cfg = PretrainConfig {
        passes,
        ..PretrainConfig::default()
    };
    let report = pretrain_supervised(&mut net, boards, &cfg, &mut rng)?;
    for (i, loss) in report.pass_losses.iter().enumerate() {
        println!("pass {} loss {:.6}", i + 1, loss);
    }
    println!("pairs {}", report.pairs);
    println!("valid mass {:.6} -> {:.6}", before, mass(&net)?);
    let meta = CheckpointMeta {
        seed,
        created: std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0),
        episodes_trained: 0,
    };
    save_checkpoint(out, &net, None, &meta)?;
    Ok(())
}

fn run_train(args: TrainArgs) -> CliResult {
    if args.episodes == 0 {
        return Err(Failure::Usage("--episodes must be at least 1".into()));
    }
    let d = AgentConfig::default();
    let r = RewardConfig::default();
    let config = AgentConfig {
        k1: args.k1.unwrap_or(d.k1),
        k2: args.k2.unwrap_or(d.k2),
        replay_capacity: args.replay.unwrap_or(d.replay_capacity),
        batch_size: args.batch.unwrap_or(d.batch_size),
        alpha_rl: args.alpha_rl.unwrap_or(d.alpha_rl),
        reward: RewardConfig {
            gamma_min: args.gamma_min.unwrap_or(r.gamma_min),
            gamma_max: args.gamma_max.unwrap_or(r.gamma_max),
            ..r
        },
        ..d
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let level = resolve_level(&args.level)?;
    let mut agent = match &args.init {
        Some(path) => JellyGym::load(path, config)?,
        None => JellyGym::new(config, &mut seeded(args.seed))?,
    };
    let curve = train(
        &mut agent,
        &level,
        args.episodes,
        args.seed,
        Some(&args.curve),
        Some(&args.out),
    )?;
    let wins = curve.iter().filter(|p| p.won).count();
    println!(
        "{}: {} episodes, {} won ({:.1}%)",
        level.name,
        curve.len(),
        wins,
        100.0 * wins as f64 / curve.len() as f64
    );
    Ok(())
}
