use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lux_core::agents::AgentSpec;
use lux_core::arena::{
    bench_ratio, run_bench, run_eval, run_match, write_eval_csv, EvalConfig, MapSource, MatchConfig,
};
use lux_core::constants::RuleConstants;
use lux_core::mapgen::{generate_map, parse_map, serialize_map, MapGenConfig};
use lux_core::metrics::{write_fuel_series_csv, write_metrics_csv};
use lux_core::replay::{ReplayError, ReplayFile};
use lux_core::reward::RewardPhase;

/// Cost ratio quoted for size-32 maps against size-12 maps.
const REFERENCE_RATIO: f64 = 2.5;

#[derive(Parser)]
#[command(name = "lux", version, about = "Deterministic Lux RTS engine toolchain")]
struct Cli {
    /// Rule constants override file (`key = value` lines).
    #[arg(long, env = "LUX_CONSTANTS", global = true)]
    constants: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one match and write its replay.
    Run(RunArgs),
    /// Play many matches between two agents and report win rates.
    Eval(EvalArgs),
    /// Verify or print a replay file.
    Replay(ReplayArgs),
    /// Time the engine step on random self-play.
    Bench(BenchArgs),
    /// Generate a map file.
    Genmap(GenmapArgs),
}

#[derive(Args)]
struct MapArgs {
    #[arg(long, default_value_t = 12)]
    map_size: u32,
    /// Load the map instead of generating it.
    #[arg(long, conflicts_with = "map_size")]
    map_file: Option<PathBuf>,
    #[arg(long)]
    allow_oversize: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `null`, `random`, `random:<seed>`, `greedy`, or a shell command.
    #[arg(long, default_value = "greedy")]
    agent_a: String,
    #[arg(long, default_value = "random")]
    agent_b: String,
    #[arg(long, default_value = "1")]
    reward_phase: RewardPhase,
    /// Replay output path.
    #[arg(long, default_value = "replay.json")]
    out: PathBuf,
    #[arg(long)]
    metrics_csv: Option<PathBuf>,
    /// Per-turn City fuel of both teams.
    #[arg(long)]
    fuel_csv: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Board sides to evaluate on; repeat for several.
    #[arg(long = "map-size", default_values_t = [12])]
    map_sizes: Vec<u32>,
    #[arg(long)]
    allow_oversize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    episodes: u32,
    #[arg(long, default_value = "greedy")]
    agent_a: String,
    #[arg(long, default_value = "random")]
    agent_b: String,
    /// Win-rate CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-match, per-team metrics.
    #[arg(long)]
    metrics_csv: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ReplayMode {
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    dump: bool,
}

#[derive(Args)]
struct ReplayArgs {
    file: PathBuf,
    #[command(flatten)]
    mode: ReplayMode,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long = "map-size", default_values_t = [12, 32])]
    map_sizes: Vec<u32>,
    /// Turns to resolve per size.
    #[arg(long, default_value_t = 3600)]
    turns: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenmapArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 12)]
    map_size: u32,
    #[arg(long)]
    allow_oversize: bool,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_constants(path: Option<&Path>) -> Result<RuleConstants> {
    match path {
        Some(p) => RuleConstants::from_config_file(p).with_context(|| format!("loading constants from {}", p.display())),
        None => Ok(RuleConstants::default()),
    }
}

fn parse_agent(text: &str) -> Result<AgentSpec> {
    text.parse().with_context(|| format!("bad agent spec `{text}`"))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn cmd_run(args: RunArgs, constants: RuleConstants) -> Result<()> {
    let map = match &args.map.map_file {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            MapSource::Fixed(parse_map(&text, args.map.allow_oversize)?)
        }
        None => MapSource::Generated { seed: args.seed, size: args.map.map_size, allow_oversize: args.map.allow_oversize },
    };
    let config = MatchConfig {
        map,
        constants,
        agents: [parse_agent(&args.agent_a)?, parse_agent(&args.agent_b)?],
        seed: args.seed,
        reward_phase: args.reward_phase,
    };
    let result = run_match(&config)?;
    result.replay.write(&args.out).with_context(|| format!("writing {}", args.out.display()))?;

    let o = &result.outcome;
    println!(
        "winner {:?} ({:?}) at turn {}; city tiles {}-{}, units {}-{}",
        o.winner, o.reason, o.turn, o.city_tiles[0], o.city_tiles[1], o.units[0], o.units[1]
    );
    println!(
        "phase {} return: A {:.4}, B {:.4}",
        config.reward_phase, result.rewards[0], result.rewards[1]
    );
    for m in &result.replay.metrics {
        println!(
            "{} ({}): survival {:.3}, five-diagonal {}, wood {:.3}, final fuel {}",
            m.team, m.agent, m.city_survival_ratio, m.five_diagonal_turns, m.total_wood_collect, m.final_fuel
        );
    }
    println!("replay written to {}", args.out.display());
    if let Some(p) = &args.metrics_csv {
        write_metrics_csv(create(p)?, &result.replay.metrics)?;
    }
    if let Some(p) = &args.fuel_csv {
        write_fuel_series_csv(create(p)?, &result.trace)?;
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs, constants: RuleConstants) -> Result<()> {
    let agents = [parse_agent(&args.agent_a)?, parse_agent(&args.agent_b)?];
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for &size in &args.map_sizes {
        let config = EvalConfig {
            agents: agents.clone(),
            episodes: args.episodes,
            size,
            allow_oversize: args.allow_oversize,
            base_seed: args.seed,
            constants: constants.clone(),
            jobs: args.jobs,
        };
        let (summary, matches) = run_eval(&config)?;
        log::info!(
            "size {size}: {} wins, {} losses, {} draws for {}",
            summary.wins, summary.losses, summary.draws, summary.agent
        );
        summaries.push(summary);
        rows.extend(matches.into_iter().flat_map(|m| m.metrics));
    }
    match &args.out {
        Some(p) => write_eval_csv(create(p)?, &summaries)?,
        None => write_eval_csv(io::stdout().lock(), &summaries)?,
    }
    if let Some(p) = &args.metrics_csv {
        write_metrics_csv(create(p)?, &rows)?;
    }
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<ExitCode> {
    let replay = ReplayFile::read(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    if args.mode.dump {
        replay.check_versions()?;
        io::stdout().lock().write_all(replay.dump()?.as_bytes())?;
        return Ok(ExitCode::SUCCESS);
    }
    match replay.verify() {
        Ok(()) => {
            println!("ok: {} turns verified", replay.turns.len());
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ (ReplayError::FormatVersion { .. } | ReplayError::EngineVersion { .. })) => Err(e.into()),
        Err(e) => {
            eprintln!("verification failed: {e}");
            Ok(ExitCode::FAILURE)
        }
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    if args.turns == 0 {
        bail!("--turns must be positive");
    }
    let rows = run_bench(&args.map_sizes, args.turns, args.seed)?;
    println!("{:>5} {:>8} {:>9} {:>12}", "size", "turns", "episodes", "us/turn");
    for r in &rows {
        println!("{:>5} {:>8} {:>9} {:>12.2}", r.size, r.turns, r.episodes, r.us_per_turn);
    }
    if let Some(ratio) = bench_ratio(&rows, 32, 12) {
        println!("size-32 / size-12 per-turn cost: {ratio:.2}x (reference {REFERENCE_RATIO}x)");
    }
    Ok(())
}

fn cmd_genmap(args: GenmapArgs) -> Result<()> {
    let map = generate_map(&MapGenConfig::new(args.seed, args.map_size).oversize(args.allow_oversize))?;
    let text = serialize_map(&map);
    match &args.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let constants = || load_constants(cli.constants.as_deref());
    match cli.command {
        Command::Run(args) => cmd_run(args, constants()?)?,
        Command::Eval(args) => cmd_eval(args, constants()?)?,
        Command::Replay(args) => return cmd_replay(args),
        Command::Bench(args) => cmd_bench(args)?,
        Command::Genmap(args) => cmd_genmap(args)?,
    }
    Ok(ExitCode::SUCCESS)
}
