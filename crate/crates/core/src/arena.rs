//! Match runner, batch evaluation, and the engine micro-benchmark.

use std::io;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::agents::{AgentError, AgentSpec, RandomAgent, Agent};
use crate::constants::RuleConstants;
use crate::mapgen::{generate_map, GameMap, MapError, MapGenConfig};
use crate::metrics::{EpisodeTrace, MetricsRow};
use crate::replay::{ChecksumChain, ReplayFile, ReplaySeeds, ENGINE_VERSION, REPLAY_FORMAT_VERSION};
use crate::reward::{step_reward, RewardPhase};
use crate::rules::{check_game_end, format_action_line, parse_action_line, resolve_turn, TurnError};
use crate::state::{GameState, Outcome, Team};

#[derive(Clone, Debug, PartialEq)]
pub enum MapSource {
    Generated { seed: u64, size: u32, allow_oversize: bool },
    Fixed(GameMap),
}

impl MapSource {
    pub fn load(&self) -> Result<GameMap, MapError> {
        match self {
            MapSource::Generated { seed, size, allow_oversize } => {
                generate_map(&MapGenConfig::new(*seed, *size).oversize(*allow_oversize))
            }
            MapSource::Fixed(map) => Ok(map.clone()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MatchConfig {
    pub map: MapSource,
    pub constants: RuleConstants,
    /// Team A then team B.
    pub agents: [AgentSpec; 2],
    /// Seeds `random` agents that carry no seed of their own.
    pub seed: u64,
    /// Which reward is summed into [`MatchResult::rewards`].
    pub reward_phase: RewardPhase,
}

impl MatchConfig {
    pub fn new(seed: u64, size: u32, agents: [AgentSpec; 2]) -> MatchConfig {
        MatchConfig {
            map: MapSource::Generated { seed, size, allow_oversize: false },
            constants: RuleConstants::default(),
            agents,
            seed,
            reward_phase: RewardPhase::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum MatchError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Turn(#[from] TurnError),
}

#[derive(Clone, Debug)]
pub struct MatchResult {
    pub outcome: Outcome,
    pub replay: ReplayFile,
    pub trace: EpisodeTrace,
    /// Episode return per team under the configured phase.
    pub rewards: [f64; 2],
}

pub fn result_label(outcome: &Outcome, team: Team) -> &'static str {
    match outcome.sign_for(team) {
        1 => "win",
        -1 => "loss",
        _ => "draw",
    }
}

/// Plays one match to the end.
pub fn run_match(config: &MatchConfig) -> Result<MatchResult, MatchError> {
    let map = config.map.load()?;
    let mut state = GameState::from_map(&map, config.constants.clone());
    let mut agents: Vec<Box<dyn Agent>> =
        Team::BOTH.iter().map(|&t| config.agents[t.index()].build(config.seed, t)).collect();
    for (agent, team) in agents.iter_mut().zip(Team::BOTH) {
        agent.start(&map, &state, team)?;
    }

    let mut trace = EpisodeTrace::new(&state);
    let mut chain = ChecksumChain::new(&state);
    let mut turns = Vec::with_capacity(config.constants.episode_length as usize);
    let mut rewards = [0.0; 2];
    let outcome = loop {
        if let Some(outcome) = check_game_end(&state) {
            break outcome;
        }
        let lines = [0, 1].map(|i| format_action_line(&agents[i].act(&state, Team::BOTH[i])));
        // Resolve what the replay will contain, so re-simulation is exact.
        let (a, _) = parse_action_line(&lines[0]);
        let (b, _) = parse_action_line(&lines[1]);
        let prev = state.clone();
        resolve_turn(&mut state, &a, &b)?;
        let end = check_game_end(&state);
        for team in Team::BOTH {
            rewards[team.index()] += step_reward(config.reward_phase, &prev, &state, end.as_ref(), team);
        }
        trace.push(&state);
        chain.push([&lines[0], &lines[1]], &state);
        turns.push(lines);
    };
    for agent in &mut agents {
        agent.finish(&outcome);
    }

    let metrics = Team::BOTH
        .iter()
        .map(|&t| {
            let agent = config.agents[t.index()].to_string();
            MetricsRow::from_trace(&trace, t, map.seed, &agent, result_label(&outcome, t)).expect("trace is non-empty")
        })
        .collect();
    let replay = ReplayFile {
        format_version: REPLAY_FORMAT_VERSION,
        engine_version: ENGINE_VERSION.to_string(),
        constants: config.constants.clone(),
        map: map.clone(),
        agents: config.agents.clone().map(|a| a.to_string()),
        seeds: ReplaySeeds { map: map.seed, match_seed: config.seed },
        turns,
        outcome,
        checksums: chain.digests,
        metrics,
    };
    Ok(MatchResult { outcome, replay, trace, rewards })
}

/// Batch evaluation of `agents[0]` against `agents[1]`.
#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub agents: [AgentSpec; 2],
    pub episodes: u32,
    pub size: u32,
    pub allow_oversize: bool,
    /// Match `i` uses seed `base_seed + i` for both the map and the agents.
    pub base_seed: u64,
    pub constants: RuleConstants,
    /// Worker threads; 0 picks one per core.
    pub jobs: usize,
}

#[derive(Clone, Debug)]
pub struct EvalMatch {
    pub seed: u64,
    /// True when `agents[0]` played team B.
    pub swapped: bool,
    pub outcome: Outcome,
    /// Per team, A then B.
    pub metrics: Vec<MetricsRow>,
}

impl EvalMatch {
    /// +1, 0 or -1 from the point of view of `agents[0]`.
    pub fn score(&self) -> i32 {
        self.outcome.sign_for(if self.swapped { Team::B } else { Team::A })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalSummary {
    pub agent: String,
    pub opponent: String,
    pub size: u32,
    pub episodes: u32,
    pub wins: u32,
    pub losses: u32,
    pub draws: u32,
    /// Draws count as half a win.
    pub win_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// 95% Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: f64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let p = successes / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("episodes must be at least 1")]
    NoEpisodes,
    #[error("could not start the worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("match with seed {seed}: {source}")]
    Match { seed: u64, source: MatchError },
}

/// Plays `episodes` matches in parallel, alternating sides, and returns them
/// in seed order together with the summary.
pub fn run_eval(config: &EvalConfig) -> Result<(EvalSummary, Vec<EvalMatch>), EvalError> {
    if config.episodes == 0 {
        return Err(EvalError::NoEpisodes);
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build()?;
    let matches: Vec<EvalMatch> = pool.install(|| {
        (0..config.episodes)
            .into_par_iter()
            .map(|i| {
                let seed = config.base_seed.wrapping_add(i as u64);
                let swapped = i % 2 == 1;
                let [x, y] = config.agents.clone();
                let agents = if swapped { [y, x] } else { [x, y] };
                let mc = MatchConfig {
                    map: MapSource::Generated { seed, size: config.size, allow_oversize: config.allow_oversize },
                    constants: config.constants.clone(),
                    agents,
                    seed,
                    reward_phase: RewardPhase::default(),
                };
                let r = run_match(&mc).map_err(|source| EvalError::Match { seed, source })?;
                Ok(EvalMatch { seed, swapped, outcome: r.outcome, metrics: r.replay.metrics })
            })
            .collect::<Result<Vec<_>, EvalError>>()
    })?;
    Ok((summarize(config, &matches), matches))
}

fn summarize(config: &EvalConfig, matches: &[EvalMatch]) -> EvalSummary {
    let count = |s: i32| matches.iter().filter(|m| m.score() == s).count() as u32;
    let (wins, losses, draws) = (count(1), count(-1), count(0));
    let n = matches.len() as u64;
    let successes = wins as f64 + 0.5 * draws as f64;
    let (ci_low, ci_high) = wilson_interval(successes, n);
    EvalSummary {
        agent: config.agents[0].to_string(),
        opponent: config.agents[1].to_string(),
        size: config.size,
        episodes: config.episodes,
        wins,
        losses,
        draws,
        win_rate: successes / n as f64,
        ci_low,
        ci_high,
    }
}

pub fn write_eval_csv<W: io::Write>(out: W, rows: &[EvalSummary]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub size: u32,
    pub turns: u64,
    pub episodes: u32,
    /// Seconds spent inside `resolve_turn` only.
    pub engine_secs: f64,
    pub us_per_turn: f64,
}

/// Random self-play on each size until `turns` turns are resolved, timing
/// only the engine step. Games that end early are replaced by fresh seeds.
pub fn run_bench(sizes: &[u32], turns: u64, seed: u64) -> Result<Vec<BenchRow>, MatchError> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let mut engine = Duration::ZERO;
        let mut done = 0u64;
        let mut episodes = 0u32;
        while done < turns {
            let s = seed.wrapping_add(episodes as u64);
            let map = generate_map(&MapGenConfig::new(s, size))?;
            let mut state = GameState::from_map(&map, RuleConstants::default());
            let mut agents = [RandomAgent::new(s.wrapping_mul(2)), RandomAgent::new(s.wrapping_mul(2) + 1)];
            episodes += 1;
            while done < turns && check_game_end(&state).is_none() {
                let a = agents[0].act(&state, Team::A);
                let b = agents[1].act(&state, Team::B);
                let t = Instant::now();
                resolve_turn(&mut state, &a, &b)?;
                engine += t.elapsed();
                done += 1;
            }
        }
        let secs = engine.as_secs_f64();
        rows.push(BenchRow { size, turns: done, episodes, engine_secs: secs, us_per_turn: secs * 1e6 / done.max(1) as f64 });
    }
    Ok(rows)
}

/// Per-turn cost of the largest size over the smallest, when both were run.
pub fn bench_ratio(rows: &[BenchRow], big: u32, small: u32) -> Option<f64> {
    let get = |s| rows.iter().find(|r| r.size == s).map(|r| r.us_per_turn);
    Some(get(big)? / get(small)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_fixtures() {
        let (lo, hi) = wilson_interval(50.0, 100);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
        let (lo, hi) = wilson_interval(1.0, 1);
        assert!((lo - 0.2065).abs() < 1e-4 && hi == 1.0);
    }

    #[test]
    fn null_match_is_a_draw() {
        let r = run_match(&MatchConfig::new(7, 12, [AgentSpec::Null, AgentSpec::Null])).unwrap();
        assert_eq!(r.outcome.winner, crate::state::Winner::Draw);
        assert_eq!(r.replay.checksums.len(), r.replay.turns.len() + 1);
        r.replay.verify().unwrap();
    }
}
