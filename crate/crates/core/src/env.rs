//! Reset/step environment over the engine, for training front-ends.
//!
//! The learner plays team A through per-cell action maps; the opponent is a
//! built-in or external agent run in-process.

use rayon::prelude::*;
use thiserror::Error;

use crate::actionmap::{decode_action_maps, ActionMaps, MaskedChoice, ShapeError};
use crate::agents::{Agent, AgentError, AgentSpec};
use crate::arena::MapSource;
use crate::constants::RuleConstants;
use crate::mapgen::{GameMap, MapError};
use crate::obs::{encode_observation, Observation};
use crate::reward::{step_reward, RewardPhase};
use crate::rules::{check_game_end, resolve_turn, valid_actions, TeamMask, TurnError, TurnEvents};
use crate::state::{GameState, Outcome, Team};

#[derive(Clone, Debug)]
pub struct EnvConfig {
    /// Generated maps take their seed from `reset`.
    pub map: MapSource,
    pub constants: RuleConstants,
    pub reward_phase: RewardPhase,
    pub opponent: AgentSpec,
}

impl EnvConfig {
    pub fn new(size: u32) -> EnvConfig {
        EnvConfig {
            map: MapSource::Generated { seed: 0, size, allow_oversize: false },
            constants: RuleConstants::default(),
            reward_phase: RewardPhase::default(),
            opponent: AgentSpec::Null,
        }
    }
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("step called before reset")]
    NotReset,
    #[error("step called after the episode ended")]
    Done,
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Turn(#[from] TurnError),
    #[error("batch expects {expected} entries, got {found}")]
    Batch { expected: usize, found: usize },
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub outcome: Option<Outcome>,
    pub events: TurnEvents,
    /// Cells where the submitted maps chose a masked channel.
    pub masked: Vec<MaskedChoice>,
    /// Valid actions for the next turn.
    pub mask: TeamMask,
}

struct Episode {
    map: GameMap,
    state: GameState,
    opponent: Box<dyn Agent>,
    done: bool,
}

pub struct LuxEnv {
    config: EnvConfig,
    episode: Option<Episode>,
}

impl LuxEnv {
    pub const LEARNER: Team = Team::A;

    pub fn new(config: EnvConfig) -> LuxEnv {
        LuxEnv { config, episode: None }
    }

    pub fn state(&self) -> Option<&GameState> {
        self.episode.as_ref().map(|e| &e.state)
    }

    pub fn map(&self) -> Option<&GameMap> {
        self.episode.as_ref().map(|e| &e.map)
    }

    pub fn reset(&mut self, seed: u64) -> Result<Observation, EnvError> {
        let source = match &self.config.map {
            MapSource::Generated { size, allow_oversize, .. } => {
                MapSource::Generated { seed, size: *size, allow_oversize: *allow_oversize }
            }
            fixed => fixed.clone(),
        };
        let map = source.load()?;
        let state = GameState::from_map(&map, self.config.constants.clone());
        let opp = Self::LEARNER.opponent();
        let mut opponent = self.config.opponent.build(seed, opp);
        opponent.start(&map, &state, opp)?;
        let obs = encode_observation(&state, Self::LEARNER);
        self.episode = Some(Episode { map, state, opponent, done: false });
        Ok(obs)
    }

    pub fn valid_mask(&self) -> Option<TeamMask> {
        self.state().map(|s| valid_actions(s, Self::LEARNER))
    }

    pub fn step(&mut self, maps: &ActionMaps) -> Result<StepResult, EnvError> {
        let ep = self.episode.as_mut().ok_or(EnvError::NotReset)?;
        if ep.done {
            return Err(EnvError::Done);
        }
        let learner = Self::LEARNER;
        let mask = valid_actions(&ep.state, learner);
        let (own, masked) = decode_action_maps(maps, &ep.state, learner, &mask)?;
        let theirs = ep.opponent.act(&ep.state, learner.opponent());
        let prev = ep.state.clone();
        let events = resolve_turn(&mut ep.state, &own, &theirs)?;
        let outcome = check_game_end(&ep.state);
        let reward = step_reward(self.config.reward_phase, &prev, &ep.state, outcome.as_ref(), learner);
        if let Some(o) = &outcome {
            ep.done = true;
            ep.opponent.finish(o);
        }
        Ok(StepResult {
            observation: encode_observation(&ep.state, learner),
            reward,
            done: ep.done,
            outcome,
            events,
            masked,
            mask: valid_actions(&ep.state, learner),
        })
    }
}

/// `n` independent environments stepped in parallel.
pub struct BatchedEnv {
    envs: Vec<LuxEnv>,
}

impl BatchedEnv {
    pub fn new(config: EnvConfig, n: usize) -> BatchedEnv {
        BatchedEnv { envs: (0..n).map(|_| LuxEnv::new(config.clone())).collect() }
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn env(&self, i: usize) -> &LuxEnv {
        &self.envs[i]
    }

    pub fn reset(&mut self, seeds: &[u64]) -> Result<Vec<Observation>, EnvError> {
        self.check(seeds.len())?;
        self.envs.par_iter_mut().zip(seeds).map(|(e, &s)| e.reset(s)).collect()
    }

    pub fn step(&mut self, maps: &[ActionMaps]) -> Result<Vec<StepResult>, EnvError> {
        self.check(maps.len())?;
        self.envs.par_iter_mut().zip(maps).map(|(e, m)| e.step(m)).collect()
    }

    fn check(&self, found: usize) -> Result<(), EnvError> {
        if found != self.envs.len() {
            return Err(EnvError::Batch { expected: self.envs.len(), found });
        }
        Ok(())
    }
}
