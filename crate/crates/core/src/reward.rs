//! Curriculum rewards.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{GameState, Outcome, Team};

pub const W_RESEARCH: f64 = 0.01;
pub const W_UNIT_BUILT: f64 = 0.5;
pub const W_FUEL: f64 = 0.0001;
pub const W_CITY_TILE_BUILT: f64 = 1.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RewardPhase {
    /// Shaped per-turn rewards for the basic skills.
    #[default]
    Phase1Dense,
    /// Terminal reward scaled by the CityTile margin.
    Phase2Scaled,
    /// Terminal win/lose.
    Phase3WinLose,
}

impl RewardPhase {
    pub fn number(self) -> u8 {
        self as u8 + 1
    }
}

impl fmt::Display for RewardPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RewardError {
    #[error("reward phase must be 1, 2 or 3, got `{0}`")]
    UnknownPhase(String),
    #[error("terminal reward requested before the episode ended")]
    NotTerminal,
}

impl FromStr for RewardPhase {
    type Err = RewardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" => Ok(RewardPhase::Phase1Dense),
            "2" => Ok(RewardPhase::Phase2Scaled),
            "3" => Ok(RewardPhase::Phase3WinLose),
            other => Err(RewardError::UnknownPhase(other.to_string())),
        }
    }
}

/// Dense reward for the turn that turned `prev` into `next`.
///
/// Reads the tallies `resolve_turn` leaves in `next.last_turn`. Fuel counts
/// what was added to cities this turn (drop-offs and CityTile collection), so
/// night burn never makes the reward negative. `prev` only guards that the
/// two states are consecutive.
pub fn phase1_reward(prev: &GameState, next: &GameState, team: Team) -> f64 {
    debug_assert_eq!(prev.turn + 1, next.turn, "phase-1 reward needs consecutive states");
    let t = &next.last_turn[team.index()];
    W_RESEARCH * t.research_gained as f64
        + W_UNIT_BUILT * t.units_built as f64
        + W_FUEL * t.fuel_added as f64
        + W_CITY_TILE_BUILT * t.city_tiles_built as f64
}

/// `±sqrt(|N_self - N_op|)` over final CityTile counts, signed by the result.
pub fn phase2_reward(outcome: Option<&Outcome>, final_state: &GameState, team: Team) -> Result<f64, RewardError> {
    let outcome = outcome.ok_or(RewardError::NotTerminal)?;
    let own = final_state.city_tile_count(team) as f64;
    let op = final_state.city_tile_count(team.opponent()) as f64;
    Ok(outcome.sign_for(team) as f64 * (own - op).abs().sqrt())
}

/// +1 for a win, -1 for a loss, 0 for a draw.
pub fn phase3_reward(outcome: &Outcome, team: Team) -> f64 {
    outcome.sign_for(team) as f64
}

/// The reward `team` receives for one resolved turn under `phase`.
/// Terminal phases pay 0 until `outcome` is present.
pub fn step_reward(phase: RewardPhase, prev: &GameState, next: &GameState, outcome: Option<&Outcome>, team: Team) -> f64 {
    match (phase, outcome) {
        (RewardPhase::Phase1Dense, _) => phase1_reward(prev, next, team),
        (RewardPhase::Phase2Scaled, Some(o)) => phase2_reward(Some(o), next, team).expect("outcome present"),
        (RewardPhase::Phase3WinLose, Some(o)) => phase3_reward(o, team),
        (_, None) => 0.0,
    }
}
