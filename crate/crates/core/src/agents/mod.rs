//! Built-in policies and the external-agent protocol.

mod builtin;
pub mod external;
mod greedy;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::mapgen::GameMap;
use crate::rules::Action;
use crate::state::{GameState, Outcome, Team};

pub use builtin::{NullAgent, RandomAgent};
pub use external::{ExternalAgent, TimeBudget};
pub use greedy::GreedyAgent;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("could not launch agent `{command}`: {source}")]
    Launch { command: String, source: std::io::Error },
    #[error("agent `{0}` did not acknowledge the init message")]
    Handshake(String),
}

/// A policy that controls one team.
pub trait Agent: Send {
    /// Called once before the first turn.
    fn start(&mut self, _map: &GameMap, _state: &GameState, _team: Team) -> Result<(), AgentError> {
        Ok(())
    }

    /// Actions for the coming turn. Actors left out stay idle.
    fn act(&mut self, state: &GameState, team: Team) -> Vec<Action>;

    /// Called once the game is decided.
    fn finish(&mut self, _outcome: &Outcome) {}
}

/// Textual agent selector: `null`, `random`, `random:<seed>`, `greedy`, or any
/// other string, which is run as a shell command speaking the stdio protocol.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AgentSpec {
    Null,
    Random(Option<u64>),
    Greedy,
    External(String),
}

impl AgentSpec {
    /// Instantiates the agent. `match_seed` seeds a `random` agent that was
    /// given no seed of its own, mixed with the team so both sides differ.
    pub fn build(&self, match_seed: u64, team: Team) -> Box<dyn Agent> {
        match self {
            AgentSpec::Null => Box::new(NullAgent),
            AgentSpec::Random(seed) => {
                let seed = seed.unwrap_or_else(|| match_seed.wrapping_mul(2).wrapping_add(team.index() as u64));
                Box::new(RandomAgent::new(seed))
            }
            AgentSpec::Greedy => Box::new(GreedyAgent::default()),
            AgentSpec::External(cmd) => Box::new(ExternalAgent::new(cmd.clone())),
        }
    }
}

impl FromStr for AgentSpec {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Ok(match s {
            "null" => AgentSpec::Null,
            "random" => AgentSpec::Random(None),
            "greedy" => AgentSpec::Greedy,
            _ => match s.strip_prefix("random:") {
                Some(seed) => AgentSpec::Random(Some(seed.parse()?)),
                None => AgentSpec::External(s.to_string()),
            },
        })
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentSpec::Null => f.write_str("null"),
            AgentSpec::Random(None) => f.write_str("random"),
            AgentSpec::Random(Some(s)) => write!(f, "random:{s}"),
            AgentSpec::Greedy => f.write_str("greedy"),
            AgentSpec::External(cmd) => f.write_str(cmd),
        }
    }
}
