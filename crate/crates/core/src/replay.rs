//! Replay files: everything needed to re-simulate a match bit for bit.
//!
//! The body is the per-turn action text of both teams. The footer carries a
//! chained SHA-256 per turn: each link hashes the previous link, the turn's
//! action text, and the canonical bytes of the resulting state, so any edit
//! to the body or footer is caught at the first turn it affects.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constants::RuleConstants;
use crate::geom::Position;
use crate::mapgen::GameMap;
use crate::metrics::MetricsRow;
use crate::rules::{check_game_end, parse_action_line, resolve_turn, TurnError};
use crate::state::{GameState, Outcome, Team, UnitKind};

pub const REPLAY_FORMAT_VERSION: u32 = 1;
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplaySeeds {
    pub map: u64,
    #[serde(rename = "match")]
    pub match_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayFile {
    pub format_version: u32,
    pub engine_version: String,
    pub constants: RuleConstants,
    pub map: GameMap,
    pub agents: [String; 2],
    pub seeds: ReplaySeeds,
    /// Action lines for teams A and B, one entry per resolved turn.
    pub turns: Vec<[String; 2]>,
    pub outcome: Outcome,
    /// Hex digests: the initial state, then one per turn.
    pub checksums: Vec<String>,
    pub metrics: Vec<MetricsRow>,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("replay format version {found} is not supported (this build reads {expected})")]
    FormatVersion { found: u32, expected: u32 },
    #[error("replay was written by engine {found}, this is engine {expected}")]
    EngineVersion { found: String, expected: String },
    #[error("replay has {found} checksums for {turns} turns")]
    ChecksumCount { found: usize, turns: usize },
    #[error("checksum mismatch at turn {turn}")]
    Divergence { turn: u32 },
    #[error("replay continues after the game ended at turn {turn}")]
    Overlong { turn: u32 },
    #[error("replay stops at turn {turn} before the game ended")]
    Truncated { turn: u32 },
    #[error("recorded outcome differs from the re-simulated one")]
    Outcome,
    #[error(transparent)]
    Turn(#[from] TurnError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Chained per-turn digest; `lines` is empty for the initial state.
pub fn chain_checksum(prev: Option<&[u8; 32]>, lines: &[&str], state: &GameState) -> [u8; 32] {
    let mut h = Sha256::new();
    if let Some(prev) = prev {
        h.update(prev);
    }
    for line in lines {
        h.update((line.len() as u64).to_le_bytes());
        h.update(line.as_bytes());
    }
    h.update(state.canonical_bytes());
    h.finalize().into()
}

/// Accumulates the chained checksums while a match is played.
#[derive(Clone, Debug)]
pub struct ChecksumChain {
    last: [u8; 32],
    pub digests: Vec<String>,
}

impl ChecksumChain {
    pub fn new(initial: &GameState) -> ChecksumChain {
        let last = chain_checksum(None, &[], initial);
        ChecksumChain { last, digests: vec![hex::encode(last)] }
    }

    pub fn push(&mut self, lines: [&str; 2], state: &GameState) -> &str {
        self.last = chain_checksum(Some(&self.last), &lines, state);
        self.digests.push(hex::encode(self.last));
        self.digests.last().expect("just pushed")
    }
}

impl ReplayFile {
    pub fn initial_state(&self) -> GameState {
        GameState::from_map(&self.map, self.constants.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("replays always serialize") + "\n"
    }

    pub fn from_json(text: &str) -> Result<ReplayFile, ReplayError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ReplayError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<ReplayFile, ReplayError> {
        ReplayFile::from_json(&std::fs::read_to_string(path)?)
    }

    /// The serialized body alone, for comparing reruns.
    pub fn body_json(&self) -> String {
        serde_json::to_string(&self.turns).expect("strings serialize")
    }

    pub fn check_versions(&self) -> Result<(), ReplayError> {
        if self.format_version != REPLAY_FORMAT_VERSION {
            return Err(ReplayError::FormatVersion { found: self.format_version, expected: REPLAY_FORMAT_VERSION });
        }
        if self.engine_version != ENGINE_VERSION {
            return Err(ReplayError::EngineVersion {
                found: self.engine_version.clone(),
                expected: ENGINE_VERSION.to_string(),
            });
        }
        Ok(())
    }

    /// Re-simulates the match and compares every checksum and the outcome.
    pub fn verify(&self) -> Result<(), ReplayError> {
        self.check_versions()?;
        if self.checksums.len() != self.turns.len() + 1 {
            return Err(ReplayError::ChecksumCount { found: self.checksums.len(), turns: self.turns.len() });
        }
        let mut state = self.initial_state();
        let mut chain = ChecksumChain::new(&state);
        if chain.digests[0] != self.checksums[0] {
            return Err(ReplayError::Divergence { turn: 0 });
        }
        for (t, [a, b]) in self.turns.iter().enumerate() {
            if check_game_end(&state).is_some() {
                return Err(ReplayError::Overlong { turn: state.turn });
            }
            let (acts_a, _) = parse_action_line(a);
            let (acts_b, _) = parse_action_line(b);
            resolve_turn(&mut state, &acts_a, &acts_b)?;
            if chain.push([a, b], &state) != self.checksums[t + 1] {
                return Err(ReplayError::Divergence { turn: t as u32 + 1 });
            }
        }
        match check_game_end(&state) {
            None => Err(ReplayError::Truncated { turn: state.turn }),
            Some(o) if o != self.outcome => Err(ReplayError::Outcome),
            Some(_) => Ok(()),
        }
    }

    /// Human-readable dump: one block for the initial state and one per turn.
    pub fn dump(&self) -> Result<String, ReplayError> {
        let map = &self.map;
        let mut state = self.initial_state();
        let mut out = String::new();
        let _ = writeln!(out, "# {} vs {}, map seed {}, size {}", self.agents[0], self.agents[1], self.seeds.map, map.size);
        let _ = writeln!(out, "# A/B CityTile, a/b Worker, p/q Cart, w/c/u resource");
        dump_block(&mut out, &state, None, None);
        for [a, b] in &self.turns {
            let (acts_a, _) = parse_action_line(a);
            let (acts_b, _) = parse_action_line(b);
            let events = resolve_turn(&mut state, &acts_a, &acts_b)?;
            let summary = format!(
                "rejected {}, deaths {}, tiles built {}, units built {}",
                events.rejected().count(),
                events.unit_deaths().len(),
                events.built_tiles.len(),
                events.built_units.len()
            );
            dump_block(&mut out, &state, Some([a, b]), Some(&summary));
        }
        let _ = writeln!(out, "# outcome: {:?} ({:?}) at turn {}", self.outcome.winner, self.outcome.reason, self.outcome.turn);
        Ok(out)
    }
}

fn dump_block(out: &mut String, state: &GameState, lines: Option<[&String; 2]>, summary: Option<&str>) {
    let _ = writeln!(out, "== turn {}{}", state.turn, if state.is_night() { " (night)" } else { "" });
    if let Some([a, b]) = lines {
        let _ = writeln!(out, "A: {a}");
        let _ = writeln!(out, "B: {b}");
    }
    if let Some(s) = summary {
        let _ = writeln!(out, "{s}");
    }
    let occupancy = state.occupancy();
    for y in 0..state.height {
        for x in 0..state.width {
            let p = Position::new(x, y);
            let i = state.idx(p);
            let c = if let Some(t) = state.city_tile(p) {
                if t.team == Team::A { 'A' } else { 'B' }
            } else if let Some(u) = occupancy.first(i) {
                let u = &state.units[u];
                match (u.team, u.kind) {
                    (Team::A, UnitKind::Worker) => 'a',
                    (Team::B, UnitKind::Worker) => 'b',
                    (Team::A, UnitKind::Cart) => 'p',
                    (Team::B, UnitKind::Cart) => 'q',
                }
            } else if let Some(r) = state.resource(p) {
                r.kind.name().chars().next().unwrap_or('?')
            } else {
                '.'
            };
            out.push(c);
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "A: tiles {} units {} fuel {} research {} | B: tiles {} units {} fuel {} research {}",
        state.city_tile_count(Team::A),
        state.unit_count(Team::A),
        state.total_fuel(Team::A),
        state.research(Team::A),
        state.city_tile_count(Team::B),
        state.unit_count(Team::B),
        state.total_fuel(Team::B),
        state.research(Team::B),
    );
}
