//! Agents running as child processes over a line-delimited JSON protocol.
//!
//! Every engine message is one JSON object on one line of the child's stdin
//! and carries `"version"`:
//!
//! * `{"type":"init","version":1,"team":"A","constants":{..},"map":"<map text>"}`
//!   The child answers with any single line to acknowledge.
//! * `{"type":"turn","version":1,"turn":t,"state":{..},"mask":{..}}`
//!   The child answers with one line of comma-separated actions in canonical
//!   text form (an empty line means idle).
//! * `{"type":"end","version":1,"outcome":{..}}` needs no answer.
//!
//! Each reply may take the per-turn budget plus whatever is left of the match
//! pool. Time past the per-turn budget drains the pool; once a reply
//! overshoots an empty pool the agent is frozen and never acts again. A crash
//! or a closed stdout freezes it too.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::Serialize;
use serde_json::json;

use crate::agents::{Agent, AgentError};
use crate::constants::RuleConstants;
use crate::geom::Position;
use crate::mapgen::{serialize_map, GameMap};
use crate::rules::{parse_action_line, valid_actions, Action};
use crate::state::{GameState, Outcome, Team, UnitId};

pub const PROTOCOL_VERSION: u32 = 1;

/// Wall-clock allowance for one agent over one match.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeBudget {
    pub per_turn: f64,
    pub pool: f64,
    pub frozen: bool,
}

impl TimeBudget {
    pub fn new(per_turn: f64, pool: f64) -> TimeBudget {
        TimeBudget { per_turn, pool, frozen: false }
    }

    pub fn from_constants(c: &RuleConstants) -> TimeBudget {
        TimeBudget::new(c.turn_time_budget_s, c.time_pool_s)
    }

    /// Longest the engine will wait for the next reply.
    pub fn deadline(&self) -> Duration {
        Duration::from_secs_f64(self.per_turn + self.pool)
    }

    /// Books a reply that took `elapsed` seconds. Returns whether the reply
    /// counts; a `false` leaves the budget frozen.
    pub fn charge(&mut self, elapsed: f64) -> bool {
        if self.frozen {
            return false;
        }
        let over = elapsed - self.per_turn;
        if over > 0.0 {
            if over > self.pool {
                self.pool = 0.0;
                self.frozen = true;
                return false;
            }
            self.pool -= over;
        }
        true
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }
}

#[derive(Serialize)]
struct UnitChannels {
    id: UnitId,
    valid: Vec<usize>,
}

#[derive(Serialize)]
struct CityChannels {
    pos: Position,
    valid: Vec<usize>,
}

#[derive(Serialize)]
struct MaskSummary {
    units: Vec<UnitChannels>,
    city_tiles: Vec<CityChannels>,
}

fn mask_summary(state: &GameState, team: Team) -> MaskSummary {
    let mask = valid_actions(state, team);
    MaskSummary {
        units: mask.units.iter().map(|m| UnitChannels { id: m.id, valid: m.valid_channels().collect() }).collect(),
        city_tiles: mask
            .city_tiles
            .iter()
            .map(|m| CityChannels { pos: m.pos, valid: (0..m.channels.len()).filter(|&c| m.channels[c]).collect() })
            .collect(),
    }
}

pub fn init_message(map: &GameMap, constants: &RuleConstants, team: Team) -> String {
    json!({
        "type": "init",
        "version": PROTOCOL_VERSION,
        "team": team,
        "constants": constants,
        "map": serialize_map(map),
    })
    .to_string()
}

pub fn turn_message(state: &GameState, team: Team) -> String {
    json!({
        "type": "turn",
        "version": PROTOCOL_VERSION,
        "turn": state.turn,
        "state": state,
        "mask": mask_summary(state, team),
    })
    .to_string()
}

pub fn end_message(outcome: &Outcome) -> String {
    json!({ "type": "end", "version": PROTOCOL_VERSION, "outcome": outcome }).to_string()
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

/// A shell command playing one side.
pub struct ExternalAgent {
    command: String,
    process: Option<Process>,
    budget: TimeBudget,
}

impl ExternalAgent {
    pub fn new(command: String) -> ExternalAgent {
        ExternalAgent { command, process: None, budget: TimeBudget::new(3.0, 60.0) }
    }

    pub fn budget(&self) -> TimeBudget {
        self.budget
    }

    pub fn is_frozen(&self) -> bool {
        self.budget.frozen
    }

    fn send(&mut self, line: &str) -> bool {
        let Some(p) = self.process.as_mut() else { return false };
        writeln!(p.stdin, "{line}").and_then(|_| p.stdin.flush()).is_ok()
    }

    /// Waits for one reply line under the budget; `None` freezes the agent.
    fn reply(&mut self) -> Option<String> {
        let p = self.process.as_ref()?;
        let started = Instant::now();
        let line = match p.lines.recv_timeout(self.budget.deadline()) {
            Ok(line) => line,
            Err(RecvTimeoutError::Timeout) => {
                warn!("agent `{}` timed out and is frozen", self.command);
                self.budget.freeze();
                return None;
            }
            Err(RecvTimeoutError::Disconnected) => {
                warn!("agent `{}` closed its output and is frozen", self.command);
                self.budget.freeze();
                return None;
            }
        };
        if !self.budget.charge(started.elapsed().as_secs_f64()) {
            warn!("agent `{}` exhausted its time pool and is frozen", self.command);
            return None;
        }
        Some(line)
    }
}

impl Agent for ExternalAgent {
    fn start(&mut self, map: &GameMap, state: &GameState, team: Team) -> Result<(), AgentError> {
        self.budget = TimeBudget::from_constants(&state.constants);
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| AgentError::Launch { command: self.command.clone(), source })?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        self.process = Some(Process { child, stdin, lines });
        let init = init_message(map, &state.constants, team);
        if !self.send(&init) || self.reply().is_none() {
            return Err(AgentError::Handshake(self.command.clone()));
        }
        Ok(())
    }

    fn act(&mut self, state: &GameState, team: Team) -> Vec<Action> {
        if self.budget.frozen {
            return Vec::new();
        }
        if !self.send(&turn_message(state, team)) {
            warn!("agent `{}` stopped reading and is frozen", self.command);
            self.budget.freeze();
            return Vec::new();
        }
        let Some(line) = self.reply() else { return Vec::new() };
        let (actions, errors) = parse_action_line(&line);
        for e in errors {
            warn!("agent `{}` turn {}: dropped action: {e}", self.command, state.turn);
        }
        debug!("agent `{}` turn {}: {} actions", self.command, state.turn, actions.len());
        actions
    }

    fn finish(&mut self, outcome: &Outcome) {
        self.send(&end_message(outcome));
    }
}

impl Drop for ExternalAgent {
    fn drop(&mut self) {
        if let Some(mut p) = self.process.take() {
            drop(p.stdin);
            let _ = p.child.kill();
            let _ = p.child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_rules() {
        let mut b = TimeBudget::new(3.0, 60.0);
        assert!(b.charge(1.0));
        assert_eq!(b.pool, 60.0);
        assert!(b.charge(5.0));
        assert_eq!(b.pool, 58.0);
        let mut empty = TimeBudget::new(3.0, 0.0);
        assert!(!empty.charge(4.0));
        assert!(empty.frozen);
        assert!(!empty.charge(0.1));
    }
}
