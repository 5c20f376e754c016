//! Behaviour metrics computed from episode traces.

use std::collections::HashSet;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Position;
use crate::state::{GameState, Team, UnitKind};

/// One team's view of a single turn.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamSnapshot {
    pub city_tiles: u32,
    pub workers: Vec<Position>,
    pub fuel: u64,
    /// Wood this team has taken off tiles since the start, waste excluded.
    pub wood_collected: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub turn: u32,
    pub teams: [TeamSnapshot; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub width: u32,
    pub height: u32,
    pub initial_wood: u64,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("trace has no snapshots")]
    EmptyTrace,
    #[error("map spawned no wood")]
    ZeroInitialWood,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl EpisodeTrace {
    /// Starts a trace from the initial state, which becomes its first snapshot.
    pub fn new(initial: &GameState) -> EpisodeTrace {
        let mut trace = EpisodeTrace {
            width: initial.width,
            height: initial.height,
            initial_wood: initial.total_wood(),
            snapshots: Vec::with_capacity(initial.constants.episode_length as usize + 1),
        };
        trace.push(initial);
        trace
    }

    /// Records `state` right after a turn was resolved.
    pub fn push(&mut self, state: &GameState) {
        let prev = self.snapshots.last();
        let teams = Team::BOTH.map(|team| TeamSnapshot {
            city_tiles: state.city_tile_count(team),
            workers: state
                .units
                .iter()
                .filter(|u| u.team == team && u.kind == UnitKind::Worker)
                .map(|u| u.pos)
                .collect(),
            fuel: state.total_fuel(team),
            wood_collected: prev.map_or(0, |p| {
                p.teams[team.index()].wood_collected + state.last_turn[team.index()].wood_collected
            }),
        });
        self.snapshots.push(Snapshot { turn: state.turn, teams });
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    fn team(&self, team: Team) -> Result<impl Iterator<Item = &TeamSnapshot>, MetricsError> {
        if self.snapshots.is_empty() {
            return Err(MetricsError::EmptyTrace);
        }
        Ok(self.snapshots.iter().map(move |s| &s.teams[team.index()]))
    }
}

/// Final CityTile count over the episode maximum; 1.0 if the team never had any.
pub fn city_survival_ratio(trace: &EpisodeTrace, team: Team) -> Result<f64, MetricsError> {
    let counts: Vec<u32> = trace.team(team)?.map(|t| t.city_tiles).collect();
    let max = *counts.iter().max().expect("non-empty");
    let last = *counts.last().expect("non-empty");
    Ok(if max == 0 { 1.0 } else { last as f64 / max as f64 })
}

/// Maximal diagonal runs of at least five Workers (both diagonal directions)
/// on one board.
pub fn diagonal_runs(workers: &[Position]) -> u64 {
    let cells: HashSet<(i64, i64)> = workers.iter().map(|p| (p.x as i64, p.y as i64)).collect();
    let mut runs = 0;
    for dx in [1i64, -1] {
        for &(x, y) in &cells {
            if cells.contains(&(x - dx, y - 1)) {
                continue;
            }
            let mut len = 1;
            while cells.contains(&(x + dx * len, y + len)) {
                len += 1;
            }
            if len >= 5 {
                runs += 1;
            }
        }
    }
    runs
}

/// [`diagonal_runs`] summed over every turn of the trace.
pub fn five_diagonal_count(trace: &EpisodeTrace, team: Team) -> Result<u64, MetricsError> {
    Ok(trace.team(team)?.map(|t| diagonal_runs(&t.workers)).sum())
}

/// Wood collected by the team over the wood the map spawned with.
pub fn total_wood_collect(trace: &EpisodeTrace, team: Team) -> Result<f64, MetricsError> {
    if trace.initial_wood == 0 {
        return Err(MetricsError::ZeroInitialWood);
    }
    let collected = trace.team(team)?.last().expect("non-empty").wood_collected;
    Ok(collected as f64 / trace.initial_wood as f64)
}

/// Total City fuel per recorded turn.
pub fn fuel_trace(trace: &EpisodeTrace, team: Team) -> Result<Vec<u64>, MetricsError> {
    Ok(trace.team(team)?.map(|t| t.fuel).collect())
}

/// One CSV row of scalar metrics for one team in one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub size: u32,
    pub team: String,
    pub agent: String,
    pub result: String,
    pub final_turn: u32,
    pub final_city_tiles: u32,
    pub city_survival_ratio: f64,
    /// Per-turn occurrences, summed.
    pub five_diagonal_turns: u64,
    pub total_wood_collect: f64,
    pub final_fuel: u64,
}

impl MetricsRow {
    pub fn from_trace(trace: &EpisodeTrace, team: Team, seed: u64, agent: &str, result: &str) -> Result<MetricsRow, MetricsError> {
        let last = trace.snapshots.last().ok_or(MetricsError::EmptyTrace)?;
        Ok(MetricsRow {
            seed,
            size: trace.width,
            team: team.to_string(),
            agent: agent.to_string(),
            result: result.to_string(),
            final_turn: last.turn,
            final_city_tiles: last.teams[team.index()].city_tiles,
            city_survival_ratio: city_survival_ratio(trace, team)?,
            five_diagonal_turns: five_diagonal_count(trace, team)?,
            total_wood_collect: if trace.initial_wood == 0 { 0.0 } else { total_wood_collect(trace, team)? },
            final_fuel: last.teams[team.index()].fuel,
        })
    }
}

pub fn write_metrics_csv<W: io::Write>(out: W, rows: &[MetricsRow]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Fuel series for both teams, one row per recorded turn.
pub fn write_fuel_series_csv<W: io::Write>(out: W, trace: &EpisodeTrace) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["turn", "fuel_a", "fuel_b"])?;
    for s in &trace.snapshots {
        w.write_record([s.turn.to_string(), s.teams[0].fuel.to_string(), s.teams[1].fuel.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_of(tiles: &[u32]) -> EpisodeTrace {
        EpisodeTrace {
            width: 12,
            height: 12,
            initial_wood: 1000,
            snapshots: tiles
                .iter()
                .enumerate()
                .map(|(t, &n)| Snapshot {
                    turn: t as u32,
                    teams: [TeamSnapshot { city_tiles: n, ..Default::default() }, TeamSnapshot::default()],
                })
                .collect(),
        }
    }

    #[test]
    fn survival_ratio_fixtures() {
        assert_eq!(city_survival_ratio(&trace_of(&[1, 20, 18, 15]), Team::A).unwrap(), 0.75);
        assert_eq!(city_survival_ratio(&trace_of(&[0, 0]), Team::A).unwrap(), 1.0);
        assert_eq!(city_survival_ratio(&trace_of(&[1, 3, 3]), Team::A).unwrap(), 1.0);
        assert!(matches!(city_survival_ratio(&trace_of(&[]), Team::A), Err(MetricsError::EmptyTrace)));
    }

    #[test]
    fn diagonal_fixtures() {
        let six: Vec<Position> = (0..6).map(|i| Position::new(i, i)).collect();
        assert_eq!(diagonal_runs(&six), 1);
        assert_eq!(diagonal_runs(&six[..4]), 0);
        let anti: Vec<Position> = (0..5).map(|i| Position::new(9 - i, i)).collect();
        assert_eq!(diagonal_runs(&anti), 1);
        let mut t = trace_of(&[0; 10]);
        for s in &mut t.snapshots {
            s.teams[0].workers = anti.clone();
        }
        assert_eq!(five_diagonal_count(&t, Team::A).unwrap(), 10);
        assert_eq!(five_diagonal_count(&t, Team::B).unwrap(), 0);
    }

    #[test]
    fn wood_ratio_fixtures() {
        let mut t = trace_of(&[0, 0]);
        t.snapshots[1].teams[0].wood_collected = 5200;
        assert_eq!(total_wood_collect(&t, Team::A).unwrap(), 5.2);
        assert_eq!(total_wood_collect(&t, Team::B).unwrap(), 0.0);
        t.initial_wood = 0;
        assert!(matches!(total_wood_collect(&t, Team::A), Err(MetricsError::ZeroInitialWood)));
    }

    #[test]
    fn csv_has_header_rows() {
        let t = trace_of(&[1, 2, 2]);
        let mut buf = Vec::new();
        write_fuel_series_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("turn,fuel_a,fuel_b\n"));
        let row = MetricsRow::from_trace(&t, Team::A, 7, "greedy", "win").unwrap();
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("seed,size,team,agent,result,final_turn,"));
    }
}
