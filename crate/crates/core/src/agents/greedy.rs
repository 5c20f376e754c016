//! A fixed rule-based baseline.
//!
//! Workers gather the nearest resource they can mine, bank it in a City when
//! the City is short of fuel for the night or when night is close, and
//! otherwise turn a full cargo into a new CityTile next to their own City.
//! CityTiles build Workers while the cap allows, then research.
//!
//! The rules are frozen: acceptance thresholds depend on their strength.

use std::collections::{HashSet, VecDeque};

use crate::agents::Agent;
use crate::geom::{Direction, Position};
use crate::rules::actions::{CityAction, UnitAction};
use crate::rules::mask::UnitMask;
use crate::rules::{valid_actions, Action};
use crate::state::{GameState, Team, Unit, UnitKind};

#[derive(Clone, Copy, Debug, Default)]
pub struct GreedyAgent;

/// Fuel a City should hold before its Workers stop topping it up.
fn city_reserve(state: &GameState, team: Team) -> bool {
    let nights = state.constants.night_length() as u64;
    state
        .cities
        .values()
        .filter(|c| c.team == team)
        .any(|c| c.fuel < state.city_upkeep(c) * nights)
}

impl Agent for GreedyAgent {
    fn act(&mut self, state: &GameState, team: Team) -> Vec<Action> {
        let mask = valid_actions(state, team);
        let mut out = Vec::new();

        let mut units = state.unit_count(team);
        let tiles = state.city_tile_count(team);
        let mut research = state.research(team);
        for m in &mask.city_tiles {
            let a = if units < tiles && m.channels[CityAction::BuildWorker.channel()] {
                units += 1;
                CityAction::BuildWorker
            } else if research < state.constants.research_cap && m.channels[CityAction::Research.channel()] {
                research += 1;
                CityAction::Research
            } else {
                continue;
            };
            out.push(Action::city(m.pos, a));
        }

        let needs_fuel = city_reserve(state, team);
        let c = &state.constants;
        let in_cycle = state.turn % c.cycle_length;
        let mut claimed: HashSet<Position> = HashSet::new();
        for m in mask.units.iter().filter(|m| m.kind == UnitKind::Worker) {
            let unit = state.unit(m.id).expect("masked unit exists");
            if !unit.can_act() {
                continue;
            }
            let on_city = state.city_tile(unit.pos).is_some_and(|t| t.team == team);
            let home = nearest(state, team, unit.pos, |s, p| s.city_tile(p).is_some_and(|t| t.team == team));
            let home_dist = home.map_or(u32::MAX, |(_, d)| d);
            let night = state.is_night();
            let dusk = !night && home_dist.saturating_add(in_cycle + 2) >= c.day_length;
            let full = unit.cargo.total() >= c.capacity_worker;

            // Head for shelter before dark; at night only a thin cargo needs it.
            if home.is_some() && (dusk || night && unit.cargo.total() < 40) {
                if !on_city {
                    step_toward(state, team, m, home.unwrap().0, &mut claimed, &mut out);
                }
                continue;
            }
            if full {
                if needs_fuel && home.is_some() {
                    step_toward(state, team, m, home.unwrap().0, &mut claimed, &mut out);
                    continue;
                }
                if m.is_valid(UnitAction::BuildCity.channel(UnitKind::Worker).expect("worker verb")) {
                    out.push(Action::unit(m.id, UnitAction::BuildCity));
                    continue;
                }
                let site = nearest(state, team, unit.pos, |s, p| buildable(s, p) && s.friendly_neighbours(p, team) > 0)
                    .or_else(|| nearest(state, team, unit.pos, buildable));
                if let Some((site, _)) = site {
                    step_toward(state, team, m, site, &mut claimed, &mut out);
                }
                continue;
            }
            if !on_city && touches_resource(state, team, unit) {
                claimed.insert(unit.pos);
                continue;
            }
            let target = nearest(state, team, unit.pos, |s, p| {
                s.resource(p).is_some_and(|r| s.can_collect(team, r.kind)) && s.city_tile(p).is_none()
            });
            match target {
                Some((t, _)) => step_toward(state, team, m, t, &mut claimed, &mut out),
                None => {
                    claimed.insert(unit.pos);
                }
            }
        }
        out
    }
}

fn buildable(state: &GameState, p: Position) -> bool {
    state.resource(p).is_none() && state.city_tile(p).is_none()
}

fn touches_resource(state: &GameState, team: Team, unit: &Unit) -> bool {
    Direction::ALL
        .iter()
        .filter_map(|&d| state.neighbour(unit.pos, d))
        .any(|p| state.resource(p).is_some_and(|r| state.can_collect(team, r.kind)))
}

fn passable(state: &GameState, team: Team, p: Position) -> bool {
    state.city_tile(p).is_none_or(|t| t.team == team)
}

/// Breadth-first search over passable cells; returns the closest cell
/// satisfying `goal` (row-major tie-break) and its distance.
fn nearest(
    state: &GameState,
    team: Team,
    from: Position,
    goal: impl Fn(&GameState, Position) -> bool,
) -> Option<(Position, u32)> {
    let dist = bfs(state, team, from);
    let mut best: Option<(u32, (u32, u32), Position)> = None;
    for (i, d) in dist.iter().enumerate() {
        let Some(d) = *d else { continue };
        let p = state.pos_of(i);
        if goal(state, p) && best.is_none_or(|b| (d, p.row_major()) < (b.0, b.1)) {
            best = Some((d, p.row_major(), p));
        }
    }
    best.map(|(d, _, p)| (p, d))
}

fn bfs(state: &GameState, team: Team, from: Position) -> Vec<Option<u32>> {
    let mut dist = vec![None; state.cells.len()];
    let mut queue = VecDeque::new();
    dist[state.idx(from)] = Some(0);
    queue.push_back(from);
    while let Some(p) = queue.pop_front() {
        let d = dist[state.idx(p)].expect("queued cells have a distance");
        for dir in Direction::CARDINALS {
            let Some(q) = state.neighbour(p, dir) else { continue };
            let qi = state.idx(q);
            if dist[qi].is_none() && passable(state, team, q) {
                dist[qi] = Some(d + 1);
                queue.push_back(q);
            }
        }
    }
    dist
}

/// Moves one step closer to `target` if some mask-valid, unclaimed step does.
fn step_toward(
    state: &GameState,
    team: Team,
    m: &UnitMask,
    target: Position,
    claimed: &mut HashSet<Position>,
    out: &mut Vec<Action>,
) {
    let dist = bfs(state, team, target);
    let here = dist[state.idx(m.pos)].unwrap_or(u32::MAX);
    for dir in Direction::CARDINALS {
        let Some(q) = state.neighbour(m.pos, dir) else { continue };
        let closer = dist[state.idx(q)].is_some_and(|d| d < here);
        let city = state.city_tile(q).is_some();
        if closer && m.is_valid(dir.index()) && (city || !claimed.contains(&q)) {
            claimed.insert(q);
            out.push(Action::unit(m.id, UnitAction::Move(dir)));
            return;
        }
    }
    claimed.insert(m.pos);
}
