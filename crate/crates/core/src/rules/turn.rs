//! The per-turn state machine.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::Quarters;
use crate::geom::{Direction, Position};
use crate::rules::actions::{Action, CityAction, UnitAction};
use crate::rules::collection::{collect_resources, CollectionReport};
use crate::rules::end::check_game_end;
use crate::rules::mask::{transfer_receiver, validate_action, Rejection};
use crate::rules::movement::{resolve_movement, MoveCancel, MoveOutcome};
use crate::rules::night::{apply_night, deposit_resources, regrow_wood, Deposit, NightReport, Regrowth};
use crate::state::{CityId, GameState, ResourceKind, Team, TurnTally, UnitId, UnitKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    /// Earlier builds this turn already filled the team's unit cap.
    UnitCap,
    /// The actor no longer holds what it needed at execution time.
    NothingLeft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionOutcome {
    Executed,
    Rejected(Rejection),
    Cancelled(MoveCancel),
    Skipped(SkipReason),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub team: Team,
    pub action: Action,
    pub outcome: ActionOutcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferEvent {
    pub from: UnitId,
    pub to: UnitId,
    pub kind: ResourceKind,
    pub amount: u32,
    /// Stock that did not fit in the receiver and stayed with the sender.
    pub returned: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoadCause {
    CartStop,
    Pillage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoadChange {
    pub pos: Position,
    pub from: Quarters,
    pub to: Quarters,
    pub cause: RoadCause,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuiltUnit {
    pub id: UnitId,
    pub team: Team,
    pub kind: UnitKind,
    pub pos: Position,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuiltTile {
    pub team: Team,
    pub pos: Position,
    pub city: CityId,
    pub builder: UnitId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveEvent {
    pub unit: UnitId,
    pub from: Position,
    pub to: Position,
}

/// Everything that happened while resolving one turn.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnEvents {
    /// The turn number that was resolved.
    pub turn: u32,
    /// Every submitted action with what became of it, in submission order (A then B).
    pub actions: Vec<ActionRecord>,
    pub built_units: Vec<BuiltUnit>,
    pub research: [u32; 2],
    pub transfers: Vec<TransferEvent>,
    pub built_tiles: Vec<BuiltTile>,
    pub moves: Vec<MoveEvent>,
    pub road_changes: Vec<RoadChange>,
    pub collection: CollectionReport,
    pub deposits: Vec<Deposit>,
    pub night: Option<NightReport>,
    pub regrowth: Vec<Regrowth>,
}

impl TurnEvents {
    pub fn rejected(&self) -> impl Iterator<Item = &ActionRecord> {
        self.actions.iter().filter(|r| matches!(r.outcome, ActionOutcome::Rejected(_)))
    }

    pub fn unit_deaths(&self) -> Vec<UnitId> {
        let Some(n) = &self.night else { return Vec::new() };
        let mut out = n.starved.clone();
        out.extend(n.city_deaths.iter().flat_map(|d| d.crushed.iter().copied()));
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TurnError {
    #[error("the game is already over at turn {0}")]
    GameOver(u32),
}

/// Advances `state` by one turn using both teams' actions.
///
/// Actions are validated against the start-of-turn state. Invalid ones, and
/// any second action for the same actor, are dropped and logged. The one
/// relaxation is that a move into a cell whose occupant is itself moving is
/// left for the movement resolver to settle, which is what lets adjacent units
/// swap.
pub fn resolve_turn(state: &mut GameState, actions_a: &[Action], actions_b: &[Action]) -> Result<TurnEvents, TurnError> {
    if check_game_end(state).is_some() {
        return Err(TurnError::GameOver(state.turn));
    }
    let mut ev = TurnEvents { turn: state.turn, ..TurnEvents::default() };
    state.last_turn = [TurnTally::default(); 2];
    let night = state.is_night();
    let factor = if night { state.constants.night_cooldown_factor } else { 1 };

    // Validation and de-duplication against the start-of-turn state.
    let mut seen_units: HashSet<UnitId> = HashSet::new();
    let mut seen_tiles: HashSet<Position> = HashSet::new();
    let mut accepted: Vec<(usize, Team, Action)> = Vec::new();
    for (team, list) in [(Team::A, actions_a), (Team::B, actions_b)] {
        for &action in list {
            let fresh = match action {
                Action::Unit { id, .. } => seen_units.insert(id),
                Action::City { pos, .. } => seen_tiles.insert(pos),
            };
            let verdict = if !fresh {
                Err(Rejection::DuplicateActor)
            } else {
                match validate_action(state, team, &action) {
                    Err(Rejection::Occupied) => Ok(()),
                    v => v,
                }
            };
            let outcome = match verdict {
                Ok(()) => {
                    if !action.is_noop() {
                        accepted.push((ev.actions.len(), team, action));
                    }
                    ActionOutcome::Executed
                }
                Err(r) => ActionOutcome::Rejected(r),
            };
            ev.actions.push(ActionRecord { team, action, outcome });
        }
    }

    // Step 1: CityTile actions in row-major tile order.
    let mut city_actions: Vec<(usize, Team, Position, CityAction)> = accepted
        .iter()
        .filter_map(|&(slot, team, a)| match a {
            Action::City { pos, action } => Some((slot, team, pos, action)),
            _ => None,
        })
        .collect();
    city_actions.sort_by_key(|&(_, _, pos, _)| pos.row_major());
    let tile_cooldown = state.constants.cooldown_citytile * factor;
    for (slot, team, pos, action) in city_actions {
        match action {
            CityAction::BuildWorker | CityAction::BuildCart => {
                if state.unit_count(team) >= state.city_tile_count(team) {
                    ev.actions[slot].outcome = ActionOutcome::Skipped(SkipReason::UnitCap);
                    continue;
                }
                let kind = if action == CityAction::BuildWorker { UnitKind::Worker } else { UnitKind::Cart };
                let id = state.add_unit(team, kind, pos);
                state.last_turn[team.index()].units_built += 1;
                ev.built_units.push(BuiltUnit { id, team, kind, pos });
            }
            CityAction::Research => {
                let points = &mut state.teams[team.index()].research_points;
                let gained = u32::from(*points < state.constants.research_cap);
                *points += gained;
                state.last_turn[team.index()].research_gained += gained;
                ev.research[team.index()] += gained;
            }
            CityAction::Noop => continue,
        }
        let i = state.idx(pos);
        let tile = state.city_tiles[i].as_mut().expect("validated CityTile");
        tile.cooldown = tile.cooldown + tile_cooldown;
    }

    // Step 2: unit actions. Movement is settled against start-of-turn cells
    // before any CityTile from this step exists.
    let mut unit_actions: Vec<(usize, Team, UnitId, UnitAction)> = accepted
        .iter()
        .filter_map(|&(slot, team, a)| match a {
            Action::Unit { id, action } => Some((slot, team, id, action)),
            _ => None,
        })
        .collect();
    unit_actions.sort_by_key(|&(_, _, id, _)| id);
    let intents: Vec<(UnitId, Direction)> = unit_actions
        .iter()
        .filter_map(|&(_, _, id, a)| match a {
            UnitAction::Move(d) => Some((id, d)),
            _ => None,
        })
        .collect();
    let movement = resolve_movement(state, &intents);

    let mut acted: Vec<UnitId> = Vec::new();
    for &(slot, team, id, action) in &unit_actions {
        let UnitAction::Transfer { dir, kind } = action else { continue };
        let from_pos = state.unit(id).expect("validated unit").pos;
        let to = transfer_receiver(state, team, from_pos, dir).expect("validated receiver");
        let stock = state.unit(id).expect("validated unit").cargo.get(kind);
        let receiver = state.unit(to).expect("receiver exists");
        let amount = stock.min(receiver.space(&state.constants));
        if stock == 0 {
            ev.actions[slot].outcome = ActionOutcome::Skipped(SkipReason::NothingLeft);
            continue;
        }
        *state.unit_mut(id).expect("unit").cargo.get_mut(kind) -= amount;
        *state.unit_mut(to).expect("unit").cargo.get_mut(kind) += amount;
        ev.transfers.push(TransferEvent { from: id, to, kind, amount, returned: stock - amount });
        acted.push(id);
    }
    for &(_, team, id, action) in &unit_actions {
        match action {
            UnitAction::BuildCity => {
                let unit = state.unit_mut(id).expect("validated unit");
                unit.cargo = Default::default();
                let pos = unit.pos;
                let city = state.add_city_tile(team, pos);
                state.last_turn[team.index()].city_tiles_built += 1;
                ev.built_tiles.push(BuiltTile { team, pos, city, builder: id });
                acted.push(id);
            }
            UnitAction::Pillage => {
                let pos = state.unit(id).expect("validated unit").pos;
                let i = state.idx(pos);
                let from = state.cells[i].road;
                let to = from.saturating_sub(state.constants.road_pillage_decrement);
                state.cells[i].road = to;
                ev.road_changes.push(RoadChange { pos, from, to, cause: RoadCause::Pillage });
                acted.push(id);
            }
            _ => {}
        }
    }
    let slot_of = |id: UnitId| unit_actions.iter().find(|a| a.2 == id).map(|a| a.0);
    for (id, outcome) in movement {
        match outcome {
            MoveOutcome::Moved { from, to } => {
                state.unit_mut(id).expect("validated unit").pos = to;
                ev.moves.push(MoveEvent { unit: id, from, to });
                acted.push(id);
            }
            MoveOutcome::Cancelled(reason) => {
                if let Some(slot) = slot_of(id) {
                    ev.actions[slot].outcome = ActionOutcome::Cancelled(reason);
                }
            }
        }
    }
    for id in acted {
        let kind = state.unit(id).expect("acting unit").kind;
        let add = state.constants.unit_cooldown(kind) * factor;
        let unit = state.unit_mut(id).expect("acting unit");
        unit.cooldown = unit.cooldown + add;
    }

    // Step 3: carts pave the non-city cells they stand on.
    for ui in 0..state.units.len() {
        if state.units[ui].kind != UnitKind::Cart {
            continue;
        }
        let pos = state.units[ui].pos;
        let i = state.idx(pos);
        if state.city_tiles[i].is_some() {
            continue;
        }
        let from = state.cells[i].road;
        let to = (from + state.constants.road_build_per_cart_stop).min(state.constants.road_max);
        if to != from {
            state.cells[i].road = to;
            ev.road_changes.push(RoadChange { pos, from, to, cause: RoadCause::CartStop });
        }
    }

    // Steps 4 to 7.
    ev.collection = collect_resources(state);
    ev.deposits = deposit_resources(state);
    if night {
        ev.night = Some(apply_night(state).expect("night checked above"));
    }
    ev.regrowth = regrow_wood(state);

    // Step 8: cooldown recovery, faster on roads.
    for ui in 0..state.units.len() {
        let road = state.cells[state.idx(state.units[ui].pos)].road;
        let unit = &mut state.units[ui];
        unit.cooldown = unit.cooldown.saturating_sub(Quarters::ONE + road);
    }
    for tile in state.city_tiles.iter_mut().flatten() {
        tile.cooldown = tile.cooldown.saturating_sub(Quarters::ONE);
    }
    state.turn += 1;
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::RuleConstants;

    fn board() -> GameState {
        GameState::empty(12, 12, RuleConstants::default())
    }

    fn mv(id: UnitId, d: Direction) -> Action {
        Action::unit(id, UnitAction::Move(d))
    }

    /// Keeps both teams alive so the game does not end by elimination.
    fn anchor(s: &mut GameState) {
        s.add_city_tile(Team::A, Position::new(0, 11));
        s.add_city_tile(Team::B, Position::new(11, 11));
        for c in s.cities.values_mut() {
            c.fuel = 10_000;
        }
    }

    #[test]
    fn day_move_costs_two_then_recovers_one() {
        let mut s = board();
        anchor(&mut s);
        let id = s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        resolve_turn(&mut s, &[mv(id, Direction::East)], &[]).unwrap();
        let u = s.unit(id).unwrap();
        assert_eq!(u.pos, Position::new(6, 5));
        assert_eq!(u.cooldown, Quarters::whole(1));
    }

    #[test]
    fn night_move_costs_double() {
        let mut s = board();
        anchor(&mut s);
        s.turn = 30;
        let id = s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        s.unit_mut(id).unwrap().cargo.wood = 50;
        resolve_turn(&mut s, &[mv(id, Direction::East)], &[]).unwrap();
        assert_eq!(s.unit(id).unwrap().cooldown, Quarters::whole(3));
    }

    #[test]
    fn swap_is_allowed_through_validation() {
        let mut s = board();
        anchor(&mut s);
        let a = s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        let b = s.add_unit(Team::B, UnitKind::Worker, Position::new(6, 5));
        let ev = resolve_turn(&mut s, &[mv(a, Direction::East)], &[mv(b, Direction::West)]).unwrap();
        assert_eq!(ev.moves.len(), 2);
        assert_eq!(s.unit(a).unwrap().pos, Position::new(6, 5));
        assert_eq!(s.unit(b).unwrap().pos, Position::new(5, 5));
    }

    #[test]
    fn cannot_walk_onto_a_tile_built_this_turn() {
        let mut s = board();
        anchor(&mut s);
        let builder = s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        s.unit_mut(builder).unwrap().cargo.wood = 100;
        let walker = s.add_unit(Team::A, UnitKind::Worker, Position::new(4, 5));
        let ev = resolve_turn(
            &mut s,
            &[Action::unit(builder, UnitAction::BuildCity), mv(walker, Direction::East)],
            &[],
        )
        .unwrap();
        assert_eq!(ev.built_tiles.len(), 1);
        assert_eq!(s.unit(walker).unwrap().pos, Position::new(4, 5));
        assert_eq!(ev.actions[1].outcome, ActionOutcome::Cancelled(MoveCancel::Blocked));
    }

    #[test]
    fn duplicate_and_invalid_actions_are_dropped() {
        let mut s = board();
        anchor(&mut s);
        let id = s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        let ev = resolve_turn(
            &mut s,
            &[mv(id, Direction::East), mv(id, Direction::West), Action::unit(UnitId(99), UnitAction::Pillage)],
            &[mv(id, Direction::North)],
        )
        .unwrap();
        let outcomes: Vec<_> = ev.actions.iter().map(|r| r.outcome).collect();
        assert_eq!(
            outcomes,
            vec![
                ActionOutcome::Executed,
                ActionOutcome::Rejected(Rejection::DuplicateActor),
                ActionOutcome::Rejected(Rejection::UnknownUnit),
                ActionOutcome::Rejected(Rejection::DuplicateActor),
            ]
        );
        assert_eq!(s.unit(id).unwrap().pos, Position::new(6, 5));
    }

    #[test]
    fn second_build_past_cap_is_skipped() {
        let mut s = board();
        s.add_city_tile(Team::A, Position::new(3, 3));
        s.add_city_tile(Team::A, Position::new(4, 3));
        s.add_unit(Team::A, UnitKind::Worker, Position::new(8, 8));
        s.add_unit(Team::B, UnitKind::Worker, Position::new(11, 11));
        let ev = resolve_turn(
            &mut s,
            &[
                Action::city(Position::new(4, 3), CityAction::BuildWorker),
                Action::city(Position::new(3, 3), CityAction::BuildCart),
            ],
            &[],
        )
        .unwrap();
        // (3,3) comes first in row-major order and takes the last slot.
        assert_eq!(ev.built_units.len(), 1);
        assert_eq!(ev.built_units[0].kind, UnitKind::Cart);
        assert_eq!(ev.actions[0].outcome, ActionOutcome::Skipped(SkipReason::UnitCap));
        assert_eq!(s.city_tile(Position::new(4, 3)).unwrap().cooldown, Quarters::ZERO);
        assert_eq!(s.city_tile(Position::new(3, 3)).unwrap().cooldown, Quarters::whole(9));
    }

    #[test]
    fn research_clamps_at_cap() {
        let mut s = board();
        s.add_city_tile(Team::A, Position::new(3, 3));
        s.add_city_tile(Team::A, Position::new(5, 3));
        s.add_unit(Team::A, UnitKind::Worker, Position::new(8, 8));
        s.add_unit(Team::B, UnitKind::Worker, Position::new(11, 11));
        s.teams[0].research_points = 199;
        let r = |x| Action::city(Position::new(x, 3), CityAction::Research);
        resolve_turn(&mut s, &[r(3), r(5)], &[]).unwrap();
        assert_eq!(s.research(Team::A), 200);
        assert_eq!(s.last_turn[0].research_gained, 1);
    }

    #[test]
    fn transfer_caps_at_receiver_space() {
        let mut s = board();
        anchor(&mut s);
        let a = s.add_unit(Team::A, UnitKind::Cart, Position::new(5, 5));
        let b = s.add_unit(Team::A, UnitKind::Worker, Position::new(6, 5));
        s.unit_mut(a).unwrap().cargo.coal = 150;
        s.unit_mut(b).unwrap().cargo.wood = 30;
        let t = Action::unit(a, UnitAction::Transfer { dir: Direction::East, kind: ResourceKind::Coal });
        let ev = resolve_turn(&mut s, &[t], &[]).unwrap();
        assert_eq!(ev.transfers[0].amount, 70);
        assert_eq!(ev.transfers[0].returned, 80);
        assert_eq!(s.unit(a).unwrap().cargo.coal, 80);
        assert_eq!(s.unit(b).unwrap().cargo.coal, 70);
    }

    #[test]
    fn carts_pave_and_roads_speed_recovery() {
        let mut s = board();
        anchor(&mut s);
        let c = s.add_unit(Team::A, UnitKind::Cart, Position::new(5, 5));
        resolve_turn(&mut s, &[], &[]).unwrap();
        assert_eq!(s.road(Position::new(5, 5)), Quarters(3));
        s.unit_mut(c).unwrap().cooldown = Quarters::whole(3);
        resolve_turn(&mut s, &[], &[]).unwrap();
        // Road now 1.5; cooldown drops by 1 + 1.5.
        assert_eq!(s.road(Position::new(5, 5)), Quarters(6));
        assert_eq!(s.unit(c).unwrap().cooldown, Quarters(2));
    }

    #[test]
    fn ended_game_refuses_turns() {
        let mut s = board();
        assert_eq!(resolve_turn(&mut s, &[], &[]), Err(TurnError::GameOver(0)));
    }
}
