//! Simultaneous movement resolution.

use serde::{Deserialize, Serialize};

use crate::geom::{Direction, Position};
use crate::state::{GameState, UnitId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveCancel {
    /// Two or more units tried to enter the same non-city cell.
    Collision,
    /// The destination stays occupied by a unit that is not leaving.
    Blocked,
    OffBoard,
    EnemyCity,
    UnknownUnit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveOutcome {
    Moved { from: Position, to: Position },
    Cancelled(MoveCancel),
}

/// Resolves one turn of move intents against the start-of-turn positions.
///
/// Friendly CityTiles admit any number of arrivals. A non-city destination
/// admits exactly one arrival, and only if whoever stood there at the start of
/// the turn leaves successfully. Cancellations cascade to a fixpoint, so
/// chains and cycles (including two-unit swaps) move together.
///
/// `Center` intents are ignored. Results are returned in intent order.
pub fn resolve_movement(state: &GameState, intents: &[(UnitId, Direction)]) -> Vec<(UnitId, MoveOutcome)> {
    struct Mover {
        unit: usize,
        target: usize,
        target_is_city: bool,
    }

    let mut results: Vec<(UnitId, Option<MoveOutcome>)> = Vec::with_capacity(intents.len());
    let mut movers: Vec<Mover> = Vec::new();
    let mut mover_slot: Vec<usize> = Vec::new();
    // Start-of-turn non-city occupant of each cell.
    let mut occupant = vec![usize::MAX; state.cells.len()];
    for (i, u) in state.units.iter().enumerate() {
        let c = state.idx(u.pos);
        if state.city_tiles[c].is_none() {
            occupant[c] = i;
        }
    }

    for &(id, dir) in intents {
        if dir == Direction::Center {
            continue;
        }
        let Some(ui) = state.unit_index(id) else {
            results.push((id, Some(MoveOutcome::Cancelled(MoveCancel::UnknownUnit))));
            continue;
        };
        let unit = &state.units[ui];
        let Some(to) = state.neighbour(unit.pos, dir) else {
            results.push((id, Some(MoveOutcome::Cancelled(MoveCancel::OffBoard))));
            continue;
        };
        let target = state.idx(to);
        let target_is_city = match &state.city_tiles[target] {
            Some(t) if t.team != unit.team => {
                results.push((id, Some(MoveOutcome::Cancelled(MoveCancel::EnemyCity))));
                continue;
            }
            Some(_) => true,
            None => false,
        };
        mover_slot.push(results.len());
        results.push((id, None));
        movers.push(Mover { unit: ui, target, target_is_city });
    }

    // moving[unit index] -> mover index, while that mover is still active.
    let mut moving = vec![usize::MAX; state.units.len()];
    for (m, mv) in movers.iter().enumerate() {
        moving[mv.unit] = m;
    }
    let mut cancelled: Vec<Option<MoveCancel>> = vec![None; movers.len()];
    let mut arrivals = vec![0u16; state.cells.len()];
    loop {
        arrivals.iter_mut().for_each(|a| *a = 0);
        for (m, mv) in movers.iter().enumerate() {
            if cancelled[m].is_none() && !mv.target_is_city {
                arrivals[mv.target] += 1;
            }
        }
        let mut changed = false;
        for (m, mv) in movers.iter().enumerate() {
            if cancelled[m].is_some() || mv.target_is_city {
                continue;
            }
            let reason = if arrivals[mv.target] >= 2 {
                Some(MoveCancel::Collision)
            } else {
                match occupant[mv.target] {
                    usize::MAX => None,
                    occ if occ == mv.unit => None,
                    occ if moving[occ] == usize::MAX => Some(MoveCancel::Blocked),
                    _ => None,
                }
            };
            if let Some(r) = reason {
                cancelled[m] = Some(r);
                moving[mv.unit] = usize::MAX;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    for (m, mv) in movers.iter().enumerate() {
        let unit = &state.units[mv.unit];
        let outcome = match cancelled[m] {
            Some(r) => MoveOutcome::Cancelled(r),
            None => MoveOutcome::Moved { from: unit.pos, to: state.pos_of(mv.target) },
        };
        results[mover_slot[m]].1 = Some(outcome);
    }
    results.into_iter().map(|(id, o)| (id, o.expect("every intent resolved"))).collect()
}
