//! Valid-action masks and single-action validation.
//!
//! The two are written independently: [`valid_actions`] sweeps the board with
//! an occupancy index, [`validate_action`] answers one query from first
//! principles. Tests hold them to exact agreement.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Direction, Position};
use crate::rules::actions::{Action, CityAction, UnitAction, CART_CHANNELS, CITYTILE_CHANNELS, WORKER_CHANNELS};
use crate::state::{GameState, ResourceKind, Team, UnitId, UnitKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rejection {
    #[error("no such unit")]
    UnknownUnit,
    #[error("no CityTile at that position")]
    UnknownCityTile,
    #[error("actor belongs to the other team")]
    NotOwned,
    #[error("actor is cooling down")]
    CannotAct,
    #[error("verb not available to this actor")]
    VerbNotAvailable,
    #[error("transfers need a cardinal direction")]
    InvalidDirection,
    #[error("destination is off the board")]
    OffBoard,
    #[error("destination is an enemy CityTile")]
    EnemyCity,
    #[error("destination is occupied")]
    Occupied,
    #[error("cargo is not full")]
    InsufficientResources,
    #[error("cell holds a resource")]
    CellHasResource,
    #[error("cell already holds a CityTile")]
    CellHasCityTile,
    #[error("no road to pillage")]
    NoRoad,
    #[error("no friendly unit to receive the transfer")]
    NoReceiver,
    #[error("nothing of that kind to transfer")]
    NothingToTransfer,
    #[error("team already has as many units as CityTiles")]
    UnitCap,
    #[error("research is maxed out")]
    ResearchMaxed,
    #[error("actor already has an action this turn")]
    DuplicateActor,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitMask {
    pub id: UnitId,
    pub kind: UnitKind,
    pub pos: Position,
    /// Carts use the first [`CART_CHANNELS`] entries.
    channels: [bool; WORKER_CHANNELS],
}

impl UnitMask {
    pub fn channels(&self) -> &[bool] {
        match self.kind {
            UnitKind::Worker => &self.channels[..WORKER_CHANNELS],
            UnitKind::Cart => &self.channels[..CART_CHANNELS],
        }
    }

    pub fn is_valid(&self, channel: usize) -> bool {
        self.channels().get(channel).copied().unwrap_or(false)
    }

    pub fn valid_channels(&self) -> impl Iterator<Item = usize> + '_ {
        self.channels().iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CityTileMask {
    pub pos: Position,
    pub channels: [bool; CITYTILE_CHANNELS],
}

impl CityTileMask {
    pub fn valid_channels(&self) -> impl Iterator<Item = usize> + '_ {
        self.channels.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i)
    }
}

/// Every actor of one team with its per-channel validity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamMask {
    pub team: Team,
    /// Sorted by unit id.
    pub units: Vec<UnitMask>,
    /// Row-major.
    pub city_tiles: Vec<CityTileMask>,
}

impl TeamMask {
    pub fn unit(&self, id: UnitId) -> Option<&UnitMask> {
        self.units.binary_search_by_key(&id, |m| m.id).ok().map(|i| &self.units[i])
    }

    pub fn city_tile(&self, pos: Position) -> Option<&CityTileMask> {
        self.city_tiles
            .binary_search_by_key(&pos.row_major(), |m| m.pos.row_major())
            .ok()
            .map(|i| &self.city_tiles[i])
    }

    /// Whether `action` is marked valid for this team.
    pub fn allows(&self, action: &Action) -> bool {
        match *action {
            Action::Unit { id, action } => self
                .unit(id)
                .and_then(|m| action.channel(m.kind).map(|c| m.is_valid(c)))
                .unwrap_or(false),
            Action::City { pos, action } => {
                self.city_tile(pos).is_some_and(|m| m.channels[action.channel()])
            }
        }
    }

    /// All mask-valid actions, enumerated actor by actor.
    pub fn all_valid(&self) -> Vec<Action> {
        let mut out = Vec::new();
        for m in &self.units {
            for c in m.valid_channels() {
                let a = UnitAction::from_channel(m.kind, c).expect("channel in layout");
                out.push(Action::unit(m.id, a));
            }
        }
        for m in &self.city_tiles {
            for c in m.valid_channels() {
                out.push(Action::city(m.pos, CityAction::from_channel(c).expect("channel in layout")));
            }
        }
        out
    }
}

/// Per-actor validity of every channel for `team`, judged against the state
/// at the start of the turn.
pub fn valid_actions(state: &GameState, team: Team) -> TeamMask {
    let occ = state.occupancy();
    let mut units = Vec::new();
    for u in state.units.iter().filter(|u| u.team == team) {
        let mut channels = [false; WORKER_CHANNELS];
        channels[Direction::Center.index()] = true;
        if u.can_act() {
            let transfer_base = match u.kind {
                UnitKind::Worker => 7,
                UnitKind::Cart => 5,
            };
            for d in Direction::CARDINALS {
                let Some(q) = state.neighbour(u.pos, d) else { continue };
                let qi = state.idx(q);
                channels[d.index()] = match &state.city_tiles[qi] {
                    Some(t) => t.team == team,
                    None => occ.count(qi) == 0,
                };
                let receiver = occ.first(qi).is_some_and(|i| state.units[i].team == team);
                if receiver {
                    for k in ResourceKind::ALL {
                        channels[transfer_base + 3 * d.index() + k.index()] = u.cargo.get(k) > 0;
                    }
                }
            }
            if u.kind == UnitKind::Worker {
                let here = state.idx(u.pos);
                let cell = &state.cells[here];
                let city_here = state.city_tiles[here].is_some();
                channels[5] = u.cargo.total() == state.constants.capacity_worker
                    && cell.resource.is_none()
                    && !city_here;
                channels[6] = !city_here && !cell.road.is_zero();
            }
        }
        units.push(UnitMask { id: u.id, kind: u.kind, pos: u.pos, channels });
    }

    let below_cap = state.unit_count(team) < state.city_tile_count(team);
    let research_open = state.research(team) < state.constants.research_cap;
    let city_tiles = state
        .city_tiles
        .iter()
        .flatten()
        .filter(|t| t.team == team)
        .map(|t| {
            let act = t.can_act();
            CityTileMask {
                pos: t.pos,
                channels: [act && below_cap, act && below_cap, act && research_open, true],
            }
        })
        .collect();
    TeamMask { team, units, city_tiles }
}

/// The friendly unit (lowest id) that stood in `dir` from `from` at the start
/// of the turn.
pub fn transfer_receiver(state: &GameState, team: Team, from: Position, dir: Direction) -> Option<UnitId> {
    let q = state.neighbour(from, dir)?;
    state.units.iter().find(|u| u.pos == q && u.team == team).map(|u| u.id)
}

/// Judges one action for `team` against the current state.
pub fn validate_action(state: &GameState, team: Team, action: &Action) -> Result<(), Rejection> {
    match *action {
        Action::City { pos, action } => {
            let tile = state
                .in_bounds(pos)
                .then(|| state.city_tile(pos))
                .flatten()
                .ok_or(Rejection::UnknownCityTile)?;
            if tile.team != team {
                return Err(Rejection::NotOwned);
            }
            if action == CityAction::Noop {
                return Ok(());
            }
            if !tile.can_act() {
                return Err(Rejection::CannotAct);
            }
            match action {
                CityAction::BuildWorker | CityAction::BuildCart => {
                    let units = state.units.iter().filter(|u| u.team == team).count() as u32;
                    let tiles = state.city_tiles.iter().flatten().filter(|t| t.team == team).count() as u32;
                    if units >= tiles {
                        return Err(Rejection::UnitCap);
                    }
                }
                CityAction::Research => {
                    if state.teams[team.index()].research_points >= state.constants.research_cap {
                        return Err(Rejection::ResearchMaxed);
                    }
                }
                CityAction::Noop => {}
            }
            Ok(())
        }
        Action::Unit { id, action } => {
            let unit = state.unit(id).ok_or(Rejection::UnknownUnit)?;
            if unit.team != team {
                return Err(Rejection::NotOwned);
            }
            if action.is_noop() {
                return Ok(());
            }
            if action.channel(unit.kind).is_none() {
                return Err(match action {
                    UnitAction::Transfer { .. } => Rejection::InvalidDirection,
                    _ => Rejection::VerbNotAvailable,
                });
            }
            if !unit.can_act() {
                return Err(Rejection::CannotAct);
            }
            match action {
                UnitAction::Move(dir) => {
                    let to = state.neighbour(unit.pos, dir).ok_or(Rejection::OffBoard)?;
                    match state.city_tile(to) {
                        Some(t) if t.team == team => Ok(()),
                        Some(_) => Err(Rejection::EnemyCity),
                        None if state.units.iter().any(|u| u.pos == to) => Err(Rejection::Occupied),
                        None => Ok(()),
                    }
                }
                UnitAction::BuildCity => {
                    if unit.cargo.total() < state.constants.capacity_worker {
                        return Err(Rejection::InsufficientResources);
                    }
                    if state.city_tile(unit.pos).is_some() {
                        return Err(Rejection::CellHasCityTile);
                    }
                    if state.resource(unit.pos).is_some() {
                        return Err(Rejection::CellHasResource);
                    }
                    Ok(())
                }
                UnitAction::Pillage => {
                    if state.city_tile(unit.pos).is_some() {
                        return Err(Rejection::CellHasCityTile);
                    }
                    if state.road(unit.pos).is_zero() {
                        return Err(Rejection::NoRoad);
                    }
                    Ok(())
                }
                UnitAction::Transfer { dir, kind } => {
                    if state.neighbour(unit.pos, dir).is_none() {
                        return Err(Rejection::OffBoard);
                    }
                    if transfer_receiver(state, team, unit.pos, dir).is_none() {
                        return Err(Rejection::NoReceiver);
                    }
                    if unit.cargo.get(kind) == 0 {
                        return Err(Rejection::NothingToTransfer);
                    }
                    Ok(())
                }
            }
        }
    }
}
