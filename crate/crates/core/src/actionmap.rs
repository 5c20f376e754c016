//! Per-cell action choices from a grid policy, decoded into engine actions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Position;
use crate::rules::actions::{Action, CityAction, UnitAction, CART_CHANNELS, CITYTILE_CHANNELS, WORKER_CHANNELS};
use crate::rules::mask::TeamMask;
use crate::state::{GameState, Team, UnitKind};

/// One channel index per cell for each actor kind, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMaps {
    pub width: u32,
    pub height: u32,
    pub worker: Vec<u8>,
    pub cart: Vec<u8>,
    pub citytile: Vec<u8>,
}

impl ActionMaps {
    /// All-noop maps: move Center for units, noop for CityTiles.
    pub fn noop(width: u32, height: u32) -> ActionMaps {
        let n = (width * height) as usize;
        ActionMaps {
            width,
            height,
            worker: vec![4; n],
            cart: vec![4; n],
            citytile: vec![CityAction::Noop.channel() as u8; n],
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShapeError {
    #[error("action maps are {got_w}x{got_h} but the board is {want_w}x{want_h}")]
    Board { got_w: u32, got_h: u32, want_w: u32, want_h: u32 },
    #[error("{head} map has {len} entries, expected {expected}")]
    Length { head: &'static str, len: usize, expected: usize },
}

/// A choice that failed the mask and was replaced by a noop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedChoice {
    pub pos: Position,
    pub head: UnitHead,
    pub channel: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitHead {
    Worker,
    Cart,
    CityTile,
}

/// Translates each own actor's cell choice into an action.
///
/// Every unit on a cell reads the same choice, which is how stacked units on
/// a CityTile are driven. Choices the mask rejects become noops and are
/// reported. Noops themselves are not emitted.
pub fn decode_action_maps(
    maps: &ActionMaps,
    state: &GameState,
    team: Team,
    mask: &TeamMask,
) -> Result<(Vec<Action>, Vec<MaskedChoice>), ShapeError> {
    if maps.width != state.width || maps.height != state.height {
        return Err(ShapeError::Board { got_w: maps.width, got_h: maps.height, want_w: state.width, want_h: state.height });
    }
    let n = state.cells.len();
    for (head, len) in [("worker", maps.worker.len()), ("cart", maps.cart.len()), ("citytile", maps.citytile.len())] {
        if len != n {
            return Err(ShapeError::Length { head, len, expected: n });
        }
    }
    let mut actions = Vec::new();
    let mut masked = Vec::new();
    for m in &mask.units {
        let i = state.idx(m.pos);
        let (channel, head, limit) = match m.kind {
            UnitKind::Worker => (maps.worker[i], UnitHead::Worker, WORKER_CHANNELS),
            UnitKind::Cart => (maps.cart[i], UnitHead::Cart, CART_CHANNELS),
        };
        let c = channel as usize;
        if c >= limit || !m.is_valid(c) {
            masked.push(MaskedChoice { pos: m.pos, head, channel });
            continue;
        }
        let action = UnitAction::from_channel(m.kind, c).expect("channel in layout");
        if !action.is_noop() {
            actions.push(Action::unit(m.id, action));
        }
    }
    for m in &mask.city_tiles {
        let channel = maps.citytile[state.idx(m.pos)];
        let c = channel as usize;
        if c >= CITYTILE_CHANNELS || !m.channels[c] {
            masked.push(MaskedChoice { pos: m.pos, head: UnitHead::CityTile, channel });
            continue;
        }
        let action = CityAction::from_channel(c).expect("channel in layout");
        if action != CityAction::Noop {
            actions.push(Action::city(m.pos, action));
        }
    }
    debug_assert!(mask.team == team);
    Ok((actions, masked))
}

/// Per-cell validity planes for one head: `channels × height × width`, true
/// where some own actor of that kind on the cell may pick the channel.
pub fn cell_masks(state: &GameState, mask: &TeamMask, head: UnitHead) -> Vec<bool> {
    let n = state.cells.len();
    let channels = match head {
        UnitHead::Worker => WORKER_CHANNELS,
        UnitHead::Cart => CART_CHANNELS,
        UnitHead::CityTile => CITYTILE_CHANNELS,
    };
    let mut out = vec![false; channels * n];
    match head {
        UnitHead::CityTile => {
            for m in &mask.city_tiles {
                let i = state.idx(m.pos);
                for c in m.valid_channels() {
                    out[c * n + i] = true;
                }
            }
        }
        _ => {
            let kind = if head == UnitHead::Worker { UnitKind::Worker } else { UnitKind::Cart };
            // A stacked cell only offers what every unit on it can do, since
            // they all read the same choice.
            let mut seen = vec![false; n];
            for m in mask.units.iter().filter(|m| m.kind == kind) {
                let i = state.idx(m.pos);
                for c in 0..channels {
                    let v = m.is_valid(c);
                    out[c * n + i] = if seen[i] { out[c * n + i] && v } else { v };
                }
                seen[i] = true;
            }
        }
    }
    out
}
