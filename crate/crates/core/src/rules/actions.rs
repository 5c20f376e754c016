//! Action vocabulary, its canonical text form, and the per-cell channel layouts.
//!
//! Channel layouts (the policy-facing wire contract):
//!
//! | actor    | channels | meaning                                                        |
//! |----------|----------|----------------------------------------------------------------|
//! | Worker   | 0..=4    | move N, E, S, W, Center                                        |
//! |          | 5        | build CityTile                                                 |
//! |          | 6        | pillage                                                        |
//! |          | 7..=18   | transfer, `7 + 3 * dir + kind` (dir N,E,S,W; kind wood,coal,uranium) |
//! | Cart     | 0..=4    | move N, E, S, W, Center                                        |
//! |          | 5..=16   | transfer, `5 + 3 * dir + kind`                                 |
//! | CityTile | 0..=3    | build Worker, build Cart, research, noop                       |
//!
//! Text form, one action per token group:
//! `m <id> <n|e|s|w|c>`, `p <id>`, `bcity <id>`, `t <id> <dir> <kind>`,
//! `bw <x> <y>`, `bc <x> <y>`, `r <x> <y>`, `idle <x> <y>`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::geom::{Direction, Position};
use crate::state::{ResourceKind, UnitId, UnitKind};

pub const WORKER_CHANNELS: usize = 19;
pub const CART_CHANNELS: usize = 17;
pub const CITYTILE_CHANNELS: usize = 4;

const TRANSFERS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnitAction {
    Move(Direction),
    Pillage,
    BuildCity,
    /// Sends the actor's whole stock of `kind` to the friendly unit that stood
    /// in `dir` at the start of the turn.
    Transfer { dir: Direction, kind: ResourceKind },
}

impl UnitAction {
    pub fn is_noop(self) -> bool {
        self == UnitAction::Move(Direction::Center)
    }

    pub fn channel(self, kind: UnitKind) -> Option<usize> {
        let transfer_base = match kind {
            UnitKind::Worker => 7,
            UnitKind::Cart => 5,
        };
        match (self, kind) {
            (UnitAction::Move(d), _) => Some(d.index()),
            (UnitAction::BuildCity, UnitKind::Worker) => Some(5),
            (UnitAction::Pillage, UnitKind::Worker) => Some(6),
            (UnitAction::Transfer { dir, kind: res }, _) if dir.is_cardinal() => {
                Some(transfer_base + 3 * dir.index() + res.index())
            }
            _ => None,
        }
    }

    pub fn from_channel(kind: UnitKind, channel: usize) -> Option<UnitAction> {
        let transfer = |i: usize| UnitAction::Transfer {
            dir: Direction::CARDINALS[i / 3],
            kind: ResourceKind::ALL[i % 3],
        };
        match (kind, channel) {
            (_, 0..=4) => Some(UnitAction::Move(Direction::ALL[channel])),
            (UnitKind::Worker, 5) => Some(UnitAction::BuildCity),
            (UnitKind::Worker, 6) => Some(UnitAction::Pillage),
            (UnitKind::Worker, c) if (7..7 + TRANSFERS).contains(&c) => Some(transfer(c - 7)),
            (UnitKind::Cart, c) if (5..5 + TRANSFERS).contains(&c) => Some(transfer(c - 5)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CityAction {
    BuildWorker,
    BuildCart,
    Research,
    Noop,
}

impl CityAction {
    pub const ALL: [CityAction; 4] =
        [CityAction::BuildWorker, CityAction::BuildCart, CityAction::Research, CityAction::Noop];

    pub fn channel(self) -> usize {
        self as usize
    }

    pub fn from_channel(channel: usize) -> Option<CityAction> {
        CityAction::ALL.get(channel).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Unit { id: UnitId, action: UnitAction },
    City { pos: Position, action: CityAction },
}

impl Action {
    pub fn unit(id: UnitId, action: UnitAction) -> Action {
        Action::Unit { id, action }
    }

    pub fn city(pos: Position, action: CityAction) -> Action {
        Action::City { pos, action }
    }

    pub fn is_noop(&self) -> bool {
        match self {
            Action::Unit { action, .. } => action.is_noop(),
            Action::City { action, .. } => *action == CityAction::Noop,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Action::Unit { id, action } => match action {
                UnitAction::Move(d) => write!(f, "m {id} {}", d.code()),
                UnitAction::Pillage => write!(f, "p {id}"),
                UnitAction::BuildCity => write!(f, "bcity {id}"),
                UnitAction::Transfer { dir, kind } => {
                    write!(f, "t {id} {} {}", dir.code(), kind.name())
                }
            },
            Action::City { pos, action } => {
                let verb = match action {
                    CityAction::BuildWorker => "bw",
                    CityAction::BuildCart => "bc",
                    CityAction::Research => "r",
                    CityAction::Noop => "idle",
                };
                write!(f, "{verb} {} {}", pos.x, pos.y)
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot parse action `{text}`: {reason}")]
pub struct ActionParseError {
    pub text: String,
    pub reason: &'static str,
}

impl FromStr for Action {
    type Err = ActionParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| ActionParseError { text: s.to_string(), reason };
        let parts: Vec<&str> = s.split_whitespace().collect();
        let id = |i: usize| -> Result<UnitId, ActionParseError> {
            parts
                .get(i)
                .and_then(|p| p.parse::<u32>().ok())
                .map(UnitId)
                .ok_or_else(|| err("expected a unit id"))
        };
        let pos = || -> Result<Position, ActionParseError> {
            match (parts.get(1).map(|p| p.parse::<u32>()), parts.get(2).map(|p| p.parse::<u32>())) {
                (Some(Ok(x)), Some(Ok(y))) => Ok(Position::new(x, y)),
                _ => Err(err("expected x y coordinates")),
            }
        };
        let arity = |n: usize| if parts.len() == n { Ok(()) } else { Err(err("wrong number of fields")) };
        let action = match parts.first().copied() {
            Some("m") => {
                arity(3)?;
                let d = Direction::from_code(parts[2]).ok_or_else(|| err("bad direction"))?;
                Action::unit(id(1)?, UnitAction::Move(d))
            }
            Some("p") => {
                arity(2)?;
                Action::unit(id(1)?, UnitAction::Pillage)
            }
            Some("bcity") => {
                arity(2)?;
                Action::unit(id(1)?, UnitAction::BuildCity)
            }
            Some("t") => {
                arity(4)?;
                let dir = Direction::from_code(parts[2])
                    .filter(|d| d.is_cardinal())
                    .ok_or_else(|| err("transfer direction must be n, e, s or w"))?;
                let kind = ResourceKind::from_name(parts[3]).ok_or_else(|| err("bad resource kind"))?;
                Action::unit(id(1)?, UnitAction::Transfer { dir, kind })
            }
            Some(verb @ ("bw" | "bc" | "r" | "idle")) => {
                arity(3)?;
                let action = match verb {
                    "bw" => CityAction::BuildWorker,
                    "bc" => CityAction::BuildCart,
                    "r" => CityAction::Research,
                    _ => CityAction::Noop,
                };
                Action::city(pos()?, action)
            }
            Some(_) => return Err(err("unknown verb")),
            None => return Err(err("empty action")),
        };
        Ok(action)
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Joins actions into one comma-separated protocol line.
pub fn format_action_line(actions: &[Action]) -> String {
    actions.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
}

/// Splits a protocol line into actions; malformed entries are returned separately.
pub fn parse_action_line(line: &str) -> (Vec<Action>, Vec<ActionParseError>) {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for chunk in line.split(',').map(str::trim).filter(|c| !c.is_empty()) {
        match chunk.parse() {
            Ok(a) => ok.push(a),
            Err(e) => bad.push(e),
        }
    }
    (ok, bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layouts_cover_all_channels_exactly_once() {
        for (kind, n) in [(UnitKind::Worker, WORKER_CHANNELS), (UnitKind::Cart, CART_CHANNELS)] {
            for c in 0..n {
                let a = UnitAction::from_channel(kind, c).unwrap();
                assert_eq!(a.channel(kind), Some(c));
            }
            assert_eq!(UnitAction::from_channel(kind, n), None);
        }
        assert_eq!(UnitAction::BuildCity.channel(UnitKind::Cart), None);
        assert_eq!(UnitAction::Pillage.channel(UnitKind::Cart), None);
        assert_eq!(UnitAction::from_channel(UnitKind::Worker, 4), Some(UnitAction::Move(Direction::Center)));
        assert_eq!(
            UnitAction::from_channel(UnitKind::Worker, 18),
            Some(UnitAction::Transfer { dir: Direction::West, kind: ResourceKind::Uranium })
        );
        assert_eq!(
            UnitAction::from_channel(UnitKind::Cart, 5),
            Some(UnitAction::Transfer { dir: Direction::North, kind: ResourceKind::Wood })
        );
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("m 3".parse::<Action>().is_err());
        assert!("t 3 c wood".parse::<Action>().is_err());
        assert!("fly 3".parse::<Action>().is_err());
        assert!("bw 1".parse::<Action>().is_err());
        let (ok, bad) = parse_action_line("m 1 n, nonsense ,r 2 3,");
        assert_eq!(ok.len(), 2);
        assert_eq!(bad.len(), 1);
    }

    fn arb_action() -> impl Strategy<Value = Action> {
        let unit = (0u32..1000, 0usize..WORKER_CHANNELS).prop_map(|(id, c)| {
            Action::unit(UnitId(id), UnitAction::from_channel(UnitKind::Worker, c).unwrap())
        });
        let city = (0u32..128, 0u32..128, 0usize..4)
            .prop_map(|(x, y, c)| Action::city(Position::new(x, y), CityAction::from_channel(c).unwrap()));
        prop_oneof![unit, city]
    }

    proptest! {
        #[test]
        fn action_lines_round_trip(actions in proptest::collection::vec(arb_action(), 0..20)) {
            let line = format_action_line(&actions);
            let (back, bad) = parse_action_line(&line);
            prop_assert!(bad.is_empty());
            prop_assert_eq!(back, actions);
        }
    }
}
