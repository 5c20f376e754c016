//! Observation encoding for grid policies.
//!
//! An observation is a triple: a 51-entry one-hot vector (cycle, turn in
//! cycle, night flag), 18 normalized team scalars, and [`PLANE_COUNT`]
//! per-cell feature planes. All values are divided by their normalization
//! coefficient. Everything is expressed from the observing team's side, so
//! "own" means the team passed to [`encode_observation`].
//!
//! Binary layout (`to_bytes`), all little-endian:
//! `version: u8`, `width: u32`, `height: u32`, `planes: u32`, then 51 + 18 +
//! planes × height × width `f32` values. Planes are stored in [`Plane`] order,
//! each row-major.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{GameState, ResourceKind, Team, UnitKind};

pub const OBS_FORMAT_VERSION: u8 = 1;
pub const ONEHOT_LEN: usize = 51;
pub const SCALAR_LEN: usize = 18;
pub const PLANE_COUNT: usize = 36;

const CYCLE_SLOTS: usize = 9;
const TURN_SLOTS: usize = 40;

/// Per-cell feature planes, in storage order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Plane {
    NoWorker,
    OwnWorker,
    EnemyWorker,
    NoCart,
    OwnCart,
    EnemyCart,
    NoCityTile,
    OwnCityTile,
    EnemyCityTile,
    RoadLevel,
    WorkerCooldown,
    WorkerCanAct,
    CartCooldown,
    CartCanAct,
    CityTileCooldown,
    CityTileCanAct,
    IsResource,
    WoodAmount,
    WoodCanRegrow,
    CoalAmount,
    UraniumAmount,
    WorkerWood,
    WorkerCoal,
    WorkerUranium,
    WorkerFull,
    CartWood,
    CartCoal,
    CartUranium,
    CityTileFuelCost,
    CityTileAverageFuel,
    CityTileCanSurviveTonight,
    CityTileFuelNeeded,
    WorkerAtCityTile,
    CartAtCityTile,
    XFromCenter,
    YFromCenter,
}

impl Plane {
    pub const ALL: [Plane; PLANE_COUNT] = [
        Plane::NoWorker,
        Plane::OwnWorker,
        Plane::EnemyWorker,
        Plane::NoCart,
        Plane::OwnCart,
        Plane::EnemyCart,
        Plane::NoCityTile,
        Plane::OwnCityTile,
        Plane::EnemyCityTile,
        Plane::RoadLevel,
        Plane::WorkerCooldown,
        Plane::WorkerCanAct,
        Plane::CartCooldown,
        Plane::CartCanAct,
        Plane::CityTileCooldown,
        Plane::CityTileCanAct,
        Plane::IsResource,
        Plane::WoodAmount,
        Plane::WoodCanRegrow,
        Plane::CoalAmount,
        Plane::UraniumAmount,
        Plane::WorkerWood,
        Plane::WorkerCoal,
        Plane::WorkerUranium,
        Plane::WorkerFull,
        Plane::CartWood,
        Plane::CartCoal,
        Plane::CartUranium,
        Plane::CityTileFuelCost,
        Plane::CityTileAverageFuel,
        Plane::CityTileCanSurviveTonight,
        Plane::CityTileFuelNeeded,
        Plane::WorkerAtCityTile,
        Plane::CartAtCityTile,
        Plane::XFromCenter,
        Plane::YFromCenter,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Global scalar slots, in storage order.
pub mod scalar {
    pub const OWN_CITY_TILES: usize = 0;
    pub const ENEMY_CITY_TILES: usize = 1;
    pub const OWN_UNITS: usize = 2;
    pub const ENEMY_UNITS: usize = 3;
    pub const OWN_RESEARCH: usize = 4;
    pub const ENEMY_RESEARCH: usize = 5;
    pub const OWN_FUEL: usize = 6;
    pub const ENEMY_FUEL: usize = 7;
    pub const OWN_AVG_FUEL: usize = 8;
    pub const ENEMY_AVG_FUEL: usize = 9;
    pub const OWN_FUEL_COST: usize = 10;
    pub const ENEMY_FUEL_COST: usize = 11;
    pub const OWN_AVG_FUEL_COST: usize = 12;
    pub const ENEMY_AVG_FUEL_COST: usize = 13;
    pub const OWN_COAL: usize = 14;
    pub const ENEMY_COAL: usize = 15;
    pub const OWN_URANIUM: usize = 16;
    pub const ENEMY_URANIUM: usize = 17;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub width: u32,
    pub height: u32,
    pub global_onehot: [f32; ONEHOT_LEN],
    pub global_scalars: [f32; SCALAR_LEN],
    /// `PLANE_COUNT × height × width`, plane-major then row-major.
    pub planes: Vec<f32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ObsDecodeError {
    #[error("observation format version {found}, expected {expected}")]
    Version { found: u8, expected: u8 },
    #[error("observation buffer is {0} bytes, which does not match its header")]
    Length(usize),
}

impl Observation {
    pub fn plane(&self, plane: Plane) -> &[f32] {
        let n = (self.width * self.height) as usize;
        &self.planes[plane.index() * n..(plane.index() + 1) * n]
    }

    pub fn at(&self, plane: Plane, x: u32, y: u32) -> f32 {
        self.plane(plane)[(y * self.width + x) as usize]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(13 + 4 * (ONEHOT_LEN + SCALAR_LEN + self.planes.len()));
        out.push(OBS_FORMAT_VERSION);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&(PLANE_COUNT as u32).to_le_bytes());
        for v in self.global_onehot.iter().chain(&self.global_scalars).chain(&self.planes) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Observation, ObsDecodeError> {
        let Some((&version, rest)) = bytes.split_first() else {
            return Err(ObsDecodeError::Length(0));
        };
        if version != OBS_FORMAT_VERSION {
            return Err(ObsDecodeError::Version { found: version, expected: OBS_FORMAT_VERSION });
        }
        let word = |i: usize| -> Option<[u8; 4]> { rest.get(4 * i..4 * i + 4)?.try_into().ok() };
        let bad = || ObsDecodeError::Length(bytes.len());
        let width = u32::from_le_bytes(word(0).ok_or_else(bad)?);
        let height = u32::from_le_bytes(word(1).ok_or_else(bad)?);
        let planes = u32::from_le_bytes(word(2).ok_or_else(bad)?) as usize;
        let cells = (width as usize).checked_mul(height as usize).ok_or_else(bad)?;
        let total = ONEHOT_LEN + SCALAR_LEN + planes * cells;
        if planes != PLANE_COUNT || rest.len() != 12 + 4 * total {
            return Err(bad());
        }
        let values: Vec<f32> = (0..total).map(|i| f32::from_le_bytes(word(3 + i).expect("length checked"))).collect();
        let mut global_onehot = [0.0; ONEHOT_LEN];
        global_onehot.copy_from_slice(&values[..ONEHOT_LEN]);
        let mut global_scalars = [0.0; SCALAR_LEN];
        global_scalars.copy_from_slice(&values[ONEHOT_LEN..ONEHOT_LEN + SCALAR_LEN]);
        Ok(Observation { width, height, global_onehot, global_scalars, planes: values[ONEHOT_LEN + SCALAR_LEN..].to_vec() })
    }
}

/// Night turns still ahead in the current cycle, counting the current one;
/// a full night's worth during the day.
pub fn nights_remaining(state: &GameState) -> u32 {
    let c = &state.constants;
    let t = state.turn % c.cycle_length;
    if t < c.day_length {
        c.night_length()
    } else {
        c.cycle_length - t
    }
}

/// Encodes `state` as seen by `team`.
pub fn encode_observation(state: &GameState, team: Team) -> Observation {
    let c = &state.constants;
    let mut global_onehot = [0.0f32; ONEHOT_LEN];
    let t = state.turn.min(c.episode_length - 1);
    let cycle = ((t / c.cycle_length) as usize).min(CYCLE_SLOTS - 1);
    let in_cycle = ((t % c.cycle_length) as usize).min(TURN_SLOTS - 1);
    global_onehot[cycle] = 1.0;
    global_onehot[CYCLE_SLOTS + in_cycle] = 1.0;
    let night = c.is_night(t).unwrap_or(false);
    global_onehot[CYCLE_SLOTS + TURN_SLOTS + usize::from(night)] = 1.0;

    let sides = [team, team.opponent()];
    let mut s = [0.0f32; SCALAR_LEN];
    for (k, &side) in sides.iter().enumerate() {
        let tiles = state.city_tile_count(side) as f64;
        let fuel = state.total_fuel(side) as f64;
        let cost = state.total_upkeep(side) as f64;
        let per_tile = |v: f64| if tiles > 0.0 { v / tiles } else { 0.0 };
        s[scalar::OWN_CITY_TILES + k] = (tiles / 100.0) as f32;
        s[scalar::OWN_UNITS + k] = (state.unit_count(side) as f64 / 100.0) as f32;
        s[scalar::OWN_RESEARCH + k] = (state.research(side) as f64 / 200.0) as f32;
        s[scalar::OWN_FUEL + k] = (fuel / 2300.0) as f32;
        s[scalar::OWN_AVG_FUEL + k] = (per_tile(fuel) / 230.0) as f32;
        s[scalar::OWN_FUEL_COST + k] = (cost / 230.0) as f32;
        s[scalar::OWN_AVG_FUEL_COST + k] = (per_tile(cost) / 23.0) as f32;
        s[scalar::OWN_COAL + k] = f32::from(u8::from(state.can_collect(side, ResourceKind::Coal)));
        s[scalar::OWN_URANIUM + k] = f32::from(u8::from(state.can_collect(side, ResourceKind::Uranium)));
    }

    let (w, h) = (state.width as usize, state.height as usize);
    let n = w * h;
    let mut planes = vec![0.0f32; PLANE_COUNT * n];
    let mut set = |p: Plane, i: usize, v: f32| planes[p.index() * n + i] = v;

    let mut worker_cd: Vec<Option<u32>> = vec![None; n];
    let mut cart_cd: Vec<Option<u32>> = vec![None; n];
    let mut worker_cargo = vec![[0u32; 3]; n];
    let mut cart_cargo = vec![[0u32; 3]; n];
    let mut worker_full = vec![false; n];
    let mut own = vec![[false; 2]; n];
    let mut enemy = vec![[false; 2]; n];
    for u in &state.units {
        let i = state.idx(u.pos);
        let k = u.kind as usize;
        if u.team == team {
            own[i][k] = true;
        } else {
            enemy[i][k] = true;
        }
        let (cd, cargo) = match u.kind {
            UnitKind::Worker => (&mut worker_cd[i], &mut worker_cargo[i]),
            UnitKind::Cart => (&mut cart_cd[i], &mut cart_cargo[i]),
        };
        *cd = Some(cd.map_or(u.cooldown.0, |m| m.min(u.cooldown.0)));
        for r in ResourceKind::ALL {
            cargo[r.index()] += u.cargo.get(r);
        }
        if u.kind == UnitKind::Worker && u.cargo.total() >= c.capacity_worker {
            worker_full[i] = true;
        }
    }

    let nights = nights_remaining(state) as u64;
    let city_figures: std::collections::BTreeMap<_, _> = state
        .cities
        .values()
        .map(|city| {
            let upkeep = state.city_upkeep(city);
            let needed = (upkeep * nights).saturating_sub(city.fuel);
            (city.id, (upkeep, city.fuel as f64 / city.tiles.len() as f64, needed))
        })
        .collect();

    let flag = |b: bool| f32::from(u8::from(b));
    let quarters = |q: u32| q as f32 / 4.0;
    for i in 0..n {
        let (x, y) = (i % w, i / w);
        set(Plane::NoWorker, i, flag(!own[i][0] && !enemy[i][0]));
        set(Plane::OwnWorker, i, flag(own[i][0]));
        set(Plane::EnemyWorker, i, flag(enemy[i][0]));
        set(Plane::NoCart, i, flag(!own[i][1] && !enemy[i][1]));
        set(Plane::OwnCart, i, flag(own[i][1]));
        set(Plane::EnemyCart, i, flag(enemy[i][1]));
        let tile = state.city_tiles[i].as_ref();
        set(Plane::NoCityTile, i, flag(tile.is_none()));
        set(Plane::OwnCityTile, i, flag(tile.is_some_and(|t| t.team == team)));
        set(Plane::EnemyCityTile, i, flag(tile.is_some_and(|t| t.team != team)));
        set(Plane::RoadLevel, i, quarters(state.cells[i].road.0) / 6.0);
        if let Some(cd) = worker_cd[i] {
            set(Plane::WorkerCooldown, i, quarters(cd) / 10.0);
            set(Plane::WorkerCanAct, i, flag(cd < 4));
        }
        if let Some(cd) = cart_cd[i] {
            set(Plane::CartCooldown, i, quarters(cd) / 10.0);
            set(Plane::CartCanAct, i, flag(cd < 4));
        }
        if let Some(r) = state.cells[i].resource {
            set(Plane::IsResource, i, 1.0);
            let amount = r.amount as f32 / 100.0;
            match r.kind {
                ResourceKind::Wood => {
                    set(Plane::WoodAmount, i, amount);
                    set(Plane::WoodCanRegrow, i, flag(r.amount < c.wood_regrowth_cap));
                }
                ResourceKind::Coal => set(Plane::CoalAmount, i, amount),
                ResourceKind::Uranium => set(Plane::UraniumAmount, i, amount),
            }
        }
        set(Plane::WorkerWood, i, worker_cargo[i][0] as f32 / 100.0);
        set(Plane::WorkerCoal, i, worker_cargo[i][1] as f32 / 100.0);
        set(Plane::WorkerUranium, i, worker_cargo[i][2] as f32 / 100.0);
        set(Plane::WorkerFull, i, flag(worker_full[i]));
        set(Plane::CartWood, i, cart_cargo[i][0] as f32 / 100.0);
        set(Plane::CartCoal, i, cart_cargo[i][1] as f32 / 100.0);
        set(Plane::CartUranium, i, cart_cargo[i][2] as f32 / 100.0);
        if let Some(t) = tile {
            set(Plane::CityTileCooldown, i, quarters(t.cooldown.0) / 10.0);
            set(Plane::CityTileCanAct, i, flag(t.can_act()));
            let (upkeep, avg, needed) = city_figures[&t.city];
            set(Plane::CityTileFuelCost, i, upkeep as f32 / 100.0);
            set(Plane::CityTileAverageFuel, i, (avg / 230.0) as f32);
            set(Plane::CityTileCanSurviveTonight, i, flag(needed == 0));
            set(Plane::CityTileFuelNeeded, i, needed as f32 / 230.0);
            set(Plane::WorkerAtCityTile, i, flag(worker_cd[i].is_some()));
            set(Plane::CartAtCityTile, i, flag(cart_cd[i].is_some()));
        }
        set(Plane::XFromCenter, i, relative(x, w));
        set(Plane::YFromCenter, i, relative(y, h));
    }

    Observation { width: state.width, height: state.height, global_onehot, global_scalars: s, planes }
}

fn relative(coord: usize, side: usize) -> f32 {
    ((coord as f64 - (side as f64 - 1.0) / 2.0) / side as f64) as f32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::RuleConstants;
    use crate::geom::Position;
    use crate::mapgen::{generate_map, MapGenConfig};

    fn fresh() -> GameState {
        let map = generate_map(&MapGenConfig::new(3, 12)).unwrap();
        GameState::from_map(&map, RuleConstants::default())
    }

    #[test]
    fn fuel_of_4600_reads_two() {
        let mut s = fresh();
        let id = s.city_tile(s.units[0].pos).unwrap().city;
        s.cities.get_mut(&id).unwrap().fuel = 4600;
        let obs = encode_observation(&s, Team::A);
        assert_eq!(obs.global_scalars[scalar::OWN_FUEL], 2.0);
        assert_eq!(obs.global_scalars[scalar::OWN_AVG_FUEL], 20.0);
    }

    #[test]
    fn turn_35_one_hot() {
        let mut s = fresh();
        s.turn = 35;
        let obs = encode_observation(&s, Team::A);
        let ones: Vec<usize> = (0..ONEHOT_LEN).filter(|&i| obs.global_onehot[i] == 1.0).collect();
        assert_eq!(ones, vec![0, 9 + 35, 9 + 40 + 1]);
    }

    #[test]
    fn perspective_follows_the_team() {
        let mut s = fresh();
        let pos = s.units[1].pos;
        s.add_city_tile(Team::B, Position::new(pos.x, (pos.y + 1) % 12));
        let b = encode_observation(&s, Team::B);
        assert_eq!(b.global_scalars[scalar::OWN_CITY_TILES], 0.02);
        assert_eq!(b.global_scalars[scalar::ENEMY_CITY_TILES], 0.01);
        assert_eq!(b.at(Plane::OwnCityTile, pos.x, pos.y), 1.0);
        assert_eq!(b.at(Plane::OwnWorker, pos.x, pos.y), 1.0);
    }

    #[test]
    fn survival_planes_on_a_fresh_tile() {
        let s = fresh();
        let p = s.units[0].pos;
        let obs = encode_observation(&s, Team::A);
        // Lone tile, no fuel, daytime: 23 per night turn for 10 turns.
        assert_eq!(obs.at(Plane::CityTileFuelCost, p.x, p.y), 0.23);
        assert_eq!(obs.at(Plane::CityTileFuelNeeded, p.x, p.y), 1.0);
        assert_eq!(obs.at(Plane::CityTileCanSurviveTonight, p.x, p.y), 0.0);
        assert_eq!(obs.at(Plane::WorkerAtCityTile, p.x, p.y), 1.0);
        assert_eq!(obs.at(Plane::RoadLevel, p.x, p.y), 1.0);
    }

    #[test]
    fn relative_distances() {
        let s = fresh();
        let obs = encode_observation(&s, Team::A);
        assert_eq!(obs.at(Plane::XFromCenter, 0, 0), (-5.5f64 / 12.0) as f32);
        assert_eq!(obs.at(Plane::YFromCenter, 0, 11), (5.5f64 / 12.0) as f32);
    }

    #[test]
    fn bytes_round_trip_and_version_gate() {
        let s = fresh();
        let obs = encode_observation(&s, Team::A);
        let bytes = obs.to_bytes();
        assert_eq!(bytes.len(), 13 + 4 * (51 + 18 + 36 * 144));
        assert_eq!(Observation::from_bytes(&bytes).unwrap(), obs);
        let mut bad = bytes.clone();
        bad[0] = 9;
        assert!(matches!(Observation::from_bytes(&bad), Err(ObsDecodeError::Version { .. })));
        assert!(Observation::from_bytes(&bytes[..40]).is_err());
    }

    #[test]
    fn nights_remaining_counts_current_turn() {
        let mut s = fresh();
        for (turn, expect) in [(0, 10), (29, 10), (30, 10), (35, 5), (39, 1), (40, 10)] {
            s.turn = turn;
            assert_eq!(nights_remaining(&s), expect, "turn {turn}");
        }
    }
}
