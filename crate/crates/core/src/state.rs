//! Authoritative world state and the pure queries every other module uses.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constants::{Quarters, RuleConstants};
use crate::geom::{Direction, Position};
use crate::mapgen::GameMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Team {
    A,
    B,
}

impl Team {
    pub const BOTH: [Team; 2] = [Team::A, Team::B];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opponent(self) -> Team {
        match self {
            Team::A => Team::B,
            Team::B => Team::A,
        }
    }
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Team::A => "A",
            Team::B => "B",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Wood,
    Coal,
    Uranium,
}

impl ResourceKind {
    /// Least to most fuel-efficient; also the layout order in action channels.
    pub const ALL: [ResourceKind; 3] = [ResourceKind::Wood, ResourceKind::Coal, ResourceKind::Uranium];
    pub const COLLECTION_ORDER: [ResourceKind; 3] =
        [ResourceKind::Uranium, ResourceKind::Coal, ResourceKind::Wood];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ResourceKind::Wood => "wood",
            ResourceKind::Coal => "coal",
            ResourceKind::Uranium => "uranium",
        }
    }

    pub fn from_name(name: &str) -> Option<ResourceKind> {
        match name {
            "wood" => Some(ResourceKind::Wood),
            "coal" => Some(ResourceKind::Coal),
            "uranium" => Some(ResourceKind::Uranium),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Resource {
    pub kind: ResourceKind,
    pub amount: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cargo {
    pub wood: u32,
    pub coal: u32,
    pub uranium: u32,
}

impl Cargo {
    pub fn get(&self, kind: ResourceKind) -> u32 {
        match kind {
            ResourceKind::Wood => self.wood,
            ResourceKind::Coal => self.coal,
            ResourceKind::Uranium => self.uranium,
        }
    }

    pub fn get_mut(&mut self, kind: ResourceKind) -> &mut u32 {
        match kind {
            ResourceKind::Wood => &mut self.wood,
            ResourceKind::Coal => &mut self.coal,
            ResourceKind::Uranium => &mut self.uranium,
        }
    }

    pub fn total(&self) -> u32 {
        self.wood + self.coal + self.uranium
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn fuel(&self, constants: &RuleConstants) -> u64 {
        ResourceKind::ALL
            .iter()
            .map(|&k| constants.fuel_per_unit(k) as u64 * self.get(k) as u64)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UnitKind {
    Worker,
    Cart,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitId(pub u32);

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CityId(pub u32);

impl fmt::Display for CityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub id: UnitId,
    pub team: Team,
    pub kind: UnitKind,
    pub pos: Position,
    pub cooldown: Quarters,
    pub cargo: Cargo,
}

impl Unit {
    pub fn can_act(&self) -> bool {
        self.cooldown < Quarters::ONE
    }

    pub fn space(&self, constants: &RuleConstants) -> u32 {
        constants.capacity(self.kind).saturating_sub(self.cargo.total())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CityTileState {
    pub team: Team,
    pub pos: Position,
    pub city: CityId,
    pub cooldown: Quarters,
}

impl CityTileState {
    pub fn can_act(&self) -> bool {
        self.cooldown < Quarters::ONE
    }
}

/// A maximal 4-connected group of same-team CityTiles sharing one fuel pool.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct City {
    pub id: CityId,
    pub team: Team,
    pub fuel: u64,
    /// Row-major sorted.
    pub tiles: Vec<Position>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamState {
    pub research_points: u32,
}

/// What a team achieved during the most recently resolved turn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnTally {
    pub units_built: u32,
    pub city_tiles_built: u32,
    pub research_gained: u32,
    /// Fuel added to the team's cities by unit drop-offs and CityTile collection.
    pub fuel_added: u64,
    /// Wood that left tiles into this team's cargo or cities (waste excluded).
    pub wood_collected: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub resource: Option<Resource>,
    pub road: Quarters,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Winner {
    A,
    B,
    Draw,
}

impl Winner {
    pub fn team(team: Team) -> Winner {
        match team {
            Team::A => Winner::A,
            Team::B => Winner::B,
        }
    }

    pub fn as_team(self) -> Option<Team> {
        match self {
            Winner::A => Some(Team::A),
            Winner::B => Some(Team::B),
            Winner::Draw => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeReason {
    CitytileCount,
    UnitCountTiebreak,
    Elimination,
    Draw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub winner: Winner,
    pub reason: OutcomeReason,
    pub turn: u32,
    pub city_tiles: [u32; 2],
    pub units: [u32; 2],
}

impl Outcome {
    /// +1 for a win, -1 for a loss, 0 for a draw.
    pub fn sign_for(&self, team: Team) -> i32 {
        match self.winner.as_team() {
            None => 0,
            Some(t) if t == team => 1,
            Some(_) => -1,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("turn {turn} is outside [0, {episode_length})")]
    TurnOutOfRange { turn: u32, episode_length: u32 },
    #[error("a CityTile has at most 4 neighbours, got {0}")]
    TooManyNeighbours(u32),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("state invariant violated: {0}")]
pub struct InvariantViolation(pub String);

impl RuleConstants {
    pub fn is_night(&self, turn: u32) -> Result<bool, QueryError> {
        if turn >= self.episode_length {
            return Err(QueryError::TurnOutOfRange { turn, episode_length: self.episode_length });
        }
        Ok(turn % self.cycle_length >= self.day_length)
    }

    pub fn fuel_value(&self, kind: ResourceKind, amount: u32) -> u64 {
        self.fuel_per_unit(kind) as u64 * amount as u64
    }

    pub fn city_tile_upkeep(&self, n_adj: u32) -> Result<u32, QueryError> {
        if n_adj > 4 {
            return Err(QueryError::TooManyNeighbours(n_adj));
        }
        Ok(self.city_tile_upkeep_base - self.city_tile_upkeep_adjacency_discount * n_adj)
    }
}

/// Night check under the default ruleset.
pub fn is_night(turn: u32) -> Result<bool, QueryError> {
    RuleConstants::default().is_night(turn)
}

/// Fuel produced by `amount` units of `kind` under the default ruleset.
pub fn fuel_value(kind: ResourceKind, amount: u32) -> u64 {
    RuleConstants::default().fuel_value(kind, amount)
}

/// Night upkeep of one CityTile with `n_adj` friendly neighbours, default ruleset.
pub fn city_tile_upkeep(n_adj: u32) -> Result<u32, QueryError> {
    RuleConstants::default().city_tile_upkeep(n_adj)
}

/// Index of the units standing on each cell, computed from a state snapshot.
pub struct Occupancy {
    first: Vec<u32>,
    count: Vec<u16>,
}

impl Occupancy {
    const NONE: u32 = u32::MAX;

    pub fn count(&self, cell: usize) -> u16 {
        self.count[cell]
    }

    /// Index into `GameState::units` of the lowest-id unit on the cell.
    pub fn first(&self, cell: usize) -> Option<usize> {
        match self.first[cell] {
            Self::NONE => None,
            i => Some(i as usize),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub constants: RuleConstants,
    pub turn: u32,
    pub width: u32,
    pub height: u32,
    /// Row-major.
    pub cells: Vec<Cell>,
    /// Row-major, parallel to `cells`.
    pub city_tiles: Vec<Option<CityTileState>>,
    pub cities: BTreeMap<CityId, City>,
    /// Sorted by id.
    pub units: Vec<Unit>,
    pub teams: [TeamState; 2],
    pub next_unit_id: u32,
    pub next_city_id: u32,
    /// Seed of the map this game was started from.
    pub seed: u64,
    /// Per-team tallies for the most recently resolved turn.
    pub last_turn: [TurnTally; 2],
}

impl GameState {
    /// A board with no resources, units, or cities.
    pub fn empty(width: u32, height: u32, constants: RuleConstants) -> GameState {
        let n = (width * height) as usize;
        GameState {
            constants,
            turn: 0,
            width,
            height,
            cells: vec![Cell::default(); n],
            city_tiles: vec![None; n],
            cities: BTreeMap::new(),
            units: Vec::new(),
            teams: [TeamState::default(), TeamState::default()],
            next_unit_id: 0,
            next_city_id: 0,
            seed: 0,
            last_turn: [TurnTally::default(); 2],
        }
    }

    /// Initial state of a match on `map`: one CityTile with one Worker per team.
    pub fn from_map(map: &GameMap, constants: RuleConstants) -> GameState {
        let mut state = GameState::empty(map.size, map.size, constants);
        state.seed = map.seed;
        for spot in &map.resources {
            state.set_resource(spot.pos, spot.kind, spot.amount);
        }
        for team in Team::BOTH {
            let pos = map.spawns[team.index()];
            state.add_city_tile(team, pos);
        }
        for team in Team::BOTH {
            let pos = map.spawns[team.index()];
            state.add_unit(team, UnitKind::Worker, pos);
        }
        state
    }

    pub fn in_bounds(&self, pos: Position) -> bool {
        pos.x < self.width && pos.y < self.height
    }

    pub fn idx(&self, pos: Position) -> usize {
        debug_assert!(self.in_bounds(pos));
        (pos.y * self.width + pos.x) as usize
    }

    pub fn pos_of(&self, idx: usize) -> Position {
        Position::new(idx as u32 % self.width, idx as u32 / self.width)
    }

    pub fn neighbour(&self, pos: Position, dir: Direction) -> Option<Position> {
        pos.step(dir, self.width, self.height)
    }

    pub fn cell(&self, pos: Position) -> &Cell {
        &self.cells[self.idx(pos)]
    }

    pub fn resource(&self, pos: Position) -> Option<Resource> {
        self.cell(pos).resource
    }

    pub fn set_resource(&mut self, pos: Position, kind: ResourceKind, amount: u32) {
        let i = self.idx(pos);
        self.cells[i].resource = (amount > 0).then_some(Resource { kind, amount });
    }

    pub fn road(&self, pos: Position) -> Quarters {
        self.cell(pos).road
    }

    pub fn city_tile(&self, pos: Position) -> Option<&CityTileState> {
        self.city_tiles[self.idx(pos)].as_ref()
    }

    pub fn is_night(&self) -> bool {
        self.constants.is_night(self.turn).unwrap_or(false)
    }

    pub fn unit(&self, id: UnitId) -> Option<&Unit> {
        self.unit_index(id).map(|i| &self.units[i])
    }

    pub fn unit_mut(&mut self, id: UnitId) -> Option<&mut Unit> {
        self.unit_index(id).map(move |i| &mut self.units[i])
    }

    pub fn unit_index(&self, id: UnitId) -> Option<usize> {
        self.units.binary_search_by_key(&id, |u| u.id).ok()
    }

    /// Places a new unit and returns its id. Ids are never reused.
    pub fn add_unit(&mut self, team: Team, kind: UnitKind, pos: Position) -> UnitId {
        let id = UnitId(self.next_unit_id);
        self.next_unit_id += 1;
        self.units.push(Unit {
            id,
            team,
            kind,
            pos,
            cooldown: Quarters::ZERO,
            cargo: Cargo::default(),
        });
        id
    }

    /// Builds a CityTile, merging every adjacent friendly City into one.
    /// The surviving City keeps the smallest id and the summed fuel.
    pub fn add_city_tile(&mut self, team: Team, pos: Position) -> CityId {
        let mut neighbours: Vec<CityId> = Direction::CARDINALS
            .iter()
            .filter_map(|&d| self.neighbour(pos, d))
            .filter_map(|p| self.city_tile(p))
            .filter(|t| t.team == team)
            .map(|t| t.city)
            .collect();
        neighbours.sort();
        neighbours.dedup();

        let id = match neighbours.first() {
            Some(&keep) => {
                for &other in &neighbours[1..] {
                    let absorbed = self.cities.remove(&other).expect("city exists");
                    for &p in &absorbed.tiles {
                        let i = self.idx(p);
                        self.city_tiles[i].as_mut().expect("tile exists").city = keep;
                    }
                    let city = self.cities.get_mut(&keep).expect("city exists");
                    city.fuel += absorbed.fuel;
                    city.tiles.extend(absorbed.tiles);
                }
                keep
            }
            None => {
                let id = CityId(self.next_city_id);
                self.next_city_id += 1;
                self.cities.insert(id, City { id, team, fuel: 0, tiles: Vec::new() });
                id
            }
        };
        let city = self.cities.get_mut(&id).expect("city exists");
        city.tiles.push(pos);
        city.tiles.sort_by_key(|p| p.row_major());

        let i = self.idx(pos);
        self.city_tiles[i] = Some(CityTileState { team, pos, city: id, cooldown: Quarters::ZERO });
        self.cells[i].road = self.constants.road_max;
        id
    }

    /// Removes a City and all of its tiles; their roads drop back to 0.
    pub fn remove_city(&mut self, id: CityId) -> Option<City> {
        let city = self.cities.remove(&id)?;
        for &p in &city.tiles {
            let i = self.idx(p);
            self.city_tiles[i] = None;
            self.cells[i].road = Quarters::ZERO;
        }
        Some(city)
    }

    pub fn occupancy(&self) -> Occupancy {
        let n = self.cells.len();
        let mut occ = Occupancy { first: vec![Occupancy::NONE; n], count: vec![0; n] };
        for (i, u) in self.units.iter().enumerate() {
            let c = self.idx(u.pos);
            if occ.first[c] == Occupancy::NONE {
                occ.first[c] = i as u32;
            }
            occ.count[c] += 1;
        }
        occ
    }

    /// Friendly CityTiles 4-adjacent to `pos`.
    pub fn friendly_neighbours(&self, pos: Position, team: Team) -> u32 {
        Direction::CARDINALS
            .iter()
            .filter_map(|&d| self.neighbour(pos, d))
            .filter(|&p| self.city_tile(p).is_some_and(|t| t.team == team))
            .count() as u32
    }

    pub fn tile_upkeep(&self, pos: Position) -> u32 {
        let team = self.city_tile(pos).expect("city tile").team;
        self.constants
            .city_tile_upkeep(self.friendly_neighbours(pos, team))
            .expect("at most four neighbours")
    }

    pub fn city_upkeep(&self, city: &City) -> u64 {
        city.tiles.iter().map(|&p| self.tile_upkeep(p) as u64).sum()
    }

    pub fn unit_count(&self, team: Team) -> u32 {
        self.units.iter().filter(|u| u.team == team).count() as u32
    }

    pub fn worker_count(&self, team: Team) -> u32 {
        self.units.iter().filter(|u| u.team == team && u.kind == UnitKind::Worker).count() as u32
    }

    pub fn city_tile_count(&self, team: Team) -> u32 {
        self.cities.values().filter(|c| c.team == team).map(|c| c.tiles.len() as u32).sum()
    }

    pub fn total_fuel(&self, team: Team) -> u64 {
        self.cities.values().filter(|c| c.team == team).map(|c| c.fuel).sum()
    }

    pub fn total_upkeep(&self, team: Team) -> u64 {
        self.cities.values().filter(|c| c.team == team).map(|c| self.city_upkeep(c)).sum()
    }

    pub fn research(&self, team: Team) -> u32 {
        self.teams[team.index()].research_points
    }

    pub fn can_collect(&self, team: Team, kind: ResourceKind) -> bool {
        self.research(team) >= self.constants.research_prereq(kind)
    }

    pub fn total_wood(&self) -> u64 {
        self.cells
            .iter()
            .filter_map(|c| c.resource)
            .filter(|r| r.kind == ResourceKind::Wood)
            .map(|r| r.amount as u64)
            .sum()
    }

    /// The same game with the two teams exchanged.
    pub fn with_teams_swapped(&self) -> GameState {
        let mut s = self.clone();
        for u in &mut s.units {
            u.team = u.team.opponent();
        }
        for t in s.city_tiles.iter_mut().flatten() {
            t.team = t.team.opponent();
        }
        for c in s.cities.values_mut() {
            c.team = c.team.opponent();
        }
        s.teams.swap(0, 1);
        s.last_turn.swap(0, 1);
        s
    }

    /// Canonical byte encoding: cells then CityTiles row-major, Cities and
    /// units by id, all integers little-endian.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.cells.len() * 8 + self.units.len() * 32);
        let mut put = |v: u64| out.extend_from_slice(&v.to_le_bytes());
        put(self.turn as u64);
        put(self.width as u64);
        put(self.height as u64);
        for cell in &self.cells {
            match cell.resource {
                None => put(0),
                Some(r) => put(((r.kind.index() as u64 + 1) << 32) | r.amount as u64),
            }
            put(cell.road.0 as u64);
        }
        for t in self.city_tiles.iter().flatten() {
            put(((t.pos.y as u64) << 32) | t.pos.x as u64);
            put(t.team.index() as u64);
            put(t.city.0 as u64);
            put(t.cooldown.0 as u64);
        }
        for c in self.cities.values() {
            put(c.id.0 as u64);
            put(c.team.index() as u64);
            put(c.fuel);
            put(c.tiles.len() as u64);
        }
        for u in &self.units {
            put(u.id.0 as u64);
            put(u.team.index() as u64);
            put(u.kind as u64);
            put(((u.pos.y as u64) << 32) | u.pos.x as u64);
            put(u.cooldown.0 as u64);
            put(u.cargo.wood as u64);
            put(u.cargo.coal as u64);
            put(u.cargo.uranium as u64);
        }
        for t in &self.teams {
            put(t.research_points as u64);
        }
        put(self.next_unit_id as u64);
        put(self.next_city_id as u64);
        out
    }

    /// SHA-256 of [`GameState::canonical_bytes`].
    pub fn checksum(&self) -> [u8; 32] {
        Sha256::digest(self.canonical_bytes()).into()
    }

    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        let fail = |msg: String| Err(InvariantViolation(msg));
        let c = &self.constants;
        if self.turn > c.episode_length {
            return fail(format!("turn {} exceeds episode length", self.turn));
        }
        if self.cells.len() != (self.width * self.height) as usize
            || self.city_tiles.len() != self.cells.len()
        {
            return fail("grid size mismatch".into());
        }
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.road > c.road_max {
                return fail(format!("road {} above max at {}", cell.road, self.pos_of(i)));
            }
            if let Some(r) = cell.resource {
                if r.amount == 0 {
                    return fail(format!("empty resource left at {}", self.pos_of(i)));
                }
            }
            if let Some(t) = &self.city_tiles[i] {
                if cell.road != c.road_max {
                    return fail(format!("CityTile at {} has road {}", t.pos, cell.road));
                }
                if t.pos != self.pos_of(i) {
                    return fail(format!("CityTile position mismatch at {}", self.pos_of(i)));
                }
                match self.cities.get(&t.city) {
                    Some(city) if city.team == t.team && city.tiles.contains(&t.pos) => {}
                    _ => return fail(format!("CityTile at {} not recorded in its City", t.pos)),
                }
            }
        }
        let recorded: usize = self.cities.values().map(|c| c.tiles.len()).sum();
        let on_grid = self.city_tiles.iter().flatten().count();
        if recorded != on_grid {
            return fail(format!("{recorded} recorded CityTiles vs {on_grid} on the board"));
        }
        for comp in city_components(self) {
            let city = &self.cities[&comp.id];
            if city.tiles != comp.tiles {
                return fail(format!("City {} is not one maximal connected component", city.id));
            }
        }

        let occ = self.occupancy();
        for w in self.units.windows(2) {
            if w[0].id >= w[1].id {
                return fail("units not sorted by unique id".into());
            }
        }
        for u in &self.units {
            if !self.in_bounds(u.pos) {
                return fail(format!("unit {} off board", u.id));
            }
            if u.id.0 >= self.next_unit_id {
                return fail(format!("unit {} id not yet issued", u.id));
            }
            if u.cargo.total() > c.capacity(u.kind) {
                return fail(format!("unit {} over capacity", u.id));
            }
            let i = self.idx(u.pos);
            match &self.city_tiles[i] {
                Some(t) if t.team != u.team => {
                    return fail(format!("unit {} on enemy CityTile {}", u.id, u.pos));
                }
                Some(_) => {}
                None if occ.count(i) > 1 => {
                    return fail(format!("{} units share {}", occ.count(i), u.pos));
                }
                None => {}
            }
        }
        for (t, team) in self.teams.iter().enumerate() {
            if team.research_points > c.research_cap {
                return fail(format!("team {t} research above cap"));
            }
        }
        Ok(())
    }
}

/// Partitions all CityTiles into maximal same-team 4-connected components.
///
/// Each component carries the id and pooled fuel recorded for the City its
/// tiles belong to. Components are ordered by their first tile, row-major.
pub fn city_components(state: &GameState) -> Vec<City> {
    let n = state.city_tiles.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        let Some(tile) = &state.city_tiles[start] else { continue };
        if seen[start] {
            continue;
        }
        let team = tile.team;
        let mut tiles = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let p = state.pos_of(i);
            tiles.push(p);
            for d in Direction::CARDINALS {
                if let Some(q) = state.neighbour(p, d) {
                    let j = state.idx(q);
                    if !seen[j] && state.city_tiles[j].as_ref().is_some_and(|t| t.team == team) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        tiles.sort_by_key(|p| p.row_major());
        let id = tile.city;
        let fuel = state.cities.get(&id).map_or(0, |c| c.fuel);
        out.push(City { id, team, fuel, tiles });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn board() -> GameState {
        GameState::empty(12, 12, RuleConstants::default())
    }

    #[test]
    fn night_cycle() {
        assert_eq!(is_night(0), Ok(false));
        assert_eq!(is_night(29), Ok(false));
        assert_eq!(is_night(30), Ok(true));
        assert_eq!(is_night(35), Ok(true));
        assert_eq!(is_night(39), Ok(true));
        assert_eq!(is_night(40), Ok(false));
        assert_eq!(is_night(359), Ok(true));
        assert!(matches!(is_night(360), Err(QueryError::TurnOutOfRange { .. })));
    }

    #[test]
    fn fuel_values() {
        assert_eq!(fuel_value(ResourceKind::Wood, 100), 100);
        assert_eq!(fuel_value(ResourceKind::Uranium, 5), 200);
        assert_eq!(fuel_value(ResourceKind::Coal, 0), 0);
    }

    #[test]
    fn upkeep_formula() {
        assert_eq!(city_tile_upkeep(0), Ok(23));
        assert_eq!(city_tile_upkeep(2), Ok(13));
        assert_eq!(city_tile_upkeep(4), Ok(3));
        assert_eq!(city_tile_upkeep(5), Err(QueryError::TooManyNeighbours(5)));
        let all: Vec<u32> = (0..=4).map(|n| city_tile_upkeep(n).unwrap()).collect();
        assert_eq!(all, vec![23, 18, 13, 8, 3]);
    }

    #[test]
    fn block_of_four_is_one_city() {
        let mut s = board();
        for (x, y) in [(3, 3), (4, 3), (3, 4), (4, 4)] {
            s.add_city_tile(Team::A, Position::new(x, y));
        }
        let comps = city_components(&s);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].tiles.len(), 4);
        assert_eq!(s.city_upkeep(&comps[0]), 52);
        for &p in &comps[0].tiles {
            assert_eq!(s.tile_upkeep(p), 13);
        }
        s.check_invariants().unwrap();
    }

    #[test]
    fn diagonal_tiles_are_separate() {
        let mut s = board();
        s.add_city_tile(Team::A, Position::new(3, 3));
        s.add_city_tile(Team::A, Position::new(4, 4));
        assert_eq!(city_components(&s).len(), 2);
    }

    #[test]
    fn empty_board_has_no_cities() {
        assert!(city_components(&board()).is_empty());
    }

    #[test]
    fn merging_sums_fuel_and_keeps_lowest_id() {
        let mut s = board();
        let a = s.add_city_tile(Team::A, Position::new(2, 2));
        let b = s.add_city_tile(Team::A, Position::new(4, 2));
        s.cities.get_mut(&a).unwrap().fuel = 30;
        s.cities.get_mut(&b).unwrap().fuel = 12;
        let merged = s.add_city_tile(Team::A, Position::new(3, 2));
        assert_eq!(merged, a);
        assert_eq!(s.cities.len(), 1);
        assert_eq!(s.cities[&a].fuel, 42);
        assert_eq!(s.city_tile_count(Team::A), 3);
        s.check_invariants().unwrap();
    }

    #[test]
    fn enemy_tiles_never_merge() {
        let mut s = board();
        s.add_city_tile(Team::A, Position::new(2, 2));
        s.add_city_tile(Team::B, Position::new(3, 2));
        assert_eq!(city_components(&s).len(), 2);
        assert_eq!(s.tile_upkeep(Position::new(2, 2)), 23);
    }

    #[test]
    fn invariant_checker_catches_stacking() {
        let mut s = board();
        s.add_unit(Team::A, UnitKind::Worker, Position::new(1, 1));
        s.add_unit(Team::B, UnitKind::Worker, Position::new(1, 1));
        assert!(s.check_invariants().is_err());
    }

    #[test]
    fn checksum_tracks_content() {
        let mut s = board();
        let before = s.checksum();
        assert_eq!(before, s.clone().checksum());
        s.set_resource(Position::new(0, 0), ResourceKind::Wood, 1);
        assert_ne!(before, s.checksum());
    }
}
