//! End-of-turn resource collection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::{Direction, Position};
use crate::state::{GameState, ResourceKind, Team, UnitKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindReport {
    /// Taken off tiles, waste included.
    pub removed: u64,
    /// Added to unit cargo.
    pub delivered: u64,
    /// Collected by CityTiles and turned straight into fuel.
    pub converted: u64,
    /// Indivisible tile remainders plus grants that overflowed a unit's cargo.
    pub wasted: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileCollection {
    pub pos: Position,
    pub kind: ResourceKind,
    pub allocated: u32,
    pub wasted: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionReport {
    /// Indexed by [`ResourceKind::index`].
    pub kinds: [KindReport; 3],
    pub tiles: Vec<TileCollection>,
    /// Per team, per kind: amount that reached that team (waste excluded).
    pub team_collected: [[u64; 3]; 2],
}

impl CollectionReport {
    pub fn kind(&self, kind: ResourceKind) -> &KindReport {
        &self.kinds[kind.index()]
    }

    /// `removed == delivered + converted + wasted` for every kind.
    pub fn is_balanced(&self) -> bool {
        self.kinds.iter().all(|k| k.removed == k.delivered + k.converted + k.wasted)
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }
}

/// Integer water-filling of one tile among its requesters.
///
/// Every round hands each still-hungry requester `min(remaining request,
/// floor(left / hungry))`. Once the fair share rounds down to zero the rest of
/// the tile is wasted. Returns the grants (in request order) and the waste.
pub fn water_fill(amount: u32, requests: &[u32]) -> (Vec<u32>, u32) {
    let mut grants = vec![0u32; requests.len()];
    let mut left = amount;
    loop {
        let hungry = requests.iter().zip(&grants).filter(|(r, g)| **r > **g).count() as u32;
        if hungry == 0 || left == 0 {
            return (grants, 0);
        }
        let share = left / hungry;
        if share == 0 {
            return (grants, left);
        }
        for (g, r) in grants.iter_mut().zip(requests) {
            if *r > *g {
                let give = (*r - *g).min(share);
                *g += give;
                left -= give;
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Collector {
    Unit(usize),
    CityTile(usize),
}

/// Runs collection for uranium, coal, then wood, mutating tiles, cargo, and
/// City fuel.
pub fn collect_resources(state: &mut GameState) -> CollectionReport {
    let mut report = CollectionReport::default();
    // City cells hosting at least one Worker.
    let mut staffed: Vec<usize> = Vec::new();
    for u in &state.units {
        if u.kind == UnitKind::Worker {
            let c = state.idx(u.pos);
            if state.city_tiles[c].is_some() {
                staffed.push(c);
            }
        }
    }
    staffed.sort_unstable();
    staffed.dedup();

    for kind in ResourceKind::COLLECTION_ORDER {
        let rate = state.constants.collection_rate(kind);
        let can = [state.can_collect(Team::A, kind), state.can_collect(Team::B, kind)];
        let mut requests: Vec<(usize, Collector, u32)> = Vec::new();
        let mut spaces: Vec<u32> = vec![0; state.units.len()];

        for (ui, u) in state.units.iter().enumerate() {
            if u.kind != UnitKind::Worker || !can[u.team.index()] {
                continue;
            }
            let here = state.idx(u.pos);
            if state.city_tiles[here].is_some() {
                continue;
            }
            let space = u.space(&state.constants);
            if space == 0 {
                continue;
            }
            spaces[ui] = space;
            let tiles = adjacent_tiles(state, u.pos, kind);
            if tiles.is_empty() {
                continue;
            }
            let ask = rate.min(space.div_ceil(tiles.len() as u32));
            for t in tiles {
                requests.push((t, Collector::Unit(ui), ask));
            }
        }
        for &c in &staffed {
            let tile = state.city_tiles[c].as_ref().expect("staffed city cell");
            if !can[tile.team.index()] {
                continue;
            }
            for t in adjacent_tiles(state, tile.pos, kind) {
                requests.push((t, Collector::CityTile(c), rate));
            }
        }
        if requests.is_empty() {
            continue;
        }
        requests.sort_by_key(|&(t, who, _)| (t, who));

        let mut unit_grants: BTreeMap<usize, u32> = BTreeMap::new();
        let mut city_grants: BTreeMap<usize, u32> = BTreeMap::new();
        let kr = &mut report.kinds[kind.index()];
        for group in requests.chunk_by(|a, b| a.0 == b.0) {
            let tile = group[0].0;
            let amount = state.cells[tile].resource.expect("requested tile has resource").amount;
            let asks: Vec<u32> = group.iter().map(|r| r.2).collect();
            let (grants, waste) = water_fill(amount, &asks);
            let allocated: u32 = grants.iter().sum();
            for (r, g) in group.iter().zip(&grants) {
                if *g == 0 {
                    continue;
                }
                match r.1 {
                    Collector::Unit(ui) => *unit_grants.entry(ui).or_default() += g,
                    Collector::CityTile(c) => *city_grants.entry(c).or_default() += g,
                }
            }
            let left = amount - allocated - waste;
            let pos = state.pos_of(tile);
            state.cells[tile].resource.as_mut().expect("tile").amount = left;
            if left == 0 {
                state.cells[tile].resource = None;
            }
            kr.removed += (allocated + waste) as u64;
            kr.wasted += waste as u64;
            report.tiles.push(TileCollection { pos, kind, allocated, wasted: waste });
        }

        for (ui, g) in unit_grants {
            let kept = g.min(spaces[ui]);
            let unit = &mut state.units[ui];
            *unit.cargo.get_mut(kind) += kept;
            kr.delivered += kept as u64;
            kr.wasted += (g - kept) as u64;
            report.team_collected[unit.team.index()][kind.index()] += kept as u64;
        }
        for (c, g) in city_grants {
            let tile = state.city_tiles[c].as_ref().expect("staffed city cell");
            let (team, city) = (tile.team, tile.city);
            let fuel = state.constants.fuel_value(kind, g);
            state.cities.get_mut(&city).expect("city exists").fuel += fuel;
            state.last_turn[team.index()].fuel_added += fuel;
            kr.converted += g as u64;
            report.team_collected[team.index()][kind.index()] += g as u64;
        }
    }
    for team in Team::BOTH {
        state.last_turn[team.index()].wood_collected +=
            report.team_collected[team.index()][ResourceKind::Wood.index()];
    }
    report
}

/// Cells at or next to `pos` (N, E, S, W, Center) holding `kind`.
fn adjacent_tiles(state: &GameState, pos: Position, kind: ResourceKind) -> Vec<usize> {
    Direction::ALL
        .iter()
        .filter_map(|&d| state.neighbour(pos, d))
        .map(|p| state.idx(p))
        .filter(|&i| state.cells[i].resource.is_some_and(|r| r.kind == kind))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::RuleConstants;
    use crate::state::Cargo;

    fn board() -> GameState {
        GameState::empty(12, 12, RuleConstants::default())
    }

    #[test]
    fn fill_splits_evenly_then_wastes_remainder() {
        let (g, w) = water_fill(25, &[5, 20, 20, 20]);
        assert_eq!(g, vec![5, 6, 6, 6]);
        assert_eq!(w, 2);
    }

    #[test]
    fn fill_with_plenty_wastes_nothing() {
        assert_eq!(water_fill(100, &[20, 14]), (vec![20, 14], 0));
        assert_eq!(water_fill(0, &[20]), (vec![0], 0));
        assert_eq!(water_fill(2, &[5, 5, 5]), (vec![0, 0, 0], 2));
    }

    #[test]
    fn worker_with_sixty_wood_and_three_tiles() {
        let mut s = board();
        let id = s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        s.unit_mut(id).unwrap().cargo.wood = 60;
        for p in [(5, 4), (6, 5), (4, 5)] {
            s.set_resource(Position::new(p.0, p.1), ResourceKind::Wood, 300);
        }
        let report = collect_resources(&mut s);
        assert_eq!(s.unit(id).unwrap().cargo.wood, 100);
        let wood = report.kind(ResourceKind::Wood);
        assert_eq!(wood.removed, 42);
        assert_eq!(wood.delivered, 40);
        assert_eq!(wood.wasted, 2);
        assert!(report.is_balanced());
        assert_eq!(s.resource(Position::new(5, 4)).unwrap().amount, 286);
    }

    #[test]
    fn no_adjacent_resources_changes_nothing() {
        let mut s = board();
        let id = s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        s.set_resource(Position::new(7, 5), ResourceKind::Wood, 300);
        let report = collect_resources(&mut s);
        assert!(report.is_empty());
        assert_eq!(s.unit(id).unwrap().cargo, Cargo::default());
    }

    #[test]
    fn research_gates_coal_and_uranium() {
        let mut s = board();
        let id = s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        s.set_resource(Position::new(5, 4), ResourceKind::Coal, 300);
        s.set_resource(Position::new(5, 6), ResourceKind::Uranium, 300);
        collect_resources(&mut s);
        assert!(s.unit(id).unwrap().cargo.is_empty());
        s.teams[0].research_points = 50;
        collect_resources(&mut s);
        assert_eq!(s.unit(id).unwrap().cargo, Cargo { wood: 0, coal: 5, uranium: 0 });
        s.teams[0].research_points = 200;
        collect_resources(&mut s);
        assert_eq!(s.unit(id).unwrap().cargo, Cargo { wood: 0, coal: 10, uranium: 2 });
    }

    #[test]
    fn staffed_city_tile_collects_into_fuel() {
        let mut s = board();
        let city = s.add_city_tile(Team::A, Position::new(5, 5));
        s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        s.set_resource(Position::new(6, 5), ResourceKind::Wood, 300);
        let report = collect_resources(&mut s);
        // Counts once regardless of the two Workers; they do not mine themselves.
        assert_eq!(s.cities[&city].fuel, 20);
        assert_eq!(report.kind(ResourceKind::Wood).converted, 20);
        assert!(s.units.iter().all(|u| u.cargo.is_empty()));
    }

    #[test]
    fn unstaffed_city_tile_collects_nothing() {
        let mut s = board();
        let city = s.add_city_tile(Team::A, Position::new(5, 5));
        s.add_unit(Team::A, UnitKind::Cart, Position::new(5, 5));
        s.set_resource(Position::new(6, 5), ResourceKind::Wood, 300);
        collect_resources(&mut s);
        assert_eq!(s.cities[&city].fuel, 0);
    }

    #[test]
    fn exhausted_tile_disappears() {
        let mut s = board();
        s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        s.set_resource(Position::new(5, 4), ResourceKind::Wood, 7);
        collect_resources(&mut s);
        assert_eq!(s.resource(Position::new(5, 4)), None);
    }
}
