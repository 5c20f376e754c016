//! Deposits, night upkeep, and wood regrowth (resolution steps 5 to 7).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Position;
use crate::state::{Cargo, CityId, GameState, ResourceKind, Team, UnitId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deposit {
    pub unit: UnitId,
    pub city: CityId,
    pub cargo: Cargo,
    pub fuel: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitUpkeep {
    pub unit: UnitId,
    pub consumed: Cargo,
    /// Fuel burned beyond the upkeep because resources are indivisible.
    pub fuel_wasted: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CityDeath {
    pub city: CityId,
    pub team: Team,
    pub tiles: Vec<Position>,
    pub fuel: u64,
    pub upkeep: u64,
    /// Units standing on the City's tiles when it collapsed.
    pub crushed: Vec<UnitId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NightReport {
    pub unit_upkeep: Vec<UnitUpkeep>,
    /// Units outside cities that could not pay; their cargo is lost with them.
    pub starved: Vec<UnitId>,
    /// `(city, upkeep paid)` for every surviving City.
    pub city_upkeep: Vec<(CityId, u64)>,
    pub city_deaths: Vec<CityDeath>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regrowth {
    pub pos: Position,
    pub from: u32,
    pub to: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NightError {
    #[error("night upkeep applied during the day (turn {0})")]
    NotNight(u32),
}

/// Every unit on a friendly CityTile converts its whole cargo into City fuel.
pub fn deposit_resources(state: &mut GameState) -> Vec<Deposit> {
    let mut out = Vec::new();
    for ui in 0..state.units.len() {
        let unit = &state.units[ui];
        if unit.cargo.is_empty() {
            continue;
        }
        let Some(tile) = state.city_tiles[state.idx(unit.pos)].as_ref() else { continue };
        if tile.team != unit.team {
            continue;
        }
        let city = tile.city;
        let team = unit.team;
        let cargo = unit.cargo;
        let fuel = cargo.fuel(&state.constants);
        state.units[ui].cargo = Cargo::default();
        state.cities.get_mut(&city).expect("city exists").fuel += fuel;
        state.last_turn[team.index()].fuel_added += fuel;
        out.push(Deposit { unit: state.units[ui].id, city, cargo, fuel });
    }
    out
}

/// Pays `upkeep` from `cargo`, cheapest fuel first. Returns what was burned and
/// the overshoot, or `None` if the cargo is short.
pub fn burn_cargo(cargo: &Cargo, upkeep: u64, fuel_per_unit: impl Fn(ResourceKind) -> u32) -> Option<(Cargo, u64)> {
    let mut need = upkeep;
    let mut burned = Cargo::default();
    let mut paid = 0u64;
    for kind in ResourceKind::ALL {
        if need == 0 {
            break;
        }
        let fv = fuel_per_unit(kind) as u64;
        take_units(cargo.get(kind), fv, &mut need, &mut paid, burned.get_mut(kind));
    }
    (need == 0).then(|| (burned, paid - upkeep))
}

fn take_units(have: u32, fv: u64, need: &mut u64, paid: &mut u64, burned: &mut u32) {
    let take = (have as u64).min(need.div_ceil(fv));
    *burned = take as u32;
    *paid += take * fv;
    *need = need.saturating_sub(take * fv);
}

/// Night upkeep. Units outside friendly cities pay first, then every City pays
/// its summed tile upkeep. A City that cannot pay is removed with all of its
/// tiles, and the units standing on it are lost.
pub fn apply_night(state: &mut GameState) -> Result<NightReport, NightError> {
    if !state.constants.is_night(state.turn).unwrap_or(false) {
        return Err(NightError::NotNight(state.turn));
    }
    let mut report = NightReport::default();
    let c = state.constants.clone();

    let mut survivors = Vec::with_capacity(state.units.len());
    for mut unit in std::mem::take(&mut state.units) {
        let sheltered = state.city_tiles[state.idx(unit.pos)].as_ref().is_some_and(|t| t.team == unit.team);
        if sheltered {
            survivors.push(unit);
            continue;
        }
        let upkeep = c.unit_night_upkeep(unit.kind) as u64;
        match burn_cargo(&unit.cargo, upkeep, |k| c.fuel_per_unit(k)) {
            Some((burned, fuel_wasted)) => {
                for k in ResourceKind::ALL {
                    *unit.cargo.get_mut(k) -= burned.get(k);
                }
                report.unit_upkeep.push(UnitUpkeep { unit: unit.id, consumed: burned, fuel_wasted });
                survivors.push(unit);
            }
            None => report.starved.push(unit.id),
        }
    }
    state.units = survivors;

    let ids: Vec<CityId> = state.cities.keys().copied().collect();
    let mut dead = Vec::new();
    for id in ids {
        let city = &state.cities[&id];
        let upkeep = state.city_upkeep(city);
        if city.fuel >= upkeep {
            state.cities.get_mut(&id).expect("city exists").fuel -= upkeep;
            report.city_upkeep.push((id, upkeep));
        } else {
            dead.push((id, upkeep));
        }
    }
    for (id, upkeep) in dead {
        let city = state.remove_city(id).expect("city exists");
        let crushed: Vec<UnitId> =
            state.units.iter().filter(|u| city.tiles.contains(&u.pos)).map(|u| u.id).collect();
        state.units.retain(|u| !crushed.contains(&u.id));
        report.city_deaths.push(CityDeath {
            city: id,
            team: city.team,
            tiles: city.tiles,
            fuel: city.fuel,
            upkeep,
            crushed,
        });
    }
    Ok(report)
}

/// Wood below the regrowth cap grows back; depleted cells stay empty.
pub fn regrow_wood(state: &mut GameState) -> Vec<Regrowth> {
    let cap = state.constants.wood_regrowth_cap;
    let mut out = Vec::new();
    for i in 0..state.cells.len() {
        let Some(r) = state.cells[i].resource.as_mut() else { continue };
        if r.kind != ResourceKind::Wood || r.amount == 0 || r.amount >= cap {
            continue;
        }
        let from = r.amount;
        r.amount = (from + state.constants.wood_regrowth(from)).min(cap);
        let to = r.amount;
        out.push(Regrowth { pos: state.pos_of(i), from, to });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::RuleConstants;
    use crate::state::UnitKind;

    fn night_board() -> GameState {
        let mut s = GameState::empty(12, 12, RuleConstants::default());
        s.turn = 30;
        s
    }

    #[test]
    fn cheapest_fuel_burns_first_and_overshoot_is_wasted() {
        let mut s = night_board();
        let id = s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        s.unit_mut(id).unwrap().cargo = Cargo { wood: 1, coal: 0, uranium: 5 };
        let r = apply_night(&mut s).unwrap();
        assert_eq!(s.unit(id).unwrap().cargo, Cargo { wood: 0, coal: 0, uranium: 4 });
        assert_eq!(r.unit_upkeep[0].fuel_wasted, 37);
        assert_eq!(r.unit_upkeep[0].consumed, Cargo { wood: 1, coal: 0, uranium: 1 });
    }

    #[test]
    fn empty_worker_outside_city_starves() {
        let mut s = night_board();
        let id = s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        let r = apply_night(&mut s).unwrap();
        assert_eq!(r.starved, vec![id]);
        assert!(s.units.is_empty());
    }

    #[test]
    fn cart_pays_ten() {
        let mut s = night_board();
        let id = s.add_unit(Team::B, UnitKind::Cart, Position::new(5, 5));
        s.unit_mut(id).unwrap().cargo = Cargo { wood: 12, coal: 0, uranium: 0 };
        apply_night(&mut s).unwrap();
        assert_eq!(s.unit(id).unwrap().cargo.wood, 2);
    }

    #[test]
    fn block_of_four_burns_fifty_two() {
        let mut s = night_board();
        let mut id = None;
        for (x, y) in [(3, 3), (4, 3), (3, 4), (4, 4)] {
            id = Some(s.add_city_tile(Team::A, Position::new(x, y)));
        }
        let id = id.unwrap();
        s.cities.get_mut(&id).unwrap().fuel = 52;
        let r = apply_night(&mut s).unwrap();
        assert_eq!(s.cities[&id].fuel, 0);
        assert_eq!(r.city_upkeep, vec![(id, 52)]);
    }

    #[test]
    fn starving_city_collapses_and_takes_its_units() {
        let mut s = night_board();
        let id = s.add_city_tile(Team::A, Position::new(3, 3));
        let u = s.add_unit(Team::A, UnitKind::Worker, Position::new(3, 3));
        s.cities.get_mut(&id).unwrap().fuel = 22;
        let r = apply_night(&mut s).unwrap();
        assert!(s.cities.is_empty());
        assert_eq!(s.road(Position::new(3, 3)), crate::constants::Quarters::ZERO);
        assert_eq!(r.city_deaths[0].crushed, vec![u]);
        assert!(s.units.is_empty());
        s.check_invariants().unwrap();
    }

    #[test]
    fn sheltered_units_pay_nothing() {
        let mut s = night_board();
        let id = s.add_city_tile(Team::A, Position::new(3, 3));
        s.cities.get_mut(&id).unwrap().fuel = 100;
        let u = s.add_unit(Team::A, UnitKind::Worker, Position::new(3, 3));
        let r = apply_night(&mut s).unwrap();
        assert!(r.unit_upkeep.is_empty() && r.starved.is_empty());
        assert!(s.unit(u).is_some());
    }

    #[test]
    fn day_call_is_refused() {
        let mut s = night_board();
        s.turn = 3;
        assert_eq!(apply_night(&mut s), Err(NightError::NotNight(3)));
    }

    #[test]
    fn deposits_convert_by_fuel_table() {
        let mut s = GameState::empty(12, 12, RuleConstants::default());
        let c = s.add_city_tile(Team::A, Position::new(2, 2));
        let a = s.add_unit(Team::A, UnitKind::Worker, Position::new(2, 2));
        let b = s.add_unit(Team::A, UnitKind::Worker, Position::new(5, 5));
        s.unit_mut(a).unwrap().cargo = Cargo { wood: 0, coal: 5, uranium: 2 };
        s.unit_mut(b).unwrap().cargo.wood = 9;
        let d = deposit_resources(&mut s);
        assert_eq!(d.len(), 1);
        assert_eq!(s.cities[&c].fuel, 130);
        assert!(s.unit(a).unwrap().cargo.is_empty());
        assert_eq!(s.unit(b).unwrap().cargo.wood, 9);
        assert_eq!(s.last_turn[0].fuel_added, 130);
    }

    #[test]
    fn wood_regrowth_goldens() {
        let mut s = GameState::empty(12, 12, RuleConstants::default());
        for (x, amount) in [(0, 100), (1, 500), (2, 499), (3, 1)] {
            s.set_resource(Position::new(x, 0), ResourceKind::Wood, amount);
        }
        s.set_resource(Position::new(4, 0), ResourceKind::Coal, 100);
        regrow_wood(&mut s);
        let got: Vec<u32> = (0..5).map(|x| s.resource(Position::new(x, 0)).unwrap().amount).collect();
        // ceil(2.5) = 3; 499 -> +13 capped at 500; ceil(0.025) = 1.
        assert_eq!(got, vec![103, 500, 500, 2, 100]);
    }
}
