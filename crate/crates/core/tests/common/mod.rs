//! Fixtures shared by the integration tests and the acceptance harness.

#![allow(dead_code)]

use lux_core::constants::{Quarters, RuleConstants};
use lux_core::geom::{Direction, Position};
use lux_core::rules::actions::{CityAction, UnitAction};
use lux_core::rules::{resolve_turn, Action};
use lux_core::state::{GameState, ResourceKind, Team, UnitKind};

pub type Check = Result<(), String>;

macro_rules! ensure_eq {
    ($left:expr, $right:expr, $what:expr) => {{
        let (l, r) = (&$left, &$right);
        if l != r {
            return Err(format!("{}: got {:?}, expected {:?}", $what, l, r));
        }
    }};
}

/// 12x12 empty board where both teams own a well-fuelled corner City, so
/// the game stays live while a scenario plays out.
pub fn board() -> GameState {
    let mut s = GameState::empty(12, 12, RuleConstants::default());
    s.add_city_tile(Team::A, Position::new(0, 11));
    s.add_city_tile(Team::B, Position::new(11, 11));
    for c in s.cities.values_mut() {
        c.fuel = 10_000;
    }
    s
}

fn p(x: u32, y: u32) -> Position {
    Position::new(x, y)
}

fn step(s: &mut GameState, a: &[Action]) -> Check {
    resolve_turn(s, a, &[]).map(|_| ()).map_err(|e| e.to_string())
}

/// Research gained in step 1 unlocks coal for collection in step 4.
pub fn city_tile_actions_come_first() -> Check {
    let mut s = board();
    s.add_city_tile(Team::A, p(2, 2));
    s.teams[0].research_points = 49;
    let w = s.add_unit(Team::A, UnitKind::Worker, p(5, 5));
    s.set_resource(p(6, 5), ResourceKind::Coal, 100);
    step(&mut s, &[Action::city(p(2, 2), CityAction::Research)])?;
    ensure_eq!(s.research(Team::A), 50, "research");
    ensure_eq!(s.unit(w).unwrap().cargo.coal, 5, "coal mined in the same turn");
    ensure_eq!(s.city_tile(p(2, 2)).unwrap().cooldown, Quarters::whole(9), "CityTile cooldown 10 then -1");
    Ok(())
}

/// A CityTile built in step 2 collects in step 4 of the same turn.
pub fn built_tile_collects_same_turn() -> Check {
    let mut s = board();
    let w = s.add_unit(Team::A, UnitKind::Worker, p(5, 5));
    s.unit_mut(w).unwrap().cargo.wood = 100;
    s.set_resource(p(6, 5), ResourceKind::Wood, 300);
    step(&mut s, &[Action::unit(w, UnitAction::BuildCity)])?;
    let tile = s.city_tile(p(5, 5)).ok_or("no tile built")?;
    let city = &s.cities[&tile.city];
    ensure_eq!(city.fuel, 20, "new City fuel from same-turn collection");
    ensure_eq!(s.unit(w).unwrap().cargo.total(), 0, "builder cargo");
    ensure_eq!(s.resource(p(6, 5)).unwrap().amount, 287, "wood after collection and regrowth");
    Ok(())
}

/// Step 3 paves before step 8 subtracts the road level from cooldown.
pub fn carts_pave_before_cooldown_drops() -> Check {
    let mut s = board();
    let c = s.add_unit(Team::A, UnitKind::Cart, p(5, 5));
    step(&mut s, &[Action::unit(c, UnitAction::Move(Direction::East))])?;
    ensure_eq!(s.road(p(6, 5)), Quarters(3), "road after one cart stop");
    ensure_eq!(s.unit(c).unwrap().cooldown, Quarters(5), "cooldown 3 - 1 - 0.75");
    Ok(())
}

/// The 25-wood split: Workers asking {5, 20, 20, 20} get {5, 6, 6, 6}, two
/// units are wasted, and the emptied tile does not regrow.
pub fn collection_splits_and_wastes() -> Check {
    let mut s = board();
    s.set_resource(p(5, 5), ResourceKind::Wood, 25);
    let ids: Vec<_> =
        [p(5, 4), p(4, 5), p(6, 5), p(5, 6)].into_iter().map(|q| s.add_unit(Team::A, UnitKind::Worker, q)).collect();
    s.unit_mut(ids[0]).unwrap().cargo.wood = 95;
    step(&mut s, &[])?;
    let got: Vec<u32> = ids.iter().map(|&id| s.unit(id).unwrap().cargo.wood).collect();
    ensure_eq!(got, vec![100, 6, 6, 6], "cargo after the split");
    ensure_eq!(s.resource(p(5, 5)), None, "depleted tile");
    Ok(())
}

/// Cargo dropped in step 5 pays the City's upkeep in step 6.
pub fn deposits_feed_the_night() -> Check {
    let mut s = board();
    s.turn = 30;
    let id = s.add_city_tile(Team::A, p(2, 2));
    s.cities.get_mut(&id).unwrap().fuel = 0;
    let w = s.add_unit(Team::A, UnitKind::Worker, p(3, 2));
    s.unit_mut(w).unwrap().cargo.wood = 30;
    step(&mut s, &[Action::unit(w, UnitAction::Move(Direction::West))])?;
    let tile = s.city_tile(p(2, 2)).ok_or("City starved despite the drop-off")?;
    ensure_eq!(s.cities[&tile.city].fuel, 7, "fuel after deposit and upkeep");
    // CityTiles carry the maximum road, which wipes the night cooldown of 4.
    ensure_eq!(s.unit(w).unwrap().cooldown, Quarters(0), "cooldown on a CityTile");
    Ok(())
}

/// A Worker with empty cargo survives the night on what it mined in step 4.
pub fn night_burns_after_collection() -> Check {
    let mut s = board();
    s.turn = 30;
    let w = s.add_unit(Team::A, UnitKind::Worker, p(5, 5));
    s.set_resource(p(6, 5), ResourceKind::Wood, 100);
    step(&mut s, &[])?;
    let unit = s.unit(w).ok_or("Worker starved")?;
    ensure_eq!(unit.cargo.wood, 16, "20 mined, 4 burned");
    Ok(())
}

/// Regrowth applies to what collection left, and never to depleted tiles.
pub fn regrowth_follows_collection() -> Check {
    let mut s = board();
    s.add_unit(Team::A, UnitKind::Worker, p(5, 5));
    s.set_resource(p(6, 5), ResourceKind::Wood, 100);
    s.set_resource(p(5, 4), ResourceKind::Wood, 0);
    s.set_resource(p(9, 2), ResourceKind::Wood, 100);
    step(&mut s, &[])?;
    ensure_eq!(s.resource(p(6, 5)).unwrap().amount, 82, "80 left, +ceil(2.0)");
    ensure_eq!(s.resource(p(9, 2)).unwrap().amount, 103, "untouched tile");
    ensure_eq!(s.resource(p(5, 4)).map(|r| r.amount).unwrap_or(0), 0, "depleted tile");
    Ok(())
}

/// Step 8 subtracts 1 plus the road of the cell a unit ended on.
pub fn cooldowns_fall_last() -> Check {
    let mut s = board();
    s.add_city_tile(Team::A, p(2, 2));
    let w = s.add_unit(Team::A, UnitKind::Worker, p(5, 5));
    let i = s.idx(p(6, 5));
    s.cells[i].road = Quarters::whole(2);
    step(
        &mut s,
        &[Action::unit(w, UnitAction::Move(Direction::East)), Action::city(p(2, 2), CityAction::BuildWorker)],
    )?;
    ensure_eq!(s.unit(w).unwrap().cooldown, Quarters(0), "2 - 1 - 2 floored");
    ensure_eq!(s.city_tile(p(2, 2)).unwrap().cooldown, Quarters::whole(9), "CityTile 10 - 1");
    let built = s.units.iter().find(|u| u.pos == p(2, 2)).ok_or("no Worker built")?;
    ensure_eq!(built.cooldown, Quarters(0), "new Worker");
    ensure_eq!(s.turn, 1, "turn counter");
    Ok(())
}

pub const RESOLUTION_SCENARIOS: [(&str, fn() -> Check); 8] = [
    ("city tile actions", city_tile_actions_come_first),
    ("unit actions", built_tile_collects_same_turn),
    ("cart roads", carts_pave_before_cooldown_drops),
    ("collection", collection_splits_and_wastes),
    ("deposits", deposits_feed_the_night),
    ("night", night_burns_after_collection),
    ("regrowth", regrowth_follows_collection),
    ("cooldown decrease", cooldowns_fall_last),
];

/// Per-kind amount left on tiles.
fn tile_totals(s: &GameState) -> [u64; 3] {
    let mut out = [0u64; 3];
    for cell in &s.cells {
        if let Some(r) = cell.resource {
            out[r.kind.index()] += r.amount as u64;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FuzzStats {
    pub games: u64,
    pub turns: u64,
    pub actions: u64,
    pub rejections: u64,
}

impl FuzzStats {
    pub fn merge(self, o: FuzzStats) -> FuzzStats {
        FuzzStats {
            games: self.games + o.games,
            turns: self.turns + o.turns,
            actions: self.actions + o.actions,
            rejections: self.rejections + o.rejections,
        }
    }
}

/// Plays random against random, checking after every turn that tile
/// decreases match the collection report, the report balances, and every
/// state invariant holds. Also counts how many sampled actions were rejected.
pub fn fuzz_game(seed: u64, size: u32) -> Result<FuzzStats, String> {
    use lux_core::agents::{Agent, RandomAgent};
    use lux_core::mapgen::{generate_map, MapGenConfig};
    use lux_core::rules::check_game_end;

    let map = generate_map(&MapGenConfig::new(seed, size)).map_err(|e| e.to_string())?;
    let mut s = GameState::from_map(&map, RuleConstants::default());
    let mut agents = [RandomAgent::new(seed * 2), RandomAgent::new(seed * 2 + 1)];
    let mut stats = FuzzStats { games: 1, ..Default::default() };
    s.check_invariants().map_err(|e| format!("seed {seed}: initial state: {}", e.0))?;
    while check_game_end(&s).is_none() {
        let a = agents[0].act(&s, Team::A);
        let b = agents[1].act(&s, Team::B);
        stats.actions += (a.len() + b.len()) as u64;
        let before = tile_totals(&s);
        let ev = resolve_turn(&mut s, &a, &b).map_err(|e| format!("seed {seed}: {e}"))?;
        stats.turns += 1;
        stats.rejections += ev.rejected().count() as u64;
        let after = tile_totals(&s);
        let mut regrown = [0u64; 3];
        for r in &ev.regrowth {
            regrown[ResourceKind::Wood.index()] += (r.to - r.from) as u64;
        }
        for k in 0..3 {
            let taken = before[k] + regrown[k] - after[k];
            let rep = &ev.collection.kinds[k];
            if taken != rep.removed || !ev.collection.is_balanced() {
                return Err(format!("seed {seed} turn {}: kind {k} took {taken}, report {rep:?}", ev.turn));
            }
        }
        let granted: u64 = ev.collection.tiles.iter().map(|t| (t.allocated + t.wasted) as u64).sum();
        let removed: u64 = ev.collection.kinds.iter().map(|k| k.removed).sum();
        if granted != removed {
            return Err(format!("seed {seed} turn {}: tile grants {granted} vs removed {removed}", ev.turn));
        }
        s.check_invariants().map_err(|e| format!("seed {seed} turn {}: {}", ev.turn, e.0))?;
        if s.turn > s.constants.episode_length {
            return Err(format!("seed {seed}: game ran past the episode length"));
        }
    }
    Ok(stats)
}

/// States reached by random play: one per turn of one game.
pub fn random_states(seed: u64, size: u32) -> Vec<GameState> {
    use lux_core::agents::{Agent, RandomAgent};
    use lux_core::mapgen::{generate_map, MapGenConfig};
    use lux_core::rules::check_game_end;

    let map = generate_map(&MapGenConfig::new(seed, size)).unwrap();
    let mut s = GameState::from_map(&map, RuleConstants::default());
    let mut agents = [RandomAgent::new(seed ^ 0x5eed), RandomAgent::new(seed ^ 0xbeef)];
    let mut out = vec![s.clone()];
    while check_game_end(&s).is_none() {
        let a = agents[0].act(&s, Team::A);
        let b = agents[1].act(&s, Team::B);
        resolve_turn(&mut s, &a, &b).unwrap();
        out.push(s.clone());
    }
    out
}

/// Compares the mask with the validator on every channel of every actor of
/// both teams. Returns the number of (actor, channel) pairs checked.
pub fn mask_agrees(s: &GameState) -> Result<u64, String> {
    use lux_core::rules::{valid_actions, validate_action};

    let mut checked = 0;
    for team in Team::BOTH {
        let mask = valid_actions(s, team);
        let own = s.units.iter().filter(|u| u.team == team).count();
        if mask.units.len() != own {
            return Err(format!("turn {}: mask lists {} units, team has {own}", s.turn, mask.units.len()));
        }
        for m in &mask.units {
            for c in 0..m.channels().len() {
                let a = Action::unit(m.id, UnitAction::from_channel(m.kind, c).unwrap());
                let ok = validate_action(s, team, &a).is_ok();
                if ok != m.is_valid(c) {
                    return Err(format!("turn {}: {a:?} validator {ok}, mask {}", s.turn, m.is_valid(c)));
                }
                checked += 1;
            }
        }
        for m in &mask.city_tiles {
            for c in CityAction::ALL {
                let a = Action::city(m.pos, c);
                let ok = validate_action(s, team, &a).is_ok();
                if ok != m.channels[c.channel()] {
                    return Err(format!("turn {}: {a:?} validator {ok}, mask {}", s.turn, m.channels[c.channel()]));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// Maximal diagonal runs of length at least 5, by scanning every segment.
pub fn brute_force_diagonals(workers: &[Position], size: u32) -> u64 {
    let n = size as i64;
    let occupied = |x: i64, y: i64| workers.iter().any(|p| p.x as i64 == x && p.y as i64 == y);
    let mut runs = 0;
    for dx in [1i64, -1] {
        for y0 in 0..n {
            for x0 in 0..n {
                for len in 5..=n {
                    let cells_full = (0..len).all(|k| occupied(x0 + dx * k, y0 + k));
                    let open_before = !occupied(x0 - dx, y0 - 1);
                    let open_after = !occupied(x0 + dx * len, y0 + len);
                    if cells_full && open_before && open_after {
                        runs += 1;
                    }
                }
            }
        }
    }
    runs
}
