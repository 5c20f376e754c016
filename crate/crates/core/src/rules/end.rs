//! Win conditions.

use crate::state::{GameState, Outcome, OutcomeReason, Team, Winner};

/// The outcome if the game has ended, `None` while it is still running.
pub fn check_game_end(state: &GameState) -> Option<Outcome> {
    let city_tiles = [state.city_tile_count(Team::A), state.city_tile_count(Team::B)];
    let units = [state.unit_count(Team::A), state.unit_count(Team::B)];
    let outcome = |winner, reason| Some(Outcome { winner, reason, turn: state.turn, city_tiles, units });

    if state.turn >= state.constants.episode_length {
        return match (city_tiles[0].cmp(&city_tiles[1]), units[0].cmp(&units[1])) {
            (std::cmp::Ordering::Greater, _) => outcome(Winner::A, OutcomeReason::CitytileCount),
            (std::cmp::Ordering::Less, _) => outcome(Winner::B, OutcomeReason::CitytileCount),
            (_, std::cmp::Ordering::Greater) => outcome(Winner::A, OutcomeReason::UnitCountTiebreak),
            (_, std::cmp::Ordering::Less) => outcome(Winner::B, OutcomeReason::UnitCountTiebreak),
            _ => outcome(Winner::Draw, OutcomeReason::Draw),
        };
    }
    let alive = |t: usize| city_tiles[t] > 0 || units[t] > 0;
    match (alive(0), alive(1)) {
        (true, true) => None,
        (true, false) => outcome(Winner::A, OutcomeReason::Elimination),
        (false, true) => outcome(Winner::B, OutcomeReason::Elimination),
        (false, false) => outcome(Winner::Draw, OutcomeReason::Draw),
    }
}
