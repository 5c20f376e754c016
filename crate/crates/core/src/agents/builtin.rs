use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::Agent;
use crate::rules::actions::{CityAction, UnitAction};
use crate::rules::{valid_actions, Action};
use crate::state::{GameState, Team};

/// Submits nothing; every actor idles.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullAgent;

impl Agent for NullAgent {
    fn act(&mut self, _state: &GameState, _team: Team) -> Vec<Action> {
        Vec::new()
    }
}

/// Picks uniformly among each actor's mask-valid channels.
///
/// The draw depends only on the seed, the turn, and the team, so replaying a
/// state reproduces the same actions.
#[derive(Clone, Copy, Debug)]
pub struct RandomAgent {
    seed: u64,
}

impl RandomAgent {
    pub fn new(seed: u64) -> RandomAgent {
        RandomAgent { seed }
    }

    pub fn rng_for(&self, turn: u32, team: Team) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((turn as u64) << 1) | team.index() as u64);
        rng
    }
}

impl Agent for RandomAgent {
    fn act(&mut self, state: &GameState, team: Team) -> Vec<Action> {
        let mut rng = self.rng_for(state.turn, team);
        let mask = valid_actions(state, team);
        let mut out = Vec::new();
        for m in &mask.units {
            let valid: Vec<usize> = m.valid_channels().collect();
            let c = valid[rng.gen_range(0..valid.len())];
            let a = UnitAction::from_channel(m.kind, c).expect("channel in layout");
            if !a.is_noop() {
                out.push(Action::unit(m.id, a));
            }
        }
        for m in &mask.city_tiles {
            let valid: Vec<usize> = m.valid_channels().collect();
            let a = CityAction::from_channel(valid[rng.gen_range(0..valid.len())]).expect("channel in layout");
            if a != CityAction::Noop {
                out.push(Action::city(m.pos, a));
            }
        }
        out
    }
}
