mod common;

use lux_core::obs::{encode_observation, Observation, Plane, PLANE_COUNT};
use lux_core::state::Team;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn team_b_sees_the_swapped_board(seed in 0u64..1_000_000) {
        for s in common::random_states(seed, 12).iter().step_by(9) {
            prop_assert_eq!(encode_observation(s, Team::B), encode_observation(&s.with_teams_swapped(), Team::A));
        }
    }

    #[test]
    fn binary_round_trip(seed in 0u64..1_000_000) {
        let states = common::random_states(seed, 16);
        let o = encode_observation(states.last().unwrap(), Team::A);
        prop_assert_eq!(Observation::from_bytes(&o.to_bytes()).unwrap(), o);
    }
}

#[test]
fn plane_layout() {
    let s = &common::random_states(1, 12)[0];
    let o = encode_observation(s, Team::A);
    assert_eq!(o.planes.len(), PLANE_COUNT * 144);
    assert_eq!(Plane::ALL.len(), PLANE_COUNT);
    let ones: f32 = o.global_onehot.iter().sum();
    assert!(ones >= 1.0);
    assert!(Observation::from_bytes(&o.to_bytes()[..10]).is_err());
}
