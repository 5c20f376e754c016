use lux_core::mapgen::{generate_map, parse_map, serialize_map, MapError, MapGenConfig, STANDARD_SIZES};
use lux_core::state::ResourceKind;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn maps_are_mirror_symmetric(seed in any::<u64>(), size in prop::sample::select(STANDARD_SIZES.to_vec())) {
        let map = generate_map(&MapGenConfig::new(seed, size)).unwrap();
        prop_assert_eq!(map.axis.mirror(map.spawns[0], size), map.spawns[1]);
        prop_assert_ne!(map.spawns[0], map.spawns[1]);
        for r in &map.resources {
            let m = map.axis.mirror(r.pos, size);
            let twin = map.resources.iter().find(|o| o.pos == m);
            prop_assert_eq!(twin.map(|t| (t.kind, t.amount)), Some((r.kind, r.amount)));
            prop_assert!(r.pos != map.spawns[0] && r.pos != map.spawns[1]);
        }
        prop_assert!(map.resources.iter().any(|r| r.kind == ResourceKind::Wood));
    }

    #[test]
    fn text_round_trip(seed in any::<u64>(), size in prop::sample::select(STANDARD_SIZES.to_vec())) {
        let map = generate_map(&MapGenConfig::new(seed, size)).unwrap();
        let text = serialize_map(&map);
        prop_assert_eq!(&parse_map(&text, false).unwrap(), &map);
        prop_assert_eq!(serialize_map(&generate_map(&MapGenConfig::new(seed, size)).unwrap()), text);
    }
}

#[test]
fn oversize_is_gated() {
    assert!(matches!(generate_map(&MapGenConfig::new(1, 64)), Err(MapError::UnsupportedSize { .. })));
    let big = generate_map(&MapGenConfig::new(1, 64).oversize(true)).unwrap();
    assert!(parse_map(&serialize_map(&big), false).is_err());
    assert_eq!(parse_map(&serialize_map(&big), true).unwrap(), big);
}
