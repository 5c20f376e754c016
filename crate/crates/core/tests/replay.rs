use lux_core::agents::AgentSpec;
use lux_core::arena::{run_match, MatchConfig};
use lux_core::replay::{ReplayError, ReplayFile};
use lux_core::state::Winner;

fn greedy_vs_random(seed: u64) -> ReplayFile {
    run_match(&MatchConfig::new(seed, 12, [AgentSpec::Greedy, AgentSpec::Random(None)])).unwrap().replay
}

#[test]
fn reruns_are_byte_identical_and_verify() {
    for seed in 0..5 {
        let a = greedy_vs_random(seed);
        let b = greedy_vs_random(seed);
        assert_eq!(a.to_json(), b.to_json());
        a.verify().unwrap();
        let back = ReplayFile::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }
}

#[test]
fn null_match_on_seed_seven_is_a_draw() {
    let r = run_match(&MatchConfig::new(7, 12, [AgentSpec::Null, AgentSpec::Null])).unwrap();
    assert_eq!(r.outcome.winner, Winner::Draw);
}

#[test]
fn corrupted_action_names_the_turn() {
    let mut r = greedy_vs_random(3);
    let t = r.turns.iter().position(|[a, _]| !a.is_empty()).expect("greedy acted");
    let mut bytes = r.turns[t][0].clone().into_bytes();
    bytes[0] ^= 1;
    r.turns[t][0] = String::from_utf8(bytes).unwrap();
    match r.verify() {
        Err(ReplayError::Divergence { turn }) => assert_eq!(turn as usize, t + 1),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn flipped_checksum_is_caught() {
    let mut r = greedy_vs_random(4);
    let last = r.checksums.len() - 1;
    let flipped = if r.checksums[last].starts_with('0') { "1" } else { "0" };
    r.checksums[last].replace_range(0..1, flipped);
    assert!(matches!(r.verify(), Err(ReplayError::Divergence { turn }) if turn as usize == last));
}

#[test]
fn version_mismatch_is_refused() {
    let mut r = greedy_vs_random(1);
    r.engine_version = "0.0.0-other".into();
    let e = r.verify().unwrap_err();
    assert!(matches!(e, ReplayError::EngineVersion { .. }));
    assert!(e.to_string().contains("0.0.0-other"));
}

#[test]
fn dump_has_one_block_per_state() {
    let r = greedy_vs_random(2);
    let text = r.dump().unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("== turn ")).count(), r.turns.len() + 1);
}
