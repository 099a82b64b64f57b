use std::collections::BTreeSet;

use super::*;
use crate::remote::{RemoteError, TextGenerator};

fn bits(v: &StrategyVector) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn neutral_strategy_encoding() {
    let v = encode(&Strategy::default());
    assert_eq!(
        v,
        [0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]
    );
}

#[test]
fn space_size_matches_brute_force_count() {
    // Product of domain sizes, filtered by index: composition 0 is worker,
    // barracks 0 is none.
    let mut count = 0;
    for _e in 0..3 {
        for b in 0..3 {
            for c in 0..5 {
                for _a in 0..2 {
                    for _t in 0..3 {
                        for _d in 0..3 {
                            if c == 0 || b != 0 {
                                count += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    assert_eq!(count, 594);
    assert_eq!(SPACE_SIZE, count);
    let space = enumerate_space();
    assert_eq!(space.len(), count);
    assert_eq!(space[0], Strategy::default());
    let unique: BTreeSet<Strategy> = space.iter().copied().collect();
    assert_eq!(unique.len(), space.len());
    let mut sorted = space.clone();
    sorted.sort();
    assert_eq!(sorted, space);
}

#[test]
fn encoding_is_injective_and_round_trips() {
    let space = enumerate_space();
    let vectors: BTreeSet<Vec<u64>> = space.iter().map(|s| bits(&encode(s))).collect();
    assert_eq!(vectors.len(), space.len());
    for s in &space {
        let v = encode(s);
        assert_eq!(v.len(), VECTOR_LEN);
        for block in [&v[1..4], &v[4..9], &v[10..13]] {
            assert_eq!(block.iter().sum::<f64>(), 1.0);
        }
        assert_eq!(decode(&v).unwrap(), *s);
    }
}

#[test]
fn aggression_flip_changes_one_slot() {
    let s = Strategy::default();
    let t = Strategy {
        aggression: true,
        ..s
    };
    let (a, b) = (encode(&s), encode(&t));
    let diff = a.iter().zip(b.iter()).filter(|(x, y)| x != y).count();
    assert_eq!(diff, 1);
}

#[test]
fn decode_rejects_malformed_vectors() {
    let mut v = encode(&Strategy::default());
    v[2] = 1.0;
    assert!(matches!(decode(&v), Err(StrategyError::MalformedVector(_))));
    let mut v = encode(&Strategy::default());
    v[0] = 0.3;
    assert!(matches!(decode(&v), Err(StrategyError::MalformedVector(_))));
    assert!(matches!(decode(&[0.0; 3]), Err(StrategyError::VectorLength(3))));
    // Light composition without barracks.
    let mut v = encode(&Strategy::default());
    v[4] = 0.0;
    v[5] = 1.0;
    assert!(matches!(decode(&v), Err(StrategyError::NeedsBarracks(_))));
}

#[test]
fn record_round_trip() {
    for s in enumerate_space().iter().step_by(7) {
        assert_eq!(Strategy::from_record(&s.to_record()).unwrap(), *s);
    }
    let s: Strategy =
        "economy=high, barracks=early, composition=light, aggression=true, attack_target=closest, defense=none"
            .parse()
            .unwrap();
    assert_eq!(s.composition, Composition::Light);
    assert!(matches!(
        Strategy::from_record("economy=high"),
        Err(StrategyError::Missing("barracks"))
    ));
    assert!(Strategy::from_record("economy=huge barracks=none composition=worker aggression=false attack_target=closest defense=none").is_err());
}

#[test]
fn uniform_library_is_unique() {
    let lib = generate_library(50, &mut UniformSource::default(), 7).unwrap();
    assert_eq!(lib.len(), 50);
    let unique: BTreeSet<Strategy> = lib.strategies().into_iter().collect();
    assert_eq!(unique.len(), 50);
    assert_eq!(lib, generate_library(50, &mut UniformSource::default(), 7).unwrap());
}

#[test]
fn full_library_covers_space() {
    let lib = generate_library(SPACE_SIZE, &mut UniformSource::default(), 1).unwrap();
    let unique: BTreeSet<Strategy> = lib.strategies().into_iter().collect();
    assert_eq!(unique.len(), SPACE_SIZE);
    assert!(matches!(
        generate_library(SPACE_SIZE + 1, &mut UniformSource::default(), 1),
        Err(StrategyError::LibraryTooLarge { .. })
    ));
}

struct Stuck;

impl StrategySource for Stuck {
    fn propose(&mut self, _prior: &[Strategy], _rng: &mut rand_chacha::ChaCha8Rng) -> Option<Strategy> {
        Some(Strategy::default())
    }

    fn provenance(&self) -> Provenance {
        Provenance::Generated
    }
}

#[test]
fn repeating_source_is_completed_by_fallback() {
    let lib = generate_library(10, &mut Stuck, 3).unwrap();
    assert_eq!(lib.len(), 10);
    assert_eq!(lib.entries[0].strategy, Strategy::default());
    assert_eq!(lib.entries[0].provenance, Provenance::Generated);
    assert!(lib.entries[1..].iter().all(|e| e.provenance == Provenance::Sampled));
    let unique: BTreeSet<Strategy> = lib.strategies().into_iter().collect();
    assert_eq!(unique.len(), 10);
}

struct Canned(Vec<&'static str>, std::cell::Cell<usize>);

impl TextGenerator for Canned {
    fn complete(&self, _system: &str, _user: &str) -> Result<String, RemoteError> {
        let i = self.1.get();
        self.1.set(i + 1);
        self.0
            .get(i)
            .map(|s| s.to_string())
            .ok_or(RemoteError::Transport("exhausted".into()))
    }
}

#[test]
fn text_source_parses_replies() {
    let gen = Canned(
        vec![
            "Sure! Here it is:\neconomy=high barracks=early composition=light aggression=true attack_target=workers defense=none",
            "nonsense",
        ],
        Default::default(),
    );
    let mut src = TextStrategySource::new(gen, "8x8 map");
    let lib = generate_library(3, &mut src, 0).unwrap();
    assert_eq!(lib.len(), 3);
    assert_eq!(lib.entries[0].provenance, Provenance::Generated);
    assert_eq!(lib.entries[0].strategy.attack_target, AttackTarget::Workers);
    assert!(!src.warnings.is_empty());
    let (system, user) = src.prompt(&[Strategy::default()]);
    assert!(system.contains("8x8 map"));
    assert!(user.contains(&Strategy::default().to_record()));
}

#[test]
fn split_is_a_seeded_partition() {
    let lib = generate_library(50, &mut UniformSource::default(), 11).unwrap();
    let (seen, unseen) = split_seen_unseen(&lib, 30, 5).unwrap();
    assert_eq!((seen.len(), unseen.len()), (30, 20));
    for s in seen.strategies() {
        assert!(!unseen.contains(&s));
    }
    assert_eq!(split_seen_unseen(&lib, 30, 5).unwrap(), (seen, unseen));
    let (all, none) = split_seen_unseen(&lib, 50, 5).unwrap();
    assert_eq!((all.len(), none.len()), (50, 0));
    assert!(split_seen_unseen(&lib, 51, 5).is_err());
}

#[test]
fn library_file_round_trip() {
    let lib = generate_library(12, &mut UniformSource::default(), 2).unwrap();
    let mut buf = Vec::new();
    write_library(&lib, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.lines().next().unwrap().contains("\"economy\""));
    assert_eq!(read_library(&buf[..]).unwrap(), lib);

    let mut dup = buf.clone();
    dup.extend_from_slice(text.lines().next().unwrap().as_bytes());
    assert!(read_library(&dup[..]).is_err());
}
