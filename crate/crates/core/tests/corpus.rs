mod common;

use std::collections::{BTreeMap, BTreeSet};

use clonelog::corpus::{build_splits, method_lsds, CorpusConfig, Vocabulary};
use clonelog::ingest::MethodDefinition;
use common::{cloudstack_train, cloudstack_vocab, fixture_methods, method_named, seq};
use proptest::prelude::*;

#[test]
fn cloudstack_vocabulary() {
    let v = cloudstack_vocab();
    // successfully, deleted, condition, elastistor, volume, created,
    // floating, ip, plus the end marker and the unknown token
    assert_eq!(v.len(), 10);
    let order: Vec<&str> = v.tokens().iter().map(String::as_str).collect();
    assert_eq!(
        order,
        ["<eos>", "<unk>", "successfully", "deleted", "elastistor", "volume", "condition", "created", "floating", "ip"]
    );
    assert_eq!(v.count(v.id("successfully")), 5);
    assert_eq!(v.count(v.id("deleted")), 4);
    assert_eq!(v.count(Vocabulary::EOS), 5);
    assert_eq!(v.id("migrated"), Vocabulary::UNK);
}

#[test]
fn min_count_drops_rare_tokens() {
    let v = Vocabulary::build(&cloudstack_train(), 2).unwrap();
    assert_eq!(v.len(), 6);
    assert_eq!(v.id("floating"), Vocabulary::UNK);
    assert_ne!(v.id("volume"), Vocabulary::UNK);
}

#[test]
fn vocabulary_file_round_trip() {
    let v = cloudstack_vocab();
    let tsv = v.to_tsv();
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines[2], "successfully\t2\t5");
    let back = Vocabulary::from_tsv_lines(&lines).unwrap();
    assert_eq!(back, v);
    assert_eq!(back.hash(), v.hash());
}

#[test]
fn descriptions_of_the_fixture_methods() {
    let methods = fixture_methods("corpus");
    let cfg = CorpusConfig::default();
    let texts = |name: &str| -> Vec<String> {
        method_lsds(method_named(&methods, name), &cfg).iter().map(|s| s.text()).collect()
    };
    assert_eq!(
        texts("allocate"),
        ["successfully created floating ip", "successfully deleted floating ip", "successfully deleted floating ip"]
    );
    assert_eq!(texts("release"), ["successfully deleted floating ip"]);
    assert_eq!(texts("loadEdits")[0], "reading journal segment");
    assert_eq!(texts("loadEdits")[2], "replay done : ops up to from at");
}

fn fixture_map() -> BTreeMap<String, MethodDefinition> {
    fixture_methods("corpus").into_iter().map(|m| (m.id.clone(), m)).collect()
}

#[test]
fn split_of_the_floating_ip_pair() {
    let methods = fixture_methods("corpus");
    let q = method_named(&methods, "allocate").id.clone();
    let c = method_named(&methods, "release").id.clone();
    let pairs = vec![(q.clone(), c.clone()), (c.clone(), q.clone())];
    let split = build_splits(&pairs, &fixture_map(), &CorpusConfig::default()).unwrap();
    assert_eq!(split.train.len(), 3);
    assert_eq!(split.test_cases.len(), 1);
    let case = &split.test_cases[0];
    assert_eq!((case.query_id.as_str(), case.candidate_id.as_str()), (q.as_str(), c.as_str()));
    assert_eq!(case.seed.tokens, seq("successfully created floating ip <eos>").tokens);
    assert_eq!(case.reference.tokens, seq("successfully deleted floating ip <eos>").tokens);
}

#[test]
fn unlogged_query_is_an_error() {
    let methods = fixture_methods("corpus");
    let q = method_named(&methods, "expire").id.clone();
    let c = method_named(&methods, "evict").id.clone();
    assert!(build_splits(&[(q, c)], &fixture_map(), &CorpusConfig::default()).is_err());
}

#[test]
fn dedup_collapses_repeated_training_sequences() {
    let methods = fixture_methods("corpus");
    let q = method_named(&methods, "allocate").id.clone();
    let c = method_named(&methods, "expire").id.clone();
    let cfg = CorpusConfig { dedup: true, ..CorpusConfig::default() };
    let split = build_splits(&[(q, c)], &fixture_map(), &cfg).unwrap();
    assert_eq!(split.train.len(), 2);
    assert!(split.test_cases.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn splits_are_role_exclusive(picks in prop::collection::vec((0usize..7, 0usize..12), 1..20)) {
        let map = fixture_map();
        let ids: Vec<String> = map.keys().cloned().collect();
        let logged: Vec<String> = map.values().filter(|m| m.has_logs()).map(|m| m.id.clone()).collect();
        let pairs: Vec<(String, String)> = picks.iter().map(|&(q, c)| (logged[q].clone(), ids[c].clone())).collect();
        let split = build_splits(&pairs, &map, &CorpusConfig::default()).unwrap();
        prop_assert!(split.is_exclusive());
        let train: BTreeSet<&str> = split.train.iter().map(|s| s.origin_method.as_str()).collect();
        for case in &split.test_cases {
            prop_assert!(!train.contains(case.candidate_id.as_str()));
            prop_assert!(train.contains(case.query_id.as_str()));
            prop_assert!(!case.reference.is_empty() && !case.seed.is_empty());
        }
    }
}
