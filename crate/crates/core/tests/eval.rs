mod common;

use std::collections::{BTreeMap, BTreeSet};

use clonelog::clones::{DetectionMode, DetectorConfig};
use clonelog::corpus::{CorpusSplit, TestCase, Vocabulary};
use clonelog::eval::{
    build_ground_truth, lvl_match_rate, run_description_experiment, run_location_experiment, EvalCorpus,
};
use clonelog::ingest::{extract_methods, local_names_by_file, LwkConfig, MethodDefinition, SourceFile};
use clonelog::lm::{train_ngram, Variant};
use clonelog::metrics::RougeLForm;
use common::{cloudstack_train, fixture_methods, method_named, seq, verbosity_pairs};

fn methods_from(content: &str) -> Vec<MethodDefinition> {
    let file = SourceFile { path: "Fixture.java".into(), content: content.into(), project_id: "fx".into() };
    extract_methods(&file, &LwkConfig::default()).unwrap()
}

fn corpus(methods: &[MethodDefinition]) -> EvalCorpus {
    EvalCorpus::new(methods, &local_names_by_file(methods))
}

const SUM: &str = "    public int sumNAME(int[] values) {
        int total = 0;
        LOG.debug(\"MSG\");
        for (int i = 0; i < values.length; i++) {
            total += values[i];
        }
        return total;
    }
";

const OPEN: &str = "    public Reader openNAME(String path) throws IOException {
        try {
            Reader r = Files.newBufferedReader(Paths.get(path));
            LOG.info(\"MSG\");
            return r;
        } catch (NoSuchFileException e) {
            LOG.warn(\"missing \" + path);
            throw new IOException(e);
        }
    }
";

const LOOKUP: &str = "    public String lookupNAME(Map<String, String> table, String key) {
        String value = table.get(key);
        if (value == null) {
            LOG.error(\"MSG\");
            value = defaults.get(key);
        } else {
            value = value.trim();
        }
        return value;
    }
";

const RENDER: &str = "    public String renderNAME(Shape shape) {
        StringBuilder sb = new StringBuilder();
        switch (shape.kind()) {
            case CIRCLE:
                sb.append(\"circle \").append(shape.radius());
                break;
            default:
                sb.append(\"polygon \").append(shape.sides());
        }
        LOG.trace(\"MSG\");
        return sb.toString();
    }
";

/// Ten logged methods in four families; members of a family differ only in
/// their name and log text.
fn family_fixture() -> (Vec<MethodDefinition>, BTreeMap<String, usize>) {
    let families = [(SUM, 3), (OPEN, 3), (LOOKUP, 2), (RENDER, 2)];
    let mut text = String::from("class Families {\n");
    let mut member_of = Vec::new();
    for (f, (template, n)) in families.iter().enumerate() {
        for k in 0..*n {
            text.push_str(&template.replace("NAME", &format!("F{f}M{k}")).replace("MSG", &format!("note {k} of family {f}")));
            member_of.push((format!("F{f}M{k}"), f));
        }
    }
    text.push_str("}\n");
    let methods = methods_from(&text);
    let family = methods
        .iter()
        .map(|m| {
            let f = member_of.iter().find(|(suffix, _)| m.name.ends_with(suffix.as_str())).unwrap().1;
            (m.id.clone(), f)
        })
        .collect();
    (methods, family)
}

#[test]
fn identical_logged_methods_form_one_positive() {
    let text = format!("class A {{\n{}{}}}\n", SUM.replace("NAME", "A"), SUM.replace("NAME", "A"));
    let methods = methods_from(&text);
    let gt = build_ground_truth(&corpus(&methods), &DetectorConfig::default(), None);
    assert_eq!((gt.positives.len(), gt.negatives.len()), (1, 0));
}

#[test]
fn unrelated_methods_form_one_negative() {
    let text = format!("class A {{\n{}{}}}\n", SUM.replace("NAME", "A"), LOOKUP.replace("NAME", "B"));
    let methods = methods_from(&text);
    let gt = build_ground_truth(&corpus(&methods), &DetectorConfig::default(), None);
    assert_eq!((gt.positives.len(), gt.negatives.len()), (0, 1));
}

#[test]
fn fewer_than_two_logged_methods_give_an_empty_ground_truth() {
    let methods = methods_from(&format!("class A {{\n{}}}\n", SUM.replace("NAME", "A")));
    let c = corpus(&methods);
    let gt = build_ground_truth(&c, &DetectorConfig::default(), None);
    assert!(gt.is_empty());
    assert!(run_location_experiment(&gt, &c, &DetectionMode::ALL, &DetectorConfig::default()).is_err());
}

#[test]
fn family_pairs_are_the_positives() {
    let (methods, family) = family_fixture();
    assert_eq!(methods.len(), 10);
    let gt = build_ground_truth(&corpus(&methods), &DetectorConfig::default(), None);
    let expected: BTreeSet<(String, String)> = methods
        .iter()
        .flat_map(|a| methods.iter().map(move |b| (a, b)))
        .filter(|(a, b)| a.id < b.id && family[&a.id] == family[&b.id])
        .map(|(a, b)| (a.id.clone(), b.id.clone()))
        .collect();
    assert_eq!(expected.len(), 3 + 3 + 1 + 1);
    assert_eq!(gt.positives.iter().cloned().collect::<BTreeSet<_>>(), expected);
    let negatives: BTreeSet<_> = gt.negatives.iter().cloned().collect();
    assert!(negatives.is_disjoint(&expected));
}

#[test]
fn negative_limit_caps_in_id_order() {
    let (methods, _) = family_fixture();
    let c = corpus(&methods);
    let all = build_ground_truth(&c, &DetectorConfig::default(), None);
    let capped = build_ground_truth(&c, &DetectorConfig::default(), Some(3));
    assert_eq!(capped.positives, all.positives);
    assert_eq!(capped.negatives, all.negatives[..3]);
}

#[test]
fn location_experiment_on_the_fixture_corpus() {
    let methods = fixture_methods("corpus");
    let c = corpus(&methods);
    let cfg = DetectorConfig::default();
    let gt = build_ground_truth(&c, &cfg, None);
    let loader = method_named(&methods, "loadEdits").id.clone();
    let tailer = method_named(&methods, "tailEdits").id.clone();
    let enforcer = method_named(&methods, "admit").id.clone();
    let reporter = method_named(&methods, "report").id.clone();
    assert!(gt.positives.contains(&(loader, tailer)));
    assert!(gt.negatives.contains(&(enforcer, reporter)));

    let m = run_location_experiment(&gt, &c, &DetectionMode::ALL, &cfg).unwrap();
    for cm in m.values() {
        assert_eq!(cm.total() as usize, gt.len());
    }
    assert!(m[&DetectionMode::Raw].fn_ > 0);
    assert!(m[&DetectionMode::SiOnly].fp > 0);
    assert_eq!((m[&DetectionMode::Full].fp, m[&DetectionMode::Full].fn_), (0, 0));
}

fn cloudstack_split() -> CorpusSplit {
    CorpusSplit {
        train: cloudstack_train(),
        test_cases: vec![TestCase {
            query_id: "q".into(),
            candidate_id: "c".into(),
            seed: seq("successfully created floating ip <eos>"),
            reference: seq("successfully deleted floating ip <eos>"),
        }],
    }
}

#[test]
fn no_nlp_with_seed_equal_to_reference_is_perfect() {
    let mut split = cloudstack_split();
    split.test_cases[0].reference = split.test_cases[0].seed.clone();
    let r = run_description_experiment(&split, None, &[Variant::NoNlp], 32, RougeLForm::Recall).unwrap();
    let s = r.variants[&Variant::NoNlp];
    assert_eq!((s.bleu[0], s.rouge_n[0], s.rouge_l), (100.0, Some(100.0), Some(100.0)));
}

#[test]
fn model_rewrites_toward_the_reference() {
    let split = cloudstack_split();
    let vocab = Vocabulary::build(&split.train, 1).unwrap();
    let model = train_ngram(&split.train, &vocab, 2, 0.0).unwrap();
    let r = run_description_experiment(&split, Some(&model), &Variant::ALL, 32, RougeLForm::Recall).unwrap();
    let [no_nlp, nlp_1, nlp_3] = Variant::ALL.map(|v| r.variants[&v]);
    // seed vs reference: 3 of 4 tokens, LCS 3 of 4
    assert_eq!(no_nlp.bleu[0], 75.0);
    assert_eq!(nlp_1.bleu[0], 100.0);
    assert!(no_nlp.bleu[0] <= nlp_1.bleu[0] && nlp_1.bleu[0] <= nlp_3.bleu[0]);
    assert!(no_nlp.rouge_l <= nlp_1.rouge_l && nlp_1.rouge_l <= nlp_3.rouge_l);
    let imp = r.improvement(Variant::Nlp1).unwrap();
    assert!((imp[0].unwrap() - 100.0 / 3.0).abs() < 1e-9);
}

#[test]
fn no_nlp_does_not_need_a_model() {
    let split = cloudstack_split();
    assert!(run_description_experiment(&split, None, &[Variant::Nlp1], 32, RougeLForm::Recall).is_err());
    let a = run_description_experiment(&split, None, &[Variant::NoNlp], 32, RougeLForm::Recall).unwrap();
    let b = run_description_experiment(&split, None, &[Variant::NoNlp], 32, RougeLForm::Recall).unwrap();
    assert_eq!(a, b);
}

#[test]
fn verbosity_agreement() {
    let pairs = verbosity_pairs();
    let refs: Vec<(&MethodDefinition, &MethodDefinition)> = pairs.iter().map(|(a, b)| (a, b)).collect();
    assert_eq!(lvl_match_rate(&refs).unwrap(), Some(0.9));
    let agreeing: Vec<_> = refs.iter().copied().filter(|(a, _)| !a.name.starts_with("pair07")).collect();
    assert_eq!(lvl_match_rate(&agreeing).unwrap(), Some(1.0));
    assert_eq!(lvl_match_rate(&[]).unwrap(), None);
}
