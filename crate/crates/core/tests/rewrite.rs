mod common;

use proptest::prelude::*;

use qnlp::circuit::{compile, AnsatzConfig, Circuit};
use qnlp::cli::{parse_sentence, MAX_QUBITS};
use qnlp::diagram::{count_resources, remove_cups};
use qnlp::simulator::run_exact;

fn counts(c: &qnlp::diagram::ResourceCount) -> (usize, usize, usize) {
    (c.qubits_total, c.qubits_postselected, c.qubits_measured)
}

#[test]
fn figure_sentence_resources() {
    let fx = common::fixture();
    let p = parse_sentence(&["siva", "hates", "thrilling", "comics"], &fx.lexicon).unwrap();
    let q = AnsatzConfig::default().qubit_map();
    assert_eq!(counts(&count_resources(&p.diagram, &q)), (7, 6, 1));
    assert_eq!(counts(&count_resources(&p.rewritten, &q)), (4, 3, 1));
    let cfg = AnsatzConfig::default();
    assert_eq!(compile(&p.diagram, &cfg).unwrap().n_qubits(), 7);
    assert_eq!(compile(&p.rewritten, &cfg).unwrap().n_qubits(), 4);
}

#[test]
fn corpus_fits_the_device_and_rewrite_is_idempotent() {
    let fx = common::fixture();
    let q = AnsatzConfig::default().qubit_map();
    for p in &fx.corpus.parsed {
        let before = count_resources(&p.diagram, &q);
        let after = count_resources(&p.rewritten, &q);
        assert!(after.qubits_total <= MAX_QUBITS);
        assert!(after.qubits_total <= before.qubits_total);
        assert_eq!(after.qubits_measured, 1);
        assert_eq!(remove_cups(&p.rewritten), p.rewritten);
    }
}

#[test]
fn circuits_round_trip_through_text() {
    let fx = common::fixture();
    for rewritten in [false, true] {
        for c in fx.corpus.circuits(rewritten).unwrap() {
            assert_eq!(Circuit::from_text(&c.to_text()).unwrap(), c);
        }
    }
}

#[test]
fn simulator_matches_dense_matrices_on_corpus() {
    let fx = common::fixture();
    let names = fx.corpus.parameter_names();
    let mut rng = common::rng(17);
    for rewritten in [false, true] {
        for c in fx.corpus.circuits(rewritten).unwrap().iter().take(40) {
            let values = common::random_values(&names, &mut rng);
            let got = run_exact(c, &values).unwrap();
            let (p0, p1) = common::dense_outcome(c, &values);
            assert!((got.p0_raw - p0).abs() < 1e-12 && (got.p1_raw - p1).abs() < 1e-12);
        }
    }
}

#[test]
fn rewrite_preserves_normalized_distribution() {
    let fx = common::fixture();
    let names = fx.corpus.parameter_names();
    let original = fx.corpus.circuits(false).unwrap();
    let rewritten = fx.corpus.circuits(true).unwrap();
    let mut rng = common::rng(3);
    for (a, b) in original.iter().zip(&rewritten) {
        for _ in 0..10 {
            let values = common::random_values(&names, &mut rng);
            let (x, y) = (run_exact(a, &values).unwrap(), run_exact(b, &values).unwrap());
            assert!((x.p0 - y.p0).abs() < 1e-9, "{} vs {}", x.p0, y.p0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rewrite_equivalence_on_random_sentences(
        subj in 0usize..7, verb in 0usize..5, adj in proptest::option::of(0usize..3), obj in 0usize..7,
        angles in proptest::collection::vec(0.0..std::f64::consts::TAU, 34),
    ) {
        let fx = common::fixture();
        let nouns = fx.lexicon.words_with(qnlp::pregroup::PartOfSpeech::Noun);
        let verbs = fx.lexicon.words_with(qnlp::pregroup::PartOfSpeech::TransitiveVerb);
        let adjs = fx.lexicon.words_with(qnlp::pregroup::PartOfSpeech::Adjective);
        let mut tokens = vec![nouns[subj], verbs[verb]];
        tokens.extend(adj.map(|a| adjs[a]));
        tokens.push(nouns[obj]);
        let p = parse_sentence(&tokens, &fx.lexicon).unwrap();
        let cfg = AnsatzConfig::default();
        let names = fx.corpus.parameter_names();
        prop_assert_eq!(names.len(), 34);
        let values = names.iter().cloned().zip(angles).collect();
        let x = run_exact(&compile(&p.diagram, &cfg).unwrap(), &values);
        let y = run_exact(&compile(&p.rewritten, &cfg).unwrap(), &values);
        match (x, y) {
            (Ok(x), Ok(y)) => prop_assert!((x.p0 - y.p0).abs() < 1e-9),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "one side degenerate: {:?}", other),
        }
    }
}
