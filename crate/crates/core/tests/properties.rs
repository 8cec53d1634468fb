use proptest::prelude::*;

use blogmh::citebench::{cluster_accuracy, partition_from_labels, CitationDataset, Record};
use blogmh::parser::parse_model;
use blogmh::proposers::{build_canopies, jaccard, segment_citation, tokenize};
use blogmh::value::{Ident, Value};
use blogmh::world::{log_falling_factorial, PartialWorld, WorldPatch, WorldState};

#[derive(Clone, Debug)]
enum Op {
    Set(u64, Option<u32>),
    Remove(u64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0..40u64, proptest::option::of(1..6u32)).prop_map(|(i, v)| Op::Set(i, v)),
        (0..40u64).prop_map(Op::Remove),
    ]
}

const WORDS: &[&str] = &["deep", "graph", "kernel", "markov", "ann", "bob", "nets", "trees"];

fn text() -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::sample::select(WORDS), 1..6).prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn patch_reads_through(base_n in 0..30u64, ops in proptest::collection::vec(op(), 0..30)) {
        let m = parse_model("type Pub; random Boolean B(NaturalNum n) ~ Bernoulli(0.5);").unwrap();
        let ty = m.type_id("Pub").unwrap();
        let var = |i: u64| m.var("B", [Value::Nat(i)]);
        let value = |v: Option<u32>| match v {
            Some(token) => Value::from(Ident { ty, token }),
            None => Value::Bool(true),
        };
        let base = PartialWorld::from_pairs((0..base_n).map(|i| (var(i), Value::Bool(false))));
        let mut eager = base.clone();
        let mut patch = WorldPatch::new();
        {
            let mut ov = patch.over(&base);
            for o in &ops {
                match o {
                    Op::Set(i, v) => {
                        ov.set(var(*i), value(*v));
                        eager.insert(var(*i), value(*v));
                    }
                    Op::Remove(i) => {
                        ov.remove(&var(*i));
                        eager.remove(&var(*i));
                    }
                }
            }
            for i in 0..40 {
                prop_assert_eq!(ov.get(&var(i)), eager.get(&var(i)));
            }
            prop_assert_eq!(ov.len(), eager.len());
            prop_assert_eq!(ov.ident_count(ty), eager.ident_count(ty));
        }
        let mut applied = base.clone();
        patch.apply(&mut applied);
        prop_assert_eq!(applied, eager);
    }

    #[test]
    fn canopies_cover_and_pair_draws_sum_to_one(texts in proptest::collection::vec(text(), 1..25), theta in 0.05..0.9f64) {
        let c = build_canopies(&texts, theta);
        let n = texts.len();
        for i in 0..n {
            prop_assert!(!c.containing(i).is_empty());
            for j in 0..n {
                let close = jaccard(&tokenize(&texts[i]), &tokenize(&texts[j])) >= theta;
                if i != j && close {
                    prop_assert!(c.pair_probability(i, j) > 0.0);
                }
            }
        }
        let total: f64 = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| c.pair_probability(a, b)).sum();
        if c.usable().is_empty() {
            prop_assert_eq!(total, 0.0);
        } else {
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn accuracy_ignores_ordering(labels in proptest::collection::vec(0..5u8, 1..20), gold in proptest::collection::vec(0..5u8, 1..20), seed in any::<u64>()) {
        let n = labels.len().min(gold.len());
        let ids: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        let pred = partition_from_labels(&ids, &labels[..n]);
        let truth = partition_from_labels(&ids, &gold[..n]);
        let acc = cluster_accuracy(&pred, &truth).unwrap();
        prop_assert!((0.0..=1.0).contains(&acc));
        prop_assert_eq!(cluster_accuracy(&truth, &truth).unwrap(), 1.0);
        let mut shuffled = pred.clone();
        let k = seed as usize % shuffled.len();
        shuffled.rotate_left(k);
        for c in &mut shuffled {
            c.reverse();
        }
        prop_assert_eq!(cluster_accuracy(&shuffled, &truth).unwrap(), acc);
    }

    #[test]
    fn falling_factorial_is_a_sum_of_logs(n in 0..200u64, m in 0..200u64) {
        let direct: f64 = if m > n { f64::NEG_INFINITY } else { (0..m).map(|i| ((n - i) as f64).ln()).sum() };
        let got = log_falling_factorial(n, m);
        prop_assert!(got == direct || (got - direct).abs() < 1e-9);
    }

    #[test]
    fn segmentation_recovers_authors_and_title(authors in proptest::collection::vec(proptest::sample::select(WORDS), 1..4), title in text()) {
        let s = format!("{} . {}", authors.join(" "), title);
        let (a, t) = segment_citation(&s, ".").unwrap();
        prop_assert_eq!(a, authors.iter().map(|x| x.to_string()).collect::<Vec<_>>());
        prop_assert_eq!(t, title);
    }

    #[test]
    fn tsv_round_trips(texts in proptest::collection::vec(text(), 1..10)) {
        let records = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Record { id: format!("id{i}"), gold: format!("g{}", i % 3), text: t.clone() })
            .collect();
        let d = CitationDataset { records };
        prop_assert_eq!(CitationDataset::parse_tsv(&d.to_tsv()).unwrap(), d);
    }
}
