//! Index-derived measures against brute-force recomputation from the raw
//! document sets.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use proptest::prelude::*;
use termrec_core::corpus::{ControlledVocabulary, Corpus, Document};
use termrec_core::engine::metrics::{jaccard_fraction, nwd_distance};
use termrec_core::engine::{CooccurrenceIndex, EngineError};
use termrec_core::text::Language;

type RawDoc = (BTreeSet<u8>, BTreeSet<u8>);

fn free(i: u8) -> String {
    format!("f{i:02}")
}

fn ctrl(i: u8) -> String {
    format!("c{i:02}")
}

fn corpus_strategy() -> impl Strategy<Value = Vec<RawDoc>> {
    (1usize..=30, 1usize..=10).prop_flat_map(|(nf, nc)| {
        prop::collection::vec(
            (prop::collection::btree_set(0..nf as u8, 0..=6), prop::collection::btree_set(0..nc as u8, 0..=3)),
            1..=50,
        )
    })
}

fn make_corpus(docs: &[RawDoc]) -> Corpus {
    let vocab: BTreeSet<String> = docs.iter().flat_map(|d| d.1.iter().map(|&c| ctrl(c))).collect();
    let documents = docs
        .iter()
        .enumerate()
        .map(|(i, (f, c))| Document {
            doc_id: format!("doc{i:03}"),
            terms: f.iter().map(|&t| (free(t), 1)).collect::<BTreeMap<_, _>>(),
            subjects: c.iter().map(|&t| ctrl(t)).collect(),
            date: None,
        })
        .collect();
    Corpus::new(documents, ControlledVocabulary::from_terms("v", false, vocab.iter().map(String::as_str)), Language::En)
        .unwrap()
}

fn doc_set(docs: &[RawDoc], pick: impl Fn(&RawDoc) -> bool) -> BTreeSet<usize> {
    docs.iter().enumerate().filter(|(_, d)| pick(d)).map(|(i, _)| i).collect()
}

/// NWD straight from set cardinalities, in base-2 logarithms.
fn brute_nwd(n: usize, dx: &BTreeSet<usize>, dy: &BTreeSet<usize>) -> Option<f64> {
    let fxy = dx.intersection(dy).count();
    let (fx, fy) = (dx.len(), dy.len());
    if fxy == 0 || fx == n || fy == n {
        return None;
    }
    let l = |v: usize| (v as f64).log2();
    Some((l(fx).max(l(fy)) - l(fxy)) / (l(n) - l(fx).min(l(fy))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn index_matches_brute_force(docs in corpus_strategy()) {
        let corpus = make_corpus(&docs);
        let index = match CooccurrenceIndex::build(&corpus) {
            Ok(index) => index,
            Err(e) => {
                prop_assert_eq!(e, EngineError::NoControlledAssignments);
                prop_assert!(docs.iter().all(|d| d.1.is_empty()));
                return Ok(());
            }
        };
        let n = docs.len();
        prop_assert_eq!(index.n() as usize, n);
        for x in 0..30u8 {
            let dx = doc_set(&docs, |d| d.0.contains(&x));
            prop_assert_eq!(index.df_free(&free(x)), (!dx.is_empty()).then_some(dx.len() as u32));
            if dx.is_empty() {
                continue;
            }
            for y in 0..10u8 {
                let dy = doc_set(&docs, |d| d.1.contains(&y));
                if dy.is_empty() {
                    prop_assert!(matches!(index.jaccard(&free(x), &ctrl(y)), Err(EngineError::UnknownTerm(_))));
                    continue;
                }
                let inter = dx.intersection(&dy).count() as u32;
                let union = dx.union(&dy).count() as u32;
                let fx = index.df_free(&free(x)).unwrap();
                let fy = index.df_ctrl(&ctrl(y)).unwrap();
                let fxy = index.df_pair(&free(x), &ctrl(y));
                prop_assert!(fxy <= fx.min(fy));
                let (num, den) = jaccard_fraction(fx, fy, fxy);
                prop_assert_eq!(Ratio::new(num, den), Ratio::new(inter, union));
                let j = index.jaccard(&free(x), &ctrl(y)).unwrap();
                prop_assert_eq!(j, f64::from(inter) / f64::from(union));
                prop_assert!((0.0..=1.0).contains(&j));

                if n < 2 {
                    prop_assert_eq!(index.nwd(&free(x), &ctrl(y)), Err(EngineError::ModelTooSmall { n: 1 }));
                    continue;
                }
                let got = index.nwd(&free(x), &ctrl(y)).unwrap();
                let want = brute_nwd(n, &dx, &dy);
                match (got, want) {
                    (Some(g), Some(w)) => {
                        prop_assert!((g - w).abs() < 1e-12, "nwd {} vs {}", g, w);
                        prop_assert!(g >= 0.0);
                        // symmetric in the two frequencies
                        let swapped = nwd_distance(n as u32, fy, fx, fxy).unwrap();
                        prop_assert!((g - swapped).abs() < 1e-12);
                    }
                    (None, None) => {}
                    other => prop_assert!(false, "definedness differs: {:?}", other),
                }
            }
        }
    }

    #[test]
    fn stored_pairs_are_positive_and_bounded(docs in corpus_strategy()) {
        let corpus = make_corpus(&docs);
        if let Ok(index) = CooccurrenceIndex::build(&corpus) {
            for (x, y, c) in index.pairs() {
                prop_assert!(c > 0);
                prop_assert!(c <= index.df_free(x).unwrap().min(index.df_ctrl(y).unwrap()));
                prop_assert!(index.df_free(x).unwrap() <= index.n());
            }
            for x in index.free_terms() {
                prop_assert_eq!(index.postings(x).unwrap().len() as u32, index.df_free(x).unwrap());
            }
        }
    }

    #[test]
    fn log_base_invariance(n in 2u32..10_000, a in 1u32..10_000, b in 1u32..10_000, c in 1u32..10_000) {
        let fx = a % n + 1;
        let fy = b % n + 1;
        let fxy = c % fx.min(fy) + 1;
        if let Some(d) = nwd_distance(n, fx, fy, fxy) {
            let l = |v: u32| f64::from(v).log2();
            let base2 = (l(fx).max(l(fy)) - l(fxy)) / (l(n) - l(fx).min(l(fy)));
            let base10 = {
                let l = |v: u32| f64::from(v).log10();
                (l(fx).max(l(fy)) - l(fxy)) / (l(n) - l(fx).min(l(fy)))
            };
            prop_assert!((d - base2).abs() < 1e-12);
            prop_assert!((d - base10).abs() < 1e-12);
        }
    }
}

#[test]
fn analytic_anchors() {
    let d = nwd_distance(100, 10, 4, 2).unwrap();
    assert!((d - 0.5).abs() < 1e-12);
    assert_eq!(nwd_distance(100, 9, 9, 9), Some(0.0));
    assert_eq!(nwd_distance(100, 100, 4, 4), None);
}
