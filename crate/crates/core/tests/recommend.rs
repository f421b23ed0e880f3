mod common;

use common::{fixture_records, snapshot};
use termrec_core::biblio::{coword_pairs, query_key, term_trend, top_terms, Field};
use termrec_core::corpus::parse_vocabulary_upload;
use termrec_core::engine::recommend::cloud_bucket;
use termrec_core::engine::{
    cloud_weights, expand_query, query_doc_set, recommend, EngineError, Metric, ModelSnapshot, Recommendation,
};
use termrec_core::text::Language;

const QUERIES: [&str; 8] = [
    "Geld",
    "geld inflation",
    "unemployment of young people",
    "water management",
    "young",
    "transboundary cooperation",
    "pension reform",
    "zzzunknown",
];

fn assert_ranked(recs: &[Recommendation], snap: &ModelSnapshot, limit: usize) {
    assert!(recs.len() <= limit);
    for w in recs.windows(2) {
        assert!(
            w[0].confidence > w[1].confidence || (w[0].confidence == w[1].confidence && w[0].term < w[1].term),
            "{:?} before {:?}",
            w[0],
            w[1]
        );
    }
    for r in recs {
        assert!(snap.vocabulary().contains(&r.term), "{}", r.term);
        assert!(snap.index.df_ctrl(&r.term).unwrap() >= 1);
        assert!(r.confidence > 0.0 && r.confidence <= 1.0);
    }
}

#[test]
fn ranking_contract_on_fixture_queries() {
    for lang in [Language::En, Language::De] {
        let snap = snapshot(lang, None);
        for q in QUERIES {
            for metric in [Metric::Jaccard, Metric::Nwd] {
                for limit in [1, 3, 10, 100] {
                    let recs = recommend(q, &snap, metric, limit).unwrap();
                    assert_ranked(&recs, &snap, limit);
                }
            }
        }
    }
}

#[test]
fn geld_recommends_money_terms() {
    let snap = snapshot(Language::De, None);
    let recs = recommend("Geld", &snap, Metric::Jaccard, 10).unwrap();
    assert_eq!(recs[0].name, "Geldpolitik");
    assert_eq!(recs[0].vocabulary, "harvested-subjects");
    // geld occurs in 001..004; Geldpolitik is on 001, 002, 003
    assert_eq!(recs[0].confidence, 3.0 / 4.0);
}

#[test]
fn youth_unemployment_use_case() {
    let snap = snapshot(Language::En, None);
    for metric in [Metric::Jaccard, Metric::Nwd] {
        let recs = recommend("unemployment of young people", &snap, metric, 10).unwrap();
        let names: Vec<&str> = recs.iter().map(|r| r.name.as_str()).collect();
        let pos = |n: &str| names.iter().position(|x| *x == n).unwrap_or_else(|| panic!("{n} missing: {names:?}"));
        let (lmp, tp) = (pos("labour market policy"), pos("training position"));
        for (i, n) in names.iter().enumerate() {
            if *n != "labour market policy" && *n != "training position" {
                assert!(i > lmp && i > tp, "{metric}: {names:?}");
            }
        }
    }
}

#[test]
fn conjunction_and_fallback() {
    let snap = snapshot(Language::En, None);
    let qs = query_doc_set("water management", &snap).unwrap();
    assert!(!qs.fallback);
    assert_eq!(qs.tokens, ["water", "manag"]);
    assert_eq!(qs.docs.len(), 2);

    let qs = query_doc_set("pension water", &snap).unwrap();
    assert!(qs.fallback && qs.docs.is_empty());
    let recs = recommend("pension water", &snap, Metric::Jaccard, 10).unwrap();
    assert!(recs.iter().any(|r| r.name == "pension"));
    assert!(recs.iter().any(|r| r.name == "Wasser"));

    assert_eq!(query_doc_set("the of and", &snap).unwrap_err(), EngineError::EmptyQuery);
    assert_eq!(recommend("the of and", &snap, Metric::Nwd, 10).unwrap_err(), EngineError::EmptyQuery);
    assert!(recommend("zzzunknown", &snap, Metric::Jaccard, 10).unwrap().is_empty());
    assert_eq!(
        recommend("water", &snap, Metric::Learned, 10).unwrap_err(),
        EngineError::ModuleUnavailable(Metric::Learned)
    );
}

#[test]
fn limit_one_is_the_top_term() {
    let snap = snapshot(Language::De, None);
    let all = recommend("Geld", &snap, Metric::Nwd, 100).unwrap();
    let one = recommend("Geld", &snap, Metric::Nwd, 1).unwrap();
    assert_eq!(one, all[..1]);
}

#[test]
fn expansion_matches_recommend() {
    let snap = snapshot(Language::En, None);
    for metric in [Metric::Jaccard, Metric::Nwd] {
        let e = expand_query("water", &snap, metric, 5).unwrap();
        let names: Vec<String> = recommend("water", &snap, metric, 5).unwrap().into_iter().map(|r| r.name).collect();
        assert_eq!(e.original, ["water"]);
        assert_eq!(e.added, names);

        let e = expand_query("unemployment of young people", &snap, metric, 0).unwrap();
        assert_eq!(e.original, ["unemployment", "of", "young", "people"]);
        assert!(e.added.is_empty());
    }
    // fewer candidates than requested
    let e = expand_query("water scarcity", &snap, Metric::Jaccard, 5).unwrap();
    assert_eq!(e.added, ["agriculture", "Wasser"]);
    // a recommended term equal to a query word is not added twice
    let e = expand_query("pension", &snap, Metric::Jaccard, 5).unwrap();
    assert_eq!(e.added, ["social policy"]);
}

#[test]
fn cloud_weights_and_buckets() {
    let snap = snapshot(Language::De, None);
    let cloud = cloud_weights("Geld", &snap, Metric::Jaccard, 30).unwrap();
    let recs = recommend("Geld", &snap, Metric::Jaccard, 30).unwrap();
    assert_eq!(cloud.len(), recs.len());
    assert_eq!(cloud[0].weight, 1.0);
    assert_eq!(cloud[0].bucket, 5);
    for w in cloud.windows(2) {
        assert!(w[0].bucket >= w[1].bucket);
    }
    for (c, r) in cloud.iter().zip(&recs) {
        assert_eq!(c.weight, r.confidence / recs[0].confidence);
        assert_eq!(c.bucket, cloud_bucket(c.weight));
    }
    assert_eq!(cloud_bucket(0.4 / 0.8), 3);
}

#[test]
fn uploaded_vocabulary_restricts_output() {
    let upload = parse_vocabulary_upload("# money only\nGeldpolitik\nInflation\n").unwrap();
    let snap = snapshot(Language::De, Some(&upload));
    assert_eq!(snap.vocabulary().len(), 2);
    for q in QUERIES {
        for metric in [Metric::Jaccard, Metric::Nwd] {
            for r in recommend(q, &snap, metric, 100).unwrap() {
                assert!(r.name == "Geldpolitik" || r.name == "Inflation", "{}", r.name);
                assert_eq!(r.vocabulary, "uploaded-vocabulary");
            }
        }
    }
}

#[test]
fn model_file_round_trip_is_byte_identical() {
    let snap = snapshot(Language::De, None);
    let bytes = snap.to_bytes();
    let back = ModelSnapshot::from_bytes(&bytes).unwrap();
    assert_eq!(back, snap);
    assert_eq!(back.to_bytes(), bytes);
    assert!(ModelSnapshot::from_bytes(b"not a model").is_err());
}

#[test]
fn biblio_consistent_with_index() {
    let snap = snapshot(Language::En, None);
    let top = top_terms(&snap.corpus, Field::Subject, 5);
    assert_eq!(top.len(), 5);
    // three subjects share df 3; the tie goes to the normalized order
    assert_eq!(top[0].term, "Geldpolitik");
    assert_eq!(top[1].term, "labour market policy");
    assert_eq!(top[0].df, 3);
    for t in top_terms(&snap.corpus, Field::Subject, 100) {
        let key = termrec_core::corpus::normalize_term(&t.term);
        assert_eq!(Some(t.df), snap.index.df_ctrl(&key));
    }
    let pairs = coword_pairs(&snap.index, &snap.corpus, 10);
    assert_eq!(pairs.len(), 10);
    for w in pairs.windows(2) {
        assert!(w[0].count > w[1].count || (w[0].count == w[1].count && w[0].free <= w[1].free));
    }
    for p in &pairs {
        assert_eq!(p.count, snap.index.df_pair(&p.free, &termrec_core::corpus::normalize_term(&p.subject)));
    }

    let key = query_key("unemployment", Field::Free, &snap.analyzer).unwrap();
    let trend = term_trend(&snap.corpus, &key, Field::Free);
    let total: u32 = trend.buckets.iter().map(|b| b.count).sum();
    assert_eq!(total + trend.excluded, snap.index.df_free(&key).unwrap());
    assert_eq!(trend.buckets.iter().map(|b| b.year).collect::<Vec<_>>(), [2009, 2010, 2011]);

    let pension = term_trend(&snap.corpus, "pension", Field::Subject);
    assert!(pension.buckets.is_empty());
    assert_eq!(pension.excluded, 1);
    assert!(term_trend(&snap.corpus, "nothing", Field::Subject).buckets.is_empty());
    assert_eq!(fixture_records().len(), 15);
}
