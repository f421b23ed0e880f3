use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::metrics::{jaccard_score, nwd_confidence, nwd_distance, Metric};
use super::{CooccurrenceIndex, EngineError, ModelSnapshot};
use crate::corpus::normalize_term;
use crate::text::analyze;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    /// Display form of the controlled term.
    pub name: String,
    /// Normalized controlled term, used for tie-breaking.
    pub term: String,
    pub confidence: f64,
    /// Jaccard similarity or NWD distance.
    pub raw_score: f64,
    pub vocabulary: String,
    pub metric: Metric,
}

/// Documents matched by a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryDocSet {
    /// Distinct analyzed query tokens, in query order.
    pub tokens: Vec<String>,
    /// Documents containing every token, ascending.
    pub docs: Vec<u32>,
    /// Set when the conjunction is empty but some tokens occur in the
    /// corpus; scoring then averages over those tokens.
    pub fallback: bool,
    /// Tokens with postings.
    pub known: Vec<String>,
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

pub fn query_doc_set(query: &str, snapshot: &ModelSnapshot) -> Result<QueryDocSet, EngineError> {
    let mut seen = BTreeSet::new();
    let tokens: Vec<String> =
        analyze(query, &snapshot.analyzer).into_iter().filter(|t| seen.insert(t.clone())).collect();
    if tokens.is_empty() {
        return Err(EngineError::EmptyQuery);
    }
    let index = &snapshot.index;
    let known: Vec<String> = tokens.iter().filter(|t| index.postings(t).is_some()).cloned().collect();
    let docs = if known.len() == tokens.len() {
        let mut lists: Vec<&[u32]> = known.iter().filter_map(|t| index.postings(t)).collect();
        lists.sort_by_key(|l| l.len());
        let mut docs = lists[0].to_vec();
        for list in &lists[1..] {
            if docs.is_empty() {
                break;
            }
            docs = intersect(&docs, list);
        }
        docs
    } else {
        Vec::new()
    };
    let fallback = docs.is_empty() && !known.is_empty();
    Ok(QueryDocSet { tokens, docs, fallback, known })
}

/// Per controlled term: `Some((confidence, raw_score))` when the term is a
/// candidate for the document set, indexed by controlled term id.
fn score_doc_set(index: &CooccurrenceIndex, docs: &[u32], metric: Metric) -> Vec<Option<(f64, f64)>> {
    let mut overlap = vec![0u32; index.ctrl_terms().len()];
    for &d in docs {
        for &y in index.doc_subjects(d) {
            overlap[y as usize] += 1;
        }
    }
    let fq = docs.len() as u32;
    overlap
        .iter()
        .enumerate()
        .map(|(y, &fqy)| {
            if fqy == 0 || fqy < index.min_cooccurrence() {
                return None;
            }
            let fy = index.df_ctrl_by_id(y as u32);
            match metric {
                Metric::Jaccard => {
                    let s = jaccard_score(fq, fy, fqy);
                    Some((s, s))
                }
                Metric::Nwd => nwd_distance(index.n(), fq, fy, fqy).map(|d| (nwd_confidence(d), d)),
                Metric::Learned => None,
            }
        })
        .collect()
}

fn check_metric(metric: Metric, index: &CooccurrenceIndex) -> Result<(), EngineError> {
    if !metric.is_available() {
        return Err(EngineError::ModuleUnavailable(metric));
    }
    if metric == Metric::Nwd && index.n() < 2 {
        return Err(EngineError::ModelTooSmall { n: index.n() });
    }
    Ok(())
}

/// Ranks controlled terms for `query`.
///
/// The matched document set acts as one virtual free term. When the
/// conjunction of the query tokens matches nothing, each known token is
/// scored on its own and confidences are averaged over the known tokens
/// (a token that does not rate a term contributes 0); `raw_score` is then
/// the mean over the tokens that do rate it. A query without any known
/// token yields an empty list.
pub fn recommend(
    query: &str,
    snapshot: &ModelSnapshot,
    metric: Metric,
    limit: usize,
) -> Result<Vec<Recommendation>, EngineError> {
    if limit == 0 {
        return Err(EngineError::InvalidArgument("limit must be at least 1".into()));
    }
    let index = &snapshot.index;
    check_metric(metric, index)?;
    let qs = query_doc_set(query, snapshot)?;

    let scored: Vec<Option<(f64, f64)>> = if !qs.fallback {
        if qs.docs.is_empty() {
            return Ok(Vec::new());
        }
        score_doc_set(index, &qs.docs, metric)
    } else {
        let mut sums = vec![(0.0, 0.0, 0u32); index.ctrl_terms().len()];
        for token in &qs.known {
            let docs = index.postings(token).unwrap_or_default();
            for (y, s) in score_doc_set(index, docs, metric).into_iter().enumerate() {
                if let Some((conf, raw)) = s {
                    sums[y].0 += conf;
                    sums[y].1 += raw;
                    sums[y].2 += 1;
                }
            }
        }
        let k = qs.known.len() as f64;
        sums.into_iter().map(|(conf, raw, rated)| (rated > 0).then(|| (conf / k, raw / f64::from(rated)))).collect()
    };

    let vocabulary = snapshot.vocabulary();
    let mut out: Vec<Recommendation> = scored
        .into_iter()
        .enumerate()
        .filter_map(|(y, s)| {
            let (confidence, raw_score) = s?;
            if confidence <= 0.0 {
                return None;
            }
            let term = index.ctrl_term(y as u32);
            Some(Recommendation {
                name: vocabulary.display(term).unwrap_or(term).to_string(),
                term: term.to_string(),
                confidence,
                raw_score,
                vocabulary: vocabulary.name.clone(),
                metric,
            })
        })
        .collect();
    out.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then_with(|| a.term.cmp(&b.term)));
    out.truncate(limit);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandedQuery {
    /// Whitespace-separated words of the original query.
    pub original: Vec<String>,
    /// Recommended terms appended to the query.
    pub added: Vec<String>,
}

impl ExpandedQuery {
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.original.iter().chain(&self.added).map(String::as_str)
    }
}

/// Appends up to `n` recommended terms to the query. Terms equal (after
/// normalization) to the whole query or to one of its words are skipped.
pub fn expand_query(
    query: &str,
    snapshot: &ModelSnapshot,
    metric: Metric,
    n: usize,
) -> Result<ExpandedQuery, EngineError> {
    let original: Vec<String> = query.split_whitespace().map(str::to_string).collect();
    let added = if n == 0 {
        check_metric(metric, &snapshot.index)?;
        query_doc_set(query, snapshot)?;
        Vec::new()
    } else {
        let mut present: BTreeSet<String> = original.iter().map(|w| normalize_term(w)).collect();
        present.insert(normalize_term(query));
        recommend(query, snapshot, metric, n)?
            .into_iter()
            .filter(|r| present.insert(r.term.clone()))
            .map(|r| r.name)
            .collect()
    };
    Ok(ExpandedQuery { original, added })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudEntry {
    pub name: String,
    pub confidence: f64,
    /// Confidence divided by the largest confidence in the cloud.
    pub weight: f64,
    /// Font step from 1 (smallest) to 5.
    pub bucket: u8,
}

pub fn cloud_bucket(weight: f64) -> u8 {
    (1.0 + (weight * 4.0).floor()).clamp(1.0, 5.0) as u8
}

/// Top-`k` recommendations scaled for a tag cloud.
pub fn cloud_weights(
    query: &str,
    snapshot: &ModelSnapshot,
    metric: Metric,
    k: usize,
) -> Result<Vec<CloudEntry>, EngineError> {
    let recs = recommend(query, snapshot, metric, k)?;
    let max = recs.first().map_or(1.0, |r| r.confidence);
    Ok(recs
        .into_iter()
        .map(|r| {
            let weight = r.confidence / max;
            CloudEntry { name: r.name, confidence: r.confidence, weight, bucket: cloud_bucket(weight) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buckets() {
        assert_eq!(cloud_bucket(1.0), 5);
        assert_eq!(cloud_bucket(0.5), 3);
        assert_eq!(cloud_bucket(0.0), 1);
        assert_eq!(cloud_bucket(0.2499), 1);
        assert_eq!(cloud_bucket(0.25), 2);
        assert_eq!(cloud_bucket(0.99), 4);
    }

    #[test]
    fn intersection() {
        assert_eq!(intersect(&[1, 3, 5, 7], &[2, 3, 7, 9]), vec![3, 7]);
        assert!(intersect(&[], &[1]).is_empty());
    }
}
