//! Frequency rankings, co-word pairs and per-year term trends.
//!
//! Everything counts documents, not occurrences.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_term, Corpus, Document};
use crate::engine::CooccurrenceIndex;
use crate::text::{analyze, AnalyzerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    /// Analyzed title/description terms.
    Free,
    /// Controlled subject terms.
    #[default]
    Subject,
}

impl Field {
    pub fn tag(self) -> &'static str {
        match self {
            Field::Free => "free",
            Field::Subject => "subject",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "free" => Ok(Field::Free),
            "subject" => Ok(Field::Subject),
            other => Err(format!("unknown field '{other}' (expected free or subject)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermFrequency {
    pub term: String,
    pub df: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CowordPair {
    pub free: String,
    pub subject: String,
    pub count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearCount {
    pub year: i32,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub term: String,
    /// Ascending by year; years without matching documents are omitted.
    pub buckets: Vec<YearCount>,
    /// Matching documents without a date.
    pub excluded: u32,
}

fn doc_terms(doc: &Document, field: Field) -> Box<dyn Iterator<Item = &String> + '_> {
    match field {
        Field::Free => Box::new(doc.terms.keys()),
        Field::Subject => Box::new(doc.subjects.iter()),
    }
}

/// Subject terms are reported in display form; ties are broken on the
/// normalized term.
pub fn top_terms(corpus: &Corpus, field: Field, k: usize) -> Vec<TermFrequency> {
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for doc in corpus.documents() {
        for term in doc_terms(doc, field) {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, u32)> = df.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(k);
    let vocabulary = corpus.vocabulary();
    ranked
        .into_iter()
        .map(|(term, df)| TermFrequency {
            term: match field {
                Field::Subject => vocabulary.display(term).unwrap_or(term).to_string(),
                Field::Free => term.to_string(),
            },
            df,
        })
        .collect()
}

pub fn coword_pairs(index: &CooccurrenceIndex, corpus: &Corpus, k: usize) -> Vec<CowordPair> {
    let mut pairs: Vec<(&str, &str, u32)> = index.pairs().collect();
    // pairs() is already in (x, y) order, so a stable sort keeps the tie-break
    pairs.sort_by_key(|p| std::cmp::Reverse(p.2));
    pairs.truncate(k);
    let vocabulary = corpus.vocabulary();
    pairs
        .into_iter()
        .map(|(x, y, count)| CowordPair {
            free: x.to_string(),
            subject: vocabulary.display(y).unwrap_or(y).to_string(),
            count,
        })
        .collect()
}

/// Maps user input onto the key space of `field`: the analyzed stem for
/// free terms, the normalized form for subjects. `None` when a free term
/// does not analyze to exactly one token.
pub fn query_key(term: &str, field: Field, analyzer: &AnalyzerConfig) -> Option<String> {
    match field {
        Field::Subject => Some(normalize_term(term)),
        Field::Free => {
            let mut tokens = analyze(term, analyzer);
            (tokens.len() == 1).then(|| tokens.remove(0))
        }
    }
}

/// Per-year document counts for an already normalized term. Unknown terms
/// give an empty series.
pub fn term_trend(corpus: &Corpus, term: &str, field: Field) -> TrendSeries {
    let mut years: BTreeMap<i32, u32> = BTreeMap::new();
    let mut excluded = 0;
    for doc in corpus.documents() {
        let has = match field {
            Field::Free => doc.terms.contains_key(term),
            Field::Subject => doc.subjects.contains(term),
        };
        if !has {
            continue;
        }
        match doc.date {
            Some(date) => *years.entry(date.year()).or_insert(0) += 1,
            None => excluded += 1,
        }
    }
    TrendSeries {
        term: term.to_string(),
        buckets: years.into_iter().map(|(year, count)| YearCount { year, count }).collect(),
        excluded,
    }
}
