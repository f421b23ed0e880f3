//! Typed corpus built from harvested Dublin Core records.
//!
//! Titles and descriptions become analyzed free-text term bags; `dc:subject`
//! values become controlled terms, optionally filtered by an uploaded
//! vocabulary.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::oai::{DcElement, DcFields, RawOaiRecord};
use crate::text::{analyze, fold_case, term_lines, AnalyzerConfig, Language};

pub const HARVESTED_VOCABULARY: &str = "harvested-subjects";
pub const UPLOADED_VOCABULARY: &str = "uploaded-vocabulary";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("record '{0}' is a deletion tombstone")]
    Tombstone(String),
    #[error("record has no identifier")]
    MissingIdentifier,
    #[error("no records to build a corpus from")]
    EmptyInput,
    #[error("vocabulary/corpus disjoint: no subject term in the corpus survives the vocabulary filter")]
    Disjoint,
    #[error("corpus has no controlled subject terms")]
    NoControlledTerms,
    #[error("vocabulary upload contains no usable terms")]
    EmptyUpload,
    #[error("invalid corpus: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DcRecord {
    pub identifier: String,
    pub titles: Vec<String>,
    pub descriptions: Vec<String>,
    /// Raw `dc:subject` values, before splitting.
    pub subjects: Vec<String>,
    pub creators: Vec<String>,
    pub date: Option<DateTime<Utc>>,
    pub language: Option<String>,
    /// Remaining Dublin Core elements.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: DcFields,
}

/// Lenient `dc:date` parsing: ISO-8601 forms, `DD.MM.YYYY[ HH:mm[:ss]]`, and
/// bare years. Times without a zone are taken as UTC.
pub fn parse_dc_date(value: &str) -> Option<DateTime<Utc>> {
    let s = value.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    const DATETIME_LAYOUTS: [&str; 6] = [
        "%Y-%m-%dT%H:%M:%SZ",
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%MZ",
        "%d.%m.%Y %H:%M",
        "%d.%m.%Y %H:%M:%S",
    ];
    for layout in DATETIME_LAYOUTS {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, layout) {
            return Some(t.and_utc());
        }
    }
    let midnight = |d: NaiveDate| d.and_hms_opt(0, 0, 0).map(|t| t.and_utc());
    for layout in ["%Y-%m-%d", "%d.%m.%Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(s, layout) {
            return midnight(d);
        }
    }
    if let Some((y, m)) = s.split_once('-') {
        if y.len() == 4 && m.len() == 2 {
            if let (Ok(y), Ok(m)) = (y.parse(), m.parse()) {
                return NaiveDate::from_ymd_opt(y, m, 1).and_then(midnight);
            }
        }
    }
    if s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit()) {
        return NaiveDate::from_ymd_opt(s.parse().ok()?, 1, 1).and_then(midnight);
    }
    None
}

/// Maps a harvested record into typed fields, dropping empty values.
pub fn to_dc_record(raw: &RawOaiRecord) -> Result<DcRecord, CorpusError> {
    if raw.deleted {
        return Err(CorpusError::Tombstone(raw.identifier.clone()));
    }
    let identifier = raw.identifier.trim();
    if identifier.is_empty() {
        return Err(CorpusError::MissingIdentifier);
    }
    let values = |e: DcElement| -> Vec<String> {
        raw.values(e).iter().map(|v| v.trim()).filter(|v| !v.is_empty()).map(str::to_string).collect()
    };
    let mut extras = DcFields::new();
    for &element in raw.dc_fields.keys() {
        use DcElement::*;
        if matches!(element, Title | Description | Subject | Creator | Date | Language) {
            continue;
        }
        let kept = values(element);
        if !kept.is_empty() {
            extras.insert(element, kept);
        }
    }
    Ok(DcRecord {
        identifier: identifier.to_string(),
        titles: values(DcElement::Title),
        descriptions: values(DcElement::Description),
        subjects: values(DcElement::Subject),
        creators: values(DcElement::Creator),
        date: values(DcElement::Date).iter().find_map(|d| parse_dc_date(d)),
        language: values(DcElement::Language).into_iter().next(),
        extras,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectSplitConfig {
    /// Remove one trailing parenthesized numeric classification code.
    pub strip_codes: bool,
}

impl Default for SubjectSplitConfig {
    fn default() -> Self {
        SubjectSplitConfig { strip_codes: true }
    }
}

fn strip_trailing_code(term: &str) -> &str {
    let Some(inner) = term.strip_suffix(')') else {
        return term;
    };
    let Some(open) = inner.rfind('(') else {
        return term;
    };
    let code = &inner[open + 1..];
    if code.is_empty() || !code.bytes().all(|b| b.is_ascii_digit()) {
        return term;
    }
    inner[..open].trim_end()
}

/// Splits each `dc:subject` value on `;` into candidate controlled terms,
/// in order, without duplicates (compared after normalization).
pub fn split_subjects(record: &DcRecord, config: &SubjectSplitConfig) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for value in &record.subjects {
        for part in value.split(';') {
            let mut term = part.trim();
            if config.strip_codes {
                term = strip_trailing_code(term);
            }
            if term.is_empty() {
                continue;
            }
            if seen.insert(normalize_term(term)) {
                out.push(term.to_string());
            }
        }
    }
    out
}

/// Vocabulary identity: case-fold, collapse internal whitespace, trim.
/// Idempotent.
pub fn normalize_term(term: &str) -> String {
    fold_case(term).split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Display form for a term: trimmed, internal whitespace collapsed.
fn display_form(term: &str) -> String {
    term.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlledVocabulary {
    pub name: String,
    /// Normalized term → display form returned to users.
    terms: BTreeMap<String, String>,
    /// True when uploaded by the provider, false when derived from
    /// harvested subjects.
    pub explicit: bool,
}

impl ControlledVocabulary {
    /// Builds a vocabulary from surface forms; the first form seen for each
    /// normalized term becomes its display form.
    pub fn from_terms<'a>(name: impl Into<String>, explicit: bool, surface: impl IntoIterator<Item = &'a str>) -> Self {
        let mut terms = BTreeMap::new();
        for s in surface {
            let key = normalize_term(s);
            if !key.is_empty() {
                terms.entry(key).or_insert_with(|| display_form(s));
            }
        }
        ControlledVocabulary { name: name.into(), terms, explicit }
    }

    pub fn contains(&self, normalized: &str) -> bool {
        self.terms.contains_key(normalized)
    }

    pub fn display(&self, normalized: &str) -> Option<&str> {
        self.terms.get(normalized).map(String::as_str)
    }

    /// Normalized terms in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Parses a provider upload: one term per line, `#` comments, blank lines
/// ignored.
pub fn parse_vocabulary_upload(body: &str) -> Result<ControlledVocabulary, CorpusError> {
    let vocabulary = ControlledVocabulary::from_terms(UPLOADED_VOCABULARY, true, term_lines(body));
    if vocabulary.is_empty() {
        return Err(CorpusError::EmptyUpload);
    }
    Ok(vocabulary)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    /// Analyzed free-text term → occurrence count.
    pub terms: BTreeMap<String, u32>,
    /// Normalized controlled terms.
    pub subjects: BTreeSet<String>,
    pub date: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: ControlledVocabulary,
    language: Language,
}

impl Corpus {
    /// Assembles a corpus, checking that document ids are unique and every
    /// subject belongs to the vocabulary. Documents are ordered by id.
    pub fn new(
        mut documents: Vec<Document>,
        vocabulary: ControlledVocabulary,
        language: Language,
    ) -> Result<Self, CorpusError> {
        documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        if let Some(w) = documents.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
            return Err(CorpusError::Invalid(format!("duplicate doc_id '{}'", w[0].doc_id)));
        }
        for doc in &documents {
            if let Some(s) = doc.subjects.iter().find(|s| !vocabulary.contains(s)) {
                return Err(CorpusError::Invalid(format!(
                    "subject '{s}' of '{}' is not in the vocabulary",
                    doc.doc_id
                )));
            }
        }
        Ok(Corpus { documents, vocabulary, language })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &ControlledVocabulary {
        &self.vocabulary
    }

    pub fn language(&self) -> Language {
        self.language
    }

    /// Number of documents, N.
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// Builds the corpus for one repository.
///
/// Documents with neither free-text terms nor controlled terms are dropped.
/// Without a filter the vocabulary is exactly the set of observed subject
/// terms; with one it is the filter, and subjects outside it are removed.
pub fn build_corpus(
    records: &[DcRecord],
    analyzer: &AnalyzerConfig,
    split: &SubjectSplitConfig,
    filter: Option<&ControlledVocabulary>,
) -> Result<Corpus, CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    let mut ordered: Vec<&DcRecord> = records.iter().collect();
    ordered.sort_by(|a, b| a.identifier.cmp(&b.identifier));
    // Later duplicates of an identifier replace earlier ones.
    let mut unique: Vec<&DcRecord> = Vec::with_capacity(ordered.len());
    for record in ordered {
        match unique.last_mut() {
            Some(last) if last.identifier == record.identifier => {
                warn!(identifier = %record.identifier, "duplicate record identifier");
                *last = record;
            }
            _ => unique.push(record),
        }
    }

    let mut observed: Vec<String> = Vec::new();
    let mut documents = Vec::with_capacity(unique.len());
    for record in unique {
        let text = record.titles.iter().chain(&record.descriptions).map(String::as_str).collect::<Vec<_>>().join(" ");
        let mut terms = BTreeMap::new();
        for term in analyze(&text, analyzer) {
            *terms.entry(term).or_insert(0u32) += 1;
        }
        let mut subjects = BTreeSet::new();
        for surface in split_subjects(record, split) {
            let key = normalize_term(&surface);
            if filter.is_none_or(|f| f.contains(&key)) {
                subjects.insert(key);
                observed.push(surface);
            }
        }
        if terms.is_empty() && subjects.is_empty() {
            continue;
        }
        documents.push(Document { doc_id: record.identifier.clone(), terms, subjects, date: record.date });
    }

    let vocabulary = match filter {
        Some(_) if observed.is_empty() => return Err(CorpusError::Disjoint),
        Some(f) => f.clone(),
        None if observed.is_empty() => return Err(CorpusError::NoControlledTerms),
        None => ControlledVocabulary::from_terms(HARVESTED_VOCABULARY, false, observed.iter().map(String::as_str)),
    };
    Corpus::new(documents, vocabulary, analyzer.language)
}
