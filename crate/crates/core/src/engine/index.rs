use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::metrics::{jaccard_score, nwd_distance};
use super::EngineError;
use crate::corpus::Corpus;

/// Largest accepted pruning threshold.
pub const MAX_MIN_COOCCURRENCE: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexConfig {
    /// Pairs co-occurring in fewer documents than this are not stored.
    pub min_cooccurrence: u32,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig { min_cooccurrence: 1 }
    }
}

/// Document frequencies of free terms, controlled terms and their pairs.
///
/// Terms are interned: ids index into the sorted `free_terms` and
/// `ctrl_terms` tables, documents are positions in corpus order. Every
/// table is sorted, so serialization is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceIndex {
    n_docs: u32,
    min_cooccurrence: u32,
    free_terms: Vec<String>,
    free_postings: Vec<Vec<u32>>,
    ctrl_terms: Vec<String>,
    ctrl_postings: Vec<Vec<u32>>,
    /// Controlled term ids per document.
    doc_subjects: Vec<Vec<u32>>,
    /// (free id, controlled id, co-document count), sorted.
    pairs: Vec<(u32, u32, u32)>,
}

fn intern<'a>(terms: impl Iterator<Item = &'a String>) -> (Vec<String>, HashMap<&'a str, u32>) {
    let sorted: Vec<&String> = terms.collect::<BTreeSet<_>>().into_iter().collect();
    let ids = sorted.iter().enumerate().map(|(i, t)| (t.as_str(), i as u32)).collect();
    (sorted.into_iter().cloned().collect(), ids)
}

impl CooccurrenceIndex {
    pub fn build(corpus: &Corpus) -> Result<Self, EngineError> {
        Self::build_with(corpus, IndexConfig::default())
    }

    pub fn build_with(corpus: &Corpus, config: IndexConfig) -> Result<Self, EngineError> {
        if !(1..=MAX_MIN_COOCCURRENCE).contains(&config.min_cooccurrence) {
            return Err(EngineError::InvalidArgument(format!(
                "min_cooccurrence must be between 1 and {MAX_MIN_COOCCURRENCE}"
            )));
        }
        let docs = corpus.documents();
        if docs.is_empty() {
            return Err(EngineError::EmptyCorpus);
        }
        if docs.iter().all(|d| d.subjects.is_empty()) {
            return Err(EngineError::NoControlledAssignments);
        }

        let (free_terms, free_ids) = intern(docs.iter().flat_map(|d| d.terms.keys()));
        let (ctrl_terms, ctrl_ids) = intern(docs.iter().flat_map(|d| d.subjects.iter()));
        let mut free_postings = vec![Vec::new(); free_terms.len()];
        let mut ctrl_postings = vec![Vec::new(); ctrl_terms.len()];
        let mut doc_subjects = Vec::with_capacity(docs.len());
        let mut pair_counts: HashMap<(u32, u32), u32> = HashMap::new();

        for (doc_idx, doc) in docs.iter().enumerate() {
            let doc_idx = doc_idx as u32;
            let subjects: Vec<u32> = doc.subjects.iter().map(|s| ctrl_ids[s.as_str()]).collect();
            for &y in &subjects {
                ctrl_postings[y as usize].push(doc_idx);
            }
            // term bags are keyed by term, so each term counts once per document
            for term in doc.terms.keys() {
                let x = free_ids[term.as_str()];
                free_postings[x as usize].push(doc_idx);
                for &y in &subjects {
                    *pair_counts.entry((x, y)).or_insert(0) += 1;
                }
            }
            doc_subjects.push(subjects);
        }

        let mut pairs: Vec<(u32, u32, u32)> = pair_counts
            .into_iter()
            .filter(|&(_, count)| count >= config.min_cooccurrence)
            .map(|((x, y), count)| (x, y, count))
            .collect();
        pairs.sort_unstable();

        Ok(CooccurrenceIndex {
            n_docs: docs.len() as u32,
            min_cooccurrence: config.min_cooccurrence,
            free_terms,
            free_postings,
            ctrl_terms,
            ctrl_postings,
            doc_subjects,
            pairs,
        })
    }

    /// Corpus size N.
    pub fn n(&self) -> u32 {
        self.n_docs
    }

    pub fn min_cooccurrence(&self) -> u32 {
        self.min_cooccurrence
    }

    pub fn free_terms(&self) -> &[String] {
        &self.free_terms
    }

    pub fn ctrl_terms(&self) -> &[String] {
        &self.ctrl_terms
    }

    pub fn free_id(&self, term: &str) -> Option<u32> {
        self.free_terms.binary_search_by(|t| t.as_str().cmp(term)).ok().map(|i| i as u32)
    }

    pub fn ctrl_id(&self, term: &str) -> Option<u32> {
        self.ctrl_terms.binary_search_by(|t| t.as_str().cmp(term)).ok().map(|i| i as u32)
    }

    pub fn ctrl_term(&self, id: u32) -> &str {
        &self.ctrl_terms[id as usize]
    }

    /// f(x) for a free term.
    pub fn df_free(&self, term: &str) -> Option<u32> {
        self.postings(term).map(|p| p.len() as u32)
    }

    /// f(y) for a controlled term.
    pub fn df_ctrl(&self, term: &str) -> Option<u32> {
        self.ctrl_id(term).map(|y| self.ctrl_postings[y as usize].len() as u32)
    }

    pub fn df_ctrl_by_id(&self, y: u32) -> u32 {
        self.ctrl_postings[y as usize].len() as u32
    }

    /// f(x, y); 0 when the pair is not stored.
    pub fn df_pair(&self, free: &str, ctrl: &str) -> u32 {
        match (self.free_id(free), self.ctrl_id(ctrl)) {
            (Some(x), Some(y)) => self.pair_count(x, y),
            _ => 0,
        }
    }

    fn pair_count(&self, x: u32, y: u32) -> u32 {
        self.pairs.binary_search_by(|&(px, py, _)| (px, py).cmp(&(x, y))).map(|i| self.pairs[i].2).unwrap_or(0)
    }

    /// Documents containing a free term, ascending.
    pub fn postings(&self, free: &str) -> Option<&[u32]> {
        self.free_id(free).map(|x| self.free_postings[x as usize].as_slice())
    }

    /// Documents annotated with a controlled term, ascending.
    pub fn ctrl_postings(&self, ctrl: &str) -> Option<&[u32]> {
        self.ctrl_id(ctrl).map(|y| self.ctrl_postings[y as usize].as_slice())
    }

    pub fn doc_subjects(&self, doc: u32) -> &[u32] {
        &self.doc_subjects[doc as usize]
    }

    /// Stored pairs as `(free term, controlled term, f(x,y))`, sorted by
    /// term ids (and therefore lexicographically).
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, u32)> {
        self.pairs
            .iter()
            .map(|&(x, y, c)| (self.free_terms[x as usize].as_str(), self.ctrl_terms[y as usize].as_str(), c))
    }

    pub fn pair_len(&self) -> usize {
        self.pairs.len()
    }

    fn frequencies(&self, free: &str, ctrl: &str) -> Result<(u32, u32, u32), EngineError> {
        let fx = self.df_free(free).ok_or_else(|| EngineError::UnknownTerm(free.to_string()))?;
        let fy = self.df_ctrl(ctrl).ok_or_else(|| EngineError::UnknownTerm(ctrl.to_string()))?;
        Ok((fx, fy, self.df_pair(free, ctrl)))
    }

    /// Jaccard similarity between a free term and a controlled term.
    pub fn jaccard(&self, free: &str, ctrl: &str) -> Result<f64, EngineError> {
        let (fx, fy, fxy) = self.frequencies(free, ctrl)?;
        Ok(jaccard_score(fx, fy, fxy))
    }

    /// NWD between a free term and a controlled term; `Ok(None)` when the
    /// distance is undefined.
    pub fn nwd(&self, free: &str, ctrl: &str) -> Result<Option<f64>, EngineError> {
        let (fx, fy, fxy) = self.frequencies(free, ctrl)?;
        if self.n_docs < 2 {
            return Err(EngineError::ModelTooSmall { n: self.n_docs });
        }
        Ok(nwd_distance(self.n_docs, fx, fy, fxy))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::corpus::{ControlledVocabulary, Document};
    use crate::text::Language;

    pub(crate) fn hand_corpus(docs: &[(&[&str], &[&str])]) -> Corpus {
        let mut vocab_terms = BTreeSet::new();
        let documents = docs
            .iter()
            .enumerate()
            .map(|(i, (free, ctrl))| {
                vocab_terms.extend(ctrl.iter().copied());
                Document {
                    doc_id: format!("d{i:03}"),
                    terms: free.iter().map(|t| (t.to_string(), 1)).collect::<BTreeMap<_, _>>(),
                    subjects: ctrl.iter().map(|t| t.to_string()).collect(),
                    date: None,
                }
            })
            .collect();
        let vocab = ControlledVocabulary::from_terms("v", false, vocab_terms);
        Corpus::new(documents, vocab, Language::En).unwrap()
    }

    #[test]
    fn two_document_counts() {
        let corpus = hand_corpus(&[(&["a", "b"], &["t"]), (&["b"], &["t"])]);
        let idx = CooccurrenceIndex::build(&corpus).unwrap();
        assert_eq!(idx.n(), 2);
        assert_eq!(idx.df_free("a"), Some(1));
        assert_eq!(idx.df_free("b"), Some(2));
        assert_eq!(idx.df_ctrl("t"), Some(2));
        assert_eq!(idx.df_pair("a", "t"), 1);
        assert_eq!(idx.df_pair("b", "t"), 2);
    }

    #[test]
    fn singleton_corpus() {
        let corpus = hand_corpus(&[(&["a"], &["t"])]);
        let idx = CooccurrenceIndex::build(&corpus).unwrap();
        assert_eq!((idx.n(), idx.df_free("a"), idx.df_ctrl("t"), idx.df_pair("a", "t")), (1, Some(1), Some(1), 1));
        assert_eq!(idx.nwd("a", "t"), Err(EngineError::ModelTooSmall { n: 1 }));
        assert_eq!(idx.jaccard("a", "t"), Ok(1.0));
    }

    #[test]
    fn jaccard_on_enumerated_sets() {
        // D_x = {d0,d1,d2}, D_y = {d1,d2,d3}
        let corpus = hand_corpus(&[(&["x"], &[]), (&["x"], &["y"]), (&["x"], &["y"]), (&["z"], &["y"])]);
        let idx = CooccurrenceIndex::build(&corpus).unwrap();
        assert_eq!(idx.jaccard("x", "y"), Ok(0.5));
        assert_eq!(idx.jaccard("z", "y"), Ok(1.0 / 3.0));
        assert!(matches!(idx.jaccard("nope", "y"), Err(EngineError::UnknownTerm(_))));
        assert!(matches!(idx.jaccard("x", "nope"), Err(EngineError::UnknownTerm(_))));
    }

    #[test]
    fn disjoint_pair_scores_zero_and_nwd_undefined() {
        let corpus = hand_corpus(&[(&["a"], &["s"]), (&["b"], &["t"]), (&["c"], &["t"])]);
        let idx = CooccurrenceIndex::build(&corpus).unwrap();
        assert_eq!(idx.jaccard("a", "t"), Ok(0.0));
        assert_eq!(idx.nwd("a", "t"), Ok(None));
    }

    #[test]
    fn requires_assignments() {
        let corpus = hand_corpus(&[(&["a"], &["t"])]);
        let mut docs = corpus.documents().to_vec();
        docs[0].subjects.clear();
        let empty = Corpus::new(docs, corpus.vocabulary().clone(), Language::En).unwrap();
        assert_eq!(CooccurrenceIndex::build(&empty), Err(EngineError::NoControlledAssignments));
    }

    #[test]
    fn pruning_threshold() {
        let corpus = hand_corpus(&[(&["a", "b"], &["t"]), (&["b"], &["t"])]);
        let idx = CooccurrenceIndex::build_with(&corpus, IndexConfig { min_cooccurrence: 2 }).unwrap();
        assert_eq!(idx.df_pair("a", "t"), 0);
        assert_eq!(idx.df_pair("b", "t"), 2);
        assert_eq!(idx.pair_len(), 1);
        assert!(CooccurrenceIndex::build_with(&corpus, IndexConfig { min_cooccurrence: 0 }).is_err());
        assert!(CooccurrenceIndex::build_with(&corpus, IndexConfig { min_cooccurrence: 6 }).is_err());
    }

    #[test]
    fn postings_match_document_frequency() {
        let corpus = hand_corpus(&[(&["a", "b"], &["t", "u"]), (&["b", "c"], &["t"]), (&["c"], &["u"])]);
        let idx = CooccurrenceIndex::build(&corpus).unwrap();
        for term in idx.free_terms() {
            assert_eq!(idx.postings(term).unwrap().len() as u32, idx.df_free(term).unwrap());
        }
        assert_eq!(idx.postings("b"), Some(&[0u32, 1][..]));
        assert_eq!(idx.ctrl_postings("u"), Some(&[0u32, 2][..]));
    }
}
