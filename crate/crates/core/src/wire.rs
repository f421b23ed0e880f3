//! Response bodies shared by the HTTP service and the command line.
//!
//! Each body serializes to JSON through serde and to XML through
//! [`WireBody::to_xml`]; both carry the same fields.

use std::fmt::Write;

use quick_xml::escape::escape;
use serde::{Deserialize, Serialize};

use crate::biblio::{CowordPair, Field, TermFrequency, TrendSeries, YearCount};
use crate::corpus::normalize_term;
use crate::engine::{CloudEntry, ExpandedQuery, Metric, ModelSnapshot, Recommendation};

pub trait WireBody: Serialize {
    fn to_xml(&self) -> String;

    fn to_json(&self) -> String {
        serde_json::to_string(self).expect("wire bodies always serialize")
    }
}

fn attr(out: &mut String, name: &str, value: &str) {
    let _ = write!(out, r#" {name}="{}""#, escape(value));
}

fn element(out: &mut String, name: &str, text: &str) {
    let _ = write!(out, "<{name}>{}</{name}>", escape(text));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationItem {
    pub name: String,
    pub confidence: f64,
    pub vocabulary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendResponse {
    pub term: String,
    pub metric: Metric,
    pub snapshot: String,
    pub recommendations: Vec<RecommendationItem>,
}

impl RecommendResponse {
    pub fn new(query: &str, metric: Metric, snapshot: &ModelSnapshot, recs: &[Recommendation]) -> Self {
        RecommendResponse {
            term: normalize_term(query),
            metric,
            snapshot: snapshot.snapshot_id.clone(),
            recommendations: recs
                .iter()
                .map(|r| RecommendationItem {
                    name: r.name.clone(),
                    confidence: r.confidence,
                    vocabulary: r.vocabulary.clone(),
                })
                .collect(),
        }
    }
}

impl WireBody for RecommendResponse {
    fn to_xml(&self) -> String {
        let mut out = String::from("<recommendations");
        attr(&mut out, "term", &self.term);
        attr(&mut out, "metric", self.metric.tag());
        attr(&mut out, "snapshot", &self.snapshot);
        out.push('>');
        for r in &self.recommendations {
            out.push_str("<recommendation>");
            element(&mut out, "name", &r.name);
            element(&mut out, "confidence", &r.confidence.to_string());
            element(&mut out, "vocabulary", &r.vocabulary);
            out.push_str("</recommendation>");
        }
        out.push_str("</recommendations>");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandResponse {
    pub term: String,
    pub metric: Metric,
    pub snapshot: String,
    pub original: Vec<String>,
    pub added: Vec<String>,
}

impl ExpandResponse {
    pub fn new(query: &str, metric: Metric, snapshot: &ModelSnapshot, expanded: ExpandedQuery) -> Self {
        ExpandResponse {
            term: normalize_term(query),
            metric,
            snapshot: snapshot.snapshot_id.clone(),
            original: expanded.original,
            added: expanded.added,
        }
    }
}

impl WireBody for ExpandResponse {
    fn to_xml(&self) -> String {
        let mut out = String::from("<expansion");
        attr(&mut out, "term", &self.term);
        attr(&mut out, "metric", self.metric.tag());
        attr(&mut out, "snapshot", &self.snapshot);
        out.push('>');
        for t in &self.original {
            element(&mut out, "original", t);
        }
        for t in &self.added {
            element(&mut out, "added", t);
        }
        out.push_str("</expansion>");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudResponse {
    pub term: String,
    pub metric: Metric,
    pub snapshot: String,
    pub terms: Vec<CloudEntry>,
}

impl CloudResponse {
    pub fn new(query: &str, metric: Metric, snapshot: &ModelSnapshot, terms: Vec<CloudEntry>) -> Self {
        CloudResponse { term: normalize_term(query), metric, snapshot: snapshot.snapshot_id.clone(), terms }
    }
}

impl WireBody for CloudResponse {
    fn to_xml(&self) -> String {
        let mut out = String::from("<cloud");
        attr(&mut out, "term", &self.term);
        attr(&mut out, "metric", self.metric.tag());
        attr(&mut out, "snapshot", &self.snapshot);
        out.push('>');
        for e in &self.terms {
            out.push_str("<term>");
            element(&mut out, "name", &e.name);
            element(&mut out, "confidence", &e.confidence.to_string());
            element(&mut out, "weight", &e.weight.to_string());
            element(&mut out, "bucket", &e.bucket.to_string());
            out.push_str("</term>");
        }
        out.push_str("</cloud>");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopTermsResponse {
    pub field: Field,
    pub snapshot: String,
    pub terms: Vec<TermFrequency>,
}

impl WireBody for TopTermsResponse {
    fn to_xml(&self) -> String {
        let mut out = String::from("<top-terms");
        attr(&mut out, "field", self.field.tag());
        attr(&mut out, "snapshot", &self.snapshot);
        out.push('>');
        for t in &self.terms {
            out.push_str("<term>");
            element(&mut out, "name", &t.term);
            element(&mut out, "df", &t.df.to_string());
            out.push_str("</term>");
        }
        out.push_str("</top-terms>");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CowordResponse {
    pub snapshot: String,
    pub pairs: Vec<CowordPair>,
}

impl WireBody for CowordResponse {
    fn to_xml(&self) -> String {
        let mut out = String::from("<coword");
        attr(&mut out, "snapshot", &self.snapshot);
        out.push('>');
        for p in &self.pairs {
            out.push_str("<pair>");
            element(&mut out, "free", &p.free);
            element(&mut out, "subject", &p.subject);
            element(&mut out, "count", &p.count.to_string());
            out.push_str("</pair>");
        }
        out.push_str("</coword>");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendResponse {
    pub term: String,
    pub field: Field,
    pub snapshot: String,
    pub buckets: Vec<YearCount>,
    pub excluded: u32,
}

impl TrendResponse {
    pub fn new(field: Field, snapshot: &ModelSnapshot, series: TrendSeries) -> Self {
        TrendResponse {
            term: series.term,
            field,
            snapshot: snapshot.snapshot_id.clone(),
            buckets: series.buckets,
            excluded: series.excluded,
        }
    }
}

impl WireBody for TrendResponse {
    fn to_xml(&self) -> String {
        let mut out = String::from("<trend");
        attr(&mut out, "term", &self.term);
        attr(&mut out, "field", self.field.tag());
        attr(&mut out, "snapshot", &self.snapshot);
        attr(&mut out, "excluded", &self.excluded.to_string());
        out.push('>');
        for b in &self.buckets {
            let _ = write!(out, r#"<year value="{}" count="{}"/>"#, b.year, b.count);
        }
        out.push_str("</trend>");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub status: u16,
    pub error: String,
}

impl WireBody for ErrorResponse {
    fn to_xml(&self) -> String {
        let mut out = String::from("<error");
        attr(&mut out, "status", &self.status.to_string());
        out.push('>');
        out.push_str(&escape(self.error.as_str()));
        out.push_str("</error>");
        out
    }
}

/// Renders an arbitrary JSON value as XML under `root`. Object fields become
/// child elements, array entries become `<item>` elements, nulls are left
/// out.
pub fn json_to_xml(root: &str, value: &serde_json::Value) -> String {
    let mut out = String::new();
    json_element(&mut out, root, value);
    out
}

fn json_element(out: &mut String, name: &str, value: &serde_json::Value) {
    use serde_json::Value;
    match value {
        Value::Null => {}
        Value::String(s) => element(out, name, s),
        Value::Bool(_) | Value::Number(_) => element(out, name, &value.to_string()),
        Value::Array(items) => {
            let _ = write!(out, "<{name}>");
            for item in items {
                json_element(out, "item", item);
            }
            let _ = write!(out, "</{name}>");
        }
        Value::Object(fields) => {
            let _ = write!(out, "<{name}>");
            for (key, v) in fields {
                json_element(out, key, v);
            }
            let _ = write!(out, "</{name}>");
        }
    }
}
