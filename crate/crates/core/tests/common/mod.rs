#![allow(dead_code)]

use termrec_core::corpus::{build_corpus, to_dc_record, ControlledVocabulary, DcRecord, SubjectSplitConfig};
use termrec_core::engine::{IndexConfig, Metric, ModelSnapshot};
use termrec_core::oai::{parse_datestamp, DcElement, DcFields, RawOaiRecord};
use termrec_core::text::{AnalyzerConfig, Language};
use termrec_fixture::FixtureRecord;

pub fn to_raw(r: &FixtureRecord) -> RawOaiRecord {
    let mut dc_fields = DcFields::new();
    for (name, value) in &r.fields {
        let element = DcElement::from_name(name).expect("dc element");
        dc_fields.entry(element).or_default().push(value.clone());
    }
    RawOaiRecord {
        identifier: r.identifier.clone(),
        datestamp: parse_datestamp(&r.datestamp).expect("datestamp"),
        set_specs: r.sets.clone(),
        dc_fields,
        deleted: r.deleted,
    }
}

pub fn fixture_records() -> Vec<DcRecord> {
    termrec_fixture::default_records().iter().map(|r| to_dc_record(&to_raw(r)).unwrap()).collect()
}

pub fn snapshot(language: Language, filter: Option<&ControlledVocabulary>) -> ModelSnapshot {
    let analyzer = AnalyzerConfig::for_language(language);
    let corpus = build_corpus(&fixture_records(), &analyzer, &SubjectSplitConfig::default(), filter).unwrap();
    ModelSnapshot::build("fixture", corpus, analyzer, IndexConfig::default(), Metric::Jaccard).unwrap()
}
