use std::fmt::Write;

use quick_xml::escape::escape;

use super::{RawOaiRecord, DC_NS, OAI_DC_NS, OAI_PMH_NS};

/// Serializes a record as an OAI-PMH `<record>` element with `oai_dc`
/// metadata. Values keep their order within each element.
pub fn record_to_oai_xml(record: &RawOaiRecord) -> String {
    let mut out = String::new();
    out.push_str("<record>");
    let status = if record.deleted { r#" status="deleted""# } else { "" };
    let _ = write!(
        out,
        "<header{status}><identifier>{}</identifier><datestamp>{}</datestamp>",
        escape(record.identifier.as_str()),
        record.datestamp.format("%Y-%m-%dT%H:%M:%SZ")
    );
    for set in &record.set_specs {
        let _ = write!(out, "<setSpec>{}</setSpec>", escape(set.as_str()));
    }
    out.push_str("</header>");
    if !record.deleted {
        let _ = write!(out, r#"<metadata><oai_dc:dc xmlns:oai_dc="{OAI_DC_NS}" xmlns:dc="{DC_NS}">"#);
        for (element, values) in &record.dc_fields {
            for value in values {
                let name = element.name();
                let _ = write!(out, "<dc:{name}>{}</dc:{name}>", escape(value.as_str()));
            }
        }
        out.push_str("</oai_dc:dc></metadata>");
    }
    out.push_str("</record>");
    out
}

/// A complete `ListRecords` response wrapping `records`.
pub fn records_to_list_response(records: &[RawOaiRecord], resumption_token: Option<&str>) -> String {
    let mut out = format!(r#"<?xml version="1.0" encoding="UTF-8"?><OAI-PMH xmlns="{OAI_PMH_NS}"><ListRecords>"#);
    for record in records {
        out.push_str(&record_to_oai_xml(record));
    }
    if let Some(token) = resumption_token {
        let _ = write!(out, "<resumptionToken>{}</resumptionToken>", escape(token));
    }
    out.push_str("</ListRecords></OAI-PMH>");
    out
}

#[cfg(test)]
mod tests {
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    use super::*;
    use crate::oai::{parse_oai_page, DcElement, DcFields};

    fn value() -> impl Strategy<Value = String> {
        // Printable text including markup characters; no surrounding
        // whitespace because parsing trims element text.
        "[A-Za-z0-9äöüß<>&'\"(); .,-]{0,20}".prop_map(|s| s.trim().to_string())
    }

    fn record() -> impl Strategy<Value = RawOaiRecord> {
        (
            "[a-z]{1,8}:[a-z0-9.]{1,10}:[0-9]{1,6}",
            0i64..2_000_000_000,
            prop::collection::vec("[A-Za-z_]{1,6}", 0..3),
            prop::collection::btree_map(
                prop::sample::select(DcElement::ALL.to_vec()),
                prop::collection::vec(value(), 1..4),
                0..6,
            ),
            any::<bool>(),
        )
            .prop_map(|(identifier, secs, set_specs, fields, deleted)| RawOaiRecord {
                identifier,
                datestamp: Utc.timestamp_opt(secs, 0).unwrap(),
                set_specs,
                dc_fields: if deleted { DcFields::new() } else { fields },
                deleted,
            })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(records in prop::collection::vec(record(), 0..5)) {
            let mut seen = std::collections::HashSet::new();
            let records: Vec<_> = records.into_iter().filter(|r| seen.insert(r.identifier.clone())).collect();
            let xml = records_to_list_response(&records, Some("next"));
            let page = parse_oai_page(xml.as_bytes()).unwrap();
            prop_assert_eq!(page.records, records);
            prop_assert_eq!(page.resumption_token.as_deref(), Some("next"));
        }
    }
}
