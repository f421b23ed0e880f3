use quick_xml::events::{BytesStart, Event};
use quick_xml::name::ResolveResult;
use quick_xml::NsReader;
use tracing::warn;

use super::{
    parse_datestamp, DcElement, DcFields, Granularity, OaiError, OaiErrorCode, RawOaiRecord, RepositoryIdentity, DC_NS,
    OAI_DC_NS, OAI_PMH_NS,
};

/// One parsed `ListRecords` response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OaiPage {
    pub records: Vec<RawOaiRecord>,
    /// Present only when the token element has non-empty text.
    pub resumption_token: Option<String>,
    pub error: Option<(OaiErrorCode, String)>,
}

/// Minimal element tree; only what the OAI-PMH responses need.
#[derive(Debug, Default)]
struct Element {
    ns: Option<String>,
    local: String,
    attrs: Vec<(String, String)>,
    children: Vec<Element>,
    text: String,
}

impl Element {
    fn is(&self, ns: &str, local: &str) -> bool {
        self.ns.as_deref() == Some(ns) && self.local == local
    }

    fn child(&self, ns: &str, local: &str) -> Option<&Element> {
        self.children.iter().find(|c| c.is(ns, local))
    }

    fn children_named<'a>(&'a self, ns: &'a str, local: &'a str) -> impl Iterator<Item = &'a Element> {
        self.children.iter().filter(move |c| c.is(ns, local))
    }

    fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    fn trimmed_text(&self) -> &str {
        self.text.trim()
    }
}

fn parse_error(offset: u64, err: impl std::fmt::Display) -> OaiError {
    OaiError::Parse { offset, message: err.to_string() }
}

fn open_element(offset: u64, ns: Option<String>, start: &BytesStart) -> Result<Element, OaiError> {
    let local = String::from_utf8_lossy(start.local_name().as_ref()).into_owned();
    let mut attrs = Vec::new();
    for attr in start.attributes() {
        let attr = attr.map_err(|e| parse_error(offset, e))?;
        if attr.key.prefix().is_some() || attr.key.as_ref().starts_with(b"xmlns") {
            continue;
        }
        let value = attr.unescape_value().map_err(|e| parse_error(offset, e))?;
        attrs.push((String::from_utf8_lossy(attr.key.local_name().as_ref()).into_owned(), value.into_owned()));
    }
    Ok(Element { ns, local, attrs, ..Element::default() })
}

/// Parses a whole response into a tree, rejecting documents whose root is
/// not the OAI-PMH envelope as soon as the root tag is seen.
fn parse_document(body: &[u8]) -> Result<Element, OaiError> {
    let mut reader = NsReader::from_reader(body);
    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;

    loop {
        let (ns, event) = match reader.read_resolved_event() {
            Ok((ResolveResult::Bound(ns), event)) => {
                (Ok(Some(String::from_utf8_lossy(ns.as_ref()).into_owned())), event)
            }
            Ok((ResolveResult::Unbound, event)) => (Ok(None), event),
            Ok((ResolveResult::Unknown(prefix), event)) => (Err(prefix), event),
            Err(e) => return Err(parse_error(reader.error_position(), e)),
        };
        let offset = reader.buffer_position();
        let ns = ns.map_err(|prefix| OaiError::Parse {
            offset,
            message: format!("unbound namespace prefix '{}'", String::from_utf8_lossy(&prefix)),
        });
        match event {
            Event::Start(start) => {
                let el = open_element(offset, ns?, &start)?;
                if stack.is_empty() {
                    if root.is_some() {
                        return Err(OaiError::Parse {
                            offset: reader.buffer_position(),
                            message: "multiple root elements".into(),
                        });
                    }
                    if !el.is(OAI_PMH_NS, "OAI-PMH") {
                        return Err(OaiError::NotOaiResponse);
                    }
                }
                stack.push(el);
            }
            Event::Empty(start) => {
                let el = open_element(offset, ns?, &start)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None if el.is(OAI_PMH_NS, "OAI-PMH") => root = Some(el),
                    None => return Err(OaiError::NotOaiResponse),
                }
            }
            Event::End(_) => {
                let el = stack.pop().expect("reader checks end tag matching");
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None => root = Some(el),
                }
            }
            Event::Text(text) => {
                if let Some(top) = stack.last_mut() {
                    let text = text.unescape().map_err(|e| parse_error(offset, e))?;
                    top.text.push_str(&text);
                }
            }
            Event::CData(data) => {
                if let Some(top) = stack.last_mut() {
                    top.text.push_str(&String::from_utf8_lossy(&data.into_inner()));
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }

    if !stack.is_empty() {
        return Err(OaiError::Parse { offset: reader.buffer_position(), message: "unexpected end of document".into() });
    }
    root.ok_or_else(|| OaiError::Parse { offset: 0, message: "document has no root element".into() })
}

fn oai_error(root: &Element) -> Result<Option<(OaiErrorCode, String)>, OaiError> {
    let Some(err) = root.child(OAI_PMH_NS, "error") else {
        return Ok(None);
    };
    let code = err.attr("code").ok_or_else(|| OaiError::Protocol("<error> without code attribute".into()))?;
    let code = code.parse::<OaiErrorCode>().map_err(|c| OaiError::Protocol(format!("unknown OAI error code '{c}'")))?;
    Ok(Some((code, err.trimmed_text().to_string())))
}

fn parse_record(record: &Element) -> Option<RawOaiRecord> {
    let header = record.child(OAI_PMH_NS, "header")?;
    let identifier = header.child(OAI_PMH_NS, "identifier").map(|e| e.trimmed_text().to_string()).unwrap_or_default();
    if identifier.is_empty() {
        warn!("skipping record without identifier");
        return None;
    }
    let raw_stamp = header.child(OAI_PMH_NS, "datestamp").map(Element::trimmed_text).unwrap_or_default();
    let Some(datestamp) = parse_datestamp(raw_stamp) else {
        warn!(%identifier, datestamp = raw_stamp, "skipping record with unparseable datestamp");
        return None;
    };
    let set_specs = header.children_named(OAI_PMH_NS, "setSpec").map(|e| e.trimmed_text().to_string()).collect();
    let deleted = header.attr("status") == Some("deleted");

    let mut dc_fields = DcFields::new();
    if !deleted {
        let dc = record.child(OAI_PMH_NS, "metadata").and_then(|m| m.child(OAI_DC_NS, "dc"));
        for field in dc.into_iter().flat_map(|dc| dc.children.iter()) {
            if field.ns.as_deref() != Some(DC_NS) {
                continue;
            }
            if let Some(element) = DcElement::from_name(&field.local) {
                dc_fields.entry(element).or_default().push(field.trimmed_text().to_string());
            }
        }
    }

    Some(RawOaiRecord { identifier, datestamp, set_specs, dc_fields, deleted })
}

/// Parses one `ListRecords` response body.
///
/// Elements are matched by namespace URI, never by prefix text.
pub fn parse_oai_page(body: &[u8]) -> Result<OaiPage, OaiError> {
    let root = parse_document(body)?;
    if let Some(error) = oai_error(&root)? {
        return Ok(OaiPage { records: Vec::new(), resumption_token: None, error: Some(error) });
    }
    let list = root
        .child(OAI_PMH_NS, "ListRecords")
        .ok_or_else(|| OaiError::Protocol("response has neither ListRecords nor error".into()))?;
    let records = list.children_named(OAI_PMH_NS, "record").filter_map(parse_record).collect();
    let resumption_token =
        list.child(OAI_PMH_NS, "resumptionToken").map(|e| e.trimmed_text().to_string()).filter(|t| !t.is_empty());
    Ok(OaiPage { records, resumption_token, error: None })
}

/// Parses an `Identify` response body.
pub fn parse_identify(body: &[u8]) -> Result<RepositoryIdentity, OaiError> {
    let root = parse_document(body)?;
    if let Some((code, message)) = oai_error(&root)? {
        return Err(OaiError::Oai { code, message });
    }
    let identify = root
        .child(OAI_PMH_NS, "Identify")
        .ok_or_else(|| OaiError::Protocol("response has no Identify element".into()))?;
    let repository_name = identify
        .child(OAI_PMH_NS, "repositoryName")
        .map(|e| e.trimmed_text().to_string())
        .ok_or_else(|| OaiError::Protocol("Identify without repositoryName".into()))?;
    let granularity = match identify.child(OAI_PMH_NS, "granularity") {
        Some(g) => Granularity::from_pattern(g.trimmed_text())
            .ok_or_else(|| OaiError::Protocol(format!("unknown granularity '{}'", g.trimmed_text())))?,
        None => Granularity::Day,
    };
    Ok(RepositoryIdentity {
        repository_name,
        admin_emails: identify.children_named(OAI_PMH_NS, "adminEmail").map(|e| e.trimmed_text().to_string()).collect(),
        earliest_datestamp: identify
            .child(OAI_PMH_NS, "earliestDatestamp")
            .and_then(|e| parse_datestamp(e.trimmed_text())),
        granularity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ENVELOPE_OPEN: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<OAI-PMH xmlns="http://www.openarchives.org/OAI/2.0/">
<responseDate>2011-09-01T00:00:00Z</responseDate>
<request verb="ListRecords">http://example.org/oai</request>"#;

    #[test]
    fn no_records_match() {
        let body = format!("{ENVELOPE_OPEN}<error code=\"noRecordsMatch\">nothing here</error></OAI-PMH>");
        let page = parse_oai_page(body.as_bytes()).unwrap();
        assert!(page.records.is_empty());
        assert_eq!(page.resumption_token, None);
        assert_eq!(page.error.map(|e| e.0), Some(OaiErrorCode::NoRecordsMatch));
    }

    #[test]
    fn unknown_error_code_is_protocol_error() {
        let body = format!("{ENVELOPE_OPEN}<error code=\"whatever\"/></OAI-PMH>");
        assert!(matches!(parse_oai_page(body.as_bytes()), Err(OaiError::Protocol(_))));
    }

    #[test]
    fn html_is_not_oai() {
        let body = b"<!DOCTYPE html><html><head><title>Hi</title></head><body><p>oops<br></body></html>";
        assert!(matches!(parse_oai_page(body), Err(OaiError::NotOaiResponse)));
        assert!(matches!(parse_identify(body), Err(OaiError::NotOaiResponse)));
    }

    #[test]
    fn wrong_namespace_root_is_not_oai() {
        let body = br#"<OAI-PMH xmlns="urn:other"><ListRecords/></OAI-PMH>"#;
        assert!(matches!(parse_oai_page(body), Err(OaiError::NotOaiResponse)));
    }

    #[test]
    fn malformed_xml_reports_offset() {
        let body = format!("{ENVELOPE_OPEN}<ListRecords><record></ListRecords></OAI-PMH>");
        match parse_oai_page(body.as_bytes()) {
            Err(OaiError::Parse { offset, .. }) => assert!(offset > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_oai_page(format!("{ENVELOPE_OPEN}<ListRecords>").as_bytes()),
            Err(OaiError::Parse { .. })
        ));
    }

    #[test]
    fn namespaces_are_resolved_not_prefix_matched() {
        // Unusual prefixes bound to the right URIs must parse; the familiar
        // "dc" prefix bound to a foreign URI must be ignored.
        let body = format!(
            r#"{ENVELOPE_OPEN}<ListRecords><record><header><identifier>oai:x:1</identifier>
<datestamp>2011-01-10</datestamp></header><metadata>
<od:dc xmlns:od="http://www.openarchives.org/OAI/2.0/oai_dc/" xmlns:e="http://purl.org/dc/elements/1.1/" xmlns:dc="urn:not-dc">
<e:title>Kept</e:title><dc:title>Ignored</dc:title><e:notAnElement>x</e:notAnElement>
</od:dc></metadata></record>
<resumptionToken completeListSize="1" cursor="0"></resumptionToken></ListRecords></OAI-PMH>"#
        );
        let page = parse_oai_page(body.as_bytes()).unwrap();
        assert_eq!(page.records.len(), 1);
        assert_eq!(page.records[0].values(DcElement::Title), ["Kept"]);
        assert_eq!(page.records[0].dc_fields.len(), 1);
        assert_eq!(page.resumption_token, None);
    }

    #[test]
    fn deleted_record_is_tombstone() {
        let body = format!(
            r#"{ENVELOPE_OPEN}<ListRecords><record><header status="deleted"><identifier>oai:x:9</identifier>
<datestamp>2012-03-04T05:06:07Z</datestamp><setSpec>a</setSpec></header></record>
<resumptionToken>tok-2</resumptionToken></ListRecords></OAI-PMH>"#
        );
        let page = parse_oai_page(body.as_bytes()).unwrap();
        let rec = &page.records[0];
        assert!(rec.deleted);
        assert!(rec.dc_fields.is_empty());
        assert_eq!(rec.set_specs, ["a"]);
        assert_eq!(page.resumption_token.as_deref(), Some("tok-2"));
    }

    #[test]
    fn records_without_identifier_are_skipped() {
        let body = format!(
            r#"{ENVELOPE_OPEN}<ListRecords><record><header><identifier> </identifier>
<datestamp>2012-03-04</datestamp></header></record></ListRecords></OAI-PMH>"#
        );
        assert!(parse_oai_page(body.as_bytes()).unwrap().records.is_empty());
    }

    #[test]
    fn identify_response() {
        let body = br#"<OAI-PMH xmlns="http://www.openarchives.org/OAI/2.0/">
<Identify><repositoryName>fixture</repositoryName><baseURL>http://x/oai</baseURL>
<protocolVersion>2.0</protocolVersion><adminEmail>admin@example.org</adminEmail>
<earliestDatestamp>2009-01-01T00:00:00Z</earliestDatestamp><deletedRecord>persistent</deletedRecord>
<granularity>YYYY-MM-DDThh:mm:ssZ</granularity></Identify></OAI-PMH>"#;
        let id = parse_identify(body).unwrap();
        assert_eq!(id.repository_name, "fixture");
        assert_eq!(id.granularity, Granularity::Seconds);
        assert_eq!(id.admin_emails, ["admin@example.org"]);
        assert!(id.earliest_datestamp.is_some());
    }
}
