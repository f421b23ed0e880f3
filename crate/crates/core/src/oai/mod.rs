//! OAI-PMH harvesting client for `oai_dc` metadata.
//!
//! [`parse_oai_page`] turns one response body into records, a resumption
//! token and an optional protocol error code. [`OaiClient`] drives the
//! paged `ListRecords` conversation with retries, and [`OaiClient::harvest`]
//! collects a complete, durable [`HarvestResult`].

mod client;
mod parse;
mod write;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

pub use client::{OaiClient, RetryPolicy};
pub use parse::{parse_identify, parse_oai_page, OaiPage};
pub use write::{record_to_oai_xml, records_to_list_response};

pub const OAI_PMH_NS: &str = "http://www.openarchives.org/OAI/2.0/";
pub const OAI_DC_NS: &str = "http://www.openarchives.org/OAI/2.0/oai_dc/";
pub const DC_NS: &str = "http://purl.org/dc/elements/1.1/";

/// Response bodies above this size are rejected.
pub const MAX_PAGE_BYTES: usize = 64 * 1024 * 1024;

pub const OAI_DC_PREFIX: &str = "oai_dc";

#[derive(Debug, Error)]
pub enum OaiError {
    #[error("invalid endpoint URL '{url}': {reason}")]
    InvalidEndpoint { url: String, reason: String },
    #[error("invalid harvest window: from {from} is after until {until}")]
    InvalidWindow { from: DateTime<Utc>, until: DateTime<Utc> },
    #[error("XML parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },
    #[error("not an OAI-PMH response")]
    NotOaiResponse,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("OAI-PMH error {code}: {message}")]
    Oai { code: OaiErrorCode, message: String },
    #[error("bad resumption token '{token}'; restart the harvest from scratch")]
    BadResumptionToken { token: String },
    #[error("transport error: {0}")]
    Transport(String),
}

impl OaiError {
    /// True for errors caused by the remote speaking the protocol wrongly
    /// (as opposed to network failures).
    pub fn is_protocol(&self) -> bool {
        !matches!(self, OaiError::Transport(_))
    }
}

/// The eight error codes defined by OAI-PMH 2.0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OaiErrorCode {
    BadArgument,
    BadResumptionToken,
    BadVerb,
    CannotDisseminateFormat,
    IdDoesNotExist,
    NoRecordsMatch,
    NoMetadataFormats,
    NoSetHierarchy,
}

impl OaiErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            OaiErrorCode::BadArgument => "badArgument",
            OaiErrorCode::BadResumptionToken => "badResumptionToken",
            OaiErrorCode::BadVerb => "badVerb",
            OaiErrorCode::CannotDisseminateFormat => "cannotDisseminateFormat",
            OaiErrorCode::IdDoesNotExist => "idDoesNotExist",
            OaiErrorCode::NoRecordsMatch => "noRecordsMatch",
            OaiErrorCode::NoMetadataFormats => "noMetadataFormats",
            OaiErrorCode::NoSetHierarchy => "noSetHierarchy",
        }
    }
}

impl fmt::Display for OaiErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OaiErrorCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "badArgument" => OaiErrorCode::BadArgument,
            "badResumptionToken" => OaiErrorCode::BadResumptionToken,
            "badVerb" => OaiErrorCode::BadVerb,
            "cannotDisseminateFormat" => OaiErrorCode::CannotDisseminateFormat,
            "idDoesNotExist" => OaiErrorCode::IdDoesNotExist,
            "noRecordsMatch" => OaiErrorCode::NoRecordsMatch,
            "noMetadataFormats" => OaiErrorCode::NoMetadataFormats,
            "noSetHierarchy" => OaiErrorCode::NoSetHierarchy,
            other => return Err(other.to_string()),
        })
    }
}

/// Datestamp granularity advertised by a repository.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Granularity {
    Day,
    #[default]
    Seconds,
}

impl Granularity {
    pub fn format(self, t: DateTime<Utc>) -> String {
        match self {
            Granularity::Day => t.format("%Y-%m-%d").to_string(),
            Granularity::Seconds => t.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        }
    }

    pub fn pattern(self) -> &'static str {
        match self {
            Granularity::Day => "YYYY-MM-DD",
            Granularity::Seconds => "YYYY-MM-DDThh:mm:ssZ",
        }
    }

    fn from_pattern(s: &str) -> Option<Self> {
        match s.trim() {
            "YYYY-MM-DD" => Some(Granularity::Day),
            "YYYY-MM-DDThh:mm:ssZ" => Some(Granularity::Seconds),
            _ => None,
        }
    }
}

/// Parses an OAI datestamp in either day or second granularity, normalized
/// to UTC seconds. Day datestamps map to midnight.
pub fn parse_datestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    if let Ok(t) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%SZ") {
        return Some(t.and_utc());
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0)).map(|t| t.and_utc())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OaiEndpoint {
    pub base_url: Url,
    pub set_spec: Option<String>,
    pub metadata_prefix: String,
    #[serde(default)]
    pub granularity: Granularity,
}

impl OaiEndpoint {
    pub fn new(base_url: &str) -> Result<Self, OaiError> {
        let invalid =
            |reason: &str| OaiError::InvalidEndpoint { url: base_url.to_string(), reason: reason.to_string() };
        let url = Url::parse(base_url.trim()).map_err(|e| invalid(&e.to_string()))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(invalid("scheme must be http or https"));
        }
        if url.host_str().is_none_or(str::is_empty) {
            return Err(invalid("missing host"));
        }
        Ok(OaiEndpoint {
            base_url: url,
            set_spec: None,
            metadata_prefix: OAI_DC_PREFIX.to_string(),
            granularity: Granularity::Seconds,
        })
    }

    pub fn with_set(mut self, set_spec: impl Into<String>) -> Self {
        self.set_spec = Some(set_spec.into());
        self
    }

    pub fn validate(&self) -> Result<(), OaiError> {
        if !matches!(self.base_url.scheme(), "http" | "https") {
            return Err(OaiError::InvalidEndpoint {
                url: self.base_url.to_string(),
                reason: "scheme must be http or https".into(),
            });
        }
        if self.metadata_prefix != OAI_DC_PREFIX {
            return Err(OaiError::InvalidEndpoint {
                url: self.base_url.to_string(),
                reason: format!("unsupported metadataPrefix '{}'", self.metadata_prefix),
            });
        }
        Ok(())
    }
}

/// The fifteen unqualified Dublin Core elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DcElement {
    Title,
    Creator,
    Subject,
    Description,
    Publisher,
    Contributor,
    Date,
    Type,
    Format,
    Identifier,
    Source,
    Language,
    Relation,
    Coverage,
    Rights,
}

impl DcElement {
    pub const ALL: [DcElement; 15] = [
        DcElement::Title,
        DcElement::Creator,
        DcElement::Subject,
        DcElement::Description,
        DcElement::Publisher,
        DcElement::Contributor,
        DcElement::Date,
        DcElement::Type,
        DcElement::Format,
        DcElement::Identifier,
        DcElement::Source,
        DcElement::Language,
        DcElement::Relation,
        DcElement::Coverage,
        DcElement::Rights,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DcElement::Title => "title",
            DcElement::Creator => "creator",
            DcElement::Subject => "subject",
            DcElement::Description => "description",
            DcElement::Publisher => "publisher",
            DcElement::Contributor => "contributor",
            DcElement::Date => "date",
            DcElement::Type => "type",
            DcElement::Format => "format",
            DcElement::Identifier => "identifier",
            DcElement::Source => "source",
            DcElement::Language => "language",
            DcElement::Relation => "relation",
            DcElement::Coverage => "coverage",
            DcElement::Rights => "rights",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

/// Dublin Core element → values, in document order.
pub type DcFields = BTreeMap<DcElement, Vec<String>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawOaiRecord {
    pub identifier: String,
    pub datestamp: DateTime<Utc>,
    pub set_specs: Vec<String>,
    /// Empty for deletions.
    pub dc_fields: DcFields,
    pub deleted: bool,
}

impl RawOaiRecord {
    pub fn values(&self, element: DcElement) -> &[String] {
        self.dc_fields.get(&element).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepositoryIdentity {
    pub repository_name: String,
    pub admin_emails: Vec<String>,
    pub earliest_datestamp: Option<DateTime<Utc>>,
    pub granularity: Granularity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarvestResult {
    pub records: Vec<RawOaiRecord>,
    pub pages_fetched: usize,
    pub completed_at: DateTime<Utc>,
    pub endpoint: OaiEndpoint,
}

impl HarvestResult {
    pub fn deletions(&self) -> impl Iterator<Item = &RawOaiRecord> {
        self.records.iter().filter(|r| r.deleted)
    }

    pub fn max_datestamp(&self) -> Option<DateTime<Utc>> {
        self.records.iter().map(|r| r.datestamp).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_validation() {
        assert!(OaiEndpoint::new("http://example.org/oai").is_ok());
        assert!(OaiEndpoint::new("https://example.org/oai?x=1").is_ok());
        assert!(matches!(OaiEndpoint::new("not a url"), Err(OaiError::InvalidEndpoint { .. })));
        assert!(matches!(OaiEndpoint::new("ftp://example.org/oai"), Err(OaiError::InvalidEndpoint { .. })));
        assert!(OaiEndpoint::new("/relative/oai").is_err());
    }

    #[test]
    fn metadata_prefix_defaults_to_oai_dc() {
        let ep = OaiEndpoint::new("http://example.org/oai").unwrap();
        assert_eq!(ep.metadata_prefix, "oai_dc");
        let mut other = ep.clone();
        other.metadata_prefix = "marc21".into();
        assert!(other.validate().is_err());
    }

    #[test]
    fn datestamps_of_both_granularities() {
        let secs = parse_datestamp("2011-01-10T13:46:00Z").unwrap();
        assert_eq!(secs.to_rfc3339(), "2011-01-10T13:46:00+00:00");
        let day = parse_datestamp("2011-01-10").unwrap();
        assert_eq!(day.to_rfc3339(), "2011-01-10T00:00:00+00:00");
        assert!(parse_datestamp("10.01.2011").is_none());
        assert_eq!(Granularity::Day.format(secs), "2011-01-10");
        assert_eq!(Granularity::Seconds.format(secs), "2011-01-10T13:46:00Z");
    }

    #[test]
    fn error_codes_round_trip() {
        for code in [
            "badArgument",
            "badResumptionToken",
            "badVerb",
            "cannotDisseminateFormat",
            "idDoesNotExist",
            "noRecordsMatch",
            "noMetadataFormats",
            "noSetHierarchy",
        ] {
            assert_eq!(code.parse::<OaiErrorCode>().unwrap().as_str(), code);
        }
        assert!("bogus".parse::<OaiErrorCode>().is_err());
    }
}
