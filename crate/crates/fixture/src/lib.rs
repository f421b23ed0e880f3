//! A small OAI-PMH data provider that runs inside a test process.
//!
//! It serves `oai_dc` records in pages linked by resumption tokens and can
//! be told to misbehave: answer with 503 + `Retry-After`, fail forever,
//! serve HTML, or reject every resumption token. Every request is logged so
//! tests can count round trips.

use std::collections::HashMap;
use std::fmt::Write;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use tokio::sync::oneshot;

mod data;

pub use data::{default_records, sample_record};

pub const OAI_PMH_NS: &str = "http://www.openarchives.org/OAI/2.0/";
pub const DEFAULT_PAGE_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureRecord {
    pub identifier: String,
    /// `YYYY-MM-DDThh:mm:ssZ`
    pub datestamp: String,
    pub sets: Vec<String>,
    /// Dublin Core element name and value, in document order.
    pub fields: Vec<(String, String)>,
    pub deleted: bool,
}

impl FixtureRecord {
    pub fn new(identifier: &str, datestamp: &str) -> Self {
        FixtureRecord {
            identifier: identifier.into(),
            datestamp: datestamp.into(),
            sets: Vec::new(),
            fields: Vec::new(),
            deleted: false,
        }
    }

    pub fn field(mut self, element: &str, value: &str) -> Self {
        self.fields.push((element.into(), value.into()));
        self
    }

    pub fn set(mut self, spec: &str) -> Self {
        self.sets.push(spec.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Normal,
    /// Every request gets a 500.
    AlwaysFail,
    /// Every request gets an HTML page.
    Html,
    /// Every resumption token is answered with `badResumptionToken`.
    RejectTokens,
}

#[derive(Debug, Default)]
struct Inner {
    records: Vec<FixtureRecord>,
    page_size: usize,
    mode: Mode,
    /// Pending 503 answers, each with its `Retry-After` seconds.
    unavailable: Vec<u32>,
    requests: Vec<String>,
    /// token → (next offset, filter)
    tokens: HashMap<String, (usize, Filter)>,
    token_seq: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Filter {
    from: Option<String>,
    until: Option<String>,
    set: Option<String>,
}

impl Filter {
    fn matches(&self, r: &FixtureRecord) -> bool {
        // Datestamps compare as strings at the precision of the bound.
        let cut = |bound: &str| &r.datestamp[..bound.len().min(r.datestamp.len())];
        self.from.as_deref().is_none_or(|f| cut(f) >= f)
            && self.until.as_deref().is_none_or(|u| cut(u) <= u)
            && self.set.as_deref().is_none_or(|s| r.sets.iter().any(|x| x == s))
    }

    fn is_empty(&self) -> bool {
        self.from.is_none() && self.until.is_none() && self.set.is_none()
    }
}

type Shared = Arc<Mutex<Inner>>;

pub struct FixtureServer {
    addr: SocketAddr,
    inner: Shared,
    shutdown: Option<oneshot::Sender<()>>,
}

impl FixtureServer {
    /// Binds an ephemeral local port and serves `records` on the current
    /// tokio runtime.
    pub async fn start(records: Vec<FixtureRecord>) -> Self {
        let inner = Arc::new(Mutex::new(Inner { records, page_size: DEFAULT_PAGE_SIZE, ..Inner::default() }));
        let app = Router::new().route("/oai", get(handle)).with_state(inner.clone());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind fixture port");
        let addr = listener.local_addr().expect("local addr");
        let (tx, rx) = oneshot::channel::<()>();
        tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        FixtureServer { addr, inner, shutdown: Some(tx) }
    }

    pub async fn with_default_records() -> Self {
        Self::start(default_records()).await
    }

    /// Base URL of the OAI-PMH endpoint.
    pub fn url(&self) -> String {
        format!("http://{}/oai", self.addr)
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn request_count(&self) -> usize {
        self.lock().requests.len()
    }

    /// Query strings of all requests so far.
    pub fn requests(&self) -> Vec<String> {
        self.lock().requests.clone()
    }

    pub fn clear_requests(&self) {
        self.lock().requests.clear();
    }

    pub fn set_mode(&self, mode: Mode) {
        self.lock().mode = mode;
    }

    pub fn set_page_size(&self, size: usize) {
        self.lock().page_size = size.max(1);
    }

    /// Answers the next request with 503 and the given `Retry-After`.
    pub fn fail_next_with_503(&self, retry_after_secs: u32) {
        self.lock().unavailable.push(retry_after_secs);
    }

    /// Inserts or replaces a record by identifier.
    pub fn upsert(&self, record: FixtureRecord) {
        let mut inner = self.lock();
        match inner.records.iter_mut().find(|r| r.identifier == record.identifier) {
            Some(slot) => *slot = record,
            None => inner.records.push(record),
        }
    }

    /// Turns a record into a deletion tombstone with a new datestamp.
    pub fn delete(&self, identifier: &str, datestamp: &str) {
        let mut inner = self.lock();
        if let Some(r) = inner.records.iter_mut().find(|r| r.identifier == identifier) {
            r.deleted = true;
            r.fields.clear();
            r.datestamp = datestamp.into();
        }
    }

    pub fn records(&self) -> Vec<FixtureRecord> {
        self.lock().records.clone()
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn xml(body: String) -> Response {
    ([(header::CONTENT_TYPE, "text/xml; charset=utf-8")], body).into_response()
}

fn envelope(request: &str, inner: &str) -> String {
    format!(
        r#"<?xml version="1.0" encoding="UTF-8"?><OAI-PMH xmlns="{OAI_PMH_NS}"><responseDate>2024-01-01T00:00:00Z</responseDate><request>{}</request>{inner}</OAI-PMH>"#,
        escape(request)
    )
}

fn oai_error(request: &str, code: &str, message: &str) -> Response {
    xml(envelope(request, &format!(r#"<error code="{code}">{}</error>"#, escape(message))))
}

fn render_record(r: &FixtureRecord, out: &mut String) {
    out.push_str("<record>");
    let status = if r.deleted { r#" status="deleted""# } else { "" };
    let _ = write!(
        out,
        "<header{status}><identifier>{}</identifier><datestamp>{}</datestamp>",
        escape(&r.identifier),
        escape(&r.datestamp)
    );
    for s in &r.sets {
        let _ = write!(out, "<setSpec>{}</setSpec>", escape(s));
    }
    out.push_str("</header>");
    if !r.deleted {
        out.push_str(
            r#"<metadata><oai_dc:dc xmlns:oai_dc="http://www.openarchives.org/OAI/2.0/oai_dc/" xmlns:dc="http://purl.org/dc/elements/1.1/">"#,
        );
        for (element, value) in &r.fields {
            let _ = write!(out, "<dc:{element}>{}</dc:{element}>", escape(value));
        }
        out.push_str("</oai_dc:dc></metadata>");
    }
    out.push_str("</record>");
}

async fn handle(State(inner): State<Shared>, Query(params): Query<HashMap<String, String>>) -> Response {
    let mut inner = inner.lock().unwrap_or_else(|e| e.into_inner());
    let mut query: Vec<_> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    query.sort();
    let request = query.join("&");
    inner.requests.push(request.clone());

    if !inner.unavailable.is_empty() {
        let secs = inner.unavailable.remove(0);
        return (StatusCode::SERVICE_UNAVAILABLE, [(header::RETRY_AFTER, secs.to_string())], "busy").into_response();
    }
    match inner.mode {
        Mode::AlwaysFail => return (StatusCode::INTERNAL_SERVER_ERROR, "boom").into_response(),
        Mode::Html => {
            return ([(header::CONTENT_TYPE, "text/html")], "<html><body><h1>Welcome</h1></body></html>")
                .into_response()
        }
        _ => {}
    }

    match params.get("verb").map(String::as_str) {
        Some("Identify") => xml(envelope(
            &request,
            r#"<Identify><repositoryName>fixture</repositoryName><baseURL>http://localhost/oai</baseURL><protocolVersion>2.0</protocolVersion><adminEmail>admin@example.org</adminEmail><earliestDatestamp>2000-01-01T00:00:00Z</earliestDatestamp><deletedRecord>persistent</deletedRecord><granularity>YYYY-MM-DDThh:mm:ssZ</granularity></Identify>"#,
        )),
        Some("ListRecords") => list_records(&mut inner, &params, &request),
        Some(other) => oai_error(&request, "badVerb", &format!("illegal verb {other}")),
        None => oai_error(&request, "badVerb", "missing verb"),
    }
}

fn list_records(inner: &mut Inner, params: &HashMap<String, String>, request: &str) -> Response {
    let (offset, filter) = if let Some(token) = params.get("resumptionToken") {
        if params.len() != 2 {
            return oai_error(request, "badArgument", "resumptionToken is exclusive");
        }
        match inner.tokens.get(token) {
            Some(state) if inner.mode != Mode::RejectTokens => state.clone(),
            _ => return oai_error(request, "badResumptionToken", "unknown or expired token"),
        }
    } else {
        match params.get("metadataPrefix").map(String::as_str) {
            Some("oai_dc") => {}
            Some(other) => {
                return oai_error(request, "cannotDisseminateFormat", &format!("unsupported format {other}"))
            }
            None => return oai_error(request, "badArgument", "metadataPrefix required"),
        }
        let filter = Filter {
            from: params.get("from").cloned(),
            until: params.get("until").cloned(),
            set: params.get("set").cloned(),
        };
        (0, filter)
    };

    let matching: Vec<&FixtureRecord> = inner.records.iter().filter(|r| filter.matches(r)).collect();
    if matching.is_empty() {
        return oai_error(request, "noRecordsMatch", "no records match the request");
    }
    let end = (offset + inner.page_size).min(matching.len());
    let mut body = String::from("<ListRecords>");
    for r in &matching[offset.min(end)..end] {
        render_record(r, &mut body);
    }
    let next = if end < matching.len() {
        let page = end / inner.page_size + 1;
        let token = if filter.is_empty() {
            format!("p{page}")
        } else {
            inner.token_seq += 1;
            format!("p{page}-{}", inner.token_seq)
        };
        inner.tokens.insert(token.clone(), (end, filter));
        Some(token)
    } else {
        None
    };
    match next {
        Some(token) => {
            let _ = write!(
                body,
                r#"<resumptionToken completeListSize="{}" cursor="{offset}">{token}</resumptionToken>"#,
                matching.len()
            );
        }
        None if offset > 0 => {
            let _ = write!(body, r#"<resumptionToken completeListSize="{}" cursor="{offset}"/>"#, matching.len());
        }
        None => {}
    }
    body.push_str("</ListRecords>");
    xml(envelope(request, &body))
}
