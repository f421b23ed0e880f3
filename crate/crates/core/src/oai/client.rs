use std::collections::HashMap;
use std::time::Duration;

use chrono::{DateTime, Utc};
use futures::{stream, Stream, TryStreamExt};
use reqwest::header::{CONTENT_LENGTH, CONTENT_TYPE, RETRY_AFTER};
use reqwest::StatusCode;
use tracing::{debug, warn};
use url::Url;

use super::{
    parse_identify, parse_oai_page, Granularity, HarvestResult, OaiEndpoint, OaiError, OaiErrorCode, RawOaiRecord,
    RepositoryIdentity, MAX_PAGE_BYTES,
};

/// Per-request retry behaviour for 5xx, 429 and connection failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    /// First backoff delay when the server gives no Retry-After.
    pub base_delay: Duration,
    /// Upper bound for any single wait, Retry-After included.
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 5, base_delay: Duration::from_secs(1), max_delay: Duration::from_secs(60) }
    }
}

impl RetryPolicy {
    fn backoff(&self, failed_attempts: u32) -> Duration {
        let factor = 2u32.saturating_pow(failed_attempts.saturating_sub(1));
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Debug, Clone)]
pub struct OaiClient {
    http: reqwest::Client,
    retry: RetryPolicy,
}

impl Default for OaiClient {
    fn default() -> Self {
        Self::new(RetryPolicy::default())
    }
}

impl OaiClient {
    pub fn new(retry: RetryPolicy) -> Self {
        let http = reqwest::Client::builder()
            .user_agent(concat!("termrec/", env!("CARGO_PKG_VERSION")))
            .connect_timeout(Duration::from_secs(30))
            .timeout(Duration::from_secs(600))
            .build()
            .expect("static reqwest configuration is valid");
        OaiClient { http, retry }
    }

    pub fn retry_policy(&self) -> &RetryPolicy {
        &self.retry
    }

    /// Issues the `Identify` verb.
    pub async fn identify(&self, endpoint: &OaiEndpoint) -> Result<RepositoryIdentity, OaiError> {
        endpoint.validate()?;
        let mut url = endpoint.base_url.clone();
        url.query_pairs_mut().append_pair("verb", "Identify");
        let body = self.fetch(url).await?;
        parse_identify(&body)
    }

    /// Pages through `ListRecords`, following resumption tokens.
    pub fn pages(
        &self,
        endpoint: &OaiEndpoint,
        from: Option<DateTime<Utc>>,
        until: Option<DateTime<Utc>>,
    ) -> Result<ListRecordsPager<'_>, OaiError> {
        endpoint.validate()?;
        if let (Some(from), Some(until)) = (from, until) {
            if from > until {
                return Err(OaiError::InvalidWindow { from, until });
            }
        }
        Ok(ListRecordsPager {
            client: self,
            endpoint: endpoint.clone(),
            from,
            until,
            state: PagerState::Initial,
            pages_fetched: 0,
        })
    }

    /// Streams every record in the `[from, until]` window.
    pub fn list_records<'a>(
        &'a self,
        endpoint: &OaiEndpoint,
        from: Option<DateTime<Utc>>,
        until: Option<DateTime<Utc>>,
    ) -> impl Stream<Item = Result<RawOaiRecord, OaiError>> + 'a {
        let pager = self.pages(endpoint, from, until);
        stream::once(async move { pager })
            .map_ok(|pager| {
                stream::try_unfold(
                    pager,
                    |mut pager| async move { Ok(pager.next_page().await?.map(|page| (page, pager))) },
                )
            })
            .try_flatten()
            .map_ok(|page| stream::iter(page.into_iter().map(Ok)))
            .try_flatten()
    }

    /// Harvests everything (or everything strictly newer than `since`).
    pub async fn harvest(
        &self,
        endpoint: &OaiEndpoint,
        since: Option<DateTime<Utc>>,
    ) -> Result<HarvestResult, OaiError> {
        self.harvest_with_progress(endpoint, since, |_| {}).await
    }

    /// Like [`harvest`](Self::harvest), calling `progress` with the running
    /// record count after each page. Nothing is returned unless every page
    /// was fetched; a record seen twice keeps its latest version.
    pub async fn harvest_with_progress(
        &self,
        endpoint: &OaiEndpoint,
        since: Option<DateTime<Utc>>,
        mut progress: impl FnMut(usize),
    ) -> Result<HarvestResult, OaiError> {
        let from = since.map(|t| match endpoint.granularity {
            Granularity::Seconds => t + chrono::Duration::seconds(1),
            Granularity::Day => t,
        });
        let mut pager = self.pages(endpoint, from, None)?;
        let mut records: Vec<RawOaiRecord> = Vec::new();
        let mut positions: HashMap<String, usize> = HashMap::new();
        while let Some(page) = pager.next_page().await? {
            for record in page {
                if since.is_some_and(|s| record.datestamp <= s) {
                    continue;
                }
                match positions.get(&record.identifier) {
                    Some(&i) => records[i] = record,
                    None => {
                        positions.insert(record.identifier.clone(), records.len());
                        records.push(record);
                    }
                }
            }
            progress(records.len());
        }
        Ok(HarvestResult {
            records,
            pages_fetched: pager.pages_fetched(),
            completed_at: Utc::now(),
            endpoint: endpoint.clone(),
        })
    }

    async fn fetch(&self, url: Url) -> Result<Vec<u8>, OaiError> {
        let mut last_error = OaiError::Transport("no attempt made".into());
        for attempt in 1..=self.retry.max_attempts.max(1) {
            debug!(%url, attempt, "OAI-PMH request");
            let delay = match self.http.get(url.clone()).send().await {
                Ok(response) if response.status().is_success() => {
                    return read_body(response).await;
                }
                Ok(response) => {
                    let status = response.status();
                    last_error = OaiError::Transport(format!("HTTP {status} from {url}"));
                    if !is_retryable(status) {
                        return Err(last_error);
                    }
                    retry_after(&response).unwrap_or_else(|| self.retry.backoff(attempt)).min(self.retry.max_delay)
                }
                Err(err) => {
                    last_error = OaiError::Transport(err.to_string());
                    self.retry.backoff(attempt)
                }
            };
            if attempt < self.retry.max_attempts {
                warn!(%url, attempt, ?delay, error = %last_error, "retrying OAI-PMH request");
                tokio::time::sleep(delay).await;
            }
        }
        Err(last_error)
    }
}

fn is_retryable(status: StatusCode) -> bool {
    status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS
}

fn retry_after(response: &reqwest::Response) -> Option<Duration> {
    let value = response.headers().get(RETRY_AFTER)?.to_str().ok()?.trim();
    if let Ok(secs) = value.parse::<u64>() {
        return Some(Duration::from_secs(secs));
    }
    let at = DateTime::parse_from_rfc2822(value).ok()?.with_timezone(&Utc);
    Some((at - Utc::now()).to_std().unwrap_or(Duration::ZERO))
}

async fn read_body(mut response: reqwest::Response) -> Result<Vec<u8>, OaiError> {
    if let Some(ct) = response.headers().get(CONTENT_TYPE) {
        let ct = ct.to_str().unwrap_or_default().to_ascii_lowercase();
        if !ct.contains("xml") {
            return Err(OaiError::NotOaiResponse);
        }
    }
    let too_large = || OaiError::Protocol(format!("response body exceeds {MAX_PAGE_BYTES} bytes"));
    let declared =
        response.headers().get(CONTENT_LENGTH).and_then(|v| v.to_str().ok()).and_then(|v| v.parse::<usize>().ok());
    if declared.is_some_and(|len| len > MAX_PAGE_BYTES) {
        return Err(too_large());
    }
    let mut body = Vec::with_capacity(declared.unwrap_or(0));
    while let Some(chunk) = response.chunk().await.map_err(|e| OaiError::Transport(e.to_string()))? {
        if body.len() + chunk.len() > MAX_PAGE_BYTES {
            return Err(too_large());
        }
        body.extend_from_slice(&chunk);
    }
    Ok(body)
}

#[derive(Debug, Clone)]
enum PagerState {
    Initial,
    Token(String),
    Done,
}

/// Cursor over the pages of one `ListRecords` conversation.
#[derive(Debug)]
pub struct ListRecordsPager<'a> {
    client: &'a OaiClient,
    endpoint: OaiEndpoint,
    from: Option<DateTime<Utc>>,
    until: Option<DateTime<Utc>>,
    state: PagerState,
    pages_fetched: usize,
}

impl ListRecordsPager<'_> {
    pub fn pages_fetched(&self) -> usize {
        self.pages_fetched
    }

    fn request_url(&self) -> Option<Url> {
        let mut url = self.endpoint.base_url.clone();
        {
            let mut query = url.query_pairs_mut();
            query.append_pair("verb", "ListRecords");
            match &self.state {
                PagerState::Initial => {
                    query.append_pair("metadataPrefix", &self.endpoint.metadata_prefix);
                    let granularity = self.endpoint.granularity;
                    if let Some(from) = self.from {
                        query.append_pair("from", &granularity.format(from));
                    }
                    if let Some(until) = self.until {
                        query.append_pair("until", &granularity.format(until));
                    }
                    if let Some(set) = &self.endpoint.set_spec {
                        query.append_pair("set", set);
                    }
                }
                PagerState::Token(token) => {
                    query.append_pair("resumptionToken", token);
                }
                PagerState::Done => return None,
            }
        }
        Some(url)
    }

    fn in_window(&self, record: &RawOaiRecord) -> bool {
        self.from.is_none_or(|from| record.datestamp >= from)
            && self.until.is_none_or(|until| record.datestamp <= until)
    }

    /// The next page of records, or `None` once the list is exhausted.
    pub async fn next_page(&mut self) -> Result<Option<Vec<RawOaiRecord>>, OaiError> {
        let Some(url) = self.request_url() else {
            return Ok(None);
        };
        let body = self.client.fetch(url).await?;
        self.pages_fetched += 1;
        let page = parse_oai_page(&body)?;
        if let Some((code, message)) = page.error {
            let sent_token = match std::mem::replace(&mut self.state, PagerState::Done) {
                PagerState::Token(token) => Some(token),
                _ => None,
            };
            return match (code, sent_token) {
                (OaiErrorCode::NoRecordsMatch, _) => Ok(None),
                (OaiErrorCode::BadResumptionToken, Some(token)) => Err(OaiError::BadResumptionToken { token }),
                (code, _) => Err(OaiError::Oai { code, message }),
            };
        }
        self.state = match page.resumption_token {
            Some(token) => PagerState::Token(token),
            None => PagerState::Done,
        };
        let records = page
            .records
            .into_iter()
            .filter(|r| {
                let keep = self.in_window(r);
                if !keep {
                    warn!(identifier = %r.identifier, "dropping record outside the requested window");
                }
                keep
            })
            .collect();
        Ok(Some(records))
    }
}
