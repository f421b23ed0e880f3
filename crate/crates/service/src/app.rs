//! Service operations, independent of the HTTP layer.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use termrec_core::biblio::{coword_pairs, query_key, term_trend, top_terms, Field};
use termrec_core::corpus::{parse_vocabulary_upload, SubjectSplitConfig};
use termrec_core::engine::index::MAX_MIN_COOCCURRENCE;
use termrec_core::engine::{cloud_weights, expand_query, recommend, EngineError, Metric, ModelSnapshot};
use termrec_core::oai::{OaiClient, OaiEndpoint};
use termrec_core::text::{AnalyzerConfig, Language};
use termrec_core::wire::{
    CloudResponse, CowordResponse, ExpandResponse, RecommendResponse, TopTermsResponse, TrendResponse,
};
use tokio::sync::Semaphore;
use tracing::warn;

use crate::auth::{self, PasswordParams, MIN_PASSWORD_CHARS};
use crate::config::Config;
use crate::domain::{Account, HarvestJob, JobMode, JobState, RepositoryProfile};
use crate::error::ApiError;
use crate::notify::Notifier;
use crate::store::{Store, StoreError};

pub const MAX_LIMIT: usize = 100;
pub const MAX_K: usize = 100;
pub const MAX_N: usize = 20;
pub const DEFAULT_LIMIT: usize = 10;
pub const DEFAULT_N: usize = 5;
pub const DEFAULT_CLOUD_K: usize = 30;
pub const DEFAULT_BIBLIO_K: usize = 10;

pub struct AppState {
    pub config: Config,
    pub(crate) store: Store,
    pub(crate) client: OaiClient,
    pub(crate) notifier: Arc<dyn Notifier>,
    /// Published snapshots; replaced whole, so readers holding an `Arc`
    /// keep a consistent model.
    models: RwLock<HashMap<String, Arc<ModelSnapshot>>>,
    /// Write-through cache of repository profiles.
    profiles: RwLock<HashMap<String, RepositoryProfile>>,
    /// Repositories with a queued or running job.
    pub(crate) busy: Mutex<HashSet<String>>,
    pub(crate) job_slots: Arc<Semaphore>,
}

#[derive(Debug, Deserialize)]
pub struct NewAccount {
    pub username: String,
    pub password: String,
    pub email: String,
}

#[derive(Debug, Serialize)]
pub struct IssuedKey {
    pub account_id: String,
    pub username: String,
    pub api_key: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepositoryOptions {
    pub strip_codes: Option<bool>,
    pub min_cooccurrence: Option<u32>,
    /// Extra stop words on top of the built-in list.
    pub stopwords: Option<Vec<String>>,
    pub metric: Option<Metric>,
    pub min_token_len: Option<usize>,
    pub max_token_len: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct NewRepository {
    pub oai_url: String,
    #[serde(default)]
    pub language: Option<String>,
    #[serde(default)]
    pub set: Option<String>,
    #[serde(default)]
    pub options: RepositoryOptions,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepositoryPatch {
    pub metric: Option<Metric>,
}

#[derive(Debug, Serialize)]
pub struct RepositoryView {
    pub repository_id: String,
    pub repository_name: String,
    pub oai_url: String,
    pub set: Option<String>,
    pub language: Language,
    pub metric: Metric,
    pub min_cooccurrence: u32,
    pub vocabulary_terms: Option<usize>,
    pub last_harvest: Option<chrono::DateTime<Utc>>,
    pub snapshot: Option<String>,
    pub created_at: chrono::DateTime<Utc>,
}

#[derive(Debug, Serialize)]
pub struct VocabularySummary {
    pub vocabulary: String,
    pub terms: usize,
}

pub type Params = HashMap<String, String>;

fn count(params: &Params, name: &str, default: usize, min: usize, max: usize) -> Result<usize, ApiError> {
    let value = match params.get(name) {
        None => default,
        Some(raw) => raw
            .trim()
            .parse::<usize>()
            .map_err(|_| ApiError::unprocessable(format!("parameter '{name}' must be a non-negative integer")))?,
    };
    if value < min {
        return Err(ApiError::unprocessable(format!("parameter '{name}' must be at least {min}")));
    }
    if value > max {
        return Err(ApiError::unprocessable(format!("parameter '{name}' must be at most {max}")));
    }
    Ok(value)
}

fn term(params: &Params) -> Result<&str, ApiError> {
    params.get("term").map(String::as_str).ok_or_else(|| ApiError::unprocessable("missing parameter 'term'"))
}

impl AppState {
    pub fn open(config: Config, notifier: Arc<dyn Notifier>) -> Result<Arc<Self>, StoreError> {
        let store = Store::open(&config.store_path)?;
        Self::with_store(config, store, notifier)
    }

    pub fn with_store(config: Config, store: Store, notifier: Arc<dyn Notifier>) -> Result<Arc<Self>, StoreError> {
        let interrupted = store.fail_unfinished_jobs("interrupted by service restart")?;
        if interrupted > 0 {
            warn!(interrupted, "marked unfinished jobs as failed");
        }
        let mut models = HashMap::new();
        let mut profiles = HashMap::new();
        for id in store.all_repository_ids()? {
            if let Some(profile) = store.repository(&id)? {
                profiles.insert(id.clone(), profile);
            }
            if let Some(snapshot) = store.current_snapshot(&id)? {
                models.insert(id, Arc::new(snapshot));
            }
        }
        Ok(Arc::new(AppState {
            client: OaiClient::new(config.retry_policy()),
            job_slots: Arc::new(Semaphore::new(config.job_parallelism)),
            config,
            store,
            notifier,
            models: RwLock::new(models),
            profiles: RwLock::new(profiles),
            busy: Mutex::new(HashSet::new()),
        }))
    }

    fn password_params(&self) -> PasswordParams {
        PasswordParams { memory_kib: self.config.argon2_memory_kib, iterations: self.config.argon2_iterations }
    }

    // ---- accounts and keys ----

    pub fn register_account(&self, req: NewAccount) -> Result<IssuedKey, ApiError> {
        let username = req.username.trim();
        if username.is_empty() {
            return Err(ApiError::unprocessable("username must not be empty"));
        }
        if req.password.chars().count() < MIN_PASSWORD_CHARS {
            return Err(ApiError::unprocessable(format!(
                "password must have at least {MIN_PASSWORD_CHARS} characters"
            )));
        }
        if !req.email.contains('@') {
            return Err(ApiError::unprocessable("email address is not valid"));
        }
        let key = auth::generate_key();
        let account = Account {
            account_id: uuid::Uuid::new_v4().simple().to_string(),
            username: username.to_string(),
            password_digest: auth::hash_password(&req.password, self.password_params()),
            email: req.email.trim().to_string(),
            created_at: Utc::now().trunc_subsecs(0),
        };
        match self.store.create_account(&account, &auth::key_digest(&key)) {
            Err(StoreError::DuplicateUsername) => return Err(ApiError::conflict("username already taken")),
            other => other?,
        }
        Ok(IssuedKey { account_id: account.account_id, username: account.username, api_key: key })
    }

    /// Resolves a key to its account. Malformed keys are rejected without
    /// touching the store.
    pub fn authenticate(&self, key: Option<&str>) -> Result<String, ApiError> {
        let key = key.ok_or_else(|| ApiError::unauthorized("missing API key"))?;
        if !auth::is_well_formed_key(key) {
            return Err(ApiError::unauthorized("invalid API key"));
        }
        self.store.key_owner(&auth::key_digest(key))?.ok_or_else(|| ApiError::unauthorized("invalid API key"))
    }

    pub fn issue_key(&self, account_id: &str) -> Result<IssuedKey, ApiError> {
        let account = self.store.account(account_id)?.ok_or_else(|| ApiError::unauthorized("invalid API key"))?;
        let key = auth::generate_key();
        self.store.add_key(account_id, &auth::key_digest(&key))?;
        Ok(IssuedKey { account_id: account.account_id, username: account.username, api_key: key })
    }

    pub fn revoke_key(&self, key: &str) -> Result<(), ApiError> {
        self.store.revoke_key(&auth::key_digest(key))?;
        Ok(())
    }

    // ---- repositories ----

    /// The profile if `account_id` owns it; foreign and missing
    /// repositories look the same.
    pub fn owned_profile(&self, account_id: &str, repository_id: &str) -> Result<RepositoryProfile, ApiError> {
        self.profiles
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(repository_id)
            .filter(|p| p.account_id == account_id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("repository not found"))
    }

    pub(crate) fn save_profile(&self, profile: RepositoryProfile) -> Result<(), ApiError> {
        self.store.put_repository(&profile)?;
        self.profiles.write().unwrap_or_else(|e| e.into_inner()).insert(profile.repository_id.clone(), profile);
        Ok(())
    }

    pub fn view(&self, profile: &RepositoryProfile) -> RepositoryView {
        RepositoryView {
            repository_id: profile.repository_id.clone(),
            repository_name: profile.repository_name.clone(),
            oai_url: profile.endpoint.base_url.to_string(),
            set: profile.endpoint.set_spec.clone(),
            language: profile.analyzer.language,
            metric: profile.chosen_metric,
            min_cooccurrence: profile.min_cooccurrence,
            vocabulary_terms: profile.uploaded_vocabulary.as_ref().map(|v| v.len()),
            last_harvest: profile.last_harvest,
            snapshot: self.snapshot(&profile.repository_id).map(|s| s.snapshot_id.clone()),
            created_at: profile.created_at,
        }
    }

    pub async fn register_repository(&self, account_id: &str, req: NewRepository) -> Result<RepositoryView, ApiError> {
        let language: Language = req
            .language
            .as_deref()
            .unwrap_or("en")
            .parse()
            .map_err(|e: termrec_core::text::AnalyzerError| ApiError::unprocessable(e.to_string()))?;
        let opts = req.options;
        let mut analyzer = AnalyzerConfig::for_language(language);
        if let Some(words) = &opts.stopwords {
            analyzer.extend_stopwords(&words.join("\n"));
        }
        if opts.min_token_len.is_some() || opts.max_token_len.is_some() {
            analyzer = analyzer
                .clone()
                .with_token_bounds(
                    opts.min_token_len.unwrap_or(analyzer.min_token_len),
                    opts.max_token_len.unwrap_or(analyzer.max_token_len),
                )
                .map_err(|e| ApiError::unprocessable(e.to_string()))?;
        }
        let min_cooccurrence = opts.min_cooccurrence.unwrap_or(1);
        if !(1..=MAX_MIN_COOCCURRENCE).contains(&min_cooccurrence) {
            return Err(ApiError::unprocessable(format!(
                "min_cooccurrence must be between 1 and {MAX_MIN_COOCCURRENCE}"
            )));
        }
        let metric = opts.metric.unwrap_or_default();
        if !metric.is_available() {
            return Err(ApiError::unavailable(EngineError::ModuleUnavailable(metric).to_string()));
        }

        let mut endpoint = OaiEndpoint::new(&req.oai_url).map_err(|e| ApiError::unprocessable(e.to_string()))?;
        if let Some(set) = req.set.filter(|s| !s.trim().is_empty()) {
            endpoint = endpoint.with_set(set.trim());
        }
        let identity = self.client.identify(&endpoint).await.map_err(|e| ApiError::unprocessable(e.to_string()))?;
        endpoint.granularity = identity.granularity;

        let profile = RepositoryProfile {
            repository_id: uuid::Uuid::new_v4().simple().to_string(),
            account_id: account_id.to_string(),
            repository_name: identity.repository_name,
            endpoint,
            analyzer,
            subject_split: SubjectSplitConfig { strip_codes: opts.strip_codes.unwrap_or(true) },
            min_cooccurrence,
            uploaded_vocabulary: None,
            chosen_metric: metric,
            last_harvest: None,
            created_at: Utc::now().trunc_subsecs(0),
        };
        let view = self.view(&profile);
        self.save_profile(profile)?;
        Ok(view)
    }

    pub fn list_repositories(&self, account_id: &str) -> Result<Vec<RepositoryView>, ApiError> {
        Ok(self.store.repositories_of(account_id)?.iter().map(|p| self.view(p)).collect())
    }

    pub fn patch_repository(
        &self,
        account_id: &str,
        repository_id: &str,
        patch: RepositoryPatch,
    ) -> Result<RepositoryView, ApiError> {
        let mut profile = self.owned_profile(account_id, repository_id)?;
        if let Some(metric) = patch.metric {
            if !metric.is_available() {
                return Err(ApiError::unavailable(EngineError::ModuleUnavailable(metric).to_string()));
            }
            profile.chosen_metric = metric;
        }
        let view = self.view(&profile);
        self.save_profile(profile)?;
        Ok(view)
    }

    /// Stores a vocabulary for the next build; the served model is not
    /// touched.
    pub fn upload_vocabulary(
        &self,
        account_id: &str,
        repository_id: &str,
        body: &str,
    ) -> Result<VocabularySummary, ApiError> {
        let mut profile = self.owned_profile(account_id, repository_id)?;
        let vocabulary = parse_vocabulary_upload(body).map_err(|e| ApiError::unprocessable(e.to_string()))?;
        let summary = VocabularySummary { vocabulary: vocabulary.name.clone(), terms: vocabulary.len() };
        profile.uploaded_vocabulary = Some(vocabulary);
        self.save_profile(profile)?;
        Ok(summary)
    }

    // ---- jobs ----

    pub fn start_job(
        self: &Arc<Self>,
        account_id: &str,
        repository_id: &str,
        mode: JobMode,
    ) -> Result<HarvestJob, ApiError> {
        let profile = self.owned_profile(account_id, repository_id)?;
        {
            let mut busy = self.busy.lock().unwrap_or_else(|e| e.into_inner());
            if !busy.insert(profile.repository_id.clone()) {
                return Err(ApiError::conflict("a job for this repository is already queued or running"));
            }
        }
        let job = HarvestJob {
            job_id: uuid::Uuid::new_v4().simple().to_string(),
            repository_id: profile.repository_id.clone(),
            mode,
            state: JobState::Queued,
            records_seen: 0,
            error: None,
            snapshot_id: None,
            created_at: Utc::now().trunc_subsecs(0),
            started_at: None,
            finished_at: None,
        };
        if let Err(e) = self.store.insert_job(&job) {
            self.release(&profile.repository_id);
            return Err(e.into());
        }
        tokio::spawn(crate::jobs::run(self.clone(), job.clone()));
        Ok(job)
    }

    pub(crate) fn release(&self, repository_id: &str) {
        self.busy.lock().unwrap_or_else(|e| e.into_inner()).remove(repository_id);
    }

    pub fn job_status(&self, account_id: &str, job_id: &str) -> Result<HarvestJob, ApiError> {
        let job = self.store.job(job_id)?.ok_or_else(|| ApiError::not_found("job not found"))?;
        self.owned_profile(account_id, &job.repository_id).map_err(|_| ApiError::not_found("job not found"))?;
        Ok(job)
    }

    // ---- models ----

    pub fn snapshot(&self, repository_id: &str) -> Option<Arc<ModelSnapshot>> {
        self.models.read().unwrap_or_else(|e| e.into_inner()).get(repository_id).cloned()
    }

    /// Persists and then swaps in a new snapshot.
    pub fn publish(&self, snapshot: ModelSnapshot) -> Result<(), StoreError> {
        self.store.publish_snapshot(&snapshot)?;
        self.models
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(snapshot.repository_id.clone(), Arc::new(snapshot));
        Ok(())
    }

    fn served(
        &self,
        account_id: &str,
        repository_id: &str,
    ) -> Result<(RepositoryProfile, Arc<ModelSnapshot>), ApiError> {
        let profile = self.owned_profile(account_id, repository_id)?;
        let snapshot = self.snapshot(repository_id).ok_or_else(|| ApiError::conflict("model not built"))?;
        Ok((profile, snapshot))
    }

    fn metric(profile: &RepositoryProfile, params: &Params) -> Result<Metric, ApiError> {
        match params.get("metric") {
            None => Ok(profile.chosen_metric),
            Some(m) => m.parse().map_err(ApiError::unprocessable),
        }
    }

    pub fn model_bytes(&self, account_id: &str, repository_id: &str) -> Result<Vec<u8>, ApiError> {
        let (_, snapshot) = self.served(account_id, repository_id)?;
        Ok(snapshot.to_bytes())
    }

    pub fn recommend(
        &self,
        account_id: &str,
        repository_id: &str,
        params: &Params,
    ) -> Result<RecommendResponse, ApiError> {
        let (profile, snapshot) = self.served(account_id, repository_id)?;
        let query = term(params)?;
        let limit = count(params, "limit", DEFAULT_LIMIT, 1, MAX_LIMIT)?;
        let metric = Self::metric(&profile, params)?;
        let recs = recommend(query, &snapshot, metric, limit)?;
        Ok(RecommendResponse::new(query, metric, &snapshot, &recs))
    }

    pub fn expand(&self, account_id: &str, repository_id: &str, params: &Params) -> Result<ExpandResponse, ApiError> {
        let (profile, snapshot) = self.served(account_id, repository_id)?;
        let query = term(params)?;
        let n = count(params, "n", DEFAULT_N, 0, MAX_N)?;
        let metric = Self::metric(&profile, params)?;
        let expanded = expand_query(query, &snapshot, metric, n)?;
        Ok(ExpandResponse::new(query, metric, &snapshot, expanded))
    }

    pub fn cloud(&self, account_id: &str, repository_id: &str, params: &Params) -> Result<CloudResponse, ApiError> {
        let (profile, snapshot) = self.served(account_id, repository_id)?;
        let query = term(params)?;
        let k = count(params, "k", DEFAULT_CLOUD_K, 1, MAX_K)?;
        let metric = Self::metric(&profile, params)?;
        let terms = cloud_weights(query, &snapshot, metric, k)?;
        Ok(CloudResponse::new(query, metric, &snapshot, terms))
    }

    fn field(params: &Params) -> Result<Field, ApiError> {
        params.get("field").map_or(Ok(Field::Subject), |f| f.parse().map_err(ApiError::unprocessable))
    }

    pub fn top_terms(
        &self,
        account_id: &str,
        repository_id: &str,
        params: &Params,
    ) -> Result<TopTermsResponse, ApiError> {
        let (_, snapshot) = self.served(account_id, repository_id)?;
        let field = Self::field(params)?;
        let k = count(params, "k", DEFAULT_BIBLIO_K, 1, MAX_K)?;
        Ok(top_terms_response(&snapshot, field, k))
    }

    pub fn coword(&self, account_id: &str, repository_id: &str, params: &Params) -> Result<CowordResponse, ApiError> {
        let (_, snapshot) = self.served(account_id, repository_id)?;
        let k = count(params, "k", DEFAULT_BIBLIO_K, 1, MAX_K)?;
        Ok(coword_response(&snapshot, k))
    }

    pub fn trend(&self, account_id: &str, repository_id: &str, params: &Params) -> Result<TrendResponse, ApiError> {
        let (_, snapshot) = self.served(account_id, repository_id)?;
        let field = Self::field(params)?;
        Ok(trend_response(&snapshot, term(params)?, field))
    }
}

pub fn top_terms_response(snapshot: &ModelSnapshot, field: Field, k: usize) -> TopTermsResponse {
    TopTermsResponse { field, snapshot: snapshot.snapshot_id.clone(), terms: top_terms(&snapshot.corpus, field, k) }
}

pub fn coword_response(snapshot: &ModelSnapshot, k: usize) -> CowordResponse {
    CowordResponse { snapshot: snapshot.snapshot_id.clone(), pairs: coword_pairs(&snapshot.index, &snapshot.corpus, k) }
}

/// Trend for user input `term`; input that does not map to a single term
/// of the field yields an empty series.
pub fn trend_response(snapshot: &ModelSnapshot, term: &str, field: Field) -> TrendResponse {
    let key = query_key(term, field, &snapshot.analyzer).unwrap_or_else(|| termrec_core::corpus::normalize_term(term));
    TrendResponse::new(field, snapshot, term_trend(&snapshot.corpus, &key, field))
}
