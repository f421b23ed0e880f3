//! Background harvest → build → publish pipeline.

use std::sync::Arc;

use chrono::{SubsecRound, Utc};
use termrec_core::corpus::{build_corpus, to_dc_record, CorpusError};
use termrec_core::engine::{IndexConfig, ModelSnapshot};
use tracing::{info, warn};

use crate::app::AppState;
use crate::domain::{HarvestJob, JobMode, JobState, RepositoryProfile};
use crate::notify::JobEvent;

struct Stage(&'static str, String);

fn stage(name: &'static str) -> impl Fn(String) -> Stage {
    move |message| Stage(name, message)
}

/// Runs one job to a terminal state. Any failure leaves the served snapshot
/// as it was.
pub(crate) async fn run(state: Arc<AppState>, mut job: HarvestJob) {
    let repository_id = job.repository_id.clone();
    let permit = state.job_slots.clone().acquire_owned().await;

    let outcome = match permit {
        Ok(_permit) => execute(&state, &mut job).await,
        Err(_) => Err(Stage("queue", "job queue closed".into())),
    };

    job.finished_at = Some(Utc::now().trunc_subsecs(0));
    match outcome {
        Ok(snapshot_id) => {
            job.state = JobState::Done;
            job.snapshot_id = Some(snapshot_id);
        }
        Err(Stage(name, message)) => {
            warn!(job_id = %job.job_id, stage = name, error = %message, "job failed");
            job.state = JobState::Failed;
            job.error = Some(format!("{name}: {message}"));
        }
    }
    if let Err(e) = state.store.update_job(&job) {
        warn!(job_id = %job.job_id, error = %e, "could not record job outcome");
    }
    state.release(&repository_id);

    let email = state
        .store
        .repository(&repository_id)
        .ok()
        .flatten()
        .and_then(|p| state.store.account(&p.account_id).ok().flatten())
        .map(|a| a.email)
        .unwrap_or_default();
    state.notifier.job_finished(&JobEvent {
        job_id: job.job_id.clone(),
        repository_id,
        account_email: email,
        state: job.state,
        records_seen: job.records_seen,
        error: job.error.clone(),
    });
}

fn advance(state: &AppState, job: &mut HarvestJob, next: JobState) -> Result<(), Stage> {
    debug_assert!(job.state.can_move_to(next));
    job.state = next;
    state.store.update_job(job).map_err(|e| Stage("store", e.to_string()))
}

async fn execute(state: &Arc<AppState>, job: &mut HarvestJob) -> Result<String, Stage> {
    let profile = state
        .store
        .repository(&job.repository_id)
        .map_err(|e| Stage("store", e.to_string()))?
        .ok_or_else(|| Stage("store", "repository vanished".into()))?;

    job.started_at = Some(Utc::now().trunc_subsecs(0));
    advance(state, job, JobState::Harvesting)?;
    let since = match job.mode {
        JobMode::Full => None,
        JobMode::Incremental => profile.last_harvest,
    };
    let job_id = job.job_id.clone();
    let result = state
        .client
        .harvest_with_progress(&profile.endpoint, since, |seen| {
            let _ = state.store.set_records_seen(&job_id, seen as u64);
        })
        .await
        .map_err(|e| Stage("harvest", e.to_string()))?;
    job.records_seen = result.records.len() as u64;
    info!(job_id = %job.job_id, records = result.records.len(), pages = result.pages_fetched, "harvest finished");

    let mut live = Vec::new();
    let mut deleted = Vec::new();
    for raw in &result.records {
        match to_dc_record(raw) {
            Ok(record) => live.push(record),
            Err(CorpusError::Tombstone(id)) => deleted.push(id),
            Err(e) => warn!(identifier = %raw.identifier, error = %e, "skipping record"),
        }
    }
    state
        .store
        .apply_harvest(&profile.repository_id, job.mode == JobMode::Full, &live, &deleted)
        .map_err(|e| Stage("harvest", e.to_string()))?;

    advance(state, job, JobState::Building)?;
    let records = state.store.records(&profile.repository_id).map_err(|e| Stage("build", e.to_string()))?;
    let build_profile = profile.clone();
    let snapshot = tokio::task::spawn_blocking(move || build(&build_profile, &records))
        .await
        .map_err(|e| Stage("build", e.to_string()))??;
    let snapshot_id = snapshot.snapshot_id.clone();

    state.publish(snapshot).map_err(|e| Stage("publish", e.to_string()))?;

    // Re-read: the metric or vocabulary may have changed while we ran.
    if let Some(max) = result.max_datestamp() {
        let mut current = state
            .owned_profile(&profile.account_id, &profile.repository_id)
            .map_err(|e| Stage("publish", e.message))?;
        current.last_harvest = Some(current.last_harvest.map_or(max, |t| t.max(max)));
        state.save_profile(current).map_err(|e| Stage("publish", e.message))?;
    }
    Ok(snapshot_id)
}

fn build(profile: &RepositoryProfile, records: &[termrec_core::corpus::DcRecord]) -> Result<ModelSnapshot, Stage> {
    let fail = stage("build");
    let corpus = build_corpus(records, &profile.analyzer, &profile.subject_split, profile.uploaded_vocabulary.as_ref())
        .map_err(|e| fail(e.to_string()))?;
    ModelSnapshot::build(
        profile.repository_id.clone(),
        corpus,
        profile.analyzer.clone(),
        IndexConfig { min_cooccurrence: profile.min_cooccurrence },
        profile.chosen_metric,
    )
    .map_err(|e| fail(e.to_string()))
}
