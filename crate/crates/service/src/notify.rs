use serde::Serialize;
use tracing::info;

use crate::domain::JobState;

/// Emitted once per job when it reaches a terminal state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JobEvent {
    pub job_id: String,
    pub repository_id: String,
    pub account_email: String,
    pub state: JobState,
    pub records_seen: u64,
    pub error: Option<String>,
}

/// Delivery of job outcomes to providers. Implementations must not block
/// for long; they run on the job task.
pub trait Notifier: Send + Sync {
    fn job_finished(&self, event: &JobEvent);
}

/// Writes one structured log event per finished job.
#[derive(Debug, Default, Clone, Copy)]
pub struct LogNotifier;

impl Notifier for LogNotifier {
    fn job_finished(&self, event: &JobEvent) {
        info!(
            job_id = %event.job_id,
            repository_id = %event.repository_id,
            email = %event.account_email,
            state = %event.state,
            records_seen = event.records_seen,
            error = event.error.as_deref().unwrap_or(""),
            "job finished"
        );
    }
}
