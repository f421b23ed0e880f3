use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use termrec_core::corpus::{ControlledVocabulary, SubjectSplitConfig};
use termrec_core::engine::Metric;
use termrec_core::oai::OaiEndpoint;
use termrec_core::text::AnalyzerConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub account_id: String,
    pub username: String,
    #[serde(skip)]
    pub password_digest: String,
    pub email: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepositoryProfile {
    pub repository_id: String,
    pub account_id: String,
    pub repository_name: String,
    pub endpoint: OaiEndpoint,
    pub analyzer: AnalyzerConfig,
    pub subject_split: SubjectSplitConfig,
    pub min_cooccurrence: u32,
    pub uploaded_vocabulary: Option<ControlledVocabulary>,
    pub chosen_metric: Metric,
    /// Latest record datestamp seen by a harvest; incremental jobs ask
    /// for anything newer.
    pub last_harvest: Option<DateTime<Utc>>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobMode {
    Full,
    Incremental,
}

impl FromStr for JobMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(JobMode::Full),
            "incremental" => Ok(JobMode::Incremental),
            other => Err(format!("unknown job mode '{other}' (expected full or incremental)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Harvesting,
    Building,
    Done,
    Failed,
}

impl JobState {
    pub fn tag(self) -> &'static str {
        match self {
            JobState::Queued => "queued",
            JobState::Harvesting => "harvesting",
            JobState::Building => "building",
            JobState::Done => "done",
            JobState::Failed => "failed",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }

    /// Allowed moves: queued → harvesting → building → done, and any
    /// non-terminal state → failed.
    pub fn can_move_to(self, next: JobState) -> bool {
        use JobState::*;
        matches!(
            (self, next),
            (Queued, Harvesting) | (Harvesting, Building) | (Building, Done) | (Queued | Harvesting | Building, Failed)
        )
    }
}

impl fmt::Display for JobState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for JobState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "queued" => JobState::Queued,
            "harvesting" => JobState::Harvesting,
            "building" => JobState::Building,
            "done" => JobState::Done,
            "failed" => JobState::Failed,
            other => return Err(format!("unknown job state '{other}'")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestJob {
    pub job_id: String,
    pub repository_id: String,
    pub mode: JobMode,
    pub state: JobState,
    pub records_seen: u64,
    pub error: Option<String>,
    pub snapshot_id: Option<String>,
    pub created_at: DateTime<Utc>,
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
}
