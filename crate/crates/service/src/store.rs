//! Embedded SQLite store.
//!
//! Schema:
//!
//! | table              | key                          | contents                         |
//! |--------------------|------------------------------|----------------------------------|
//! | `accounts`         | `account_id`                 | username, password digest, email |
//! | `api_keys`         | `digest` (SHA-256 of key)    | owner, active flag               |
//! | `repositories`     | `repository_id`              | owner, profile as JSON           |
//! | `records`          | (`repository_id`, identifier)| harvested record as JSON         |
//! | `jobs`             | `job_id`                     | state, counters, timestamps      |
//! | `snapshots`        | `snapshot_id`                | serialized model                 |
//! | `current_snapshot` | `repository_id`              | published `snapshot_id`          |

use std::path::Path;
use std::sync::{Mutex, MutexGuard};

use chrono::{DateTime, Utc};
use rusqlite::{params, Connection, OptionalExtension};
use termrec_core::corpus::DcRecord;
use termrec_core::engine::ModelSnapshot;
use thiserror::Error;

use crate::auth::digests_match;
use crate::domain::{Account, HarvestJob, JobMode, JobState, RepositoryProfile};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store: {0}")]
    Sql(#[from] rusqlite::Error),
    #[error("store: corrupt row: {0}")]
    Corrupt(String),
    #[error("username already taken")]
    DuplicateUsername,
}

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS accounts (
    account_id TEXT PRIMARY KEY,
    username TEXT NOT NULL UNIQUE,
    password_digest TEXT NOT NULL,
    email TEXT NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS api_keys (
    digest BLOB PRIMARY KEY,
    account_id TEXT NOT NULL REFERENCES accounts(account_id),
    active INTEGER NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS repositories (
    repository_id TEXT PRIMARY KEY,
    account_id TEXT NOT NULL REFERENCES accounts(account_id),
    profile TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS records (
    repository_id TEXT NOT NULL,
    identifier TEXT NOT NULL,
    record TEXT NOT NULL,
    PRIMARY KEY (repository_id, identifier)
);
CREATE TABLE IF NOT EXISTS jobs (
    job_id TEXT PRIMARY KEY,
    repository_id TEXT NOT NULL,
    mode TEXT NOT NULL,
    state TEXT NOT NULL,
    records_seen INTEGER NOT NULL,
    error TEXT,
    snapshot_id TEXT,
    created_at TEXT NOT NULL,
    started_at TEXT,
    finished_at TEXT
);
CREATE INDEX IF NOT EXISTS jobs_by_repository ON jobs(repository_id);
CREATE TABLE IF NOT EXISTS snapshots (
    snapshot_id TEXT PRIMARY KEY,
    repository_id TEXT NOT NULL,
    built_at TEXT NOT NULL,
    model BLOB NOT NULL
);
CREATE TABLE IF NOT EXISTS current_snapshot (
    repository_id TEXT PRIMARY KEY,
    snapshot_id TEXT NOT NULL REFERENCES snapshots(snapshot_id)
);
";

pub struct Store {
    conn: Mutex<Connection>,
}

fn ts(t: DateTime<Utc>) -> String {
    t.to_rfc3339()
}

fn parse_ts(s: &str) -> Result<DateTime<Utc>, StoreError> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| StoreError::Corrupt(format!("timestamp '{s}': {e}")))
}

fn corrupt(e: impl std::fmt::Display) -> StoreError {
    StoreError::Corrupt(e.to_string())
}

impl Store {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let conn = Connection::open(path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.pragma_update(None, "synchronous", "NORMAL")?;
        conn.pragma_update(None, "foreign_keys", "ON")?;
        Self::init(conn)
    }

    pub fn open_in_memory() -> Result<Self, StoreError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self, StoreError> {
        conn.execute_batch(SCHEMA)?;
        Ok(Store { conn: Mutex::new(conn) })
    }

    fn conn(&self) -> MutexGuard<'_, Connection> {
        self.conn.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Creates an account together with its first key.
    pub fn create_account(&self, account: &Account, key_digest: &[u8; 32]) -> Result<(), StoreError> {
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let inserted = tx.execute(
            "INSERT INTO accounts (account_id, username, password_digest, email, created_at)
             VALUES (?1, ?2, ?3, ?4, ?5) ON CONFLICT(username) DO NOTHING",
            params![
                account.account_id,
                account.username,
                account.password_digest,
                account.email,
                ts(account.created_at)
            ],
        )?;
        if inserted == 0 {
            return Err(StoreError::DuplicateUsername);
        }
        tx.execute(
            "INSERT INTO api_keys (digest, account_id, active, created_at) VALUES (?1, ?2, 1, ?3)",
            params![&key_digest[..], account.account_id, ts(account.created_at)],
        )?;
        tx.commit()?;
        Ok(())
    }

    pub fn account(&self, account_id: &str) -> Result<Option<Account>, StoreError> {
        self.conn()
            .query_row(
                "SELECT account_id, username, password_digest, email, created_at FROM accounts WHERE account_id = ?1",
                [account_id],
                |r| {
                    Ok((
                        r.get::<_, String>(0)?,
                        r.get::<_, String>(1)?,
                        r.get::<_, String>(2)?,
                        r.get::<_, String>(3)?,
                        r.get::<_, String>(4)?,
                    ))
                },
            )
            .optional()?
            .map(|(account_id, username, password_digest, email, created)| {
                Ok(Account { account_id, username, password_digest, email, created_at: parse_ts(&created)? })
            })
            .transpose()
    }

    pub fn add_key(&self, account_id: &str, key_digest: &[u8; 32]) -> Result<(), StoreError> {
        self.conn().execute(
            "INSERT INTO api_keys (digest, account_id, active, created_at) VALUES (?1, ?2, 1, ?3)",
            params![&key_digest[..], account_id, ts(Utc::now())],
        )?;
        Ok(())
    }

    pub fn revoke_key(&self, key_digest: &[u8; 32]) -> Result<bool, StoreError> {
        let n = self.conn().execute("UPDATE api_keys SET active = 0 WHERE digest = ?1", [&key_digest[..]])?;
        Ok(n > 0)
    }

    /// Owner of an active key.
    pub fn key_owner(&self, key_digest: &[u8; 32]) -> Result<Option<String>, StoreError> {
        let row = self
            .conn()
            .prepare_cached("SELECT digest, account_id FROM api_keys WHERE digest = ?1 AND active = 1")?
            .query_row([&key_digest[..]], |r| Ok((r.get::<_, Vec<u8>>(0)?, r.get::<_, String>(1)?)))
            .optional()?;
        Ok(row.and_then(|(stored, owner)| digests_match(&stored, key_digest).then_some(owner)))
    }

    pub fn put_repository(&self, profile: &RepositoryProfile) -> Result<(), StoreError> {
        let json = serde_json::to_string(profile).map_err(corrupt)?;
        self.conn().execute(
            "INSERT INTO repositories (repository_id, account_id, profile) VALUES (?1, ?2, ?3)
             ON CONFLICT(repository_id) DO UPDATE SET profile = excluded.profile",
            params![profile.repository_id, profile.account_id, json],
        )?;
        Ok(())
    }

    pub fn repository(&self, repository_id: &str) -> Result<Option<RepositoryProfile>, StoreError> {
        self.conn()
            .query_row("SELECT profile FROM repositories WHERE repository_id = ?1", [repository_id], |r| {
                r.get::<_, String>(0)
            })
            .optional()?
            .map(|json| serde_json::from_str(&json).map_err(corrupt))
            .transpose()
    }

    pub fn repositories_of(&self, account_id: &str) -> Result<Vec<RepositoryProfile>, StoreError> {
        let conn = self.conn();
        let mut stmt = conn.prepare("SELECT profile FROM repositories WHERE account_id = ?1 ORDER BY rowid")?;
        let rows = stmt.query_map([account_id], |r| r.get::<_, String>(0))?;
        rows.map(|row| serde_json::from_str(&row?).map_err(corrupt)).collect()
    }

    pub fn all_repository_ids(&self) -> Result<Vec<String>, StoreError> {
        let conn = self.conn();
        let mut stmt = conn.prepare("SELECT repository_id FROM repositories ORDER BY rowid")?;
        let ids = stmt.query_map([], |r| r.get(0))?.collect::<Result<_, _>>()?;
        Ok(ids)
    }

    /// Applies a harvest: upserts live records and removes deleted ones.
    /// A full harvest replaces everything stored for the repository.
    pub fn apply_harvest(
        &self,
        repository_id: &str,
        full: bool,
        live: &[DcRecord],
        deleted: &[String],
    ) -> Result<(), StoreError> {
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        if full {
            tx.execute("DELETE FROM records WHERE repository_id = ?1", [repository_id])?;
        }
        {
            let mut upsert = tx.prepare(
                "INSERT INTO records (repository_id, identifier, record) VALUES (?1, ?2, ?3)
                 ON CONFLICT(repository_id, identifier) DO UPDATE SET record = excluded.record",
            )?;
            for record in live {
                let json = serde_json::to_string(record).map_err(corrupt)?;
                upsert.execute(params![repository_id, record.identifier, json])?;
            }
            let mut delete = tx.prepare("DELETE FROM records WHERE repository_id = ?1 AND identifier = ?2")?;
            for id in deleted {
                delete.execute(params![repository_id, id])?;
            }
        }
        tx.commit()?;
        Ok(())
    }

    pub fn records(&self, repository_id: &str) -> Result<Vec<DcRecord>, StoreError> {
        let conn = self.conn();
        let mut stmt = conn.prepare("SELECT record FROM records WHERE repository_id = ?1 ORDER BY identifier")?;
        let rows = stmt.query_map([repository_id], |r| r.get::<_, String>(0))?;
        rows.map(|row| serde_json::from_str(&row?).map_err(corrupt)).collect()
    }

    pub fn insert_job(&self, job: &HarvestJob) -> Result<(), StoreError> {
        self.conn().execute(
            "INSERT INTO jobs (job_id, repository_id, mode, state, records_seen, created_at)
             VALUES (?1, ?2, ?3, ?4, 0, ?5)",
            params![
                job.job_id,
                job.repository_id,
                serde_json::to_value(job.mode).map_err(corrupt)?.as_str(),
                job.state.tag(),
                ts(job.created_at)
            ],
        )?;
        Ok(())
    }

    pub fn update_job(&self, job: &HarvestJob) -> Result<(), StoreError> {
        self.conn().execute(
            "UPDATE jobs SET state = ?2, records_seen = ?3, error = ?4, snapshot_id = ?5,
                 started_at = ?6, finished_at = ?7 WHERE job_id = ?1",
            params![
                job.job_id,
                job.state.tag(),
                job.records_seen as i64,
                job.error,
                job.snapshot_id,
                job.started_at.map(ts),
                job.finished_at.map(ts)
            ],
        )?;
        Ok(())
    }

    pub fn set_records_seen(&self, job_id: &str, n: u64) -> Result<(), StoreError> {
        self.conn().execute("UPDATE jobs SET records_seen = ?2 WHERE job_id = ?1", params![job_id, n as i64])?;
        Ok(())
    }

    pub fn job(&self, job_id: &str) -> Result<Option<HarvestJob>, StoreError> {
        let conn = self.conn();
        let row = conn
            .query_row(
                "SELECT job_id, repository_id, mode, state, records_seen, error, snapshot_id,
                        created_at, started_at, finished_at FROM jobs WHERE job_id = ?1",
                [job_id],
                |r| {
                    Ok((
                        r.get::<_, String>(0)?,
                        r.get::<_, String>(1)?,
                        r.get::<_, String>(2)?,
                        r.get::<_, String>(3)?,
                        r.get::<_, i64>(4)?,
                        r.get::<_, Option<String>>(5)?,
                        r.get::<_, Option<String>>(6)?,
                        r.get::<_, String>(7)?,
                        r.get::<_, Option<String>>(8)?,
                        r.get::<_, Option<String>>(9)?,
                    ))
                },
            )
            .optional()?;
        let Some((job_id, repository_id, mode, state, seen, error, snapshot_id, created, started, finished)) = row
        else {
            return Ok(None);
        };
        Ok(Some(HarvestJob {
            job_id,
            repository_id,
            mode: mode.parse::<JobMode>().map_err(StoreError::Corrupt)?,
            state: state.parse::<JobState>().map_err(StoreError::Corrupt)?,
            records_seen: seen as u64,
            error,
            snapshot_id,
            created_at: parse_ts(&created)?,
            started_at: started.as_deref().map(parse_ts).transpose()?,
            finished_at: finished.as_deref().map(parse_ts).transpose()?,
        }))
    }

    /// Marks jobs left unfinished by a previous process as failed.
    pub fn fail_unfinished_jobs(&self, message: &str) -> Result<usize, StoreError> {
        let n = self.conn().execute(
            "UPDATE jobs SET state = 'failed', error = ?1, finished_at = ?2
             WHERE state NOT IN ('done', 'failed')",
            params![message, ts(Utc::now())],
        )?;
        Ok(n)
    }

    /// Stores a snapshot and makes it the repository's current one in a
    /// single transaction.
    pub fn publish_snapshot(&self, snapshot: &ModelSnapshot) -> Result<(), StoreError> {
        let bytes = snapshot.to_bytes();
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        tx.execute(
            "INSERT INTO snapshots (snapshot_id, repository_id, built_at, model) VALUES (?1, ?2, ?3, ?4)",
            params![snapshot.snapshot_id, snapshot.repository_id, ts(snapshot.built_at), bytes],
        )?;
        tx.execute(
            "INSERT INTO current_snapshot (repository_id, snapshot_id) VALUES (?1, ?2)
             ON CONFLICT(repository_id) DO UPDATE SET snapshot_id = excluded.snapshot_id",
            params![snapshot.repository_id, snapshot.snapshot_id],
        )?;
        // older snapshots are no longer reachable
        tx.execute(
            "DELETE FROM snapshots WHERE repository_id = ?1 AND snapshot_id <> ?2",
            params![snapshot.repository_id, snapshot.snapshot_id],
        )?;
        tx.commit()?;
        Ok(())
    }

    pub fn current_snapshot(&self, repository_id: &str) -> Result<Option<ModelSnapshot>, StoreError> {
        let bytes = self
            .conn()
            .query_row(
                "SELECT s.model FROM current_snapshot c JOIN snapshots s ON s.snapshot_id = c.snapshot_id
                 WHERE c.repository_id = ?1",
                [repository_id],
                |r| r.get::<_, Vec<u8>>(0),
            )
            .optional()?;
        bytes.map(|b| ModelSnapshot::from_bytes(&b).map_err(corrupt)).transpose()
    }
}
