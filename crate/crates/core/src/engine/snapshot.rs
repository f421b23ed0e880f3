use std::io::{Read, Write};

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CooccurrenceIndex, EngineError, IndexConfig, Metric};
use crate::corpus::{ControlledVocabulary, Corpus};
use crate::text::AnalyzerConfig;

const MAGIC: &[u8; 8] = b"TERMREC\0";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a model file")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A published, immutable recommender model for one repository.
///
/// The corpus is kept alongside the index so bibliometric queries can be
/// answered from the same snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub snapshot_id: String,
    pub repository_id: String,
    pub index: CooccurrenceIndex,
    pub corpus: Corpus,
    pub analyzer: AnalyzerConfig,
    pub default_metric: Metric,
    pub built_at: DateTime<Utc>,
}

impl ModelSnapshot {
    pub fn build(
        repository_id: impl Into<String>,
        corpus: Corpus,
        analyzer: AnalyzerConfig,
        config: IndexConfig,
        default_metric: Metric,
    ) -> Result<Self, EngineError> {
        let index = CooccurrenceIndex::build_with(&corpus, config)?;
        Ok(ModelSnapshot {
            snapshot_id: uuid::Uuid::new_v4().simple().to_string(),
            repository_id: repository_id.into(),
            index,
            corpus,
            analyzer,
            default_metric,
            built_at: Utc::now().trunc_subsecs(0),
        })
    }

    pub fn vocabulary(&self) -> &ControlledVocabulary {
        self.corpus.vocabulary()
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), SnapshotError> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        bincode::serialize_into(&mut w, self).map_err(|e| SnapshotError::Corrupt(e.to_string()))?;
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, SnapshotError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| SnapshotError::BadMagic)?;
        if &magic != MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let mut version = [0u8; 4];
        r.read_exact(&mut version).map_err(|e| SnapshotError::Corrupt(e.to_string()))?;
        let version = u32::from_le_bytes(version);
        if version != FORMAT_VERSION {
            return Err(SnapshotError::UnsupportedVersion(version));
        }
        bincode::deserialize_from(r).map_err(|e| SnapshotError::Corrupt(e.to_string()))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SnapshotError> {
        Self::read_from(bytes)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), SnapshotError> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SnapshotError> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}
