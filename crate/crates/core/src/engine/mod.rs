//! Co-occurrence index, association measures and ranked recommendations.

pub mod index;
pub mod metrics;
pub mod recommend;
pub mod snapshot;

use thiserror::Error;

pub use index::{CooccurrenceIndex, IndexConfig};
pub use metrics::Metric;
pub use recommend::{
    cloud_weights, expand_query, query_doc_set, recommend, CloudEntry, ExpandedQuery, QueryDocSet, Recommendation,
};
pub use snapshot::{ModelSnapshot, SnapshotError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("unknown term '{0}'")]
    UnknownTerm(String),
    #[error("model too small: NWD needs at least 2 documents, have {n}")]
    ModelTooSmall { n: u32 },
    #[error("query contains no searchable terms")]
    EmptyQuery,
    #[error("corpus has no controlled-term assignments")]
    NoControlledAssignments,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("recommender module '{0}' is not available")]
    ModuleUnavailable(Metric),
    #[error("{0}")]
    InvalidArgument(String),
}
