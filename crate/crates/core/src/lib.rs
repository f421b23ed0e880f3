//! Search term recommendation over OAI-PMH harvested Dublin Core metadata.
//!
//! Pipeline: [`oai`] harvests records, [`corpus`] turns them into documents
//! of analyzed terms ([`text`]) and controlled subject terms, [`engine`]
//! indexes co-occurrences and ranks controlled terms for free-text queries,
//! [`biblio`] answers frequency questions, and [`wire`] renders responses.

pub mod biblio;
pub mod corpus;
pub mod engine;
pub mod oai;
pub mod text;
pub mod wire;
