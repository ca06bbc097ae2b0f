//! Parsers and writers for TREC qrels files, TREC run files, OHSUMED-style
//! field-tagged collections, and TREC SGML collections.
//!
//! All parsers take the full file content as a string (callers read bytes and
//! replace invalid UTF-8) and are pure. Writers emit LF line endings and a
//! canonical ordering so that write -> parse -> write is byte-identical.

mod ohsumed;
mod qrels;
mod run;
mod trec_sgml;

pub use ohsumed::parse_ohsumed;
pub use qrels::{parse_qrels, write_qrels, QrelRecord};
pub use run::{parse_run, write_run, Run, RunEntry, ScoredDoc};
pub use trec_sgml::parse_trec_sgml;

use crate::error::{Error, Result};

/// One document as ingested from a collection: its id and the text the
/// pipeline will tokenize (for OHSUMED the abstract only, for TREC SGML the
/// surviving non-markup lines).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RawDocument {
    pub doc_id: String,
    pub text: String,
}

/// Shared id validation: ids are whitespace-free non-empty tokens in every
/// format this crate reads or writes.
pub(crate) fn check_id(kind: &str, id: &str) -> Result<()> {
    if id.is_empty() {
        return Err(Error::InvalidRecord(format!("empty {kind}")));
    }
    if id.chars().any(char::is_whitespace) {
        return Err(Error::InvalidRecord(format!(
            "{kind} {id:?} contains whitespace"
        )));
    }
    Ok(())
}
