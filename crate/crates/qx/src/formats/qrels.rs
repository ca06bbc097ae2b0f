use std::collections::HashSet;

use super::check_id;
use crate::error::{Error, Result};

/// One (query, document, relevance) judgement. Grade 0 means judged
/// non-relevant; grade >= 1 means relevant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QrelRecord {
    pub query_id: String,
    pub doc_id: String,
    pub relevance: u32,
}

impl QrelRecord {
    pub fn new(
        query_id: impl Into<String>,
        doc_id: impl Into<String>,
        relevance: u32,
    ) -> QrelRecord {
        QrelRecord {
            query_id: query_id.into(),
            doc_id: doc_id.into(),
            relevance,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.relevance >= 1
    }
}

/// Parse the standard 4-column TREC qrels format: query_id, iteration
/// (ignored), doc_id, integer relevance. Blank lines are skipped; input
/// order is preserved. Duplicate (query, doc) pairs are an error.
pub fn parse_qrels(input: &str) -> Result<Vec<QrelRecord>> {
    let mut records = Vec::new();
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let relevance: i64 = fields[3].parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("relevance {:?} is not an integer", fields[3]),
        })?;
        if !(0..=i64::from(u32::MAX)).contains(&relevance) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("relevance {relevance} out of range"),
            });
        }
        if !seen.insert((fields[0], fields[2])) {
            return Err(Error::DuplicateJudgement {
                line: line_no,
                query_id: fields[0].to_string(),
                doc_id: fields[2].to_string(),
            });
        }
        records.push(QrelRecord::new(fields[0], fields[2], relevance as u32));
    }
    Ok(records)
}

/// Write qrels sorted by (query_id, doc_id), one "query_id 0 doc_id grade"
/// line each. Records must satisfy the QrelRecord invariants.
pub fn write_qrels(records: &[QrelRecord]) -> Result<String> {
    let mut sorted: Vec<&QrelRecord> = records.iter().collect();
    sorted.sort();
    let mut out = String::new();
    for (i, r) in sorted.iter().enumerate() {
        check_id("query_id", &r.query_id)?;
        check_id("doc_id", &r.doc_id)?;
        if i > 0 && sorted[i - 1].query_id == r.query_id && sorted[i - 1].doc_id == r.doc_id {
            return Err(Error::InvalidRecord(format!(
                "duplicate judgement for query {}, document {}",
                r.query_id, r.doc_id
            )));
        }
        out.push_str(&format!("{} 0 {} {}\n", r.query_id, r.doc_id, r.relevance));
    }
    Ok(out)
}
