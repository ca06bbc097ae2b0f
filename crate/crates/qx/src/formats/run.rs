use std::collections::{BTreeMap, HashSet};

use super::check_id;
use crate::error::{Error, Result};

/// One line of a TREC run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub query_id: String,
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
    pub run_tag: String,
}

/// One retrieved document with its score, held inside a [`Run`] in rank
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// One system's output: a tag plus, per query, documents in canonical rank
/// order (score descending, doc_id ascending on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    tag: String,
    rankings: BTreeMap<String, Vec<ScoredDoc>>,
}

impl Run {
    /// Build a run from per-query scored documents. Lists are re-sorted
    /// canonically; duplicate documents within a query and non-finite scores
    /// are rejected.
    pub fn from_rankings(
        tag: impl Into<String>,
        rankings: BTreeMap<String, Vec<ScoredDoc>>,
    ) -> Result<Run> {
        let tag = tag.into();
        check_id("run_tag", &tag)?;
        let mut canonical = BTreeMap::new();
        for (query_id, mut docs) in rankings {
            check_id("query_id", &query_id)?;
            let mut seen = HashSet::new();
            for d in &docs {
                check_id("doc_id", &d.doc_id)?;
                if !d.score.is_finite() {
                    return Err(Error::InvalidRecord(format!(
                        "non-finite score for query {query_id}, document {}",
                        d.doc_id
                    )));
                }
                if !seen.insert(d.doc_id.clone()) {
                    return Err(Error::DuplicateDocument {
                        run_tag: tag.clone(),
                        query_id: query_id.clone(),
                        doc_id: d.doc_id.clone(),
                    });
                }
            }
            sort_canonical(&mut docs);
            if docs.is_empty() {
                continue;
            }
            canonical.insert(query_id, docs);
        }
        Ok(Run {
            tag,
            rankings: canonical,
        })
    }

    /// Group a flat entry list (as produced by [`parse_run`]) into one Run
    /// per tag, tags in ascending order. Ranks are recomputed from scores.
    pub fn group_entries(entries: &[RunEntry]) -> Result<Vec<Run>> {
        let mut by_tag: BTreeMap<&str, BTreeMap<String, Vec<ScoredDoc>>> = BTreeMap::new();
        for e in entries {
            by_tag
                .entry(&e.run_tag)
                .or_default()
                .entry(e.query_id.clone())
                .or_default()
                .push(ScoredDoc {
                    doc_id: e.doc_id.clone(),
                    score: e.score,
                });
        }
        by_tag
            .into_iter()
            .map(|(tag, rankings)| Run::from_rankings(tag, rankings))
            .collect()
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn ranking(&self, query_id: &str) -> Option<&[ScoredDoc]> {
        self.rankings.get(query_id).map(Vec::as_slice)
    }

    pub fn rankings(&self) -> impl Iterator<Item = (&str, &[ScoredDoc])> {
        self.rankings.iter().map(|(q, d)| (q.as_str(), d.as_slice()))
    }

    pub fn n_entries(&self) -> usize {
        self.rankings.values().map(Vec::len).sum()
    }

    /// Flatten to entries with 1-based ranks, queries ascending.
    pub fn to_entries(&self) -> Vec<RunEntry> {
        let mut out = Vec::with_capacity(self.n_entries());
        for (query_id, docs) in &self.rankings {
            for (i, d) in docs.iter().enumerate() {
                out.push(RunEntry {
                    query_id: query_id.clone(),
                    doc_id: d.doc_id.clone(),
                    rank: (i + 1) as u32,
                    score: d.score,
                    run_tag: self.tag.clone(),
                });
            }
        }
        out
    }
}

fn sort_canonical(docs: &mut [ScoredDoc]) {
    docs.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
}

/// Parse the standard 6-column TREC run format: query_id, "Q0" (ignored),
/// doc_id, rank, score, run_tag. Entries come back grouped by (tag, query)
/// in first-appearance order, each group in canonical rank order. Ranks
/// inconsistent with the score ordering are recomputed with a warning.
pub fn parse_run(input: &str) -> Result<Vec<RunEntry>> {
    struct Group {
        entries: Vec<RunEntry>,
    }
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Group> = BTreeMap::new();
    let mut seen: HashSet<(String, String, String)> = HashSet::new();

    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let rank: u32 = fields[3].parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("rank {:?} is not an integer", fields[3]),
        })?;
        let score: f64 = fields[4].parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("score {:?} is not a number", fields[4]),
        })?;
        if !score.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("score {score} is not finite"),
            });
        }
        let entry = RunEntry {
            query_id: fields[0].to_string(),
            doc_id: fields[2].to_string(),
            rank,
            score,
            run_tag: fields[5].to_string(),
        };
        if !seen.insert((
            entry.run_tag.clone(),
            entry.query_id.clone(),
            entry.doc_id.clone(),
        )) {
            return Err(Error::DuplicateDocument {
                run_tag: entry.run_tag,
                query_id: entry.query_id,
                doc_id: entry.doc_id,
            });
        }
        let key = (entry.run_tag.clone(), entry.query_id.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
            groups.insert(key.clone(), Group { entries: Vec::new() });
        }
        groups.get_mut(&key).unwrap().entries.push(entry);
    }

    let mut out = Vec::new();
    for key in order {
        let mut group = groups.remove(&key).unwrap();
        group.entries.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        let consistent = group
            .entries
            .iter()
            .enumerate()
            .all(|(i, e)| e.rank as usize == i + 1);
        if !consistent {
            log::warn!(
                "run {} query {}: ranks disagree with score order, recomputed",
                key.0,
                key.1
            );
        }
        for (i, e) in group.entries.iter_mut().enumerate() {
            e.rank = (i + 1) as u32;
        }
        out.extend(group.entries);
    }
    Ok(out)
}

/// Round a score to at most 6 significant digits and render it with the
/// fewest decimal digits that reproduce the rounded value.
fn format_score(score: f64) -> String {
    let normalized = if score == 0.0 { 0.0 } else { score };
    let rounded: f64 = format!("{normalized:.5e}").parse().unwrap();
    format!("{rounded}")
}

/// Write entries in the 6-column format: runs in tag order, queries
/// ascending, documents in canonical rank order. Scores are rounded to at
/// most 6 significant digits first and entries re-ranked on the rounded
/// values, so the output always reparses to itself.
pub fn write_run(entries: &[RunEntry]) -> Result<String> {
    for e in entries {
        if e.rank < 1 {
            return Err(Error::InvalidRecord(format!(
                "rank 0 for query {}, document {}",
                e.query_id, e.doc_id
            )));
        }
        if !e.score.is_finite() {
            return Err(Error::InvalidRecord(format!(
                "non-finite score for query {}, document {}",
                e.query_id, e.doc_id
            )));
        }
    }
    let rounded: Vec<RunEntry> = entries
        .iter()
        .map(|e| RunEntry {
            score: format_score(e.score).parse().unwrap(),
            ..e.clone()
        })
        .collect();
    let runs = Run::group_entries(&rounded)?;
    let mut out = String::new();
    for run in runs {
        for e in run.to_entries() {
            out.push_str(&format!(
                "{} Q0 {} {} {} {}\n",
                e.query_id,
                e.doc_id,
                e.rank,
                format_score(e.score),
                e.run_tag
            ));
        }
    }
    Ok(out)
}
