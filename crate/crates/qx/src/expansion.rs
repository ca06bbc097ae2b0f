//! Candidate pooling, minimum-distance scoring, decile analysis, and
//! pseudo-qrel selection.
//!
//! A candidate pool is the union of top-ranked documents across runs (or a
//! per-query prefix of an existing qrels file). Each pooled (query, doc)
//! pair not already judged positive is scored by its minimum cosine distance
//! to any available positive qrel of the query. The globally sorted pairs
//! feed a decile table (distance versus relevance) and a top-K% cut that
//! becomes pseudo-qrels.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formats::{QrelRecord, Run};
use crate::vectorspace::{cosine_distance, DenseVector};

/// Per-query candidate document sets. Nothing is filtered at pool time;
/// exclusion of already-positive pairs happens during scoring.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidatePool {
    candidates: BTreeMap<String, BTreeSet<String>>,
}

impl CandidatePool {
    /// Assemble a pool from bare (query, doc) pairs, e.g. a pool read back
    /// from disk. Duplicates collapse.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> CandidatePool {
        let mut candidates: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (query_id, doc_id) in pairs {
            candidates.entry(query_id).or_default().insert(doc_id);
        }
        CandidatePool { candidates }
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.candidates.keys().map(String::as_str)
    }

    pub fn docs(&self, query_id: &str) -> Option<&BTreeSet<String>> {
        self.candidates.get(query_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.candidates.iter().map(|(q, d)| (q.as_str(), d))
    }

    /// Total distinct (query, doc) pairs.
    pub fn n_pairs(&self) -> usize {
        self.candidates.values().map(BTreeSet::len).sum()
    }

    pub fn n_queries(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Drop queries outside `keep`. Runs may rank queries that were never
    /// judged; those have no positives to measure distance from.
    pub fn retain_queries(&mut self, keep: &BTreeSet<String>) {
        self.candidates.retain(|q, _| keep.contains(q));
    }
}

/// Union of the top `depth` ranked documents per query over all runs.
pub fn pool_candidates(runs: &[Run], depth: usize) -> Result<CandidatePool> {
    if depth == 0 {
        return Err(Error::InvalidParameter(
            "pool depth must be >= 1".to_string(),
        ));
    }
    let mut candidates: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for run in runs {
        for (query_id, ranking) in run.rankings() {
            let entry = candidates.entry(query_id.to_string()).or_default();
            for scored in ranking.iter().take(depth) {
                entry.insert(scored.doc_id.clone());
            }
        }
    }
    Ok(CandidatePool { candidates })
}

/// Candidate pool built from an existing judgement file instead of runs:
/// the first `cap` records of each query in file order (all records if no
/// cap), mirroring truncated reuse of deep judgement sets.
pub fn candidates_from_qrels(
    qrels: &[QrelRecord],
    cap: Option<usize>,
) -> Result<CandidatePool> {
    if cap == Some(0) {
        return Err(Error::InvalidParameter(
            "candidate cap must be >= 1".to_string(),
        ));
    }
    let mut candidates: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut taken: HashMap<&str, usize> = HashMap::new();
    for record in qrels {
        let count = taken.entry(record.query_id.as_str()).or_insert(0);
        if cap.is_some_and(|c| *count >= c) {
            continue;
        }
        *count += 1;
        candidates
            .entry(record.query_id.clone())
            .or_default()
            .insert(record.doc_id.clone());
    }
    Ok(CandidatePool { candidates })
}

/// A pooled (query, doc) pair with its minimum distance to an available
/// positive qrel of the query.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub query_id: String,
    pub doc_id: String,
    pub min_distance: f64,
}

/// Score every pooled pair not already judged positive by minimum cosine
/// distance to the query's available positive qrels. Output is globally
/// sorted by (distance, query_id, doc_id) ascending.
pub fn score_candidates(
    pool: &CandidatePool,
    positive_qrels: &[QrelRecord],
    vectors: &BTreeMap<String, DenseVector>,
) -> Result<Vec<ScoredCandidate>> {
    let mut positives: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for record in positive_qrels {
        if record.is_positive() {
            positives
                .entry(record.query_id.as_str())
                .or_default()
                .insert(record.doc_id.as_str());
        }
    }

    // Validate up front so failures are deterministic regardless of the
    // parallel schedule below.
    for (query_id, docs) in pool.iter() {
        let query_positives = positives
            .get(query_id)
            .filter(|p| !p.is_empty())
            .ok_or_else(|| Error::NoPositiveQrels(query_id.to_string()))?;
        for doc_id in query_positives.iter().copied().chain(
            docs.iter()
                .map(String::as_str)
                .filter(|d| !query_positives.contains(d)),
        ) {
            if !vectors.contains_key(doc_id) {
                return Err(Error::MissingVector(doc_id.to_string()));
            }
        }
    }

    let queries: Vec<(&str, &BTreeSet<String>)> = pool.iter().collect();
    let per_query: Vec<Vec<ScoredCandidate>> = queries
        .par_iter()
        .map(|(query_id, docs)| -> Result<Vec<ScoredCandidate>> {
            let query_positives = &positives[query_id];
            let positive_vecs: Vec<&DenseVector> = query_positives
                .iter()
                .map(|d| &vectors[*d])
                .collect();
            let mut scored = Vec::new();
            for doc_id in docs.iter() {
                if query_positives.contains(doc_id.as_str()) {
                    continue;
                }
                let vec = &vectors[doc_id.as_str()];
                let mut min_distance = f64::INFINITY;
                for positive in &positive_vecs {
                    let d = cosine_distance(vec, positive)?;
                    if d < min_distance {
                        min_distance = d;
                    }
                }
                scored.push(ScoredCandidate {
                    query_id: query_id.to_string(),
                    doc_id: doc_id.clone(),
                    min_distance,
                });
            }
            Ok(scored)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut scored: Vec<ScoredCandidate> = per_query.into_iter().flatten().collect();
    scored.sort_by(|a, b| {
        a.min_distance
            .total_cmp(&b.min_distance)
            .then_with(|| a.query_id.cmp(&b.query_id))
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    Ok(scored)
}

/// One decile of the distance-sorted candidate list.
#[derive(Debug, Clone, PartialEq)]
pub struct DecileRow {
    /// 1-based decile index; decile 1 holds the smallest distances.
    pub decile: usize,
    pub count: usize,
    pub positive_fraction: f64,
}

/// The ten-row distance-versus-relevance table.
#[derive(Debug, Clone, PartialEq)]
pub struct DecileReport {
    rows: Vec<DecileRow>,
}

impl DecileReport {
    pub fn rows(&self) -> &[DecileRow] {
        &self.rows
    }
}

/// Bin the sorted candidates into ten near-equal deciles and measure the
/// fraction of each that the truth set judges positive. Pairs absent from
/// the truth count as non-relevant. Empty deciles (N < 10) report 0.0.
pub fn decile_table(scored: &[ScoredCandidate], truth: &[QrelRecord]) -> Result<DecileReport> {
    let n = scored.len();
    if n == 0 {
        return Err(Error::EmptyInput(
            "decile table needs at least one scored candidate".to_string(),
        ));
    }
    let truth_positive: HashSet<(&str, &str)> = truth
        .iter()
        .filter(|r| r.is_positive())
        .map(|r| (r.query_id.as_str(), r.doc_id.as_str()))
        .collect();
    let cut = |i: usize| (i * n).div_ceil(10);
    let rows = (1..=10)
        .map(|i| {
            let (lo, hi) = (cut(i - 1), cut(i));
            let count = hi - lo;
            let positive = scored[lo..hi]
                .iter()
                .filter(|c| {
                    truth_positive.contains(&(c.query_id.as_str(), c.doc_id.as_str()))
                })
                .count();
            let positive_fraction = if count == 0 {
                0.0
            } else {
                positive as f64 / count as f64
            };
            DecileRow {
                decile: i,
                count,
                positive_fraction,
            }
        })
        .collect();
    Ok(DecileReport { rows })
}

/// Keep the first floor(K * N / 100) sorted pairs as relevance-1 records.
/// The global sort already resolves boundary ties; output stays in scored
/// order.
pub fn select_pseudo_qrels(
    scored: &[ScoredCandidate],
    top_percent: f64,
) -> Result<Vec<QrelRecord>> {
    if !(0.0..=100.0).contains(&top_percent) {
        return Err(Error::InvalidParameter(format!(
            "top percent {top_percent} outside [0, 100]"
        )));
    }
    let n_take = ((top_percent * scored.len() as f64 / 100.0).floor() as usize).min(scored.len());
    Ok(scored[..n_take]
        .iter()
        .map(|c| QrelRecord {
            query_id: c.query_id.clone(),
            doc_id: c.doc_id.clone(),
            relevance: 1,
        })
        .collect())
}

/// Union of original and pseudo judgements; the original record wins any
/// (query, doc) collision. Output in canonical (query, doc) order.
pub fn merge_qrels(original: &[QrelRecord], pseudo: &[QrelRecord]) -> Vec<QrelRecord> {
    let mut merged: BTreeMap<(&str, &str), &QrelRecord> = BTreeMap::new();
    for record in pseudo.iter().chain(original) {
        merged.insert((record.query_id.as_str(), record.doc_id.as_str()), record);
    }
    merged.into_values().cloned().collect()
}

/// CSV export: query_id,doc_id,min_distance with 9-decimal distances.
pub fn write_scored_csv(w: &mut impl Write, scored: &[ScoredCandidate]) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["query_id", "doc_id", "min_distance"])?;
    for c in scored {
        out.write_record([
            c.query_id.as_str(),
            c.doc_id.as_str(),
            &format!("{:.9}", c.min_distance),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// CSV export: decile,count,positive_fraction with a 9-decimal fraction.
pub fn write_decile_csv(w: &mut impl Write, report: &DecileReport) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["decile", "count", "positive_fraction"])?;
    for row in report.rows() {
        out.write_record([
            row.decile.to_string(),
            row.count.to_string(),
            format!("{:.9}", row.positive_fraction),
        ])?;
    }
    out.flush()?;
    Ok(())
}
