//! Run scoring with mean average precision and system-ranking comparison
//! with Kendall's tau-b.
//!
//! MAP follows the trec_eval conventions: unjudged documents are
//! non-relevant, queries without a positive judgement are excluded from the
//! mean, and judged queries missing from a run contribute zero. Tau-b uses
//! merge-sort inversion counting, so large system sets stay cheap.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formats::{QrelRecord, Run};

/// One run's effectiveness: overall MAP plus the per-query values behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemScore {
    pub run_tag: String,
    pub map: f64,
    pub per_query_ap: BTreeMap<String, f64>,
}

/// Kendall tau-b between two system rankings, with the pair census.
/// `tied` counts pairs tied on either side; the three counts sum to
/// n_systems * (n_systems - 1) / 2.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingComparison {
    pub tau: f64,
    pub n_systems: usize,
    pub concordant: u64,
    pub discordant: u64,
    pub tied: u64,
}

/// AP of one ranking against one query's judgements, evaluated to `depth`.
/// Unjudged documents count as non-relevant; depth 0 yields 0.
pub fn average_precision<S: AsRef<str>>(
    ranked_docs: &[S],
    qrels_for_query: &[QrelRecord],
    depth: usize,
) -> Result<f64> {
    let relevant: HashSet<&str> = qrels_for_query
        .iter()
        .filter(|r| r.is_positive())
        .map(|r| r.doc_id.as_str())
        .collect();
    let r_total = relevant.len();
    if r_total == 0 {
        return Err(Error::NoPositiveQrels(
            "query has no positive judgement".to_string(),
        ));
    }
    let mut seen = HashSet::with_capacity(ranked_docs.len());
    for doc in ranked_docs {
        if !seen.insert(doc.as_ref()) {
            return Err(Error::InvalidRecord(format!(
                "duplicate document '{}' in ranking",
                doc.as_ref()
            )));
        }
    }
    let mut hits = 0usize;
    let mut sum = 0.0f64;
    for (i, doc) in ranked_docs.iter().take(depth).enumerate() {
        if relevant.contains(doc.as_ref()) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / r_total as f64)
}

/// MAP of a run over every query with at least one positive judgement.
/// Judged queries the run never answers score zero.
pub fn mean_average_precision(
    run: &Run,
    qrels: &[QrelRecord],
    depth: usize,
) -> Result<SystemScore> {
    let mut by_query: BTreeMap<&str, Vec<&QrelRecord>> = BTreeMap::new();
    for record in qrels {
        by_query.entry(record.query_id.as_str()).or_default().push(record);
    }
    let mut per_query_ap = BTreeMap::new();
    for (query_id, records) in &by_query {
        if !records.iter().any(|r| r.is_positive()) {
            continue;
        }
        let ap = match run.ranking(query_id) {
            Some(ranking) => {
                let docs: Vec<&str> =
                    ranking.iter().map(|s| s.doc_id.as_str()).collect();
                let owned: Vec<QrelRecord> =
                    records.iter().map(|r| (*r).clone()).collect();
                average_precision(&docs, &owned, depth)?
            }
            None => 0.0,
        };
        per_query_ap.insert(query_id.to_string(), ap);
    }
    if per_query_ap.is_empty() {
        return Err(Error::NoPositiveQrels(
            "qrel set has no positive judgement".to_string(),
        ));
    }
    let map = per_query_ap.values().sum::<f64>() / per_query_ap.len() as f64;
    Ok(SystemScore {
        run_tag: run.tag().to_string(),
        map,
        per_query_ap,
    })
}

/// Score every run and order by MAP descending, run_tag ascending on ties.
pub fn rank_systems(
    runs: &[Run],
    qrels: &[QrelRecord],
    depth: usize,
) -> Result<Vec<SystemScore>> {
    if runs.len() < 2 {
        return Err(Error::InvalidParameter(
            "ranking needs at least 2 runs".to_string(),
        ));
    }
    let mut tags = HashSet::new();
    for run in runs {
        if !tags.insert(run.tag()) {
            return Err(Error::InvalidRecord(format!(
                "duplicate run tag '{}'",
                run.tag()
            )));
        }
    }
    let mut scores: Vec<SystemScore> = runs
        .par_iter()
        .map(|run| mean_average_precision(run, qrels, depth))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| {
        b.map
            .total_cmp(&a.map)
            .then_with(|| a.run_tag.cmp(&b.run_tag))
    });
    Ok(scores)
}

/// Kendall tau-b over the MAP values of two rankings of the same systems:
/// (C - D) / sqrt((C + D + T_a)(C + D + T_b)), where T_a and T_b count
/// pairs tied only on that side.
pub fn kendall_tau(
    scores_a: &[SystemScore],
    scores_b: &[SystemScore],
) -> Result<RankingComparison> {
    let map_of = |scores: &[SystemScore]| -> Result<BTreeMap<String, f64>> {
        let mut m = BTreeMap::new();
        for s in scores {
            if m.insert(s.run_tag.clone(), s.map).is_some() {
                return Err(Error::InvalidRecord(format!(
                    "duplicate run tag '{}'",
                    s.run_tag
                )));
            }
        }
        Ok(m)
    };
    let a = map_of(scores_a)?;
    let b = map_of(scores_b)?;
    if a.keys().ne(b.keys()) {
        let only: BTreeSet<&String> = a
            .keys()
            .collect::<BTreeSet<_>>()
            .symmetric_difference(&b.keys().collect())
            .copied()
            .collect();
        return Err(Error::InvalidRecord(format!(
            "system rankings cover different run tags: {only:?}"
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "tau needs at least 2 systems".to_string(),
        ));
    }
    let mut pairs: Vec<(f64, f64)> = a
        .keys()
        .map(|tag| (a[tag], b[tag]))
        .collect();
    let all_tied = |values: &mut dyn Iterator<Item = f64>| -> bool {
        let mut it = values.peekable();
        let first = *it.peek().expect("n >= 2");
        it.all(|v| v == first)
    };
    if all_tied(&mut pairs.iter().map(|p| p.0)) || all_tied(&mut pairs.iter().map(|p| p.1)) {
        return Err(Error::UndefinedTau(
            "all MAP values tied on one side".to_string(),
        ));
    }

    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let tie_pairs = |mut counts: Vec<u64>| -> u64 {
        counts.drain(..).map(|m| m * (m - 1) / 2).sum()
    };
    fn group_sizes<K: PartialEq>(
        pairs: &[(f64, f64)],
        key: impl Fn(&(f64, f64)) -> K,
    ) -> Vec<u64> {
        let mut sizes = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let k = key(&pairs[i]);
            let mut j = i + 1;
            while j < pairs.len() && key(&pairs[j]) == k {
                j += 1;
            }
            sizes.push((j - i) as u64);
            i = j;
        }
        sizes
    }
    let t_x = tie_pairs(group_sizes(&pairs, |p| p.0));
    let t_xy = tie_pairs(group_sizes(&pairs, |p| *p));
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    ys.sort_by(f64::total_cmp);
    let t_y = {
        let mut sizes = Vec::new();
        let mut i = 0;
        while i < ys.len() {
            let mut j = i + 1;
            while j < ys.len() && ys[j] == ys[i] {
                j += 1;
            }
            sizes.push((j - i) as u64);
            i = j;
        }
        tie_pairs(sizes)
    };

    let mut y_order: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let discordant = count_inversions(&mut y_order);
    let tot = (n as u64) * (n as u64 - 1) / 2;
    let tied = t_x + t_y - t_xy;
    let concordant = tot - tied - discordant;
    let c_minus_d = concordant as f64 - discordant as f64;
    let denom = (((tot - t_x) as f64) * ((tot - t_y) as f64)).sqrt();
    let tau = (c_minus_d / denom).clamp(-1.0, 1.0);
    Ok(RankingComparison {
        tau,
        n_systems: n,
        concordant,
        discordant,
        tied,
    })
}

/// Count pairs i < j with values[i] > values[j] by merge sort.
fn count_inversions(values: &mut [f64]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inversions =
        count_inversions(&mut values[..mid]) + count_inversions(&mut values[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if values[i] <= values[j] {
            merged.push(values[i]);
            i += 1;
        } else {
            inversions += (mid - i) as u64;
            merged.push(values[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&values[i..mid]);
    merged.extend_from_slice(&values[j..]);
    values.copy_from_slice(&merged);
    inversions
}

/// CSV export: run_tag,map with 9-decimal MAP, in the given order.
pub fn write_system_scores_csv(w: &mut impl Write, scores: &[SystemScore]) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["run_tag", "map"])?;
    for s in scores {
        out.write_record([s.run_tag.as_str(), &format!("{:.9}", s.map)])?;
    }
    out.flush()?;
    Ok(())
}

/// Long-format CSV export: run_tag,query_id,ap with 9-decimal AP.
pub fn write_per_query_ap_csv(w: &mut impl Write, scores: &[SystemScore]) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["run_tag", "query_id", "ap"])?;
    for s in scores {
        for (query_id, ap) in &s.per_query_ap {
            out.write_record([
                s.run_tag.as_str(),
                query_id.as_str(),
                &format!("{ap:.9}"),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
