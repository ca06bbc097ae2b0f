//! The experiment sweep: for every (seed, K) cell, subsample the
//! judgements, expand them with pseudo-qrels, rank the systems under both
//! sets, and compare each ranking against the one induced by the complete
//! judgements.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::{kendall_tau, rank_systems, SystemScore};
use crate::expansion::{
    candidates_from_qrels, decile_table, merge_qrels, pool_candidates, score_candidates,
    select_pseudo_qrels, CandidatePool, DecileReport, ScoredCandidate,
};
use crate::formats::{parse_qrels, QrelRecord, RawDocument, Run};
use crate::harness::config::ExperimentConfig;
use crate::harness::dataset::{
    load_runs_dir, load_stopwords, read_corpus_jsonl, read_queries_tsv,
};
use crate::harness::subsample::subsample_qrels;
use crate::harness::synth::generate_synthetic;
use crate::retrieval::{build_index, generate_runs, jitter_variants, WeightingModel};
use crate::vectorspace::{
    build_vocabulary, fit_pca, tfidf_vectors, tokenize, DenseVector,
};

/// One sweep cell. `n_zero_queries` counts judged queries that received no
/// pseudo-qrel, a coverage measure for the expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub seed: u64,
    pub fraction: f64,
    pub k: f64,
    pub tau_baseline: f64,
    pub tau_expanded: f64,
    pub n_pseudo: usize,
    pub n_zero_queries: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Completed cells in (seed, K) order, following config order.
    pub rows: Vec<SweepRow>,
    /// Distance-vs-relevance deciles for the first seed's subsample,
    /// judged against the complete original qrels.
    pub deciles: Option<DecileReport>,
    /// One line per aborted cell or skipped analysis.
    pub diagnostics: Vec<String>,
}

/// The immutable inputs every sweep cell shares.
struct Experiment {
    qrels: Vec<QrelRecord>,
    runs: Vec<Run>,
    pool: CandidatePool,
    vectors: BTreeMap<String, DenseVector>,
    reference: Vec<SystemScore>,
    eval_depth: usize,
}

fn read_qrels_file(path: &Path) -> Result<Vec<QrelRecord>> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).with_path(path))?;
    parse_qrels(&String::from_utf8_lossy(&bytes)).map_err(|e| e.with_path(path))
}

/// (corpus, judgements, query texts when runs must be generated).
type Inputs = (Vec<RawDocument>, Vec<QrelRecord>, Option<Vec<(String, String)>>);

fn load_inputs(config: &ExperimentConfig) -> Result<Inputs> {
    if let Some(spec) = &config.synthetic {
        let (corpus, queries, qrels) = generate_synthetic(spec)?;
        return Ok((corpus, qrels, Some(queries)));
    }
    let corpus = read_corpus_jsonl(config.corpus.as_deref().expect("validated"))?;
    let qrels = read_qrels_file(config.qrels.as_deref().expect("validated"))?;
    let queries = match &config.queries {
        Some(path) => Some(read_queries_tsv(path)?),
        None => None,
    };
    Ok((corpus, qrels, queries))
}

fn assemble(config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let (corpus, qrels, queries) = load_inputs(config)?;
    let stopwords = load_stopwords(config.stopwords.as_deref())?;

    let judged: BTreeSet<String> = qrels
        .iter()
        .filter(|r| r.is_positive())
        .map(|r| r.query_id.clone())
        .collect();
    if judged.is_empty() {
        return Err(Error::InvalidRecord(
            "qrels contain no positive judgements".to_string(),
        ));
    }

    let runs = match &queries {
        Some(queries) => {
            let index = build_index(&corpus, &stopwords)?;
            let base = generate_runs(
                &index,
                &WeightingModel::standard_four(),
                queries,
                config.eval_depth,
            )?;
            jitter_variants(&base, config.run_variants)?
        }
        None => load_runs_dir(config.runs_dir.as_deref().expect("validated"))?,
    };

    let mut pool = match config.candidate_cap {
        Some(cap) => candidates_from_qrels(&qrels, Some(cap))?,
        None => pool_candidates(&runs, config.pool_depth)?,
    };
    pool.retain_queries(&judged);
    if pool.is_empty() {
        return Err(Error::InvalidRecord(
            "candidate pool is empty for every judged query".to_string(),
        ));
    }

    // The reduced space is fit once per experiment, on the union of pooled
    // candidates and judged documents; it does not depend on the seed.
    let mut fit_ids: BTreeSet<&str> = qrels.iter().map(|r| r.doc_id.as_str()).collect();
    for (_, docs) in pool.iter() {
        fit_ids.extend(docs.iter().map(String::as_str));
    }
    let by_id: BTreeMap<&str, &RawDocument> =
        corpus.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut token_docs = Vec::with_capacity(fit_ids.len());
    for &id in &fit_ids {
        let doc = by_id
            .get(id)
            .ok_or_else(|| Error::MissingDocument(id.to_string()))?;
        token_docs.push(tokenize(&doc.text, &stopwords));
    }
    let vocab = build_vocabulary(&token_docs);
    let sparse = tfidf_vectors(&token_docs, &vocab);
    let model = fit_pca(&sparse, vocab.len(), config.pca_dims)?;
    let vectors: BTreeMap<String, DenseVector> = fit_ids
        .iter()
        .zip(&sparse)
        .map(|(&id, v)| Ok((id.to_string(), model.project(v)?)))
        .collect::<Result<_>>()?;

    let reference = rank_systems(&runs, &qrels, config.eval_depth)?;

    Ok(Experiment {
        qrels,
        runs,
        pool,
        vectors,
        reference,
        eval_depth: config.eval_depth,
    })
}

/// Rows for one seed: the baseline ranking once, then one row per K off
/// the same scored candidate list.
fn sweep_seed(
    exp: &Experiment,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(Vec<SweepRow>, Vec<String>, Vec<ScoredCandidate>)> {
    let sub = subsample_qrels(&exp.qrels, config.qrel_fraction, seed)?;
    let baseline = rank_systems(&exp.runs, &sub, exp.eval_depth)?;
    let tau_baseline = kendall_tau(&exp.reference, &baseline)?.tau;
    let scored = score_candidates(&exp.pool, &sub, &exp.vectors)?;
    let judged: BTreeSet<&str> = sub
        .iter()
        .filter(|r| r.is_positive())
        .map(|r| r.query_id.as_str())
        .collect();

    let mut rows = Vec::with_capacity(config.k_values.len());
    let mut diagnostics = Vec::new();
    for &k in &config.k_values {
        match sweep_cell(exp, &sub, &scored, &judged, tau_baseline, seed, k, config) {
            Ok(row) => rows.push(row),
            Err(e) => diagnostics.push(format!("seed {seed} K {k}: {e}")),
        }
    }
    Ok((rows, diagnostics, scored))
}

#[allow(clippy::too_many_arguments)]
fn sweep_cell(
    exp: &Experiment,
    sub: &[QrelRecord],
    scored: &[ScoredCandidate],
    judged: &BTreeSet<&str>,
    tau_baseline: f64,
    seed: u64,
    k: f64,
    config: &ExperimentConfig,
) -> Result<SweepRow> {
    let pseudo = select_pseudo_qrels(scored, k)?;
    let covered: BTreeSet<&str> = pseudo.iter().map(|r| r.query_id.as_str()).collect();
    let n_zero_queries = judged.iter().filter(|q| !covered.contains(*q)).count();
    let merged = merge_qrels(sub, &pseudo);
    let collisions = sub.len() + pseudo.len() - merged.len();
    if collisions > 0 {
        log::debug!("seed {seed} K {k}: {collisions} pseudo-qrels collided with originals");
    }
    let expanded = rank_systems(&exp.runs, &merged, exp.eval_depth)?;
    let tau_expanded = kendall_tau(&exp.reference, &expanded)?.tau;
    Ok(SweepRow {
        seed,
        fraction: config.qrel_fraction,
        k,
        tau_baseline,
        tau_expanded,
        n_pseudo: pseudo.len(),
        n_zero_queries,
    })
}

/// Run the full sweep. `threads` sizes a dedicated scheduler (0 lets it
/// pick); results are identical at any thread count because the per-seed
/// work is independent and reassembled in config order.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| {
        let exp = assemble(config)?;
        let per_seed: Vec<(u64, Result<_>)> = config
            .seeds
            .par_iter()
            .map(|&seed| (seed, sweep_seed(&exp, config, seed)))
            .collect();

        let mut rows = Vec::new();
        let mut diagnostics = Vec::new();
        let mut first_seed_scored = None;
        for (i, (seed, outcome)) in per_seed.into_iter().enumerate() {
            match outcome {
                Ok((seed_rows, seed_diags, scored)) => {
                    rows.extend(seed_rows);
                    diagnostics.extend(seed_diags);
                    if i == 0 {
                        first_seed_scored = Some(scored);
                    }
                }
                Err(e) => diagnostics.push(format!("seed {seed}: {e}")),
            }
        }

        let deciles = match first_seed_scored {
            Some(scored) => match decile_table(&scored, &exp.qrels) {
                Ok(report) => Some(report),
                Err(e) => {
                    diagnostics.push(format!("decile analysis: {e}"));
                    None
                }
            },
            None => None,
        };
        Ok(SweepResult { rows, deciles, diagnostics })
    })
}
