//! Experiment configuration: a strict JSON file with snake_case fields.
//! Unknown fields are rejected so typos cannot silently fall back to
//! defaults.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::synth::SyntheticSpec;

fn default_seeds() -> Vec<u64> {
    (1..=10).collect()
}

fn default_pool_depth() -> usize {
    100
}

fn default_pca_dims() -> usize {
    200
}

fn default_eval_depth() -> usize {
    1000
}

fn default_run_variants() -> usize {
    4
}

/// One sweep's full parameterization. Data comes either from files
/// (corpus + qrels, plus runs_dir or queries for generated runs) or from a
/// synthetic spec; exactly one of the two modes must be configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Corpus as JSON lines of {"doc_id": ..., "text": ...}.
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    /// Judgements in the 4-column format.
    #[serde(default)]
    pub qrels: Option<PathBuf>,
    /// Query texts as 2-column TSV; required when runs are generated.
    #[serde(default)]
    pub queries: Option<PathBuf>,
    /// Directory of run files in the 6-column format; mutually exclusive
    /// with `queries`.
    #[serde(default)]
    pub runs_dir: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    /// Optional stopword file (one word per line); the bundled SMART list
    /// applies when absent.
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    /// Share of each query's positive judgements kept by subsampling.
    pub qrel_fraction: f64,
    /// Top-percent thresholds to sweep; distinct values in [0, 100].
    pub k_values: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_pool_depth")]
    pub pool_depth: usize,
    #[serde(default = "default_pca_dims")]
    pub pca_dims: usize,
    #[serde(default = "default_eval_depth")]
    pub eval_depth: usize,
    /// When set, candidates come from the first `candidate_cap` qrels of
    /// each query (file order) instead of run pooling.
    #[serde(default)]
    pub candidate_cap: Option<usize>,
    /// Jitter variants per weighting model for generated runs.
    #[serde(default = "default_run_variants")]
    pub run_variants: usize,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).with_path(path))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config {
                path: path.to_path_buf(),
                msg: e.to_string(),
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| {
            Err(Error::InvalidParameter(format!("config: {msg}")))
        };
        if self.synthetic.is_some() {
            if self.corpus.is_some()
                || self.qrels.is_some()
                || self.queries.is_some()
                || self.runs_dir.is_some()
            {
                return fail("synthetic mode excludes corpus/qrels/queries/runs_dir");
            }
        } else {
            if self.corpus.is_none() || self.qrels.is_none() {
                return fail("file mode needs both corpus and qrels");
            }
            if self.queries.is_some() == self.runs_dir.is_some() {
                return fail(
                    "exactly one of queries (generated runs) or runs_dir is required",
                );
            }
        }
        if !(self.qrel_fraction > 0.0 && self.qrel_fraction <= 1.0) {
            return fail("qrel_fraction must lie in (0, 1]");
        }
        if self.k_values.is_empty() {
            return fail("k_values must not be empty");
        }
        let mut seen_k = Vec::new();
        for &k in &self.k_values {
            if !(0.0..=100.0).contains(&k) {
                return fail("every K must lie in [0, 100]");
            }
            if seen_k.contains(&k) {
                return fail("k_values must be distinct");
            }
            seen_k.push(k);
        }
        if self.seeds.is_empty() {
            return fail("seeds must not be empty");
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return fail("seeds must be distinct");
        }
        if self.pool_depth == 0
            || self.pca_dims == 0
            || self.eval_depth == 0
            || self.run_variants == 0
        {
            return fail("pool_depth, pca_dims, eval_depth, run_variants must be >= 1");
        }
        if self.candidate_cap == Some(0) {
            return fail("candidate_cap must be >= 1 when set");
        }
        if let Some(spec) = &self.synthetic {
            spec.validate()?;
        }
        Ok(())
    }
}
