//! Deterministic synthetic corpus generation: per-query topic clusters over
//! a Zipf background vocabulary, sized for desk-scale experiments.
//!
//! Every query owns a small set of topic terms drawn from the shared
//! vocabulary. Relevant documents mix topic terms (with the configured
//! concentration) into background text; noise documents are background
//! only. One generator stream drawn in a fixed phase order (topics, then
//! relevant documents, then noise) makes output reproducible per seed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{QrelRecord, RawDocument};
use crate::rng::SplitMix64;

/// Topic terms drawn per query; the first few become the query text.
const TOPIC_TERMS: usize = 24;
const QUERY_TERMS: usize = 4;
const DOC_LENGTH_MIN: u64 = 60;
const DOC_LENGTH_SPREAD: u64 = 41;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_queries: usize,
    pub docs_per_topic: usize,
    pub n_noise_docs: usize,
    pub vocabulary_size: usize,
    /// Probability that a relevant-document token comes from the topic
    /// terms instead of the background distribution; in (0, 1].
    pub concentration: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_queries == 0
            || self.docs_per_topic == 0
            || self.n_noise_docs == 0
            || self.vocabulary_size < TOPIC_TERMS
        {
            return Err(Error::InvalidParameter(format!(
                "synthetic spec needs positive sizes and a vocabulary of at \
                 least {TOPIC_TERMS} terms: {self:?}"
            )));
        }
        if !(self.concentration > 0.0 && self.concentration <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "concentration {} outside (0, 1]",
                self.concentration
            )));
        }
        Ok(())
    }
}

/// Zipf(1) sampler over term indices: weight of term i is 1/(i+1).
struct ZipfTable {
    cumulative: Vec<f64>,
}

impl ZipfTable {
    fn new(n: usize) -> ZipfTable {
        let mut cumulative = Vec::with_capacity(n);
        let mut sum = 0.0;
        for i in 0..n {
            sum += 1.0 / (i + 1) as f64;
            cumulative.push(sum);
        }
        ZipfTable { cumulative }
    }

    fn sample(&self, rng: &mut SplitMix64) -> usize {
        let total = *self.cumulative.last().expect("non-empty table");
        let u = rng.next_f64() * total;
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// A generated collection: corpus, query texts, complete judgements.
pub type SyntheticData =
    (Vec<RawDocument>, Vec<(String, String)>, Vec<QrelRecord>);

/// Generate (corpus, queries, qrels). Relevant documents appear first in
/// query order, then the shared noise documents; every relevant document
/// is judged grade 1 for its query.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let vocab: Vec<String> = (0..spec.vocabulary_size)
        .map(|i| format!("w{i:05}"))
        .collect();
    let zipf = ZipfTable::new(spec.vocabulary_size);
    let mut rng = SplitMix64::new(spec.seed);

    let mut topics: Vec<Vec<usize>> = Vec::with_capacity(spec.n_queries);
    let mut queries = Vec::with_capacity(spec.n_queries);
    for q in 0..spec.n_queries {
        let mut terms: Vec<usize> = Vec::with_capacity(TOPIC_TERMS);
        while terms.len() < TOPIC_TERMS {
            let t = zipf.sample(&mut rng);
            if !terms.contains(&t) {
                terms.push(t);
            }
        }
        let text = terms[..QUERY_TERMS]
            .iter()
            .map(|&t| vocab[t].as_str())
            .collect::<Vec<_>>()
            .join(" ");
        queries.push((format!("q{q:03}"), text));
        topics.push(terms);
    }

    let mut corpus = Vec::with_capacity(spec.n_queries * spec.docs_per_topic + spec.n_noise_docs);
    let mut qrels = Vec::new();
    for (q, (query_id, _)) in queries.iter().enumerate() {
        for j in 0..spec.docs_per_topic {
            let doc_id = format!("{query_id}.r{j:03}");
            let length = DOC_LENGTH_MIN + rng.next_below(DOC_LENGTH_SPREAD);
            let mut words = Vec::with_capacity(length as usize);
            for _ in 0..length {
                let term = if rng.next_f64() < spec.concentration {
                    topics[q][rng.next_below(TOPIC_TERMS as u64) as usize]
                } else {
                    zipf.sample(&mut rng)
                };
                words.push(vocab[term].as_str());
            }
            corpus.push(RawDocument {
                doc_id: doc_id.clone(),
                text: words.join(" "),
            });
            qrels.push(QrelRecord {
                query_id: query_id.clone(),
                doc_id,
                relevance: 1,
            });
        }
    }
    for i in 0..spec.n_noise_docs {
        let length = DOC_LENGTH_MIN + rng.next_below(DOC_LENGTH_SPREAD);
        let words: Vec<&str> = (0..length)
            .map(|_| vocab[zipf.sample(&mut rng)].as_str())
            .collect();
        corpus.push(RawDocument {
            doc_id: format!("noise.{i:05}"),
            text: words.join(" "),
        });
    }
    Ok((corpus, queries, qrels))
}
