//! A compact inverted-index retrieval engine with four classic weighting
//! models, used to generate system runs where no original runs exist.
//!
//! The models follow their standard published formulas (natural log for the
//! idf-style terms, base-2 logs inside PL2, as published). Seeded score
//! jitter turns each base model into several distinguishable system
//! variants for meta-evaluation experiments.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formats::{check_id, RawDocument, Run, ScoredDoc};
use crate::rng::{fnv1a, SplitMix64};
use crate::vectorspace::tokenize;

const INDEX_MAGIC: &[u8; 4] = b"QXI1";

/// Cap on declared sizes when reading a serialized index; catches corrupt
/// headers before huge allocations.
const MAX_COUNT: u64 = 1 << 32;

/// Relative magnitude of the per-entry score jitter applied to run
/// variants.
const JITTER_SCALE: f64 = 1e-3;

/// Term postings over a tokenized corpus, with the document statistics the
/// weighting models need.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    /// term -> (internal doc id, term frequency), ascending by internal id.
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    doc_lengths: Vec<u32>,
    doc_ids: Vec<String>,
    average_doc_length: f64,
    total_tokens: u64,
}

impl InvertedIndex {
    pub fn n_documents(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn average_doc_length(&self) -> f64 {
        self.average_doc_length
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn doc_id(&self, internal: u32) -> Option<&str> {
        self.doc_ids.get(internal as usize).map(String::as_str)
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    fn from_parts(
        postings: BTreeMap<String, Vec<(u32, u32)>>,
        doc_lengths: Vec<u32>,
        doc_ids: Vec<String>,
    ) -> Result<InvertedIndex> {
        if doc_lengths.len() != doc_ids.len() {
            return Err(Error::InvalidRecord(
                "doc length and id tables differ in size".to_string(),
            ));
        }
        let n = doc_ids.len();
        let mut seen = HashSet::new();
        for id in &doc_ids {
            check_id("doc", id)?;
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidRecord(format!(
                    "duplicate doc id '{id}' in index"
                )));
            }
        }
        for (term, list) in &postings {
            if term.is_empty() || list.is_empty() {
                return Err(Error::InvalidRecord(
                    "empty term or posting list in index".to_string(),
                ));
            }
            for window in list.windows(2) {
                if window[0].0 >= window[1].0 {
                    return Err(Error::InvalidRecord(format!(
                        "postings for '{term}' not strictly ascending"
                    )));
                }
            }
            for &(doc, tf) in list {
                if doc as usize >= n || tf == 0 {
                    return Err(Error::InvalidRecord(format!(
                        "posting ({doc}, {tf}) for '{term}' out of range"
                    )));
                }
            }
        }
        let total_tokens: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let average_doc_length = if n == 0 {
            0.0
        } else {
            total_tokens as f64 / n as f64
        };
        Ok(InvertedIndex {
            postings,
            doc_lengths,
            doc_ids,
            average_doc_length,
            total_tokens,
        })
    }
}

/// Index a corpus: tokenize each document, drop stopwords, count term
/// frequencies. Document length is the indexed token count, so empty and
/// all-stopword documents index with length 0.
pub fn build_index(
    docs: &[RawDocument],
    stopwords: &HashSet<String>,
) -> Result<InvertedIndex> {
    if docs.len() > u32::MAX as usize {
        return Err(Error::InvalidParameter(
            "corpus exceeds the u32 internal id space".to_string(),
        ));
    }
    let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(docs.len());
    let mut doc_ids = Vec::with_capacity(docs.len());
    for (internal, doc) in docs.iter().enumerate() {
        let tokens = tokenize(&doc.text, stopwords);
        doc_lengths.push(tokens.len() as u32);
        doc_ids.push(doc.doc_id.clone());
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for token in tokens {
            *counts.entry(token).or_insert(0) += 1;
        }
        for (term, tf) in counts {
            postings.entry(term).or_default().push((internal as u32, tf));
        }
    }
    InvertedIndex::from_parts(postings, doc_lengths, doc_ids)
}

/// The implemented weighting models with their parameters. TF_IDF uses the
/// Robertson tf normalization internally with the same fixed k1 = 1.2 and
/// b = 0.75 as BM25's defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightingModel {
    TfIdf,
    Bm25 { k1: f64, b: f64 },
    HiemstraLm { lambda: f64 },
    Pl2 { c: f64 },
}

const ROBERTSON_K1: f64 = 1.2;
const ROBERTSON_B: f64 = 0.75;

impl WeightingModel {
    /// The four models at their standard published defaults.
    pub fn standard_four() -> Vec<WeightingModel> {
        vec![
            WeightingModel::TfIdf,
            WeightingModel::Bm25 { k1: 1.2, b: 0.75 },
            WeightingModel::HiemstraLm { lambda: 0.15 },
            WeightingModel::Pl2 { c: 1.0 },
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            WeightingModel::TfIdf => true,
            WeightingModel::Bm25 { k1, b } => {
                k1.is_finite() && k1 > 0.0 && b.is_finite() && b > 0.0 && b <= 1.0
            }
            WeightingModel::HiemstraLm { lambda } => {
                lambda.is_finite() && lambda > 0.0 && lambda < 1.0
            }
            WeightingModel::Pl2 { c } => c.is_finite() && c > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "weighting model parameters out of range: {self:?}"
            )))
        }
    }

    /// Tag naming the model and its parameters, usable as a run tag.
    pub fn tag(&self) -> String {
        match *self {
            WeightingModel::TfIdf => "TF_IDF".to_string(),
            WeightingModel::Bm25 { k1, b } => format!("BM25_k1={k1}_b={b}"),
            WeightingModel::HiemstraLm { lambda } => {
                format!("Hiemstra_LM_lambda={lambda}")
            }
            WeightingModel::Pl2 { c } => format!("PL2_c={c}"),
        }
    }

    /// Score one (term, document) pair. All inputs are >= 1 except the
    /// collection statistics, which are positive whenever the term occurs.
    fn score_term(
        &self,
        tf: u32,
        doc_length: u32,
        df: usize,
        collection_tf: u64,
        index: &InvertedIndex,
    ) -> f64 {
        let tf = tf as f64;
        let dl = doc_length as f64;
        let avdl = index.average_doc_length;
        let n = index.n_documents() as f64;
        let df = df as f64;
        let cf = collection_tf as f64;
        match *self {
            WeightingModel::TfIdf => {
                let robertson = ROBERTSON_K1 * tf
                    / (tf + ROBERTSON_K1 * (1.0 - ROBERTSON_B + ROBERTSON_B * dl / avdl));
                robertson * (1.0 + n / df).ln()
            }
            WeightingModel::Bm25 { k1, b } => {
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                let norm = tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avdl));
                idf * norm
            }
            WeightingModel::HiemstraLm { lambda } => {
                let total = index.total_tokens as f64;
                (1.0 + (lambda * tf * total) / ((1.0 - lambda) * cf * dl)).ln()
            }
            WeightingModel::Pl2 { c } => {
                let tfn = tf * (1.0 + c * avdl / dl).log2();
                let lambda = cf / n;
                (tfn * (tfn / lambda).log2()
                    + (lambda - tfn) * std::f64::consts::LOG2_E
                    + 0.5 * (2.0 * std::f64::consts::PI * tfn).log2())
                    / (tfn + 1.0)
            }
        }
    }
}

/// Score every document sharing a term with the query, sorted by score
/// descending then doc_id ascending, truncated to `depth`. Query terms
/// absent from the index contribute nothing.
pub fn score_query(
    index: &InvertedIndex,
    model: WeightingModel,
    query_tokens: &[String],
    depth: usize,
) -> Result<Vec<(String, f64)>> {
    model.validate()?;
    if depth == 0 {
        return Err(Error::InvalidParameter(
            "retrieval depth must be >= 1".to_string(),
        ));
    }
    let mut query_counts: BTreeMap<&str, u32> = BTreeMap::new();
    for token in query_tokens {
        *query_counts.entry(token.as_str()).or_insert(0) += 1;
    }
    let mut scores: HashMap<u32, f64> = HashMap::new();
    for (term, qtf) in query_counts {
        let Some(list) = index.postings.get(term) else {
            continue;
        };
        let df = list.len();
        let cf: u64 = list.iter().map(|&(_, tf)| tf as u64).sum();
        for &(doc, tf) in list {
            let s = model.score_term(tf, index.doc_lengths[doc as usize], df, cf, index);
            if !s.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite {} score for document {}",
                    model.tag(),
                    index.doc_ids[doc as usize]
                )));
            }
            *scores.entry(doc).or_insert(0.0) += qtf as f64 * s;
        }
    }
    let mut ranked: Vec<(String, f64)> = scores
        .into_iter()
        .map(|(doc, score)| (index.doc_ids[doc as usize].clone(), score))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(depth);
    Ok(ranked)
}

/// One Run per model over the given queries. Query text is tokenized with
/// no stopword list; stopwords never occur in the index, so they drop out
/// as unknown terms anyway.
pub fn generate_runs(
    index: &InvertedIndex,
    models: &[WeightingModel],
    queries: &[(String, String)],
    depth: usize,
) -> Result<Vec<Run>> {
    let mut seen = HashSet::new();
    for (query_id, _) in queries {
        check_id("query_id", query_id)?;
        if !seen.insert(query_id.as_str()) {
            return Err(Error::InvalidRecord(format!(
                "duplicate query id '{query_id}'"
            )));
        }
    }
    let no_stopwords = HashSet::new();
    let tokenized: Vec<(String, Vec<String>)> = queries
        .iter()
        .map(|(query_id, text)| (query_id.clone(), tokenize(text, &no_stopwords)))
        .collect();
    models
        .iter()
        .map(|&model| {
            let rankings: BTreeMap<String, Vec<ScoredDoc>> = tokenized
                .par_iter()
                .map(|(query_id, tokens)| -> Result<(String, Vec<ScoredDoc>)> {
                    let docs = score_query(index, model, tokens, depth)?
                        .into_iter()
                        .map(|(doc_id, score)| ScoredDoc { doc_id, score })
                        .collect();
                    Ok((query_id.clone(), docs))
                })
                .collect::<Result<BTreeMap<_, _>>>()?;
            Run::from_rankings(model.tag(), rankings)
        })
        .collect()
}

/// Expand each run into `n_variants` system variants: variant 0 is the run
/// itself; higher variants multiply every score by (1 + 1e-3 * u) with u in
/// [-1, 1) drawn from a generator seeded by (tag, variant, query, doc), so
/// jitter is deterministic and order-independent.
pub fn jitter_variants(runs: &[Run], n_variants: usize) -> Result<Vec<Run>> {
    if n_variants == 0 {
        return Err(Error::InvalidParameter(
            "variant count must be >= 1".to_string(),
        ));
    }
    let mut out = Vec::with_capacity(runs.len() * n_variants);
    for run in runs {
        for variant in 0..n_variants {
            if variant == 0 {
                out.push(run.clone());
                continue;
            }
            let tag = format!("{}_j{variant}", run.tag());
            let rankings: BTreeMap<String, Vec<ScoredDoc>> = run
                .rankings()
                .map(|(query_id, docs)| {
                    let jittered = docs
                        .iter()
                        .map(|d| {
                            let key = format!(
                                "{}\u{1f}{variant}\u{1f}{query_id}\u{1f}{}",
                                run.tag(),
                                d.doc_id
                            );
                            let mut rng = SplitMix64::new(fnv1a(key.as_bytes()));
                            let u = rng.next_f64() * 2.0 - 1.0;
                            ScoredDoc {
                                doc_id: d.doc_id.clone(),
                                score: d.score * (1.0 + JITTER_SCALE * u),
                            }
                        })
                        .collect();
                    (query_id.to_string(), jittered)
                })
                .collect();
            out.push(Run::from_rankings(tag, rankings)?);
        }
    }
    Ok(out)
}

/// Serialize an index to the QXI1 binary format (little-endian):
/// magic "QXI1", n_docs u64, per doc (id as u32 length + UTF-8, length u32),
/// n_terms u64, per term (term as u32 length + UTF-8, posting count u32,
/// then (doc u32, tf u32) pairs ascending by doc).
pub fn write_index(w: &mut impl Write, index: &InvertedIndex) -> Result<()> {
    w.write_all(INDEX_MAGIC)?;
    w.write_all(&(index.doc_ids.len() as u64).to_le_bytes())?;
    for (id, &len) in index.doc_ids.iter().zip(&index.doc_lengths) {
        write_string(w, id)?;
        w.write_all(&len.to_le_bytes())?;
    }
    w.write_all(&(index.postings.len() as u64).to_le_bytes())?;
    for (term, list) in &index.postings {
        write_string(w, term)?;
        w.write_all(&(list.len() as u32).to_le_bytes())?;
        for &(doc, tf) in list {
            w.write_all(&doc.to_le_bytes())?;
            w.write_all(&tf.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_index(r: &mut impl Read) -> Result<InvertedIndex> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != INDEX_MAGIC {
        return Err(Error::InvalidRecord(format!(
            "bad magic bytes {magic:?}, expected \"QXI1\""
        )));
    }
    let n_docs = read_count(r, "document count")?;
    let mut doc_ids = Vec::with_capacity(n_docs);
    let mut doc_lengths = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        doc_ids.push(read_string(r)?);
        doc_lengths.push(read_u32(r)?);
    }
    let n_terms = read_count(r, "term count")?;
    let mut postings = BTreeMap::new();
    for _ in 0..n_terms {
        let term = read_string(r)?;
        let n = read_u32(r)? as usize;
        let mut list = Vec::with_capacity(n);
        for _ in 0..n {
            let doc = read_u32(r)?;
            let tf = read_u32(r)?;
            list.push((doc, tf));
        }
        if postings.insert(term, list).is_some() {
            return Err(Error::InvalidRecord(
                "duplicate term in serialized index".to_string(),
            ));
        }
    }
    InvertedIndex::from_parts(postings, doc_lengths, doc_ids)
}

fn write_string(w: &mut impl Write, s: &str) -> Result<()> {
    let bytes = s.as_bytes();
    if bytes.len() > u32::MAX as usize {
        return Err(Error::InvalidRecord("string too long".to_string()));
    }
    w.write_all(&(bytes.len() as u32).to_le_bytes())?;
    w.write_all(bytes)?;
    Ok(())
}

fn read_string(r: &mut impl Read) -> Result<String> {
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf)
        .map_err(|_| Error::InvalidRecord("string is not valid UTF-8".to_string()))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_count(r: &mut impl Read, what: &str) -> Result<usize> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let count = u64::from_le_bytes(buf);
    if count > MAX_COUNT {
        return Err(Error::InvalidRecord(format!(
            "implausible {what} {count} in QXI1 header"
        )));
    }
    Ok(count as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn doc(id: &str, text: &str) -> RawDocument {
        RawDocument {
            doc_id: id.to_string(),
            text: text.to_string(),
        }
    }

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn no_stop() -> HashSet<String> {
        HashSet::new()
    }

    #[test]
    fn index_counts_terms_and_lengths() {
        let index = build_index(&[doc("d1", "apple apple pie")], &no_stop()).unwrap();
        assert_eq!(index.n_documents(), 1);
        assert_eq!(index.postings["apple"], vec![(0, 2)]);
        assert_eq!(index.postings["pie"], vec![(0, 1)]);
        assert_eq!(index.doc_lengths, vec![3]);
        assert_eq!(index.total_tokens(), 3);
        assert_relative_eq!(index.average_doc_length(), 3.0);
    }

    #[test]
    fn empty_corpus_indexes_and_answers_nothing() {
        let index = build_index(&[], &no_stop()).unwrap();
        assert_eq!(index.n_documents(), 0);
        let hits = score_query(&index, WeightingModel::TfIdf, &toks(&["apple"]), 10)
            .unwrap();
        assert!(hits.is_empty());
    }

    #[test]
    fn duplicate_doc_id_is_rejected() {
        let docs = [doc("d1", "apple"), doc("d1", "pie")];
        assert!(matches!(
            build_index(&docs, &no_stop()),
            Err(Error::InvalidRecord(_))
        ));
    }

    #[test]
    fn stopwords_and_empty_docs_shrink_lengths() {
        let stop: HashSet<String> = ["the".to_string()].into_iter().collect();
        let index =
            build_index(&[doc("d1", "the apple"), doc("d2", "")], &stop).unwrap();
        assert_eq!(index.doc_lengths, vec![1, 0]);
        assert!(!index.postings.contains_key("the"));
    }

    #[test]
    fn bm25_single_doc_matches_hand_value() {
        let index = build_index(&[doc("d1", "apple")], &no_stop()).unwrap();
        let hits = score_query(
            &index,
            WeightingModel::Bm25 { k1: 1.2, b: 0.75 },
            &toks(&["apple"]),
            10,
        )
        .unwrap();
        assert_eq!(hits.len(), 1);
        assert_relative_eq!(hits[0].1, (4.0f64 / 3.0).ln(), epsilon = 1e-12);
    }

    #[test]
    fn tfidf_matches_direct_formula_evaluation() {
        let index = build_index(&[doc("d1", "apple apple pie")], &no_stop()).unwrap();
        let hits =
            score_query(&index, WeightingModel::TfIdf, &toks(&["apple"]), 10).unwrap();
        // tf 2, dl 3, avdl 3, N 1, df 1.
        let robertson = 1.2 * 2.0 / (2.0 + 1.2 * (1.0 - 0.75 + 0.75));
        let expected = robertson * 2.0f64.ln();
        assert_relative_eq!(hits[0].1, expected, epsilon = 1e-12);
    }

    #[test]
    fn hiemstra_lm_matches_direct_formula_evaluation() {
        let docs = [doc("d1", "apple pie"), doc("d2", "banana split")];
        let index = build_index(&docs, &no_stop()).unwrap();
        let hits = score_query(
            &index,
            WeightingModel::HiemstraLm { lambda: 0.15 },
            &toks(&["apple"]),
            10,
        )
        .unwrap();
        // tf 1, total tokens 4, cf 1, dl 2.
        let expected = (1.0_f64 + (0.15 * 1.0 * 4.0) / (0.85 * 1.0 * 2.0)).ln();
        assert_eq!(hits[0].0, "d1");
        assert_relative_eq!(hits[0].1, expected, epsilon = 1e-12);
    }

    #[test]
    fn pl2_matches_direct_formula_evaluation() {
        let docs = [doc("d1", "apple pie"), doc("d2", "banana split")];
        let index = build_index(&docs, &no_stop()).unwrap();
        let hits = score_query(
            &index,
            WeightingModel::Pl2 { c: 1.0 },
            &toks(&["apple"]),
            10,
        )
        .unwrap();
        // tfn = 1 * log2(1 + 1 * 2/2) = 1; lambda = 1/2.
        let tfn: f64 = 1.0;
        let lambda: f64 = 0.5;
        let expected = (tfn * (tfn / lambda).log2()
            + (lambda - tfn) * std::f64::consts::LOG2_E
            + 0.5 * (2.0 * std::f64::consts::PI * tfn).log2())
            / (tfn + 1.0);
        assert_relative_eq!(hits[0].1, expected, epsilon = 1e-12);
    }

    #[test]
    fn documents_without_query_terms_are_omitted() {
        let docs = [doc("d1", "apple pie"), doc("d2", "banana split")];
        let index = build_index(&docs, &no_stop()).unwrap();
        for model in WeightingModel::standard_four() {
            let hits = score_query(&index, model, &toks(&["apple"]), 10).unwrap();
            assert_eq!(hits.len(), 1, "{}", model.tag());
            assert_eq!(hits[0].0, "d1");
        }
        let hits =
            score_query(&index, WeightingModel::TfIdf, &toks(&["zzz"]), 10).unwrap();
        assert!(hits.is_empty());
    }

    #[test]
    fn ranking_sorts_by_score_then_doc_id_and_truncates() {
        // d1 and d3 are identical, so they tie exactly; d2 matches twice.
        let docs = [
            doc("d3", "apple one two three"),
            doc("d2", "apple apple rest"),
            doc("d1", "apple one two three"),
        ];
        let index = build_index(&docs, &no_stop()).unwrap();
        let model = WeightingModel::Bm25 { k1: 1.2, b: 0.75 };
        let hits = score_query(&index, model, &toks(&["apple"]), 10).unwrap();
        let ids: Vec<&str> = hits.iter().map(|(d, _)| d.as_str()).collect();
        assert_eq!(ids, ["d2", "d1", "d3"]);
        let top = score_query(&index, model, &toks(&["apple"]), 2).unwrap();
        assert_eq!(top.len(), 2);
    }

    #[test]
    fn repeated_query_terms_scale_scores() {
        let index = build_index(&[doc("d1", "apple pie")], &no_stop()).unwrap();
        let model = WeightingModel::Bm25 { k1: 1.2, b: 0.75 };
        let single = score_query(&index, model, &toks(&["apple"]), 10).unwrap();
        let double =
            score_query(&index, model, &toks(&["apple", "apple"]), 10).unwrap();
        assert_relative_eq!(double[0].1, 2.0 * single[0].1, epsilon = 1e-12);
    }

    #[test]
    fn invalid_parameters_and_depth_are_rejected() {
        let index = build_index(&[doc("d1", "apple")], &no_stop()).unwrap();
        for bad in [
            WeightingModel::Bm25 { k1: 0.0, b: 0.75 },
            WeightingModel::Bm25 { k1: 1.2, b: 1.5 },
            WeightingModel::HiemstraLm { lambda: 1.0 },
            WeightingModel::Pl2 { c: -1.0 },
        ] {
            assert!(matches!(
                score_query(&index, bad, &toks(&["apple"]), 10),
                Err(Error::InvalidParameter(_))
            ));
        }
        assert!(matches!(
            score_query(&index, WeightingModel::TfIdf, &toks(&["apple"]), 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn nonnegative_models_stay_nonnegative() {
        let mut rng = SplitMix64::new(64);
        let vocab = ["red", "blue", "green", "gold", "iron", "wood"];
        let docs: Vec<RawDocument> = (0..30)
            .map(|i| {
                let words: Vec<&str> = (0..5 + rng.next_below(20))
                    .map(|_| vocab[rng.next_below(vocab.len() as u64) as usize])
                    .collect();
                doc(&format!("d{i:02}"), &words.join(" "))
            })
            .collect();
        let index = build_index(&docs, &no_stop()).unwrap();
        let query = toks(&["red", "gold"]);
        for model in [
            WeightingModel::TfIdf,
            WeightingModel::Bm25 { k1: 1.2, b: 0.75 },
        ] {
            for (_, score) in score_query(&index, model, &query, 100).unwrap() {
                assert!(score >= 0.0);
            }
        }
    }

    #[test]
    fn models_disagree_on_a_mixed_corpus() {
        let mut rng = SplitMix64::new(7);
        let vocab = ["cat", "dog", "fish", "bird", "mole", "newt"];
        let docs: Vec<RawDocument> = (0..20)
            .map(|i| {
                let words: Vec<&str> = (0..3 + rng.next_below(25))
                    .map(|_| vocab[rng.next_below(vocab.len() as u64) as usize])
                    .collect();
                doc(&format!("d{i:02}"), &words.join(" "))
            })
            .collect();
        let index = build_index(&docs, &no_stop()).unwrap();
        let query = toks(&["cat", "dog"]);
        let orderings: Vec<Vec<String>> = WeightingModel::standard_four()
            .into_iter()
            .map(|m| {
                score_query(&index, m, &query, 100)
                    .unwrap()
                    .into_iter()
                    .map(|(d, _)| d)
                    .collect()
            })
            .collect();
        assert!(
            orderings.iter().any(|o| o != &orderings[0]),
            "all four models agreed on every rank"
        );
    }

    #[test]
    fn off_topic_documents_do_not_reorder_matches() {
        let base = vec![
            doc("d1", "apple apple pie crust"),
            doc("d2", "apple tart"),
            doc("d3", "apple apple apple jam jar lid"),
        ];
        let mut wider = base.clone();
        wider.push(doc("zz", "granite pebble quartz"));
        for model in [
            WeightingModel::TfIdf,
            WeightingModel::Bm25 { k1: 1.2, b: 0.75 },
        ] {
            let order = |docs: &[RawDocument]| -> Vec<String> {
                let index = build_index(docs, &no_stop()).unwrap();
                score_query(&index, model, &toks(&["apple"]), 10)
                    .unwrap()
                    .into_iter()
                    .map(|(d, _)| d)
                    .collect()
            };
            assert_eq!(order(&base), order(&wider));
        }
    }

    #[test]
    fn generate_runs_covers_models_and_queries() {
        let docs = [
            doc("d1", "apple pie"),
            doc("d2", "banana split"),
            doc("d3", "apple banana"),
        ];
        let index = build_index(&docs, &no_stop()).unwrap();
        let queries = vec![
            ("q1".to_string(), "apple".to_string()),
            ("q2".to_string(), "banana".to_string()),
            ("q3".to_string(), "".to_string()),
        ];
        let runs = generate_runs(
            &index,
            &WeightingModel::standard_four(),
            &queries,
            10,
        )
        .unwrap();
        assert_eq!(runs.len(), 4);
        let tags: HashSet<&str> = runs.iter().map(|r| r.tag()).collect();
        assert_eq!(tags.len(), 4);
        for run in &runs {
            assert!(run.ranking("q1").is_some());
            assert!(run.ranking("q3").is_none());
        }
    }

    #[test]
    fn duplicate_query_ids_are_rejected() {
        let index = build_index(&[doc("d1", "apple")], &no_stop()).unwrap();
        let queries = vec![
            ("q1".to_string(), "apple".to_string()),
            ("q1".to_string(), "apple".to_string()),
        ];
        assert!(matches!(
            generate_runs(&index, &WeightingModel::standard_four(), &queries, 10),
            Err(Error::InvalidRecord(_))
        ));
    }

    #[test]
    fn jitter_variants_multiply_systems_deterministically() {
        let docs = [
            doc("d1", "apple pie"),
            doc("d2", "apple banana"),
            doc("d3", "banana split"),
        ];
        let index = build_index(&docs, &no_stop()).unwrap();
        let queries = vec![("q1".to_string(), "apple banana".to_string())];
        let base =
            generate_runs(&index, &WeightingModel::standard_four(), &queries, 10)
                .unwrap();
        let variants = jitter_variants(&base, 4).unwrap();
        assert_eq!(variants.len(), 16);
        let tags: HashSet<&str> = variants.iter().map(|r| r.tag()).collect();
        assert_eq!(tags.len(), 16);
        assert_eq!(variants[0], base[0]);
        let again = jitter_variants(&base, 4).unwrap();
        assert_eq!(variants, again);
        for (run, variant) in variants.iter().zip([0usize, 1, 2, 3].iter().cycle()) {
            let original = &base
                .iter()
                .find(|b| run.tag().starts_with(b.tag()))
                .unwrap();
            for (query_id, docs) in run.rankings() {
                for d in docs {
                    let base_score = original
                        .ranking(query_id)
                        .unwrap()
                        .iter()
                        .find(|o| o.doc_id == d.doc_id)
                        .unwrap()
                        .score;
                    if *variant == 0 {
                        assert_eq!(d.score, base_score);
                    } else {
                        assert!((d.score - base_score).abs() <= base_score.abs() * 1e-3);
                    }
                }
            }
        }
        assert!(matches!(
            jitter_variants(&base, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn index_round_trips_through_qxi1() {
        let docs = [
            doc("d1", "apple pie crust"),
            doc("d2", ""),
            doc("d3", "apple banana"),
        ];
        let index = build_index(&docs, &no_stop()).unwrap();
        let mut buf = Vec::new();
        write_index(&mut buf, &index).unwrap();
        assert_eq!(&buf[..4], b"QXI1");
        let back = read_index(&mut buf.as_slice()).unwrap();
        assert_eq!(back, index);
        let mut again = Vec::new();
        write_index(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn corrupt_index_bytes_are_rejected() {
        let index = build_index(&[doc("d1", "apple")], &no_stop()).unwrap();
        let mut buf = Vec::new();
        write_index(&mut buf, &index).unwrap();
        assert!(read_index(&mut &buf[..buf.len() - 2]).is_err());
        let mut bad_magic = buf.clone();
        bad_magic[0] = b'Z';
        assert!(matches!(
            read_index(&mut bad_magic.as_slice()),
            Err(Error::InvalidRecord(_))
        ));
        // Zero term frequency in the last posting slot.
        let mut zero_tf = buf.clone();
        let n = zero_tf.len();
        zero_tf[n - 4..].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(
            read_index(&mut zero_tf.as_slice()),
            Err(Error::InvalidRecord(_))
        ));
    }
}
