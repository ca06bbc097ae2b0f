//! Document vector space: tf.idf sparse vectors over a corpus vocabulary,
//! PCA reduction to dense vectors, and the cosine distance between them.

mod binio;
mod pca;

pub use binio::{
    read_pca_model, read_vector_set, write_pca_model, write_vector_set, write_vector_set_csv,
};
pub use pca::{fit_pca, PcaModel};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::error::{Error, Result};

/// Term statistics: the term's contiguous 0-based index and the number of
/// documents it occurs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermStats {
    pub index: usize,
    pub document_frequency: usize,
}

/// Corpus vocabulary. Iteration order is ascending term order, and indices
/// are assigned in that order, so the mapping is fully determined by the
/// term set.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    terms: BTreeMap<String, TermStats>,
    n_documents: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn get(&self, term: &str) -> Option<TermStats> {
        self.terms.get(term).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, TermStats)> {
        self.terms.iter().map(|(t, s)| (t.as_str(), *s))
    }

    /// Smoothed inverse document frequency: ln((1 + N)/(1 + df)) + 1.
    pub fn idf(&self, term: &str) -> Option<f64> {
        self.get(term).map(|s| {
            ((1.0 + self.n_documents as f64) / (1.0 + s.document_frequency as f64)).ln() + 1.0
        })
    }
}

/// A document vector in term-index space: (index, weight) pairs with
/// strictly ascending indices, no explicit zeros, all weights finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Validate and wrap raw entries.
    pub fn new(entries: Vec<(usize, f64)>) -> Result<SparseVector> {
        for window in entries.windows(2) {
            if window[0].0 >= window[1].0 {
                return Err(Error::InvalidRecord(
                    "sparse vector indices not strictly ascending".to_string(),
                ));
            }
        }
        for &(_, w) in &entries {
            if !w.is_finite() {
                return Err(Error::Numeric("non-finite sparse weight".to_string()));
            }
            if w == 0.0 {
                return Err(Error::InvalidRecord(
                    "sparse vector stores an explicit zero".to_string(),
                ));
            }
        }
        Ok(SparseVector { entries })
    }

    pub fn empty() -> SparseVector {
        SparseVector { entries: Vec::new() }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Largest index + 1, the minimum dimensionality this vector fits in.
    pub fn min_dim(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i + 1)
    }
}

/// A reduced document vector: k finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Result<DenseVector> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite dense coordinate".to_string()));
        }
        Ok(DenseVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Split text into maximal runs of Unicode letters and digits, lowercase
/// them, and drop tokens shorter than 2 characters or present in the
/// stopword set. Order is preserved.
pub fn tokenize(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= 2 && !stopwords.contains(t))
        .collect()
}

/// Build the vocabulary of every term occurring in at least one document,
/// with document frequencies counted by presence.
pub fn build_vocabulary(token_docs: &[Vec<String>]) -> Vocabulary {
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in token_docs {
        let distinct: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
        for term in distinct {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let terms = df
        .into_iter()
        .enumerate()
        .map(|(index, (term, document_frequency))| {
            (
                term.to_string(),
                TermStats {
                    index,
                    document_frequency,
                },
            )
        })
        .collect();
    Vocabulary {
        terms,
        n_documents: token_docs.len(),
    }
}

/// tf.idf weights with the smoothed-idf convention, L2-normalized per
/// document: weight(t, d) = tf(t, d) x (ln((1+N)/(1+df(t))) + 1). Tokens
/// absent from the vocabulary are skipped, so held-out text can be
/// vectorized against a fixed vocabulary. Empty documents map to the empty
/// vector.
pub fn tfidf_vectors(token_docs: &[Vec<String>], vocab: &Vocabulary) -> Vec<SparseVector> {
    token_docs
        .iter()
        .map(|doc| tfidf_vector(doc, vocab))
        .collect()
}

/// Single-document tf.idf vector; see [`tfidf_vectors`].
pub fn tfidf_vector(tokens: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for token in tokens {
        if let Some(stats) = vocab.get(token) {
            let idf = vocab.idf(token).unwrap();
            let slot = counts.entry(stats.index).or_insert((0.0, idf));
            slot.0 += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(index, (tf, idf))| (index, tf * idf))
        .collect();
    let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in &mut entries {
            *w /= norm;
        }
    }
    SparseVector { entries }
}

/// The distance d(x, y) = 1 - cos(x, y). A zero vector is at distance 1
/// from everything (neutral), so empty documents are never "near" anything.
/// The result is clamped to [0, 2] against rounding spill.
pub fn cosine_distance(x: &DenseVector, y: &DenseVector) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let mut dot = 0.0;
    let mut nx = 0.0;
    let mut ny = 0.0;
    for (a, b) in x.as_slice().iter().zip(y.as_slice()) {
        dot += a * b;
        nx += a * a;
        ny += b * b;
    }
    if nx == 0.0 || ny == 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 - dot / (nx.sqrt() * ny.sqrt())).clamp(0.0, 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn tokenize_lowercases_and_splits_on_non_alphanumeric() {
        let stop: HashSet<String> = ["the".to_string()].into_iter().collect();
        assert_eq!(
            tokenize("The heart-rate fell", &stop),
            vec!["heart", "rate", "fell"]
        );
    }

    #[test]
    fn tokenize_drops_short_tokens_and_stopwords() {
        let stop: HashSet<String> = ["of".to_string()].into_iter().collect();
        assert_eq!(tokenize("A a of OF", &stop), Vec::<String>::new());
        assert_eq!(tokenize("", &stop), Vec::<String>::new());
    }

    #[test]
    fn tokenize_keeps_digits_and_unicode_letters() {
        let stop = HashSet::new();
        assert_eq!(
            tokenize("CD4 counts, naïve-cells", &stop),
            vec!["cd4", "counts", "naïve", "cells"]
        );
    }

    #[test]
    fn vocabulary_counts_presence_not_occurrences() {
        let vocab = build_vocabulary(&[toks(&["a", "b"]), toks(&["b"])]);
        assert_eq!(vocab.len(), 2);
        assert_eq!(vocab.n_documents(), 2);
        assert_eq!(
            vocab.get("a"),
            Some(TermStats { index: 0, document_frequency: 1 })
        );
        assert_eq!(
            vocab.get("b"),
            Some(TermStats { index: 1, document_frequency: 2 })
        );

        let repeated = build_vocabulary(&[toks(&["a", "a"])]);
        assert_eq!(repeated.get("a").unwrap().document_frequency, 1);

        assert!(build_vocabulary(&[]).is_empty());
    }

    #[test]
    fn vocabulary_indices_follow_ascending_term_order() {
        let vocab = build_vocabulary(&[toks(&["zebra", "apple", "mango"])]);
        let collected: Vec<(&str, usize)> =
            vocab.iter().map(|(t, s)| (t, s.index)).collect();
        assert_eq!(collected, vec![("apple", 0), ("mango", 1), ("zebra", 2)]);
    }

    #[test]
    fn tfidf_matches_hand_computed_weights() {
        let docs = [toks(&["apple", "banana"]), toks(&["apple"])];
        let vocab = build_vocabulary(&docs);
        assert_relative_eq!(vocab.idf("apple").unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(vocab.idf("banana").unwrap(), 1.405465, epsilon = 1e-6);

        let vectors = tfidf_vectors(&docs, &vocab);
        let first = vectors[0].entries();
        assert_eq!(first.len(), 2);
        assert_relative_eq!(first[0].1, 0.5797, epsilon = 1e-4);
        assert_relative_eq!(first[1].1, 0.8148, epsilon = 1e-4);
        assert_relative_eq!(vectors[0].norm(), 1.0, epsilon = 1e-9);

        // Single-term document: weight 1 after normalization.
        assert_eq!(vectors[1].entries(), &[(0, 1.0)]);
    }

    #[test]
    fn tfidf_skips_out_of_vocabulary_tokens_and_empty_docs() {
        let docs = [toks(&["apple"])];
        let vocab = build_vocabulary(&docs);
        let held_out = tfidf_vector(&toks(&["apple", "unknown"]), &vocab);
        assert_eq!(held_out.entries().len(), 1);
        assert!(tfidf_vector(&[], &vocab).is_empty());
    }

    #[test]
    fn tfidf_norms_are_unit_for_non_empty_documents() {
        let docs = [
            toks(&["apple", "banana", "cherry", "apple"]),
            toks(&["banana", "banana"]),
            toks(&[]),
        ];
        let vocab = build_vocabulary(&docs);
        for v in tfidf_vectors(&docs, &vocab) {
            if !v.is_empty() {
                assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn sparse_vector_validation() {
        assert!(SparseVector::new(vec![(0, 1.0), (0, 2.0)]).is_err());
        assert!(SparseVector::new(vec![(1, 1.0), (0, 2.0)]).is_err());
        assert!(SparseVector::new(vec![(0, f64::NAN)]).is_err());
        assert!(SparseVector::new(vec![(0, 0.0)]).is_err());
        let v = SparseVector::new(vec![(0, 3.0), (4, 4.0)]).unwrap();
        assert_relative_eq!(v.norm(), 5.0);
        assert_eq!(v.min_dim(), 5);
    }

    #[test]
    fn cosine_distance_basics() {
        let x = DenseVector::new(vec![1.0, 0.0]).unwrap();
        let y = DenseVector::new(vec![0.0, 1.0]).unwrap();
        let d = DenseVector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(cosine_distance(&x, &x).unwrap(), 0.0);
        assert_eq!(cosine_distance(&x, &y).unwrap(), 1.0);
        assert_relative_eq!(
            cosine_distance(&x, &d).unwrap(),
            1.0 - 1.0 / 2.0f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn cosine_distance_zero_norm_is_neutral() {
        let zero = DenseVector::new(vec![0.0, 0.0]).unwrap();
        let x = DenseVector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(cosine_distance(&zero, &x).unwrap(), 1.0);
        assert_eq!(cosine_distance(&zero, &zero).unwrap(), 1.0);
    }

    #[test]
    fn cosine_distance_rejects_length_mismatch() {
        let x = DenseVector::new(vec![1.0]).unwrap();
        let y = DenseVector::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            cosine_distance(&x, &y),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn cosine_distance_is_symmetric_and_scale_invariant() {
        let x = DenseVector::new(vec![0.3, -1.2, 0.7]).unwrap();
        let y = DenseVector::new(vec![-0.5, 0.4, 2.0]).unwrap();
        let xy = cosine_distance(&x, &y).unwrap();
        let yx = cosine_distance(&y, &x).unwrap();
        assert_eq!(xy, yx);
        let sx = DenseVector::new(x.as_slice().iter().map(|v| v * 3.5).collect()).unwrap();
        let sy = DenseVector::new(y.as_slice().iter().map(|v| v * 0.25).collect()).unwrap();
        assert_relative_eq!(cosine_distance(&sx, &sy).unwrap(), xy, epsilon = 1e-12);
        let opposite = DenseVector::new(x.as_slice().iter().map(|v| -v).collect()).unwrap();
        assert_relative_eq!(cosine_distance(&x, &opposite).unwrap(), 2.0, epsilon = 1e-12);
    }
}
