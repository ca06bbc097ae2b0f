//! Seeded per-query subsampling of positive judgements.
//!
//! Each query keeps max(1, round(fraction * n)) of its n positives, chosen
//! as a prefix of a seeded shuffle. The prefix construction means a larger
//! fraction under the same seed keeps a superset of the smaller fraction's
//! records. Negative judgements pass through untouched.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::formats::QrelRecord;
use crate::rng::{fnv1a, shuffle, SplitMix64};

pub fn subsample_qrels(
    qrels: &[QrelRecord],
    fraction: f64,
    seed: u64,
) -> Result<Vec<QrelRecord>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "qrel fraction {fraction} outside (0, 1]"
        )));
    }
    let mut positives: BTreeMap<&str, Vec<&QrelRecord>> = BTreeMap::new();
    let mut kept: Vec<QrelRecord> = Vec::new();
    for record in qrels {
        if record.is_positive() {
            positives
                .entry(record.query_id.as_str())
                .or_default()
                .push(record);
        } else {
            kept.push(record.clone());
        }
    }
    for record in qrels {
        if !positives.contains_key(record.query_id.as_str()) {
            return Err(Error::NoPositiveQrels(record.query_id.clone()));
        }
    }
    for (query_id, mut records) in positives {
        records.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let mut rng = SplitMix64::new(seed ^ fnv1a(query_id.as_bytes()));
        shuffle(&mut records, &mut rng);
        let n = records.len();
        // Round half up, floor of one, never more than n.
        let keep = (((fraction * n as f64) + 0.5).floor() as usize).clamp(1, n);
        kept.extend(records[..keep].iter().map(|r| (*r).clone()));
    }
    kept.sort();
    Ok(kept)
}
