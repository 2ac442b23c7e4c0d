// SPDX-License-Identifier: Apache-2.0

//! Passage retrieval: hashed sparse TF-IDF, exact dense inner product, and
//! claim/passage token highlighting.

pub mod dense;
pub mod features;
pub mod highlight;
pub mod sparse;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use dense::{DenseIndex, DenseRetriever, PrecomputedQueries, QueryEncoder};
pub use features::{hash_feature, BUCKET_COUNT};
pub use highlight::{highlight_overlap, matched_passage_spans};
pub use sparse::SparseIndex;

use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub passage_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Anything that can rank passages for a text query.
pub trait Retriever: Sync {
    fn retrieve(&self, text: &str, k: usize) -> Result<Vec<RankedHit>>;
}

impl<R: Retriever + ?Sized> Retriever for &R {
    fn retrieve(&self, text: &str, k: usize) -> Result<Vec<RankedHit>> {
        (**self).retrieve(text, k)
    }
}

/// Score descending, then passage id ascending.
pub(crate) fn hit_order(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Selects the best `k` of `(doc, score)` pairs and assigns ranks.
pub(crate) fn top_k<'a, I, F>(scored: I, k: usize, id_of: F) -> Vec<RankedHit>
where
    I: IntoIterator<Item = (u32, f64)>,
    F: Fn(u32) -> &'a str,
{
    let mut all: Vec<(u32, f64)> = scored.into_iter().collect();
    if k == 0 || all.is_empty() {
        return Vec::new();
    }
    let cmp = |a: &(u32, f64), b: &(u32, f64)| hit_order((a.1, id_of(a.0)), (b.1, id_of(b.0)));
    if all.len() > k {
        all.select_nth_unstable_by(k - 1, cmp);
        all.truncate(k);
    }
    all.sort_unstable_by(cmp);
    all.into_iter()
        .enumerate()
        .map(|(i, (doc, score))| RankedHit {
            passage_id: id_of(doc).to_string(),
            score,
            rank: i + 1,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_ranks_and_ties() {
        let ids = ["c", "a", "b", "d"];
        let hits = top_k(vec![(0, 1.0), (1, 2.0), (2, 1.0), (3, 0.5)], 3, |d| ids[d as usize]);
        let got: Vec<(&str, usize)> = hits.iter().map(|h| (h.passage_id.as_str(), h.rank)).collect();
        assert_eq!(got, vec![("a", 1), ("b", 2), ("c", 3)]);
        assert!(top_k(vec![(0, 1.0)], 0, |d| ids[d as usize]).is_empty());
    }
}
