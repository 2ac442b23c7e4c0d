// SPDX-License-Identifier: Apache-2.0

//! Aligns evidence sentences to corpus passages by the clipped n-gram
//! precision used in BLEU (no brevity penalty), keeping only alignments at
//! or above a precision threshold.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::{par, text, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_MAX_N: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    pub threshold: f64,
    pub max_n: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            threshold: DEFAULT_THRESHOLD,
            max_n: DEFAULT_MAX_N,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub evidence_text: String,
    /// `None` only when there was no candidate passage at all.
    pub best_passage_id: Option<String>,
    pub precision: f64,
    pub kept: bool,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u32> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Clipped precision of `candidate` n-grams against `reference`, for one `n`.
/// Returns `None` when the candidate has no n-grams of that order.
pub fn clipped_precision(candidate: &[String], reference: &[String], n: usize) -> Option<f64> {
    if n == 0 || candidate.len() < n {
        return None;
    }
    let cand = ngram_counts(candidate, n);
    let refc = ngram_counts(reference, n);
    let total: u32 = cand.values().sum();
    let clipped: u32 = cand
        .iter()
        .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
        .sum();
    Some(clipped as f64 / total as f64)
}

/// Geometric mean over `n in 1..=max_n` of clipped n-gram precision.
///
/// Orders longer than the candidate are skipped, so a one-token candidate
/// is scored on unigrams alone. Any zero order makes the result zero.
pub fn mod_ngram_precision(candidate: &str, reference: &str, max_n: usize) -> f64 {
    let cand = text::tokenize(candidate);
    let refs = text::tokenize(reference);
    precision_tokens(&cand, &refs, max_n)
}

pub(crate) fn precision_tokens(cand: &[String], refs: &[String], max_n: usize) -> f64 {
    if cand.is_empty() || refs.is_empty() {
        return 0.0;
    }
    let levels: Vec<f64> = (1..=max_n.max(1))
        .filter_map(|n| clipped_precision(cand, refs, n))
        .collect();
    if levels.contains(&0.0) {
        return 0.0;
    }
    let product: f64 = levels.iter().product();
    match levels.len() {
        1 => product,
        2 => product.sqrt(),
        n => product.powf(1.0 / n as f64),
    }
}

/// Finds the passage with the highest precision for `evidence_text`.
///
/// `candidates` restricts the scan to the given passage ids (usually the
/// passages of the evidence's source page); `None` scans the whole corpus.
/// Ties go to the lexicographically smallest passage id.
pub fn align_evidence(
    evidence_text: &str,
    corpus: &Corpus,
    candidates: Option<&[String]>,
    config: &AlignConfig,
) -> Result<AlignmentResult> {
    let cand = text::tokenize(evidence_text);
    let indexes: Vec<u32> = match candidates {
        Some(ids) => ids.iter().filter_map(|id| corpus.index_of(id)).collect(),
        None => (0..corpus.len() as u32).collect(),
    };
    let scored: Vec<Result<(u32, f64)>> = par::map(&indexes, |&i| {
        let p = corpus.passage_at(i)?;
        Ok((i, precision_tokens(&cand, &text::tokenize(&p.text), config.max_n)))
    });
    let mut best: Option<(u32, f64)> = None;
    for s in scored {
        let (i, p) = s?;
        best = match best {
            None => Some((i, p)),
            Some((bi, bp)) => {
                if p > bp || (p == bp && corpus.id_at(i) < corpus.id_at(bi)) {
                    Some((i, p))
                } else {
                    Some((bi, bp))
                }
            }
        };
    }
    let (best_passage_id, precision) = match best {
        Some((i, p)) => (Some(corpus.id_at(i).to_string()), p),
        None => (None, 0.0),
    };
    Ok(AlignmentResult {
        evidence_text: evidence_text.to_string(),
        best_passage_id,
        precision,
        kept: precision >= config.threshold,
    })
}

/// One line of an alignment request file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    #[serde(default)]
    pub id: Option<String>,
    pub text: String,
    /// Source page title; restricts candidates when present in the corpus.
    #[serde(default)]
    pub page: Option<String>,
}

/// Aligns a batch of evidence records, parallel over records.
pub fn align_batch(
    records: &[EvidenceRecord],
    corpus: &Corpus,
    full_scan: bool,
    config: &AlignConfig,
) -> Result<Vec<AlignmentResult>> {
    par::map(records, |r| {
        let restriction = if full_scan {
            None
        } else {
            r.page.as_deref().and_then(|t| corpus.page(t)).map(|p| p.passage_ids.as_slice())
        };
        align_evidence(&r.text, corpus, restriction, config)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Passage;
    use proptest::prelude::*;

    /// Brute-force clipped count: for each candidate n-gram position, consume
    /// one matching reference occurrence if any remain.
    fn brute_clipped(cand: &[String], refs: &[String], n: usize) -> (usize, usize) {
        let mut used = vec![false; refs.len().saturating_sub(n - 1)];
        let mut hits = 0;
        let total = cand.len().saturating_sub(n - 1);
        for i in 0..total {
            if let Some(j) = (0..used.len()).find(|&j| !used[j] && refs[j..j + n] == cand[i..i + n]) {
                used[j] = true;
                hits += 1;
            }
        }
        (hits, total)
    }

    #[test]
    fn verbatim_substring_is_one() {
        let r = "the quick brown fox jumps over the lazy dog";
        assert_eq!(mod_ngram_precision("brown fox jumps", r, 2), 1.0);
        assert_eq!(mod_ngram_precision(r, r, 2), 1.0);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(mod_ngram_precision("alpha beta", "gamma delta", 2), 0.0);
        assert_eq!(mod_ngram_precision("alpha", "", 2), 0.0);
    }

    #[test]
    fn hand_counted_example() {
        // unigrams 2/3, bigrams 1/2
        let p = mod_ngram_precision("the cat sat", "the cat on a mat", 2);
        assert!((p - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_token_uses_unigrams() {
        assert_eq!(mod_ngram_precision("cat", "a cat", 2), 1.0);
    }

    fn corpus() -> Corpus {
        let rows = [
            ("p1", "Cats", "the cat sat on the mat all day"),
            ("p2", "Cats", "cats are small felines kept as pets"),
            ("p3", "Dogs", "the dog barked at the mailman"),
        ];
        Corpus::from_passages(
            rows.iter()
                .map(|(id, t, x)| Passage {
                    id: id.to_string(),
                    page_title: t.to_string(),
                    text: x.to_string(),
                    category: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn aligns_verbatim_evidence_and_drops_unalignable() {
        let c = corpus();
        let cfg = AlignConfig::default();
        let r = align_evidence("small felines kept as pets", &c, None, &cfg).unwrap();
        assert_eq!(r.best_passage_id.as_deref(), Some("p2"));
        assert_eq!(r.precision, 1.0);
        assert!(r.kept);

        let r = align_evidence("quantum chromodynamics lecture", &c, None, &cfg).unwrap();
        assert!(!r.kept);
    }

    #[test]
    fn restriction_and_ties() {
        let c = corpus();
        let cfg = AlignConfig::default();
        let page = c.page("Dogs").unwrap().passage_ids.clone();
        let r = align_evidence("the cat sat on the mat", &c, Some(&page), &cfg).unwrap();
        assert_eq!(r.best_passage_id.as_deref(), Some("p3"));
        // "the" appears in p1 and p3; both score the same on a one-word query.
        let r = align_evidence("the", &c, None, &cfg).unwrap();
        assert_eq!(r.best_passage_id.as_deref(), Some("p1"));
        let r = align_evidence("anything", &c, Some(&[]), &cfg).unwrap();
        assert_eq!(r.best_passage_id, None);
        assert!(!r.kept);
    }

    #[test]
    fn threshold_boundary_is_inclusive() {
        // unigrams 5/5, bigrams 1/4 ("a b" only) -> sqrt(1/4) = 0.5 exactly
        let p = mod_ngram_precision("a b c d e", "a b e d c", 2);
        assert_eq!(p, 0.5);
        let c = Corpus::from_passages(vec![Passage {
            id: "x".into(),
            page_title: "T".into(),
            text: "a b e d c".into(),
            category: None,
        }])
        .unwrap();
        let r = align_evidence("a b c d e", &c, None, &AlignConfig::default()).unwrap();
        assert_eq!(r.precision, 0.5);
        assert!(r.kept);
    }

    proptest! {
        #[test]
        fn clipping_matches_brute_force(
            cand in proptest::collection::vec(0u8..5, 1..12),
            refs in proptest::collection::vec(0u8..5, 0..12),
            n in 1usize..4,
        ) {
            let cand: Vec<String> = cand.iter().map(|x| format!("w{x}")).collect();
            let refs: Vec<String> = refs.iter().map(|x| format!("w{x}")).collect();
            let (hits, total) = brute_clipped(&cand, &refs, n);
            match clipped_precision(&cand, &refs, n) {
                None => prop_assert_eq!(total, 0),
                Some(p) => prop_assert!((p - hits as f64 / total as f64).abs() < 1e-12),
            }
        }

        #[test]
        fn duplicating_reference_never_lowers_precision(
            cand in proptest::collection::vec(0u8..6, 1..10),
            refs in proptest::collection::vec(0u8..6, 1..10),
        ) {
            let c: Vec<String> = cand.iter().map(|x| format!("w{x}")).collect();
            let r: Vec<String> = refs.iter().map(|x| format!("w{x}")).collect();
            let doubled: Vec<String> = r.iter().chain(r.iter()).cloned().collect();
            let p = precision_tokens(&c, &r, 2);
            let q = precision_tokens(&c, &doubled, 2);
            prop_assert!(q >= p);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
