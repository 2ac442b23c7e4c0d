// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashSet};
use std::ops::Range;

use crate::text::{tokenize, tokenize_spans};

/// Pairs `(claim token index, passage token index)` whose lowercased tokens
/// are equal.
pub fn highlight_overlap(claim_text: &str, passage_text: &str) -> BTreeSet<(usize, usize)> {
    let claim = tokenize(claim_text);
    let passage = tokenize(passage_text);
    let mut out = BTreeSet::new();
    for (i, c) in claim.iter().enumerate() {
        for (j, p) in passage.iter().enumerate() {
            if c == p {
                out.insert((i, j));
            }
        }
    }
    out
}

/// Byte ranges in `passage_text` of tokens that also occur in the claim.
pub fn matched_passage_spans(claim_text: &str, passage_text: &str) -> Vec<Range<usize>> {
    let claim: HashSet<String> = tokenize(claim_text).into_iter().collect();
    tokenize_spans(passage_text)
        .into_iter()
        .filter(|(tok, _)| claim.contains(tok))
        .map(|(_, span)| span)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_texts_match_every_position() {
        let t = "Rome was founded in 753 BC";
        let m = highlight_overlap(t, t);
        for i in 0..6 {
            assert!(m.contains(&(i, i)));
        }
    }

    #[test]
    fn disjoint_vocabulary_is_empty() {
        assert!(highlight_overlap("alpha beta", "gamma delta").is_empty());
    }

    #[test]
    fn case_folding() {
        let m = highlight_overlap("The CAT sat", "a cat");
        assert_eq!(m.into_iter().collect::<Vec<_>>(), vec![(1, 1)]);
        let spans = matched_passage_spans("The CAT sat", "a cat");
        assert_eq!(spans, vec![2..5]);
    }
}
