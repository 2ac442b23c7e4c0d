// SPDX-License-Identifier: Apache-2.0

//! Local mutual information between claim bigrams and labels:
//! `LMI(w, l) = p(w, l) * log2(p(l | w) / p(l))`, counted over bigram
//! occurrences.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::{text, Error, Label, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRow {
    pub bigram: String,
    pub lmi: f64,
    pub p_label_given_w: f64,
    /// Occurrences of the bigram under the report label.
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactReport {
    pub label: Label,
    pub log_base: f64,
    /// Total `(bigram occurrence, label)` events.
    pub total: u64,
    pub rows: Vec<ArtifactRow>,
}

/// Bigram counts per label, `count[(w, l)]`.
pub(crate) fn bigram_label_counts<'a>(
    claims: impl IntoIterator<Item = (&'a str, Label)>,
) -> BTreeMap<(String, Label), u64> {
    let mut counts = BTreeMap::new();
    for (claim, label) in claims {
        let toks = text::tokenize(claim);
        for (a, b) in text::bigrams(&toks) {
            *counts.entry((format!("{a} {b}"), label)).or_insert(0) += 1;
        }
    }
    counts
}

/// Top `top_k` bigrams for `label` by LMI, highest first (ties by bigram).
pub fn lmi_report<'a>(
    claims: impl IntoIterator<Item = (&'a str, Label)>,
    label: Label,
    top_k: usize,
) -> Result<ArtifactReport> {
    let claims: Vec<(&str, Label)> = claims.into_iter().collect();
    let distinct: BTreeSet<Label> = claims.iter().map(|c| c.1).collect();
    if distinct.len() < 2 {
        return Err(Error::SingleLabel(distinct.len()));
    }
    let counts = bigram_label_counts(claims.iter().copied());
    let total: u64 = counts.values().sum();
    let mut per_word: BTreeMap<&str, u64> = BTreeMap::new();
    let mut per_label: BTreeMap<Label, u64> = BTreeMap::new();
    for ((w, l), &c) in &counts {
        *per_word.entry(w.as_str()).or_insert(0) += c;
        *per_label.entry(*l).or_insert(0) += c;
    }
    let n = total as f64;
    let p_label = per_label.get(&label).copied().unwrap_or(0) as f64 / n;
    let mut rows: Vec<ArtifactRow> = counts
        .iter()
        .filter(|((_, l), _)| *l == label)
        .map(|((w, _), &c)| {
            let p_wl = c as f64 / n;
            let p_l_given_w = c as f64 / per_word[w.as_str()] as f64;
            ArtifactRow {
                bigram: w.clone(),
                lmi: p_wl * (p_l_given_w / p_label).log2(),
                p_label_given_w: p_l_given_w,
                count: c,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.lmi.total_cmp(&a.lmi).then_with(|| a.bigram.cmp(&b.bigram)));
    rows.truncate(top_k);
    Ok(ArtifactReport {
        label,
        log_base: 2.0,
        total,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_claim_toy() {
        let r = lmi_report([("a b", Label::Refuted), ("a c", Label::Entailed)], Label::Refuted, 6).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].bigram, "a b");
        assert!((r.rows[0].lmi - 0.5).abs() < 1e-12);
        assert_eq!(r.rows[0].p_label_given_w, 1.0);
    }

    #[test]
    fn independent_bigram_scores_zero() {
        // "x y" appears once under each label; p(l|w) = p(l) = 1/2.
        let r = lmi_report([("x y", Label::Refuted), ("x y", Label::Entailed)], Label::Refuted, 6).unwrap();
        assert_eq!(r.rows[0].lmi, 0.0);
    }

    #[test]
    fn single_label_is_an_error() {
        assert!(matches!(
            lmi_report([("a b", Label::Refuted)], Label::Refuted, 6),
            Err(Error::SingleLabel(1))
        ));
    }

    #[test]
    fn negation_markers_rank_first_when_they_give_away_the_label() {
        let claims = [
            ("Paris did not host the games", Label::Refuted),
            ("Rome did not have a king", Label::Refuted),
            ("Paris hosted the games", Label::Entailed),
            ("Rome had a king", Label::Entailed),
        ];
        let r = lmi_report(claims, Label::Refuted, 3).unwrap();
        assert_eq!(r.rows[0].bigram, "did not");
        assert!(r.rows.windows(2).all(|w| w[0].lmi >= w[1].lmi));
    }
}
