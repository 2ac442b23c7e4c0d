// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::VoteTally;
use crate::game::{Claim, ScoreEvent};
use crate::{Error, Label, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchT {
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance t test of `a` against `b`. `None` when either
/// sample has fewer than two values or both variances are zero.
pub fn welch_t(a: &[f64], b: &[f64]) -> Option<WelchT> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 <= 0.0 {
        return None;
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some(WelchT {
        t,
        df,
        p_two_sided: 2.0 * (1.0 - dist.cdf(t.abs())),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LikeGroup {
    /// Rounds in which an entailed (resp. refuted) claim was shown.
    pub entailed_shown: usize,
    pub refuted_shown: usize,
    pub entailed_likes: usize,
    pub refuted_likes: usize,
    pub entailed_rate: Option<f64>,
    pub refuted_rate: Option<f64>,
    /// Entailed minus refuted.
    pub t: Option<WelchT>,
    #[serde(skip)]
    samples: [Vec<f64>; 2],
}

impl LikeGroup {
    fn push(&mut self, label: Label, liked: bool) {
        self.samples[label.index()].push(if liked { 1.0 } else { 0.0 });
    }

    fn finish(&mut self) {
        let [e, r] = &self.samples;
        self.entailed_shown = e.len();
        self.refuted_shown = r.len();
        self.entailed_likes = e.iter().filter(|&&x| x > 0.0).count();
        self.refuted_likes = r.iter().filter(|&&x| x > 0.0).count();
        let rate = |xs: &Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        self.entailed_rate = rate(e);
        self.refuted_rate = rate(r);
        self.t = welch_t(e, r);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LikeReport {
    pub overall: LikeGroup,
    pub by_category: BTreeMap<String, LikeGroup>,
}

/// Per-label like rates. Each resolved round is one showing of each of its
/// two claims; a showing counts 1 if that claim got the round's like.
pub fn like_report<'a>(
    score_events: impl IntoIterator<Item = &'a ScoreEvent>,
    claims: &BTreeMap<String, Claim>,
) -> LikeReport {
    let mut report = LikeReport::default();
    for e in score_events {
        for id in [&e.entailed_claim, &e.refuted_claim] {
            let Some(claim) = claims.get(id) else { continue };
            let liked = e.liked.as_deref() == Some(id.as_str());
            report.overall.push(claim.label, liked);
            report
                .by_category
                .entry(claim.category.clone())
                .or_default()
                .push(claim.label, liked);
        }
    }
    report.overall.finish();
    report.by_category.values_mut().for_each(LikeGroup::finish);
    report
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgreementCell {
    pub claims: usize,
    pub human_correct_votes: u64,
    pub human_incorrect_votes: u64,
    pub human_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub model_correct: AgreementCell,
    pub model_incorrect: AgreementCell,
    pub model_accuracy: f64,
    /// Tallied claims with no model prediction.
    pub uncovered: Vec<String>,
}

/// Human vote accuracy split by whether the model labels the claim
/// correctly. Votes are pooled within each cell.
pub fn agreement_report(
    gold_labels: &BTreeMap<String, Label>,
    tallies: &[VoteTally],
    predictions: &BTreeMap<String, Label>,
) -> Result<AgreementReport> {
    let mut report = AgreementReport::default();
    for t in tallies.iter().filter(|t| t.votes() > 0) {
        let (Some(pred), Some(gold)) = (predictions.get(&t.claim_id), gold_labels.get(&t.claim_id)) else {
            report.uncovered.push(t.claim_id.clone());
            continue;
        };
        let cell = if pred == gold {
            &mut report.model_correct
        } else {
            &mut report.model_incorrect
        };
        cell.claims += 1;
        cell.human_correct_votes += t.correct as u64;
        cell.human_incorrect_votes += t.incorrect as u64;
    }
    let n = report.model_correct.claims + report.model_incorrect.claims;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "no claim has both human votes and a model prediction".into(),
        ));
    }
    for cell in [&mut report.model_correct, &mut report.model_incorrect] {
        let votes = cell.human_correct_votes + cell.human_incorrect_votes;
        cell.human_accuracy = (votes > 0).then(|| cell.human_correct_votes as f64 / votes as f64);
    }
    report.model_accuracy = report.model_correct.claims as f64 / n as f64;
    Ok(report)
}
