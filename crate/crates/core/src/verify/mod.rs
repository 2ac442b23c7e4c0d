// SPDX-License-Identifier: Apache-2.0

//! Entailment prediction and the claim-only artifact probe.

pub mod adapter;
pub mod linear;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use adapter::{AdapterConfig, HttpAdapter};
pub use linear::{featurize, InputMode, LinearModel, Objective, TrainConfig, TrainingMeta};

use crate::corpus::Corpus;
use crate::game::Claim;
use crate::retrieval::Retriever;
use crate::{par, Error, Label, Result};

/// A linear model trained on claim text alone.
pub type ClaimOnlyModel = LinearModel;

/// Scores a claim against (possibly empty) evidence.
pub trait Verifier: Sync {
    /// `[entail, refute]`.
    fn logits(&self, claim: &str, evidence: &[&str]) -> Result<[f64; 2]>;

    /// Whether evidence affects the output at all.
    fn uses_evidence(&self) -> bool {
        true
    }
}

impl<V: Verifier + ?Sized> Verifier for &V {
    fn logits(&self, claim: &str, evidence: &[&str]) -> Result<[f64; 2]> {
        (**self).logits(claim, evidence)
    }

    fn uses_evidence(&self) -> bool {
        (**self).uses_evidence()
    }
}

/// One labelled training input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub claim: String,
    #[serde(default)]
    pub evidence: Vec<String>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub claim_id: String,
    /// `[entail, refute]`.
    pub logits: [f64; 2],
    pub label: Label,
    pub evidence_used: Vec<String>,
    /// Set when retrieval came back empty and the claim alone was scored.
    #[serde(default)]
    pub fallback: bool,
}

/// Argmax with ties going to entailed.
pub fn argmax(logits: [f64; 2]) -> Label {
    if logits[1] > logits[0] {
        Label::Refuted
    } else {
        Label::Entailed
    }
}

/// Evidence passed to [`predict`]: passage id and text.
#[derive(Debug, Clone, Copy)]
pub struct Evidence<'a> {
    pub passage_id: &'a str,
    pub text: &'a str,
}

pub fn predict<V: Verifier + ?Sized>(
    model: &V,
    claim_id: &str,
    claim: &str,
    evidence: &[Evidence<'_>],
) -> Result<Prediction> {
    let texts: Vec<&str> = evidence.iter().map(|e| e.text).collect();
    let logits = model.logits(claim, &texts)?;
    let evidence_used = if model.uses_evidence() {
        evidence.iter().map(|e| e.passage_id.to_string()).collect()
    } else {
        Vec::new()
    };
    Ok(Prediction {
        claim_id: claim_id.to_string(),
        logits,
        label: argmax(logits),
        evidence_used,
        fallback: false,
    })
}

/// Retrieves the top `k` passages, scores the claim against each one
/// separately and averages the logits.
pub fn e2e_predict<V, R>(
    model: &V,
    retriever: &R,
    corpus: &Corpus,
    claim_id: &str,
    claim: &str,
    k: usize,
) -> Result<Prediction>
where
    V: Verifier + ?Sized,
    R: Retriever + ?Sized,
{
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let hits = retriever.retrieve(claim, k)?;
    if hits.is_empty() {
        log::warn!("no passages retrieved for claim {claim_id}; scoring claim alone");
        let logits = model.logits(claim, &[])?;
        return Ok(Prediction {
            claim_id: claim_id.to_string(),
            logits,
            label: argmax(logits),
            evidence_used: Vec::new(),
            fallback: true,
        });
    }
    let mut mean = [0.0f64; 2];
    for (i, hit) in hits.iter().enumerate() {
        let passage = corpus.get_passage(&hit.passage_id)?;
        let z = model.logits(claim, &[passage.text.as_str()])?;
        // Running mean: exact for a single passage and for identical ones.
        let n = (i + 1) as f64;
        mean[0] += (z[0] - mean[0]) / n;
        mean[1] += (z[1] - mean[1]) / n;
    }
    Ok(Prediction {
        claim_id: claim_id.to_string(),
        logits: mean,
        label: argmax(mean),
        evidence_used: hits.into_iter().map(|h| h.passage_id).collect(),
        fallback: false,
    })
}

/// Scores a claim against its best-aligned gold passage only.
pub fn oracle_predict<V: Verifier + ?Sized>(model: &V, corpus: &Corpus, claim: &Claim) -> Result<Prediction> {
    let gold = claim.gold_passages();
    let first = gold.first().ok_or_else(|| Error::NotFound {
        kind: "aligned gold passage for claim",
        id: claim.id.clone(),
    })?;
    let passage = corpus.get_passage(first)?;
    predict(
        model,
        &claim.id,
        &claim.text,
        &[Evidence {
            passage_id: &passage.id,
            text: &passage.text,
        }],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub claim_id: String,
    pub claim: String,
    pub evidence_ids: Vec<String>,
    pub evidence: Vec<String>,
    pub label: Label,
}

impl TrainingInstance {
    pub fn example(&self) -> Example {
        Example {
            claim: self.claim.clone(),
            evidence: self.evidence.clone(),
            label: self.label,
        }
    }
}

/// Instances per claim: the gold passages, plus each of the top two
/// retrieved passages that is not gold. Claims with no aligned gold passage
/// are skipped and returned by id.
pub fn make_training_instances<R: Retriever + ?Sized>(
    claims: &[Claim],
    retriever: &R,
    corpus: &Corpus,
) -> Result<(Vec<TrainingInstance>, Vec<String>)> {
    let per_claim = par::map(claims, |claim| -> Result<Option<Vec<TrainingInstance>>> {
        let gold = claim.gold_passages();
        if gold.is_empty() {
            return Ok(None);
        }
        let instance = |ids: Vec<String>| -> Result<TrainingInstance> {
            let evidence = ids
                .iter()
                .map(|id| corpus.get_passage(id).map(|p| p.text))
                .collect::<Result<Vec<_>>>()?;
            Ok(TrainingInstance {
                claim_id: claim.id.clone(),
                claim: claim.text.clone(),
                evidence_ids: ids,
                evidence,
                label: claim.label,
            })
        };
        let mut out = vec![instance(gold.iter().map(|s| s.to_string()).collect())?];
        for hit in retriever.retrieve(&claim.text, 2)? {
            if !gold.contains(&hit.passage_id.as_str()) {
                out.push(instance(vec![hit.passage_id])?);
            }
        }
        Ok(Some(out))
    });
    let mut instances = Vec::new();
    let mut skipped = Vec::new();
    for (claim, result) in claims.iter().zip(per_claim) {
        match result? {
            Some(list) => instances.extend(list),
            None => {
                log::warn!("claim {} has no aligned gold passage; skipped", claim.id);
                skipped.push(claim.id.clone());
            }
        }
    }
    Ok((instances, skipped))
}

pub fn train_claim_only(claims: &[Example], seed: u64) -> Result<ClaimOnlyModel> {
    LinearModel::train(
        InputMode::ClaimOnly,
        claims,
        &TrainConfig {
            seed,
            ..TrainConfig::default()
        },
    )
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub easy: BTreeSet<String>,
    pub hard: BTreeSet<String>,
}

/// Easy claims are the ones the (claim-only) model labels correctly.
pub fn partition_easy_hard<V: Verifier + ?Sized>(
    model: &V,
    dev: &[(String, String, Label)],
) -> Result<Partition> {
    let labels = par::map(dev, |(_, text, _)| model.logits(text, &[]).map(argmax));
    let mut part = Partition::default();
    for ((id, _, gold), predicted) in dev.iter().zip(labels) {
        if predicted? == *gold {
            part.easy.insert(id.clone());
        } else {
            part.hard.insert(id.clone());
        }
    }
    Ok(part)
}
