// SPDX-License-Identifier: Apache-2.0

//! Retrieval and label metrics, plus dataset export.

pub mod export;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use export::{
    assign_split, dataset_stats, export_dataset, read_rows, split_claims, write_rows, DatasetStats, ExportEvidence,
    ExportReport, ExportRow, Split, SplitSpec, SplitStats,
};

use crate::retrieval::Retriever;
use crate::{par, Error, Label, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalJudgment {
    pub claim_id: String,
    pub gold: BTreeSet<String>,
    /// Ranked, without duplicates.
    pub retrieved: Vec<String>,
}

impl RetrievalJudgment {
    fn hits_in_top(&self, k: usize) -> usize {
        self.retrieved.iter().take(k).filter(|id| self.gold.contains(*id)).count()
    }
}

/// Fraction of gold passages within the top `|gold|` retrieved.
pub fn r_precision(j: &RetrievalJudgment) -> f64 {
    if j.gold.is_empty() {
        return 0.0;
    }
    j.hits_in_top(j.gold.len()) as f64 / j.gold.len() as f64
}

pub fn recall_at(j: &RetrievalJudgment, k: usize) -> f64 {
    if j.gold.is_empty() {
        return 0.0;
    }
    j.hits_in_top(k) as f64 / j.gold.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub claims: usize,
    pub r_precision: f64,
    pub recall: BTreeMap<usize, f64>,
}

/// Means over judgments. Judgments with an empty gold set are ignored.
pub fn evaluate_retrieval(judgments: &[RetrievalJudgment], ks: &[usize]) -> RetrievalReport {
    let usable: Vec<&RetrievalJudgment> = judgments.iter().filter(|j| !j.gold.is_empty()).collect();
    let n = usable.len().max(1) as f64;
    RetrievalReport {
        claims: usable.len(),
        r_precision: usable.iter().map(|j| r_precision(j)).sum::<f64>() / n,
        recall: ks
            .iter()
            .map(|&k| (k, usable.iter().map(|j| recall_at(j, k)).sum::<f64>() / n))
            .collect(),
    }
}

/// Runs `retriever` over exported rows, keeping the ones with gold passage ids.
pub fn judge_rows<R: Retriever + ?Sized>(
    retriever: &R,
    rows: &[ExportRow],
    k: usize,
) -> Result<Vec<RetrievalJudgment>> {
    let rows: Vec<&ExportRow> = rows.iter().filter(|r| !r.gold_passage_ids().is_empty()).collect();
    par::map(&rows, |row| {
        Ok(RetrievalJudgment {
            claim_id: row.id.clone(),
            gold: row.gold_passage_ids(),
            retrieved: retriever.retrieve(&row.text, k)?.into_iter().map(|h| h.passage_id).collect(),
        })
    })
    .into_iter()
    .collect()
}

/// Fraction of gold-labelled ids whose prediction matches.
pub fn label_accuracy(predictions: &BTreeMap<String, Label>, gold: &BTreeMap<String, Label>) -> Result<f64> {
    let missing: Vec<String> = gold.keys().filter(|id| !predictions.contains_key(*id)).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::MissingPredictions(missing));
    }
    if gold.is_empty() {
        return Ok(0.0);
    }
    let correct = gold.iter().filter(|(id, l)| predictions[*id] == **l).count();
    Ok(correct as f64 / gold.len() as f64)
}
