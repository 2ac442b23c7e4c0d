// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scoring::Outcome;
use crate::corpus::Page;
use crate::retrieval::RankedHit;
use crate::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldEvidence {
    /// Source page title.
    pub page: String,
    /// Span text as highlighted by the author.
    pub text: String,
    /// Passage the span aligns to best.
    pub passage_id: Option<String>,
    pub precision: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub flagger_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub author_id: String,
    pub text: String,
    pub label: Label,
    pub gold_evidence: Vec<GoldEvidence>,
    pub category: String,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    #[serde(default)]
    pub flags: Vec<Flag>,
    #[serde(default)]
    pub strategy_tags: Vec<String>,
}

impl Claim {
    /// Title of the page the claim was written against.
    pub fn page(&self) -> Option<&str> {
        self.gold_evidence.first().map(|e| e.page.as_str())
    }

    /// Aligned gold passage ids that passed the alignment threshold.
    pub fn gold_passages(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in &self.gold_evidence {
            if let (true, Some(p)) = (e.kept, e.passage_id.as_deref()) {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    }
}

/// What an author submits at the end of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimDraft {
    pub text: String,
    pub label: Label,
    pub spans: Vec<String>,
    #[serde(default)]
    pub strategy_tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthoringSession {
    pub session_id: String,
    pub player_id: String,
    pub page: Page,
    pub opened_at: u64,
    pub open: bool,
}

/// Ephemeral authoring state, not part of the event-sourced game state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Draft {
    pub text: String,
    pub marked_gold: Option<String>,
    pub last_retrieval: Vec<RankedHit>,
    pub gold_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub outcome: Outcome,
    /// The claim the voter picked as refuted; `None` on timeout.
    pub choice: Option<String>,
    pub correct: bool,
    pub elapsed_seconds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingRound {
    pub round_id: String,
    pub voter_id: String,
    pub category: Option<String>,
    /// Claim ids in display order.
    pub display: [String; 2],
    pub entailed_claim: String,
    pub refuted_claim: String,
    pub pot: u32,
    /// Milliseconds since the Unix epoch, server clock.
    pub started_at: u64,
    pub hints_taken: u32,
    /// Passages available as hints, best first.
    pub hint_queue: Vec<String>,
    pub evidence_revealed: Vec<String>,
    pub outcome: Option<RoundOutcome>,
    pub liked: Option<String>,
}

impl VotingRound {
    pub fn is_open(&self) -> bool {
        self.outcome.is_none()
    }

    pub fn contains(&self, claim_id: &str) -> bool {
        self.entailed_claim == claim_id || self.refuted_claim == claim_id
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreEvent {
    pub round_id: String,
    pub voter_id: String,
    pub outcome: Outcome,
    pub voter_points: u32,
    pub author_points: BTreeMap<String, u32>,
    pub liked: Option<String>,
    pub entailed_claim: String,
    pub refuted_claim: String,
    pub hints_taken: u32,
    pub elapsed_seconds: u32,
}
