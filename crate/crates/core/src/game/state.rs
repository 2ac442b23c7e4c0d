// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::events::GameEvent;
use super::scoring::{payout, Outcome};
use super::types::{AuthoringSession, Claim, Flag, RoundOutcome, ScoreEvent, VotingRound};
use super::{GameConfig, GameError};
use crate::eventlog::EventRecord;

/// Authoritative game state, derived only from applied events.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub last_seq: u64,
    pub sessions: BTreeMap<String, AuthoringSession>,
    pub claims: BTreeMap<String, Claim>,
    pub rounds: BTreeMap<String, VotingRound>,
    /// In resolution order.
    pub score_events: Vec<ScoreEvent>,
    /// Player id to total points, including like bonuses.
    pub ledger: BTreeMap<String, u64>,
    /// Rounds each claim has been shown in.
    pub exposures: BTreeMap<String, u32>,
    #[serde(default)]
    score_index: BTreeMap<String, usize>,
}

fn invalid(seq: u64, message: impl Into<String>) -> GameError {
    GameError::InvalidEvent {
        seq,
        message: message.into(),
    }
}

impl GameState {
    /// SHA-256 over the canonical JSON form of the state.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn score_event(&self, round_id: &str) -> Option<&ScoreEvent> {
        self.score_index.get(round_id).map(|&i| &self.score_events[i])
    }

    pub fn open_rounds(&self) -> impl Iterator<Item = &VotingRound> {
        self.rounds.values().filter(|r| r.is_open())
    }

    /// Players by points, highest first, ties by id.
    pub fn leaderboard(&self) -> Vec<(String, u64)> {
        let mut rows: Vec<(String, u64)> = self.ledger.iter().map(|(k, &v)| (k.clone(), v)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        rows
    }

    /// Applies one record. Sequence numbers must follow on from
    /// `last_seq` without gaps. Returns the score event written or amended,
    /// if any.
    pub fn apply(&mut self, config: &GameConfig, record: &EventRecord) -> Result<Option<ScoreEvent>, GameError> {
        let seq = record.seq;
        if seq != self.last_seq + 1 {
            return Err(invalid(seq, format!("expected seq {}", self.last_seq + 1)));
        }
        let out = match &record.event {
            GameEvent::SessionStarted {
                session_id,
                player_id,
                page,
            } => {
                if self.sessions.contains_key(session_id) {
                    return Err(invalid(seq, format!("session {session_id} exists")));
                }
                self.sessions.insert(
                    session_id.clone(),
                    AuthoringSession {
                        session_id: session_id.clone(),
                        player_id: player_id.clone(),
                        page: page.clone(),
                        opened_at: record.timestamp,
                        open: true,
                    },
                );
                None
            }
            GameEvent::ClaimSubmitted { session_id, claim } => {
                let session = self
                    .sessions
                    .get_mut(session_id)
                    .filter(|s| s.open)
                    .ok_or_else(|| invalid(seq, format!("no open session {session_id}")))?;
                if self.claims.contains_key(&claim.id) {
                    return Err(invalid(seq, format!("claim {} exists", claim.id)));
                }
                session.open = false;
                self.claims.insert(claim.id.clone(), claim.clone());
                None
            }
            GameEvent::RoundStarted { round } => {
                if self.rounds.contains_key(&round.round_id) {
                    return Err(invalid(seq, format!("round {} exists", round.round_id)));
                }
                for c in [&round.entailed_claim, &round.refuted_claim] {
                    if !self.claims.contains_key(c) {
                        return Err(invalid(seq, format!("round references unknown claim {c}")));
                    }
                    *self.exposures.entry(c.clone()).or_insert(0) += 1;
                }
                self.rounds.insert(round.round_id.clone(), round.clone());
                None
            }
            GameEvent::Hint { round_id, passage_id } => {
                let round = self.open_round_mut(seq, round_id)?;
                round.hints_taken += 1;
                round.evidence_revealed.push(passage_id.clone());
                None
            }
            GameEvent::Vote {
                round_id,
                claim_id,
                elapsed_seconds,
            } => {
                let round = self.open_round_mut(seq, round_id)?;
                if !round.contains(claim_id) {
                    return Err(invalid(seq, format!("claim {claim_id} not in round {round_id}")));
                }
                let correct = *claim_id == round.refuted_claim;
                round.outcome = Some(RoundOutcome {
                    outcome: if correct { Outcome::Correct } else { Outcome::Incorrect },
                    choice: Some(claim_id.clone()),
                    correct,
                    elapsed_seconds: *elapsed_seconds,
                });
                Some(self.settle(config, seq, round_id)?)
            }
            GameEvent::RoundExpired {
                round_id,
                elapsed_seconds,
            } => {
                let round = self.open_round_mut(seq, round_id)?;
                round.outcome = Some(RoundOutcome {
                    outcome: Outcome::TimedOut,
                    choice: None,
                    correct: false,
                    elapsed_seconds: *elapsed_seconds,
                });
                Some(self.settle(config, seq, round_id)?)
            }
            GameEvent::Like { round_id, claim_id } => {
                let round = self
                    .rounds
                    .get_mut(round_id)
                    .ok_or_else(|| invalid(seq, format!("unknown round {round_id}")))?;
                if round.is_open() || round.liked.is_some() || !round.contains(claim_id) {
                    return Err(invalid(seq, format!("like not allowed in round {round_id}")));
                }
                round.liked = Some(claim_id.clone());
                let author = self.claims[claim_id].author_id.clone();
                *self.ledger.entry(author).or_insert(0) += config.like_bonus as u64;
                let i = *self
                    .score_index
                    .get(round_id)
                    .ok_or_else(|| invalid(seq, format!("round {round_id} has no score")))?;
                self.score_events[i].liked = Some(claim_id.clone());
                Some(self.score_events[i].clone())
            }
            GameEvent::Flag {
                claim_id,
                flagger_id,
                reason,
            } => {
                let claim = self
                    .claims
                    .get_mut(claim_id)
                    .ok_or_else(|| invalid(seq, format!("unknown claim {claim_id}")))?;
                if claim.flags.iter().any(|f| f.flagger_id == *flagger_id) {
                    return Err(invalid(seq, format!("duplicate flag on {claim_id}")));
                }
                claim.flags.push(Flag {
                    flagger_id: flagger_id.clone(),
                    reason: reason.clone(),
                });
                None
            }
        };
        self.last_seq = seq;
        Ok(out)
    }

    fn open_round_mut(&mut self, seq: u64, round_id: &str) -> Result<&mut VotingRound, GameError> {
        self.rounds
            .get_mut(round_id)
            .filter(|r| r.is_open())
            .ok_or_else(|| invalid(seq, format!("no open round {round_id}")))
    }

    fn settle(&mut self, config: &GameConfig, seq: u64, round_id: &str) -> Result<ScoreEvent, GameError> {
        let round = &self.rounds[round_id];
        let outcome = round.outcome.as_ref().expect("settled rounds have an outcome");
        let author = |id: &str| {
            self.claims
                .get(id)
                .map(|c| c.author_id.clone())
                .ok_or_else(|| invalid(seq, format!("unknown claim {id}")))
        };
        let pay = payout(
            config,
            outcome.outcome,
            outcome.elapsed_seconds,
            round.hints_taken,
            &author(&round.entailed_claim)?,
            &author(&round.refuted_claim)?,
        );
        let event = ScoreEvent {
            round_id: round_id.to_string(),
            voter_id: round.voter_id.clone(),
            outcome: outcome.outcome,
            voter_points: pay.voter_points,
            author_points: pay.author_points,
            liked: None,
            entailed_claim: round.entailed_claim.clone(),
            refuted_claim: round.refuted_claim.clone(),
            hints_taken: round.hints_taken,
            elapsed_seconds: outcome.elapsed_seconds,
        };
        *self.ledger.entry(event.voter_id.clone()).or_insert(0) += event.voter_points as u64;
        for (a, &p) in &event.author_points {
            *self.ledger.entry(a.clone()).or_insert(0) += p as u64;
        }
        self.score_index.insert(round_id.to_string(), self.score_events.len());
        self.score_events.push(event.clone());
        Ok(event)
    }
}
