// SPDX-License-Identifier: Apache-2.0

//! The two-phase game.
//!
//! Authors get a random page, draft a claim against live retrieval, and
//! submit it with one or two evidence spans. Voters get one entailed and one
//! refuted claim by other authors and must pick the refuted one against the
//! clock; hints reveal retrieved passages at a time cost.
//!
//! All state lives in [`GameState`], which changes only by applying
//! [`GameEvent`]s. [`GameEngine`] validates commands, turns them into events,
//! hands them to an [`EventSink`](crate::eventlog::EventSink) and applies
//! them, so replaying a log rebuilds the state exactly.

mod engine;
mod events;
pub mod scoring;
mod state;
mod types;

use serde::{Deserialize, Serialize};

pub use engine::{GameEngine, HintResult, LiveHit, LiveRetrieval};
pub use events::GameEvent;
pub use scoring::{payout, remaining_points, Outcome, Payout};
pub use state::GameState;
pub use types::{
    AuthoringSession, Claim, ClaimDraft, Draft, Flag, GoldEvidence, RoundOutcome, ScoreEvent, VotingRound,
};

use crate::alignment::AlignConfig;
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorSplit {
    Equal,
    RefutedOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub pot: u32,
    pub hint_cost: u32,
    pub author_split: AuthorSplit,
    pub like_bonus: u32,
    /// Claims with at least this many distinct flags leave the vote pool.
    pub flag_threshold: usize,
    /// Hits shown during live retrieval.
    pub live_k: usize,
    /// Root seed for page and pair sampling.
    pub seed: u64,
    pub align: AlignConfig,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            pot: 120,
            hint_cost: 30,
            author_split: AuthorSplit::Equal,
            like_bonus: 10,
            flag_threshold: 1,
            live_k: 5,
            seed: 0,
            align: AlignConfig::default(),
        }
    }
}

impl GameConfig {
    /// Hints needed to use up a full pot.
    pub fn max_hints(&self) -> usize {
        (self.pot as usize).div_ceil(self.hint_cost.max(1) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("session {0:?} is closed")]
    SessionClosed(String),
    #[error("unknown claim {0:?}")]
    UnknownClaim(String),
    #[error("unknown round {0:?}")]
    UnknownRound(String),
    #[error("claim text is empty")]
    EmptyText,
    #[error("a claim needs one or two evidence spans, got {0}")]
    SpanCount(usize),
    #[error("evidence span {index} not found on page {page:?}")]
    SpanNotFound { index: usize, page: String },
    #[error("not enough {missing} claims by other authors in category {category:?}")]
    InsufficientClaims { missing: Label, category: String },
    #[error("round {0:?} is already resolved")]
    RoundClosed(String),
    #[error("round {0:?} is still open")]
    RoundOpen(String),
    #[error("round {0:?} already has a like")]
    AlreadyLiked(String),
    #[error("claim {claim:?} is not part of round {round:?}")]
    ClaimNotInRound { round: String, claim: String },
    #[error("timer exhausted in round {0:?}; the round was resolved as unanswered")]
    TimerExhausted(String),
    #[error("no more evidence to reveal in round {0:?}")]
    NoMoreHints(String),
    #[error("event {seq} does not apply: {message}")]
    InvalidEvent { seq: u64, message: String },
}
