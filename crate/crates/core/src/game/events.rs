// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::types::{Claim, VotingRound};
use crate::corpus::Page;

/// Every change to the game state. Serialized as `{"kind", "payload"}`.
///
/// Events carry outcomes, not inputs to random choices: the sampled page,
/// the chosen claim pair and the hint ranking are recorded, so applying an
/// event never needs the corpus, the index or an RNG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum GameEvent {
    SessionStarted {
        session_id: String,
        player_id: String,
        page: Page,
    },
    ClaimSubmitted {
        session_id: String,
        claim: Claim,
    },
    RoundStarted {
        round: VotingRound,
    },
    Hint {
        round_id: String,
        passage_id: String,
    },
    Vote {
        round_id: String,
        claim_id: String,
        elapsed_seconds: u32,
    },
    RoundExpired {
        round_id: String,
        elapsed_seconds: u32,
    },
    Like {
        round_id: String,
        claim_id: String,
    },
    Flag {
        claim_id: String,
        flagger_id: String,
        reason: String,
    },
}

impl GameEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            GameEvent::SessionStarted { .. } => "session_started",
            GameEvent::ClaimSubmitted { .. } => "claim_submitted",
            GameEvent::RoundStarted { .. } => "round_started",
            GameEvent::Hint { .. } => "hint",
            GameEvent::Vote { .. } => "vote",
            GameEvent::RoundExpired { .. } => "round_expired",
            GameEvent::Like { .. } => "like",
            GameEvent::Flag { .. } => "flag",
        }
    }
}
