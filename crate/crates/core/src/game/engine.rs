// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::events::GameEvent;
use super::state::GameState;
use super::types::{Claim, ClaimDraft, Draft, GoldEvidence, ScoreEvent, VotingRound};
use super::{GameConfig, GameError};
use crate::alignment::align_evidence;
use crate::corpus::{Corpus, Passage};
use crate::eventlog::{EventRecord, EventSink};
use crate::retrieval::{highlight_overlap, matched_passage_spans, SparseIndex};
use crate::{Label, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveHit {
    pub passage_id: String,
    pub page_title: String,
    pub text: String,
    pub score: f64,
    pub rank: usize,
    /// `(claim token, passage token)` index pairs with equal tokens.
    pub highlights: Vec<(usize, usize)>,
    /// Byte ranges of matching tokens in `text`.
    pub spans: Vec<std::ops::Range<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveRetrieval {
    pub hits: Vec<LiveHit>,
    /// Rank of the marked gold passage, when it is within the hits.
    pub gold_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintResult {
    pub passage: Passage,
    pub hints_taken: u32,
    /// Voter points left right after the hint.
    pub remaining: u32,
}

/// Command front end over [`GameState`].
///
/// Every mutating call builds a [`GameEvent`], passes it to the sink (if
/// any) and only then applies it. Callers supply `now_ms` from the server
/// clock; the engine never reads a clock itself.
pub struct GameEngine {
    corpus: Arc<Corpus>,
    index: Arc<SparseIndex>,
    config: GameConfig,
    state: GameState,
    drafts: HashMap<String, Draft>,
    sink: Option<Box<dyn EventSink>>,
}

impl GameEngine {
    pub fn new(corpus: Arc<Corpus>, index: Arc<SparseIndex>, config: GameConfig) -> GameEngine {
        GameEngine {
            corpus,
            index,
            config,
            state: GameState::default(),
            drafts: HashMap::new(),
            sink: None,
        }
    }

    /// Rebuilds an engine from logged records.
    pub fn restore<'a>(
        corpus: Arc<Corpus>,
        index: Arc<SparseIndex>,
        config: GameConfig,
        records: impl IntoIterator<Item = &'a EventRecord>,
    ) -> Result<GameEngine> {
        let state = crate::eventlog::replay(records, &config)?;
        let mut engine = GameEngine::new(corpus, index, config);
        engine.state = state;
        Ok(engine)
    }

    pub fn with_sink(mut self, sink: Box<dyn EventSink>) -> GameEngine {
        self.sink = Some(sink);
        self
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    pub fn index(&self) -> &Arc<SparseIndex> {
        &self.index
    }

    pub fn flush(&mut self) -> Result<()> {
        match self.sink.as_mut() {
            Some(s) => s.flush(),
            None => Ok(()),
        }
    }

    fn next_seq(&self) -> u64 {
        self.state.last_seq + 1
    }

    /// Per-command RNG, a function of the root seed and the sequence number
    /// the command will be logged under.
    fn rng(&self) -> ChaCha8Rng {
        let seq = self.next_seq();
        ChaCha8Rng::seed_from_u64(self.config.seed ^ seq.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    fn commit(&mut self, now_ms: u64, event: GameEvent) -> Result<Option<ScoreEvent>> {
        let record = EventRecord {
            seq: self.next_seq(),
            event,
            timestamp: now_ms,
        };
        // Commands are validated before an event is built, so applying a
        // logged record cannot fail; a failed append leaves state untouched.
        if let Some(sink) = self.sink.as_mut() {
            sink.append(&record)?;
        }
        Ok(self.state.apply(&self.config, &record)?)
    }

    pub fn start_authoring(&mut self, player_id: &str, category: Option<&str>, now_ms: u64) -> Result<String> {
        let seed: u64 = self.rng().random();
        let page = self.corpus.sample_page(category, seed)?.clone();
        let session_id = format!("session-{}", self.next_seq());
        self.commit(
            now_ms,
            GameEvent::SessionStarted {
                session_id: session_id.clone(),
                player_id: player_id.to_string(),
                page,
            },
        )?;
        Ok(session_id)
    }

    fn open_session(&self, session_id: &str) -> Result<&super::AuthoringSession> {
        let s = self
            .state
            .sessions
            .get(session_id)
            .ok_or_else(|| GameError::UnknownSession(session_id.to_string()))?;
        if !s.open {
            return Err(GameError::SessionClosed(session_id.to_string()).into());
        }
        Ok(s)
    }

    /// Retrieves passages for the current draft over the full corpus.
    /// `gold` updates the author's marked gold passage for this session.
    pub fn live_retrieve(
        &mut self,
        session_id: &str,
        draft: &str,
        gold: Option<&str>,
        k: Option<usize>,
    ) -> Result<LiveRetrieval> {
        self.open_session(session_id)?;
        let k = k.unwrap_or(self.config.live_k);
        let hits = self.index.query(draft, k);
        let scratch = self.drafts.entry(session_id.to_string()).or_default();
        if let Some(g) = gold {
            scratch.marked_gold = Some(g.to_string());
        }
        let gold_rank = scratch
            .marked_gold
            .as_deref()
            .and_then(|g| hits.iter().find(|h| h.passage_id == g).map(|h| h.rank));
        scratch.text = draft.to_string();
        scratch.last_retrieval = hits.clone();
        scratch.gold_rank = gold_rank;

        let mut out = Vec::with_capacity(hits.len());
        for h in hits {
            let p = self.corpus.get_passage(&h.passage_id)?;
            out.push(LiveHit {
                highlights: highlight_overlap(draft, &p.text).into_iter().collect(),
                spans: matched_passage_spans(draft, &p.text),
                passage_id: h.passage_id,
                page_title: p.page_title,
                text: p.text,
                score: h.score,
                rank: h.rank,
            });
        }
        Ok(LiveRetrieval { hits: out, gold_rank })
    }

    pub fn draft(&self, session_id: &str) -> Option<&Draft> {
        self.drafts.get(session_id)
    }

    pub fn submit_claim(&mut self, session_id: &str, draft: ClaimDraft, now_ms: u64) -> Result<Claim> {
        let session = self.open_session(session_id)?.clone();
        let text = draft.text.trim();
        if text.is_empty() {
            return Err(GameError::EmptyText.into());
        }
        if draft.spans.is_empty() || draft.spans.len() > 2 {
            return Err(GameError::SpanCount(draft.spans.len()).into());
        }
        let page_texts: Vec<String> = session
            .page
            .passage_ids
            .iter()
            .map(|id| self.corpus.get_passage(id).map(|p| p.text))
            .collect::<Result<_>>()?;
        let mut gold_evidence = Vec::with_capacity(draft.spans.len());
        for (index, span) in draft.spans.iter().enumerate() {
            let span = span.trim();
            if span.is_empty() || !page_texts.iter().any(|t| t.contains(span)) {
                return Err(GameError::SpanNotFound {
                    index,
                    page: session.page.title.clone(),
                }
                .into());
            }
            let aligned = align_evidence(span, &self.corpus, Some(&session.page.passage_ids), &self.config.align)?;
            gold_evidence.push(GoldEvidence {
                page: session.page.title.clone(),
                text: span.to_string(),
                passage_id: aligned.best_passage_id,
                precision: aligned.precision,
                kept: aligned.kept,
            });
        }
        let claim = Claim {
            id: format!("claim-{}", self.next_seq()),
            author_id: session.player_id.clone(),
            text: text.to_string(),
            label: draft.label,
            gold_evidence,
            category: session.page.category.clone(),
            created_at: now_ms,
            flags: Vec::new(),
            strategy_tags: draft.strategy_tags,
        };
        self.commit(
            now_ms,
            GameEvent::ClaimSubmitted {
                session_id: session_id.to_string(),
                claim: claim.clone(),
            },
        )?;
        self.drafts.remove(session_id);
        Ok(claim)
    }

    fn eligible(&self, voter_id: &str, category: Option<&str>, label: Label) -> Vec<&Claim> {
        self.state
            .claims
            .values()
            .filter(|c| {
                c.label == label
                    && c.author_id != voter_id
                    && c.flags.len() < self.config.flag_threshold
                    && category.is_none_or(|cat| c.category == cat)
            })
            .collect()
    }

    /// Least-shown claims first, uniform among ties.
    fn pick<'a>(&self, pool: &[&'a Claim], rng: &mut ChaCha8Rng) -> &'a Claim {
        let exposure = |c: &Claim| self.state.exposures.get(&c.id).copied().unwrap_or(0);
        let min = pool.iter().map(|c| exposure(c)).min().expect("non-empty pool");
        let least: Vec<&'a Claim> = pool.iter().copied().filter(|c| exposure(c) == min).collect();
        least.choose(rng).copied().expect("non-empty pool")
    }

    pub fn start_vote(&mut self, voter_id: &str, category: Option<&str>, now_ms: u64) -> Result<VotingRound> {
        let mut rng = self.rng();
        let cat_name = category.unwrap_or(crate::corpus::DEFAULT_CATEGORY).to_string();
        let entailed_pool = self.eligible(voter_id, category, Label::Entailed);
        if entailed_pool.is_empty() {
            return Err(GameError::InsufficientClaims {
                missing: Label::Entailed,
                category: cat_name,
            }
            .into());
        }
        let refuted_pool = self.eligible(voter_id, category, Label::Refuted);
        if refuted_pool.is_empty() {
            return Err(GameError::InsufficientClaims {
                missing: Label::Refuted,
                category: cat_name,
            }
            .into());
        }
        let entailed = self.pick(&entailed_pool, &mut rng);
        let refuted = self.pick(&refuted_pool, &mut rng);
        let display = if rng.random_bool(0.5) {
            [entailed.id.clone(), refuted.id.clone()]
        } else {
            [refuted.id.clone(), entailed.id.clone()]
        };
        let hint_queue = self
            .index
            .query(&format!("{} {}", entailed.text, refuted.text), self.config.max_hints())
            .into_iter()
            .map(|h| h.passage_id)
            .collect();
        let round = VotingRound {
            round_id: format!("round-{}", self.next_seq()),
            voter_id: voter_id.to_string(),
            category: category.map(str::to_string),
            display,
            entailed_claim: entailed.id.clone(),
            refuted_claim: refuted.id.clone(),
            pot: self.config.pot,
            started_at: now_ms,
            hints_taken: 0,
            hint_queue,
            evidence_revealed: Vec::new(),
            outcome: None,
            liked: None,
        };
        self.commit(now_ms, GameEvent::RoundStarted { round: round.clone() })?;
        Ok(round)
    }

    fn open_round(&self, round_id: &str) -> Result<&VotingRound> {
        let r = self
            .state
            .rounds
            .get(round_id)
            .ok_or_else(|| GameError::UnknownRound(round_id.to_string()))?;
        if !r.is_open() {
            return Err(GameError::RoundClosed(round_id.to_string()).into());
        }
        Ok(r)
    }

    pub fn elapsed_seconds(round: &VotingRound, now_ms: u64) -> u32 {
        (now_ms.saturating_sub(round.started_at) / 1000).min(u32::MAX as u64) as u32
    }

    /// Voter points left in an open round at `now_ms`.
    pub fn remaining(&self, round_id: &str, now_ms: u64) -> Result<u32> {
        let r = self.open_round(round_id)?;
        Ok(super::remaining_points(
            self.config.pot,
            self.config.hint_cost,
            Self::elapsed_seconds(r, now_ms),
            r.hints_taken,
        ))
    }

    /// Reveals the next evidence passage. If the voter's points are already
    /// used up, the round resolves as unanswered and `TimerExhausted` is
    /// returned.
    pub fn request_hint(&mut self, round_id: &str, now_ms: u64) -> Result<HintResult> {
        let round = self.open_round(round_id)?.clone();
        let elapsed = Self::elapsed_seconds(&round, now_ms);
        let remaining = super::remaining_points(self.config.pot, self.config.hint_cost, elapsed, round.hints_taken);
        if remaining == 0 {
            self.commit(
                now_ms,
                GameEvent::RoundExpired {
                    round_id: round_id.to_string(),
                    elapsed_seconds: elapsed,
                },
            )?;
            return Err(GameError::TimerExhausted(round_id.to_string()).into());
        }
        let next = round
            .hint_queue
            .iter()
            .find(|p| !round.evidence_revealed.contains(p))
            .cloned()
            .ok_or_else(|| GameError::NoMoreHints(round_id.to_string()))?;
        let passage = self.corpus.get_passage(&next)?;
        self.commit(
            now_ms,
            GameEvent::Hint {
                round_id: round_id.to_string(),
                passage_id: next,
            },
        )?;
        let hints_taken = round.hints_taken + 1;
        Ok(HintResult {
            passage,
            hints_taken,
            remaining: super::remaining_points(self.config.pot, self.config.hint_cost, elapsed, hints_taken),
        })
    }

    /// Resolves a round with the voter's pick, timed by the server clock.
    pub fn answer(&mut self, round_id: &str, claim_id: &str, now_ms: u64) -> Result<ScoreEvent> {
        let elapsed = Self::elapsed_seconds(self.open_round(round_id)?, now_ms);
        self.score_vote(round_id, claim_id, elapsed, now_ms)
    }

    /// Resolves a round with an explicit elapsed time.
    pub fn score_vote(&mut self, round_id: &str, claim_id: &str, elapsed_seconds: u32, now_ms: u64) -> Result<ScoreEvent> {
        let round = self.open_round(round_id)?;
        if !round.contains(claim_id) {
            return Err(GameError::ClaimNotInRound {
                round: round_id.to_string(),
                claim: claim_id.to_string(),
            }
            .into());
        }
        let out = self.commit(
            now_ms,
            GameEvent::Vote {
                round_id: round_id.to_string(),
                claim_id: claim_id.to_string(),
                elapsed_seconds,
            },
        )?;
        Ok(out.expect("votes settle the round"))
    }

    /// Resolves an open round whose time has run out. Returns `None` if
    /// there is still time left.
    pub fn expire_if_due(&mut self, round_id: &str, now_ms: u64) -> Result<Option<ScoreEvent>> {
        let round = self.open_round(round_id)?;
        let elapsed = Self::elapsed_seconds(round, now_ms);
        if super::remaining_points(self.config.pot, self.config.hint_cost, elapsed, round.hints_taken) > 0 {
            return Ok(None);
        }
        self.commit(
            now_ms,
            GameEvent::RoundExpired {
                round_id: round_id.to_string(),
                elapsed_seconds: elapsed,
            },
        )
    }

    pub fn record_like(&mut self, round_id: &str, claim_id: &str, now_ms: u64) -> Result<ScoreEvent> {
        let round = self
            .state
            .rounds
            .get(round_id)
            .ok_or_else(|| GameError::UnknownRound(round_id.to_string()))?;
        if round.is_open() {
            return Err(GameError::RoundOpen(round_id.to_string()).into());
        }
        if round.liked.is_some() {
            return Err(GameError::AlreadyLiked(round_id.to_string()).into());
        }
        if !round.contains(claim_id) {
            return Err(GameError::ClaimNotInRound {
                round: round_id.to_string(),
                claim: claim_id.to_string(),
            }
            .into());
        }
        let out = self.commit(
            now_ms,
            GameEvent::Like {
                round_id: round_id.to_string(),
                claim_id: claim_id.to_string(),
            },
        )?;
        Ok(out.expect("likes amend a score event"))
    }

    /// Adds a flag. A repeat flag by the same player is a no-op.
    pub fn flag_claim(&mut self, claim_id: &str, flagger_id: &str, reason: &str, now_ms: u64) -> Result<Claim> {
        let claim = self
            .state
            .claims
            .get(claim_id)
            .ok_or_else(|| GameError::UnknownClaim(claim_id.to_string()))?;
        if claim.flags.iter().any(|f| f.flagger_id == flagger_id) {
            return Ok(claim.clone());
        }
        self.commit(
            now_ms,
            GameEvent::Flag {
                claim_id: claim_id.to_string(),
                flagger_id: flagger_id.to_string(),
                reason: reason.to_string(),
            },
        )?;
        Ok(self.state.claims[claim_id].clone())
    }
}
