// SPDX-License-Identifier: Apache-2.0

//! JSON endpoints over a shared [`GameEngine`].

use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::State;
use axum::http::HeaderMap;
use axum::routing::{get, post};
use axum::{Json, Router};
use fm2_core::corpus::CorpusStats;
use fm2_core::game::{Claim, ClaimDraft, GameEngine, LiveRetrieval, Outcome, ScoreEvent};
use fm2_core::quality;
use fm2_core::Label;
use serde::{Deserialize, Serialize};

use crate::auth::{ApiSession, Role, SessionStore, TOKEN_HEADER};
use crate::clock::Clock;
use crate::ServiceError;

type ApiResult<T> = Result<Json<T>, ServiceError>;

#[derive(Clone)]
pub struct AppState {
    engine: Arc<Mutex<GameEngine>>,
    sessions: Arc<Mutex<SessionStore>>,
    clock: Arc<dyn Clock>,
}

impl AppState {
    pub fn new(engine: GameEngine, clock: Arc<dyn Clock>, session_ttl_secs: u64) -> AppState {
        AppState {
            engine: Arc::new(Mutex::new(engine)),
            sessions: Arc::new(Mutex::new(SessionStore::new(session_ttl_secs))),
            clock,
        }
    }

    /// The whole game runs under one lock, which also serializes log appends.
    pub fn engine(&self) -> MutexGuard<'_, GameEngine> {
        self.engine.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn sessions(&self) -> MutexGuard<'_, SessionStore> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/categories", get(categories))
        .route("/leaderboard", get(leaderboard))
        .route("/stats", get(stats))
        .route("/author/start", post(author_start))
        .route("/author/retrieve", post(author_retrieve))
        .route("/author/submit", post(author_submit))
        .route("/vote/start", post(vote_start))
        .route("/vote/hint", post(vote_hint))
        .route("/vote/answer", post(vote_answer))
        .route("/vote/like", post(vote_like))
        .route("/flag", post(flag))
        .with_state(state)
}

fn token(headers: &HeaderMap) -> Option<&str> {
    headers.get(TOKEN_HEADER).and_then(|v| v.to_str().ok())
}

fn authorize(state: &AppState, headers: &HeaderMap, role: Option<Role>, now: u64) -> Result<ApiSession, ServiceError> {
    state.sessions().check(token(headers), role, now)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub corpus: CorpusStats,
    pub events: u64,
}

async fn health(State(state): State<AppState>) -> ApiResult<Health> {
    let engine = state.engine();
    Ok(Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        corpus: engine.corpus().stats(),
        events: engine.state().last_seq,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub pages: usize,
}

async fn categories(State(state): State<AppState>) -> ApiResult<Vec<Category>> {
    let engine = state.engine();
    Ok(Json(
        engine
            .corpus()
            .categories()
            .into_iter()
            .map(|(name, pages)| Category { name, pages })
            .collect(),
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub player_id: String,
    pub points: u64,
}

async fn leaderboard(State(state): State<AppState>) -> ApiResult<Vec<LeaderboardRow>> {
    let engine = state.engine();
    Ok(Json(
        engine
            .state()
            .leaderboard()
            .into_iter()
            .map(|(player_id, points)| LeaderboardRow { player_id, points })
            .collect(),
    ))
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Stats {
    pub events: u64,
    pub claims: usize,
    pub entailed_claims: usize,
    pub refuted_claims: usize,
    pub flagged_claims: usize,
    pub rounds: usize,
    pub open_rounds: usize,
    pub correct_votes: usize,
    pub incorrect_votes: usize,
    pub timed_out: usize,
    pub likes: usize,
    /// Claims whose MAP correctness is below 0.5.
    pub review_queue: usize,
    pub state_digest: String,
}

async fn stats(State(state): State<AppState>) -> ApiResult<Stats> {
    let engine = state.engine();
    let s = engine.state();
    let mut out = Stats {
        events: s.last_seq,
        claims: s.claims.len(),
        rounds: s.rounds.len(),
        open_rounds: s.open_rounds().count(),
        state_digest: s.digest(),
        ..Stats::default()
    };
    for c in s.claims.values() {
        match c.label {
            Label::Entailed => out.entailed_claims += 1,
            Label::Refuted => out.refuted_claims += 1,
        }
        out.flagged_claims += usize::from(!c.flags.is_empty());
    }
    for e in &s.score_events {
        match e.outcome {
            Outcome::Correct => out.correct_votes += 1,
            Outcome::Incorrect => out.incorrect_votes += 1,
            Outcome::TimedOut => out.timed_out += 1,
        }
        out.likes += usize::from(e.liked.is_some());
    }
    let estimates: Vec<_> = quality::tallies_from_state(s).iter().map(quality::map_correctness).collect();
    out.review_queue = quality::review_queue(&estimates, 0.5).len();
    Ok(Json(out))
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct StartRequest {
    #[serde(default)]
    pub category: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PagePassage {
    pub passage_id: String,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AuthorStart {
    /// Send back in the player token header on later calls.
    pub token: String,
    pub player_id: String,
    pub session_id: String,
    pub page_title: String,
    pub category: String,
    pub passages: Vec<PagePassage>,
}

async fn author_start(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(req): Json<StartRequest>,
) -> ApiResult<AuthorStart> {
    let now = state.clock.now_ms();
    let (token, session) = state.sessions().begin(token(&headers), Role::Author, now)?;
    let mut engine = state.engine();
    let session_id = engine.start_authoring(&session.player_id, req.category.as_deref(), now)?;
    let page = engine.state().sessions[&session_id].page.clone();
    let passages = page
        .passage_ids
        .iter()
        .map(|id| {
            engine.corpus().get_passage(id).map(|p| PagePassage {
                passage_id: p.id,
                text: p.text,
            })
        })
        .collect::<fm2_core::Result<Vec<_>>>()?;
    Ok(Json(AuthorStart {
        token,
        player_id: session.player_id,
        session_id,
        page_title: page.title,
        category: page.category,
        passages,
    }))
}

fn own_session(engine: &GameEngine, session_id: &str, player: &ApiSession) -> Result<(), ServiceError> {
    match engine.state().sessions.get(session_id) {
        Some(s) if s.player_id != player.player_id => {
            Err(ServiceError::Forbidden(format!("session {session_id} belongs to another player")))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RetrieveRequest {
    pub session_id: String,
    pub draft: String,
    /// Passage the author marks as gold evidence.
    #[serde(default)]
    pub gold_passage_id: Option<String>,
    #[serde(default)]
    pub k: Option<usize>,
}

async fn author_retrieve(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(req): Json<RetrieveRequest>,
) -> ApiResult<LiveRetrieval> {
    let player = authorize(&state, &headers, Some(Role::Author), state.clock.now_ms())?;
    let mut engine = state.engine();
    own_session(&engine, &req.session_id, &player)?;
    let k = req.k.map(|k| k.clamp(1, 50));
    Ok(Json(engine.live_retrieve(&req.session_id, &req.draft, req.gold_passage_id.as_deref(), k)?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubmitRequest {
    pub session_id: String,
    pub text: String,
    pub label: Label,
    pub spans: Vec<String>,
    #[serde(default)]
    pub strategy_tags: Vec<String>,
}

async fn author_submit(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(req): Json<SubmitRequest>,
) -> ApiResult<Claim> {
    let now = state.clock.now_ms();
    let player = authorize(&state, &headers, Some(Role::Author), now)?;
    let mut engine = state.engine();
    own_session(&engine, &req.session_id, &player)?;
    let draft = ClaimDraft {
        text: req.text,
        label: req.label,
        spans: req.spans,
        strategy_tags: req.strategy_tags,
    };
    Ok(Json(engine.submit_claim(&req.session_id, draft, now)?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ShownClaim {
    pub claim_id: String,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VoteStart {
    pub token: String,
    pub player_id: String,
    pub round_id: String,
    /// Display order as chosen by the server.
    pub claims: Vec<ShownClaim>,
    pub pot: u32,
    pub hint_cost: u32,
    pub remaining: u32,
}

async fn vote_start(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(req): Json<StartRequest>,
) -> ApiResult<VoteStart> {
    let now = state.clock.now_ms();
    let (token, session) = state.sessions().begin(token(&headers), Role::Voter, now)?;
    let mut engine = state.engine();
    let round = engine.start_vote(&session.player_id, req.category.as_deref(), now)?;
    let claims = round
        .display
        .iter()
        .map(|id| ShownClaim {
            claim_id: id.clone(),
            text: engine.state().claims[id].text.clone(),
        })
        .collect();
    Ok(Json(VoteStart {
        token,
        player_id: session.player_id,
        round_id: round.round_id.clone(),
        claims,
        pot: round.pot,
        hint_cost: engine.config().hint_cost,
        remaining: engine.remaining(&round.round_id, now)?,
    }))
}

fn own_round(engine: &GameEngine, round_id: &str, player: &ApiSession) -> Result<(), ServiceError> {
    match engine.state().rounds.get(round_id) {
        Some(r) if r.voter_id != player.player_id => {
            Err(ServiceError::Forbidden(format!("round {round_id} belongs to another player")))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RoundRequest {
    pub round_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HintResponse {
    pub passage_id: String,
    pub page_title: String,
    pub text: String,
    pub hints_taken: u32,
    pub remaining: u32,
}

async fn vote_hint(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(req): Json<RoundRequest>,
) -> ApiResult<HintResponse> {
    let now = state.clock.now_ms();
    let player = authorize(&state, &headers, Some(Role::Voter), now)?;
    let mut engine = state.engine();
    own_round(&engine, &req.round_id, &player)?;
    let hint = engine.request_hint(&req.round_id, now)?;
    Ok(Json(HintResponse {
        passage_id: hint.passage.id,
        page_title: hint.passage.page_title,
        text: hint.passage.text,
        hints_taken: hint.hints_taken,
        remaining: hint.remaining,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClaimRequest {
    pub round_id: String,
    pub claim_id: String,
}

async fn vote_answer(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(req): Json<ClaimRequest>,
) -> ApiResult<ScoreEvent> {
    let now = state.clock.now_ms();
    let player = authorize(&state, &headers, Some(Role::Voter), now)?;
    let mut engine = state.engine();
    own_round(&engine, &req.round_id, &player)?;
    // A vote after the timer ran out resolves the round as unanswered.
    if let Some(expired) = engine.expire_if_due(&req.round_id, now)? {
        return Ok(Json(expired));
    }
    Ok(Json(engine.answer(&req.round_id, &req.claim_id, now)?))
}

async fn vote_like(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(req): Json<ClaimRequest>,
) -> ApiResult<ScoreEvent> {
    let now = state.clock.now_ms();
    let player = authorize(&state, &headers, Some(Role::Voter), now)?;
    let mut engine = state.engine();
    own_round(&engine, &req.round_id, &player)?;
    Ok(Json(engine.record_like(&req.round_id, &req.claim_id, now)?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FlagRequest {
    pub claim_id: String,
    pub reason: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FlagResponse {
    pub claim_id: String,
    pub flags: usize,
}

async fn flag(
    State(state): State<AppState>,
    headers: HeaderMap,
    Json(req): Json<FlagRequest>,
) -> ApiResult<FlagResponse> {
    let now = state.clock.now_ms();
    let player = authorize(&state, &headers, None, now)?;
    let mut engine = state.engine();
    let claim = engine.flag_claim(&req.claim_id, &player.player_id, &req.reason, now)?;
    Ok(Json(FlagResponse {
        claim_id: claim.id,
        flags: claim.flags.len(),
    }))
}
