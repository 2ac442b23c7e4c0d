// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use fm2_core::eventlog::{replay, EventLog, MemorySink};
use fm2_core::game::{ClaimDraft, GameConfig, GameEngine, GameError, Outcome};
use fm2_core::retrieval::SparseIndex;
use fm2_core::{Error, Label};

fn engine(seed: u64) -> GameEngine {
    let corpus = Arc::new(common::synthetic_corpus(30, 3, 400, 3));
    let index = Arc::new(SparseIndex::build(&corpus).unwrap());
    GameEngine::new(corpus, index, GameConfig { seed, ..Default::default() })
}

/// Authors one claim, quoting the start of the page's first passage.
fn author(e: &mut GameEngine, player: &str, label: Label, now: u64) -> String {
    let session = e.start_authoring(player, None, now).unwrap();
    let first = e.state().sessions[&session].page.passage_ids[0].clone();
    let text = e.corpus().get_passage(&first).unwrap().text;
    let span: String = text.split(' ').take(6).collect::<Vec<_>>().join(" ");
    let live = e.live_retrieve(&session, &span, Some(&first), None).unwrap();
    assert_eq!(live.gold_rank, Some(1));
    e.submit_claim(
        &session,
        ClaimDraft {
            text: format!("{player} says {span}"),
            label,
            spans: vec![span],
            strategy_tags: vec![],
        },
        now + 1,
    )
    .unwrap()
    .id
}

#[test]
fn author_vote_hint_like_and_replay() {
    let sink = MemorySink::default();
    let mut e = engine(1).with_sink(Box::new(sink.clone()));
    let t = author(&mut e, "alice", Label::Entailed, 1_000);
    let f = author(&mut e, "bob", Label::Refuted, 2_000);
    assert!(e.state().claims[&t].gold_evidence[0].kept);

    assert!(matches!(
        e.start_vote("alice", None, 3_000),
        Err(Error::Game(GameError::InsufficientClaims { missing: Label::Entailed, .. }))
    ));
    let round = e.start_vote("carol", None, 10_000).unwrap();
    assert_eq!(round.hint_queue.len(), 4);
    assert_eq!(e.remaining(&round.round_id, 20_000).unwrap(), 110);
    let hint = e.request_hint(&round.round_id, 20_000).unwrap();
    assert_eq!((hint.hints_taken, hint.remaining), (1, 80));

    let score = e.answer(&round.round_id, &f, 40_000).unwrap();
    assert_eq!(score.outcome, Outcome::Correct);
    assert_eq!(score.voter_points, 120 - 30 - 30);
    assert_eq!(score.author_points.values().sum::<u32>(), 60);
    assert!(matches!(e.answer(&round.round_id, &f, 41_000), Err(Error::Game(GameError::RoundClosed(_)))));

    e.record_like(&round.round_id, &t, 42_000).unwrap();
    assert!(matches!(
        e.record_like(&round.round_id, &t, 43_000),
        Err(Error::Game(GameError::AlreadyLiked(_)))
    ));
    let ledger: BTreeMap<String, u64> = e.state().ledger.clone();
    assert_eq!(ledger["carol"], 60);
    assert_eq!(ledger["alice"], 30 + 10);
    assert_eq!(ledger["bob"], 30);

    e.flag_claim(&f, "dave", "offensive", 50_000).unwrap();
    assert!(e.start_vote("erin", None, 60_000).is_err());

    let records = sink.records();
    assert_eq!(replay(&records, e.config()).unwrap().digest(), e.state().digest());
}

#[test]
fn timer_runs_out_on_hint() {
    let mut e = engine(2);
    author(&mut e, "a", Label::Entailed, 0);
    author(&mut e, "b", Label::Refuted, 0);
    let round = e.start_vote("v", None, 0).unwrap();
    e.request_hint(&round.round_id, 1_000).unwrap();
    e.request_hint(&round.round_id, 2_000).unwrap();
    e.request_hint(&round.round_id, 3_000).unwrap();
    assert_eq!(e.remaining(&round.round_id, 3_000).unwrap(), 27);
    assert!(matches!(
        e.request_hint(&round.round_id, 40_000),
        Err(Error::Game(GameError::TimerExhausted(_)))
    ));
    let settled = e.state().score_event(&round.round_id).unwrap();
    assert_eq!(settled.outcome, Outcome::TimedOut);
    assert_eq!((settled.voter_points, settled.author_points.values().sum::<u32>()), (0, 120));
}

#[test]
fn wrong_vote_pays_nobody() {
    let mut e = engine(3);
    let t = author(&mut e, "a", Label::Entailed, 0);
    author(&mut e, "b", Label::Refuted, 0);
    let round = e.start_vote("v", None, 0).unwrap();
    let s = e.answer(&round.round_id, &t, 5_000).unwrap();
    assert_eq!(s.outcome, Outcome::Incorrect);
    assert_eq!(s.voter_points + s.author_points.values().sum::<u32>(), 0);
}

#[test]
fn pair_sampling_balances_exposure_and_display_order() {
    let mut e = engine(4);
    let mut ent = Vec::new();
    for i in 0..10 {
        ent.push(author(&mut e, &format!("a{i}"), Label::Entailed, i));
        author(&mut e, &format!("b{i}"), Label::Refuted, i);
    }
    let mut first_is_entailed = 0;
    for r in 0..1000u64 {
        let round = e.start_vote("voter", None, r * 1_000_000).unwrap();
        if round.display[0] == round.entailed_claim {
            first_is_entailed += 1;
        }
        e.answer(&round.round_id, &round.refuted_claim, r * 1_000_000 + 5_000).unwrap();
    }
    // Least-exposed-first gives every claim exactly 1000 / 10 showings.
    assert!(e.state().exposures.values().all(|&n| n == 100));
    assert_eq!(e.state().exposures.len(), 20);
    // Binomial(1000, 0.5): mean 500, sd ~15.8; allow 4 sd.
    assert!((first_is_entailed as i64 - 500).abs() <= 64, "{first_is_entailed}");
}

#[test]
fn file_log_restores_engine() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("events.jsonl");
    let digest = {
        let (mut log, existing) = EventLog::open(&path).unwrap();
        assert!(existing.is_empty());
        log.set_sync(false);
        let mut e = engine(5).with_sink(Box::new(log));
        author(&mut e, "a", Label::Entailed, 0);
        author(&mut e, "b", Label::Refuted, 0);
        let round = e.start_vote("v", None, 0).unwrap();
        e.answer(&round.round_id, &round.refuted_claim, 9_000).unwrap();
        e.flush().unwrap();
        e.state().digest()
    };
    let (_, records) = EventLog::open(&path).unwrap();
    let corpus = Arc::new(common::synthetic_corpus(30, 3, 400, 3));
    let index = Arc::new(SparseIndex::build(&corpus).unwrap());
    let restored = GameEngine::restore(corpus, index, GameConfig { seed: 5, ..Default::default() }, &records).unwrap();
    assert_eq!(restored.state().digest(), digest);

    // A torn final line is reported, not silently dropped.
    let mut raw = std::fs::read(&path).unwrap();
    raw.extend_from_slice(b"{\"seq\":");
    std::fs::write(&path, raw).unwrap();
    assert!(matches!(EventLog::open(&path), Err(Error::LogCorrupt { .. })));
}
