// SPDX-License-Identifier: Apache-2.0

//! Quality control over collected votes and claims.

mod lmi;
mod reports;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use lmi::{lmi_report, ArtifactReport, ArtifactRow};
pub use reports::{agreement_report, like_report, welch_t, AgreementCell, AgreementReport, LikeGroup, LikeReport, WelchT};

use crate::game::{GameState, Outcome, ScoreEvent};

/// Prior pseudocounts: four correct votes and one wrong one.
pub const PRIOR_CORRECT: f64 = 4.0;
pub const PRIOR_WRONG: f64 = 1.0;

pub const DEFAULT_REVIEW_THRESHOLD: f64 = 0.5;
pub const DEFAULT_EASY_MIN_VOTES: u32 = 3;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteTally {
    pub claim_id: String,
    pub correct: u32,
    pub incorrect: u32,
    /// Correct votes cast without any hint.
    pub unaided_correct: u32,
}

impl VoteTally {
    pub fn votes(&self) -> u32 {
        self.correct + self.incorrect
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessEstimate {
    pub claim_id: String,
    pub posterior_mean: f64,
    pub n_votes: u32,
}

/// Counts answered votes per claim. A vote on a round counts for both
/// claims of the pair. Timed-out rounds are not votes.
pub fn tally_votes<'a>(events: impl IntoIterator<Item = &'a ScoreEvent>) -> BTreeMap<String, VoteTally> {
    let mut out: BTreeMap<String, VoteTally> = BTreeMap::new();
    for e in events {
        let correct = match e.outcome {
            Outcome::Correct => true,
            Outcome::Incorrect => false,
            Outcome::TimedOut => continue,
        };
        for claim in [&e.entailed_claim, &e.refuted_claim] {
            let t = out.entry(claim.clone()).or_insert_with(|| VoteTally {
                claim_id: claim.clone(),
                ..Default::default()
            });
            if correct {
                t.correct += 1;
                if e.hints_taken == 0 {
                    t.unaided_correct += 1;
                }
            } else {
                t.incorrect += 1;
            }
        }
    }
    out
}

/// Tallies for every claim in the state, including claims without votes.
pub fn tallies_from_state(state: &GameState) -> Vec<VoteTally> {
    let mut t = tally_votes(&state.score_events);
    for id in state.claims.keys() {
        t.entry(id.clone()).or_insert_with(|| VoteTally {
            claim_id: id.clone(),
            ..Default::default()
        });
    }
    t.into_values().collect()
}

/// Posterior mean of vote correctness under a Beta(4, 1) prior:
/// `(4 + correct) / (5 + correct + incorrect)`.
pub fn map_correctness(tally: &VoteTally) -> CorrectnessEstimate {
    let c = tally.correct as f64;
    let w = tally.incorrect as f64;
    CorrectnessEstimate {
        claim_id: tally.claim_id.clone(),
        posterior_mean: (PRIOR_CORRECT + c) / (PRIOR_CORRECT + PRIOR_WRONG + c + w),
        n_votes: tally.votes(),
    }
}

/// Claims whose estimate is strictly below `threshold`, lowest first.
pub fn review_queue(estimates: &[CorrectnessEstimate], threshold: f64) -> Vec<String> {
    let mut low: Vec<&CorrectnessEstimate> = estimates.iter().filter(|e| e.posterior_mean < threshold).collect();
    low.sort_by(|a, b| {
        a.posterior_mean
            .total_cmp(&b.posterior_mean)
            .then_with(|| a.claim_id.cmp(&b.claim_id))
    });
    low.into_iter().map(|e| e.claim_id.clone()).collect()
}

/// Claims that every voter got right without a hint, with at least
/// `min_votes` votes.
pub fn detect_easy(tallies: &[VoteTally], min_votes: u32) -> Vec<String> {
    tallies
        .iter()
        .filter(|t| t.votes() >= min_votes.max(1) && t.incorrect == 0 && t.unaided_correct == t.correct)
        .map(|t| t.claim_id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tally(id: &str, c: u32, w: u32, unaided: u32) -> VoteTally {
        VoteTally {
            claim_id: id.into(),
            correct: c,
            incorrect: w,
            unaided_correct: unaided,
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(map_correctness(&tally("a", 0, 0, 0)).posterior_mean, 0.8);
        assert_eq!(map_correctness(&tally("a", 4, 1, 0)).posterior_mean, 0.8);
        assert_eq!(map_correctness(&tally("a", 0, 3, 0)).posterior_mean, 0.5);
    }

    #[test]
    fn exhaustive_closed_form_and_monotone() {
        for c in 0..=50u32 {
            for w in 0..=50u32 {
                let m = map_correctness(&tally("x", c, w, 0)).posterior_mean;
                assert_eq!(m, (4.0 + c as f64) / (5.0 + c as f64 + w as f64));
                if c > 0 {
                    assert!(m > map_correctness(&tally("x", c - 1, w, 0)).posterior_mean);
                }
                if w > 0 {
                    assert!(m < map_correctness(&tally("x", c, w - 1, 0)).posterior_mean);
                }
            }
        }
    }

    #[test]
    fn review_threshold_is_strict() {
        let est: Vec<_> = [tally("half", 0, 3, 0), tally("low", 0, 4, 0), tally("fine", 9, 0, 9)]
            .iter()
            .map(map_correctness)
            .collect();
        assert_eq!(review_queue(&est, 0.5), vec!["low"]);
        assert!((est[1].posterior_mean - 4.0 / 9.0).abs() < 1e-15);
        let all_good: Vec<_> = [tally("a", 3, 0, 0), tally("b", 1, 0, 1)].iter().map(map_correctness).collect();
        assert!(review_queue(&all_good, 0.5).is_empty());
    }

    #[test]
    fn queue_partitions_claims() {
        let est: Vec<_> = (0..30u32).map(|i| map_correctness(&tally(&format!("c{i}"), i % 5, i % 7, 0))).collect();
        let q = review_queue(&est, 0.5);
        let rest: Vec<_> = est.iter().filter(|e| !q.contains(&e.claim_id)).collect();
        assert_eq!(q.len() + rest.len(), est.len());
        assert!(rest.iter().all(|e| e.posterior_mean >= 0.5));
    }

    #[test]
    fn easy_claims() {
        let t = [
            tally("easy", 5, 0, 5),
            tally("hinted", 5, 0, 4),
            tally("few", 2, 0, 2),
            tally("wrong", 5, 1, 5),
        ];
        assert_eq!(detect_easy(&t, 3), vec!["easy"]);
    }

    #[test]
    fn tallies_count_both_claims_and_skip_timeouts() {
        let ev = |outcome, hints| ScoreEvent {
            round_id: "r".into(),
            voter_id: "v".into(),
            outcome,
            voter_points: 0,
            author_points: Default::default(),
            liked: None,
            entailed_claim: "e".into(),
            refuted_claim: "f".into(),
            hints_taken: hints,
            elapsed_seconds: 0,
        };
        let events = [ev(Outcome::Correct, 0), ev(Outcome::Correct, 1), ev(Outcome::Incorrect, 0), ev(Outcome::TimedOut, 0)];
        let t = tally_votes(&events);
        assert_eq!(t["e"], tally("e", 2, 1, 1));
        assert_eq!(t["f"], tally("f", 2, 1, 1));
    }
}
