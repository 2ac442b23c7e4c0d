// SPDX-License-Identifier: Apache-2.0

//! The round point economy.
//!
//! Each second of elapsed time and each hint (at `hint_cost` seconds) takes
//! one point from the voter's share of the pot. On a correct vote the rest
//! of the pot goes to the two claim authors, so voter and authors always sum
//! to the pot. A wrong vote pays nobody. A round that times out pays the
//! whole pot to the authors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AuthorSplit, GameConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    Incorrect,
    TimedOut,
}

/// Points still available to the voter.
pub fn remaining_points(pot: u32, hint_cost: u32, elapsed_seconds: u32, hints_taken: u32) -> u32 {
    let spent = elapsed_seconds as u64 + hint_cost as u64 * hints_taken as u64;
    (pot as u64).saturating_sub(spent) as u32
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payout {
    pub voter_points: u32,
    pub author_points: BTreeMap<String, u32>,
}

impl Payout {
    pub fn author_total(&self) -> u32 {
        self.author_points.values().sum()
    }
}

/// Splits a round's pot. `entailed_author` and `refuted_author` may be the
/// same player, in which case their shares are merged.
pub fn payout(
    config: &GameConfig,
    outcome: Outcome,
    elapsed_seconds: u32,
    hints_taken: u32,
    entailed_author: &str,
    refuted_author: &str,
) -> Payout {
    let (voter_points, author_pot) = match outcome {
        Outcome::Correct => {
            let r = remaining_points(config.pot, config.hint_cost, elapsed_seconds, hints_taken);
            (r, config.pot - r)
        }
        Outcome::Incorrect => (0, 0),
        Outcome::TimedOut => (0, config.pot),
    };
    let (to_entailed, to_refuted) = match config.author_split {
        // Odd point goes to the entailed claim's author.
        AuthorSplit::Equal => (author_pot - author_pot / 2, author_pot / 2),
        AuthorSplit::RefutedOnly => (0, author_pot),
    };
    let mut author_points = BTreeMap::new();
    *author_points.entry(entailed_author.to_string()).or_insert(0) += to_entailed;
    *author_points.entry(refuted_author.to_string()).or_insert(0) += to_refuted;
    Payout {
        voter_points,
        author_points,
    }
}
