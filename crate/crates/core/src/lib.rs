// SPDX-License-Identifier: Apache-2.0

//! Core engine for a retrieval-in-the-loop claim collection game.
//!
//! The crate covers the whole offline and online pipeline:
//!
//! - [`corpus`]: on-disk passage store with page metadata and category sampling.
//! - [`retrieval`]: hashed unigram+bigram TF-IDF retrieval, exact dense
//!   inner-product search, and token-overlap highlighting.
//! - [`alignment`]: evidence-to-passage alignment by clipped n-gram precision.
//! - [`game`]: authoring sessions, voting rounds and the zero-sum point economy,
//!   driven entirely by an append-only event stream.
//! - [`eventlog`]: JSONL event log persistence and replay.
//! - [`quality`]: MAP correctness filtering, LMI artifact reports, like and
//!   agreement analytics.
//! - [`verify`]: hashed logistic regression, external model adapter, and
//!   end-to-end verification by logit averaging.
//! - [`evalkit`]: retrieval metrics, label accuracy and page-disjoint export.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is on (default) and plain iterators otherwise.

pub mod alignment;
pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod eventlog;
pub mod game;
pub mod par;
pub mod quality;
pub mod retrieval;
pub mod text;
pub mod verify;

pub use error::{Error, Result};

/// Binary claim label. "Not enough info" is excluded by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    #[serde(alias = "SUPPORTS", alias = "supports", alias = "entailment")]
    Entailed,
    #[serde(alias = "REFUTES", alias = "refutes", alias = "contradiction")]
    Refuted,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Entailed, Label::Refuted];

    pub fn index(self) -> usize {
        match self {
            Label::Entailed => 0,
            Label::Refuted => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::Entailed
        } else {
            Label::Refuted
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailed => "entailed",
            Label::Refuted => "refuted",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "entailed" | "supports" | "entailment" | "true" => Ok(Label::Entailed),
            "refuted" | "refutes" | "contradiction" | "false" => Ok(Label::Refuted),
            other => Err(Error::InvalidArgument(format!("unknown label {other:?}"))),
        }
    }
}
