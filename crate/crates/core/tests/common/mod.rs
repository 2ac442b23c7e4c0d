// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use fm2_core::corpus::{Corpus, Passage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn vocab(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("tok{i}")).collect()
}

/// `pages` pages of `per_page` passages, 20 to 40 random words each.
pub fn synthetic_corpus(pages: usize, per_page: usize, vocab_size: usize, seed: u64) -> Corpus {
    let words = vocab(vocab_size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passages = Vec::new();
    for p in 0..pages {
        for j in 0..per_page {
            let len = rng.random_range(20..=40);
            let text: Vec<&str> = (0..len).map(|_| words[rng.random_range(0..words.len())].as_str()).collect();
            passages.push(Passage {
                id: format!("page{p:04}_{j}"),
                page_title: format!("Page {p}"),
                text: text.join(" "),
                category: Some(if p % 2 == 0 { "even" } else { "odd" }.to_string()),
            });
        }
    }
    Corpus::from_passages(passages).unwrap()
}
