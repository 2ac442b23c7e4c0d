// SPDX-License-Identifier: Apache-2.0

//! Tokenization shared by retrieval, alignment, LMI and the linear model.
//!
//! Tokens are maximal runs of alphanumeric characters, lowercased. No
//! stemming, stopwords kept.

/// Retrieval tokenizer: lowercase, split on non-alphanumerics.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_spans(text).into_iter().map(|(tok, _)| tok).collect()
}

/// Tokenize and keep the byte span of each token in `text`.
pub fn tokenize_spans(text: &str) -> Vec<(String, std::ops::Range<usize>)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            out.push((text[s..i].to_lowercase(), s..i));
        }
    }
    if let Some(s) = start {
        out.push((text[s..].to_lowercase(), s..text.len()));
    }
    out
}

/// Whitespace token count, used for corpus and dataset statistics.
pub fn whitespace_len(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Adjacent token pairs.
pub fn bigrams(tokens: &[String]) -> impl Iterator<Item = (&str, &str)> {
    tokens.windows(2).map(|w| (w[0].as_str(), w[1].as_str()))
}
