// SPDX-License-Identifier: Apache-2.0

//! Feature hashing of unigrams and bigrams into 2^20 buckets.

use crate::{Error, Result};

pub const BUCKET_BITS: u32 = 20;
pub const BUCKET_COUNT: usize = 1 << BUCKET_BITS;
const BUCKET_MASK: u64 = (BUCKET_COUNT as u64) - 1;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Seedless 64-bit string hash: FNV-1a followed by the murmur3 `fmix64`
/// finalizer, so the low bits used for bucketing are well mixed.
pub fn hash64(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h = FNV_OFFSET;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    h
}

fn bucket_of(tokens: &[&str]) -> u32 {
    let mut bytes = Vec::with_capacity(tokens.iter().map(|t| t.len() + 1).sum());
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            bytes.push(b' ');
        }
        bytes.extend_from_slice(t.as_bytes());
    }
    (hash64(bytes) & BUCKET_MASK) as u32
}

/// Bucket id of a one- or two-token n-gram.
pub fn hash_feature(ngram: &[&str]) -> Result<u32> {
    if ngram.is_empty() || ngram.len() > 2 || ngram.iter().any(|t| t.is_empty()) {
        return Err(Error::EmptyNgram);
    }
    Ok(bucket_of(ngram))
}

/// All unigram and bigram buckets of a token stream, one entry per
/// occurrence, unigrams first.
pub fn ngram_buckets(tokens: &[String]) -> Vec<u32> {
    let mut out = Vec::with_capacity(tokens.len() * 2);
    out.extend(tokens.iter().map(|t| bucket_of(&[t.as_str()])));
    out.extend(crate::text::bigrams(tokens).map(|(a, b)| bucket_of(&[a, b])));
    out
}

/// Sorted `(bucket, count)` pairs of a token stream.
pub fn bucket_counts(tokens: &[String]) -> Vec<(u32, u32)> {
    let mut buckets = ngram_buckets(tokens);
    buckets.sort_unstable();
    let mut out: Vec<(u32, u32)> = Vec::new();
    for b in buckets {
        match out.last_mut() {
            Some((last, n)) if *last == b => *n += 1,
            _ => out.push((b, 1)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn deterministic_and_in_range() {
        let a = hash_feature(&["new", "york"]).unwrap();
        assert_eq!(a, hash_feature(&["new", "york"]).unwrap());
        assert!((a as usize) < BUCKET_COUNT);
        assert_ne!(hash_feature(&["new"]).unwrap(), hash_feature(&["york"]).unwrap());
    }

    #[test]
    fn empty_ngram_rejected() {
        assert!(matches!(hash_feature(&[]), Err(Error::EmptyNgram)));
        assert!(matches!(hash_feature(&["a", ""]), Err(Error::EmptyNgram)));
        assert!(matches!(hash_feature(&["a", "b", "c"]), Err(Error::EmptyNgram)));
    }

    #[test]
    fn bigram_bucket_occupancy_is_uniform() {
        // 100,000 distinct bigrams. Occupancy over 2^20 buckets has an
        // expected count below one, so the chi-square test is run over the
        // bucket id folded into 1024 cells, once on the low 10 bits and once
        // on the high 10 bits.
        let n = 100_000u32;
        let mut low = vec![0u32; 1024];
        let mut high = vec![0u32; 1024];
        for i in 0..n {
            let a = format!("w{}", i / 317);
            let b = format!("v{}", i % 317);
            let bucket = hash_feature(&[&a, &b]).unwrap();
            low[(bucket & 1023) as usize] += 1;
            high[(bucket >> 10) as usize] += 1;
        }
        let expected = n as f64 / 1024.0;
        let dist = ChiSquared::new(1023.0).unwrap();
        for cells in [&low, &high] {
            let chi2: f64 = cells
                .iter()
                .map(|&c| (c as f64 - expected).powi(2) / expected)
                .sum();
            let p = 1.0 - dist.cdf(chi2);
            assert!(p > 0.001, "chi2 = {chi2}, p = {p}");
        }
    }

    #[test]
    fn counts_are_sorted_and_complete() {
        let toks: Vec<String> = ["a", "b", "a", "b"].iter().map(|s| s.to_string()).collect();
        let counts = bucket_counts(&toks);
        assert!(counts.windows(2).all(|w| w[0].0 < w[1].0));
        // 4 unigrams + 3 bigrams
        assert_eq!(counts.iter().map(|c| c.1).sum::<u32>(), 7);
        let ab = hash_feature(&["a", "b"]).unwrap();
        assert_eq!(counts.iter().find(|c| c.0 == ab).unwrap().1, 2);
    }
}
