// SPDX-License-Identifier: Apache-2.0

//! Hashed TF-IDF index over unigrams and bigrams of `title ++ " " ++ text`.
//!
//! Weighting: `w(t, d) = ln(1 + tf) * idf(t)` with
//! `idf(t) = max(0, ln((N - df + 0.5) / (df + 0.5)))`. Scores are cosine
//! similarities between hashed query and document vectors. Any document
//! sharing at least one in-vocabulary bucket with the query is a candidate,
//! even when every shared bucket has zero idf; such documents score 0 and
//! fall back to ascending passage id order.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::features::{bucket_counts, BUCKET_BITS, BUCKET_COUNT};
use super::{top_k, RankedHit, Retriever};
use crate::corpus::Corpus;
use crate::{par, text, Error, Result};

const MAGIC: &[u8; 8] = b"FM2SPARS";
const VERSION: u32 = 1;
const BUILD_BATCH: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseIndex {
    doc_ids: Vec<String>,
    /// CSR row starts, `BUCKET_COUNT + 1` entries.
    offsets: Vec<u64>,
    postings: Vec<Posting>,
    doc_norms: Vec<f64>,
}

pub fn idf(doc_count: usize, doc_freq: usize) -> f64 {
    let n = doc_count as f64;
    let df = doc_freq as f64;
    ((n - df + 0.5) / (df + 0.5)).ln().max(0.0)
}

/// Text a passage is indexed under.
pub fn indexed_text(title: &str, text: &str) -> String {
    format!("{title} {text}")
}

impl SparseIndex {
    pub fn build(corpus: &Corpus) -> Result<SparseIndex> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let n = corpus.len();
        let mut doc_features: Vec<Vec<(u32, u32)>> = Vec::with_capacity(n);
        let mut start = 0usize;
        while start < n {
            let end = (start + BUILD_BATCH).min(n);
            let batch: Vec<Result<Vec<(u32, u32)>>> = par::map_range(end - start, |i| {
                let p = corpus.passage_at((start + i) as u32)?;
                Ok(bucket_counts(&text::tokenize(&indexed_text(&p.page_title, &p.text))))
            });
            for f in batch {
                doc_features.push(f?);
            }
            start = end;
        }
        let doc_ids = (0..n as u32).map(|i| corpus.id_at(i).to_string()).collect();
        Ok(SparseIndex::from_features(doc_ids, &doc_features))
    }

    fn from_features(doc_ids: Vec<String>, doc_features: &[Vec<(u32, u32)>]) -> SparseIndex {
        let mut offsets = vec![0u64; BUCKET_COUNT + 1];
        for features in doc_features {
            for &(b, _) in features {
                offsets[b as usize + 1] += 1;
            }
        }
        for b in 0..BUCKET_COUNT {
            offsets[b + 1] += offsets[b];
        }
        let mut cursor = offsets.clone();
        let mut postings = vec![Posting { doc: 0, tf: 0 }; offsets[BUCKET_COUNT] as usize];
        for (doc, features) in doc_features.iter().enumerate() {
            for &(b, tf) in features {
                let slot = &mut cursor[b as usize];
                postings[*slot as usize] = Posting { doc: doc as u32, tf };
                *slot += 1;
            }
        }
        let doc_count = doc_ids.len();
        let idfs = |b: u32| idf(doc_count, (offsets[b as usize + 1] - offsets[b as usize]) as usize);
        let doc_norms = par::map(doc_features, |features| {
            features
                .iter()
                .map(|&(b, tf)| {
                    let w = (1.0 + tf as f64).ln() * idfs(b);
                    w * w
                })
                .sum::<f64>()
                .sqrt()
        });
        SparseIndex {
            doc_ids,
            offsets,
            postings,
            doc_norms,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn bucket_count(&self) -> usize {
        BUCKET_COUNT
    }

    pub fn doc_id(&self, doc: u32) -> &str {
        &self.doc_ids[doc as usize]
    }

    pub fn postings(&self, bucket: u32) -> &[Posting] {
        let b = bucket as usize;
        &self.postings[self.offsets[b] as usize..self.offsets[b + 1] as usize]
    }

    pub fn bucket_doc_freq(&self, bucket: u32) -> usize {
        self.postings(bucket).len()
    }

    pub fn doc_norm(&self, doc: u32) -> f64 {
        self.doc_norms[doc as usize]
    }

    pub fn idf(&self, bucket: u32) -> f64 {
        idf(self.doc_count(), self.bucket_doc_freq(bucket))
    }

    /// Top-`k` passages by TF-IDF cosine. Ties go to the smaller passage id.
    pub fn query(&self, query: &str, k: usize) -> Vec<RankedHit> {
        if k == 0 {
            return Vec::new();
        }
        let features: Vec<(u32, f64)> = bucket_counts(&text::tokenize(query))
            .into_iter()
            .filter(|&(b, _)| self.bucket_doc_freq(b) > 0)
            .map(|(b, tf)| (b, (1.0 + tf as f64).ln() * self.idf(b)))
            .collect();
        if features.is_empty() {
            return Vec::new();
        }
        let qnorm = features.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();

        let mut dots: std::collections::HashMap<u32, f64> = std::collections::HashMap::new();
        for &(b, qw) in &features {
            let bidf = self.idf(b);
            for p in self.postings(b) {
                let dw = (1.0 + p.tf as f64).ln() * bidf;
                *dots.entry(p.doc).or_insert(0.0) += qw * dw;
            }
        }
        let scored = dots.into_iter().map(|(doc, dot)| {
            let dnorm = self.doc_norms[doc as usize];
            let score = if qnorm > 0.0 && dnorm > 0.0 { dot / (qnorm * dnorm) } else { 0.0 };
            (doc, score)
        });
        top_k(scored, k, |doc| self.doc_ids[doc as usize].as_str())
    }

    pub fn query_batch<S: AsRef<str> + Sync>(&self, queries: &[S], k: usize) -> Vec<Vec<RankedHit>> {
        par::map(queries, |q| self.query(q.as_ref(), k))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u32::<LittleEndian>(BUCKET_BITS)?;
        w.write_u64::<LittleEndian>(self.doc_ids.len() as u64)?;
        for id in &self.doc_ids {
            w.write_u32::<LittleEndian>(id.len() as u32)?;
            w.write_all(id.as_bytes())?;
        }
        for &o in &self.offsets {
            w.write_u64::<LittleEndian>(o)?;
        }
        for p in &self.postings {
            w.write_u32::<LittleEndian>(p.doc)?;
            w.write_u32::<LittleEndian>(p.tf)?;
        }
        for &n in &self.doc_norms {
            w.write_f64::<LittleEndian>(n)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<SparseIndex> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a sparse index file".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported sparse index version {version}")));
        }
        let bits = r.read_u32::<LittleEndian>()?;
        if bits != BUCKET_BITS {
            return Err(Error::Format(format!("index uses {bits} bucket bits, expected {BUCKET_BITS}")));
        }
        let n = r.read_u64::<LittleEndian>()? as usize;
        let mut doc_ids = Vec::with_capacity(n);
        for _ in 0..n {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            doc_ids.push(String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?);
        }
        let mut offsets = vec![0u64; BUCKET_COUNT + 1];
        r.read_u64_into::<LittleEndian>(&mut offsets)?;
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format("bucket offsets not monotone".into()));
        }
        let total = offsets[BUCKET_COUNT] as usize;
        let mut postings = Vec::with_capacity(total);
        for _ in 0..total {
            let doc = r.read_u32::<LittleEndian>()?;
            let tf = r.read_u32::<LittleEndian>()?;
            if doc as usize >= n {
                return Err(Error::Format(format!("posting references doc {doc} of {n}")));
            }
            postings.push(Posting { doc, tf });
        }
        let mut doc_norms = vec![0f64; n];
        r.read_f64_into::<LittleEndian>(&mut doc_norms)?;
        Ok(SparseIndex {
            doc_ids,
            offsets,
            postings,
            doc_norms,
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<SparseIndex> {
        let f = std::fs::File::open(path)?;
        SparseIndex::read_from(std::io::BufReader::new(f))
    }
}

impl Retriever for SparseIndex {
    fn retrieve(&self, text: &str, k: usize) -> Result<Vec<RankedHit>> {
        Ok(self.query(text, k))
    }
}
