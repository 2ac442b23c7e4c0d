// SPDX-License-Identifier: Apache-2.0

//! Exact inner-product search over precomputed passage embeddings.
//!
//! File layout (little endian): `b"FM2DENSE"`, `u32 dim`, `u64 rows`, then
//! `rows * dim` `f32` values row-major. A sidecar JSONL file maps each row to
//! its passage id: `{"row": 0, "passage_id": "..."}`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::{top_k, RankedHit, Retriever};
use crate::corpus::Corpus;
use crate::{par, Error, Result};

const MAGIC: &[u8; 8] = b"FM2DENSE";
const SCAN_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseIndex {
    dim: usize,
    vectors: Vec<f32>,
    passage_ids: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct SidecarRow {
    row: u64,
    passage_id: String,
}

impl DenseIndex {
    pub fn new(dim: usize, vectors: Vec<f32>, passage_ids: Vec<String>) -> Result<DenseIndex> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dim must be positive".into()));
        }
        if vectors.len() != dim * passage_ids.len() {
            return Err(Error::Format(format!(
                "{} values do not form {} rows of dim {dim}",
                vectors.len(),
                passage_ids.len()
            )));
        }
        Ok(DenseIndex {
            dim,
            vectors,
            passage_ids,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.passage_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn passage_id(&self, i: usize) -> &str {
        &self.passage_ids[i]
    }

    /// Checks that rows cover the corpus one to one.
    pub fn check_against(&self, corpus: &Corpus) -> Result<()> {
        if self.rows() != corpus.len() {
            return Err(Error::Format(format!(
                "dense index has {} rows, corpus has {} passages",
                self.rows(),
                corpus.len()
            )));
        }
        if let Some(missing) = self.passage_ids.iter().find(|id| corpus.index_of(id).is_none()) {
            return Err(Error::NotFound {
                kind: "passage",
                id: missing.clone(),
            });
        }
        Ok(())
    }

    /// Top-`k` rows by inner product, full scan. Ties go to the smaller id.
    pub fn query(&self, query: &[f32], k: usize) -> Result<Vec<RankedHit>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: query.len(),
            });
        }
        if k == 0 || self.rows() == 0 {
            return Ok(Vec::new());
        }
        let rows: Vec<u32> = (0..self.rows() as u32).collect();
        let partial = par::map_chunks(&rows, SCAN_CHUNK, |_, chunk| {
            top_k(
                chunk.iter().map(|&r| (r, dot(self.row(r as usize), query))),
                k,
                |r| self.passage_ids[r as usize].as_str(),
            )
        });
        // Merge chunk winners, addressed by position in the flattened list.
        let flat: Vec<&RankedHit> = partial.iter().flatten().collect();
        Ok(top_k(
            flat.iter().enumerate().map(|(i, h)| (i as u32, h.score)),
            k,
            |i| flat[i as usize].passage_id.as_str(),
        ))
    }

    pub fn write(&self, path: impl AsRef<Path>, sidecar: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(self.dim as u32)?;
        w.write_u64::<LittleEndian>(self.rows() as u64)?;
        for &v in &self.vectors {
            w.write_f32::<LittleEndian>(v)?;
        }
        w.flush()?;
        let mut s = BufWriter::new(File::create(sidecar)?);
        for (row, id) in self.passage_ids.iter().enumerate() {
            serde_json::to_writer(
                &mut s,
                &SidecarRow {
                    row: row as u64,
                    passage_id: id.clone(),
                },
            )?;
            s.write_all(b"\n")?;
        }
        s.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>, sidecar: impl AsRef<Path>) -> Result<DenseIndex> {
        let path = path.as_ref();
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::File {
                path: path.to_path_buf(),
                message: "missing FM2DENSE magic".into(),
            });
        }
        let dim = r.read_u32::<LittleEndian>()? as usize;
        let rows = r.read_u64::<LittleEndian>()? as usize;
        let mut vectors = vec![0f32; rows * dim];
        r.read_f32_into::<LittleEndian>(&mut vectors).map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: format!("truncated embedding matrix ({rows} x {dim}): {e}"),
        })?;

        let sidecar = sidecar.as_ref();
        let mut ids: Vec<Option<String>> = vec![None; rows];
        for (n, line) in BufReader::new(File::open(sidecar)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: SidecarRow = serde_json::from_str(&line).map_err(|e| Error::File {
                path: sidecar.to_path_buf(),
                message: format!("line {}: {e}", n + 1),
            })?;
            let slot = ids.get_mut(row.row as usize).ok_or_else(|| Error::File {
                path: sidecar.to_path_buf(),
                message: format!("line {}: row {} out of range", n + 1, row.row),
            })?;
            *slot = Some(row.passage_id);
        }
        let passage_ids = ids
            .into_iter()
            .enumerate()
            .map(|(row, id)| {
                id.ok_or_else(|| Error::File {
                    path: sidecar.to_path_buf(),
                    message: format!("no passage id for row {row}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        DenseIndex::new(dim, vectors, passage_ids)
    }
}

/// Inner product accumulated in f64, left to right.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// Produces query embeddings for dense retrieval.
pub trait QueryEncoder: Sync {
    fn encode(&self, text: &str) -> Result<Vec<f32>>;
}

/// Query embeddings computed elsewhere, keyed by query text.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedQueries(pub HashMap<String, Vec<f32>>);

impl QueryEncoder for PrecomputedQueries {
    fn encode(&self, text: &str) -> Result<Vec<f32>> {
        self.0.get(text).cloned().ok_or_else(|| Error::NotFound {
            kind: "query embedding",
            id: text.to_string(),
        })
    }
}

pub struct DenseRetriever<'a, E> {
    pub index: &'a DenseIndex,
    pub encoder: E,
}

impl<E: QueryEncoder> Retriever for DenseRetriever<'_, E> {
    fn retrieve(&self, text: &str, k: usize) -> Result<Vec<RankedHit>> {
        self.index.query(&self.encoder.encode(text)?, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_rows(n: usize, dim: usize) -> DenseIndex {
        let mut v = Vec::new();
        for i in 0..n {
            let mut row = vec![0f32; dim];
            row[i % dim] = 1.0;
            row[(i + 1) % dim] = (i as f32) * 0.01;
            let norm = row.iter().map(|x| x * x).sum::<f32>().sqrt();
            v.extend(row.iter().map(|x| x / norm));
        }
        DenseIndex::new(dim, v, (0..n).map(|i| format!("p{i:03}")).collect()).unwrap()
    }

    #[test]
    fn self_match_ranks_first() {
        let idx = unit_rows(8, 8);
        for i in 0..8 {
            let hits = idx.query(idx.row(i), 3).unwrap();
            assert_eq!(hits[0].passage_id, format!("p{i:03}"));
        }
    }

    #[test]
    fn zero_query_orders_by_id() {
        let idx = unit_rows(6, 4);
        let hits = idx.query(&[0.0; 4], 6).unwrap();
        assert!(hits.iter().all(|h| h.score == 0.0));
        let ids: Vec<_> = hits.iter().map(|h| h.passage_id.clone()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn dimension_mismatch_names_both() {
        let idx = unit_rows(2, 4);
        match idx.query(&[1.0; 3], 1) {
            Err(Error::DimensionMismatch { expected, got }) => assert_eq!((expected, got), (4, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn file_roundtrip_and_bad_magic() {
        let tmp = tempfile::tempdir().unwrap();
        let idx = unit_rows(5, 3);
        let (bin, side) = (tmp.path().join("e.bin"), tmp.path().join("e.jsonl"));
        idx.write(&bin, &side).unwrap();
        let bytes = std::fs::read(&bin).unwrap();
        assert_eq!(&bytes[..8], b"FM2DENSE");
        assert_eq!(bytes.len(), 8 + 4 + 8 + 5 * 3 * 4);
        assert_eq!(DenseIndex::read(&bin, &side).unwrap(), idx);

        std::fs::write(&bin, b"XXXXXXXX").unwrap();
        assert!(DenseIndex::read(&bin, &side).is_err());
    }
}
