// SPDX-License-Identifier: Apache-2.0

//! Passage corpus: ingest, lookup by id, page metadata and page sampling.
//!
//! Passages are addressed two ways: by their string id, and by a dense
//! `u32` index in ingest order. Indexes built over a corpus use the dense
//! index internally and report string ids.

mod ingest;
mod store;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use ingest::{InputFormat, IngestReport, RecordError};
use store::{Entry, Storage};

use crate::{Error, Result};

/// Category assigned to records that do not carry one.
pub const DEFAULT_CATEGORY: &str = "all";

/// Sanity bound on passage length in whitespace tokens.
pub const MAX_PASSAGE_TOKENS: usize = 150;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    #[serde(rename = "title")]
    pub page_title: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub title: String,
    /// Passage ids in document order.
    pub passage_ids: Vec<String>,
    pub category: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub passage_count: u64,
    pub page_count: u64,
    pub token_total: u64,
}

#[derive(Debug)]
pub struct Corpus {
    storage: Storage,
    entries: Vec<Entry>,
    by_id: HashMap<String, u32>,
    pages: Vec<Page>,
    page_by_title: HashMap<String, usize>,
    /// Category name to page indexes, in page order.
    categories: BTreeMap<String, Vec<usize>>,
    token_total: u64,
}

impl Corpus {
    /// Builds an in-memory corpus. Used for fixtures and tests.
    pub fn from_passages(passages: Vec<Passage>) -> Result<Corpus> {
        let mut texts = Vec::with_capacity(passages.len());
        let mut entries = Vec::with_capacity(passages.len());
        for (line, p) in passages.into_iter().enumerate() {
            ingest::validate(&p).map_err(|message| {
                Error::InvalidArgument(format!("passage {:?}: {message}", p.id))
            })?;
            entries.push(Entry {
                tokens: crate::text::whitespace_len(&p.text) as u32,
                id: p.id,
                title: p.page_title,
                category: p.category,
                offset: line as u64,
                len: 0,
            });
            texts.push(p.text);
        }
        Corpus::assemble(Storage::Memory(texts), entries)
    }

    /// Opens an existing on-disk store (or an empty one at `dir`).
    pub fn open(dir: impl AsRef<Path>) -> Result<Corpus> {
        let (storage, entries) = store::open_disk(dir.as_ref())?;
        Corpus::assemble(storage, entries)
    }

    /// Ingests a JSONL file into the store at `dir`. See [`ingest`](ingest::ingest).
    pub fn ingest(
        dir: impl AsRef<Path>,
        source: impl AsRef<Path>,
        format: InputFormat,
    ) -> Result<(Corpus, IngestReport)> {
        ingest::ingest(dir.as_ref(), source.as_ref(), format)
    }

    fn assemble(storage: Storage, entries: Vec<Entry>) -> Result<Corpus> {
        let mut corpus = Corpus {
            storage,
            entries: Vec::new(),
            by_id: HashMap::new(),
            pages: Vec::new(),
            page_by_title: HashMap::new(),
            categories: BTreeMap::new(),
            token_total: 0,
        };
        corpus.extend_entries(entries)?;
        Ok(corpus)
    }

    pub(crate) fn extend_entries(&mut self, entries: Vec<Entry>) -> Result<()> {
        for (n, entry) in entries.into_iter().enumerate() {
            let index = self.entries.len() as u32;
            if self.by_id.insert(entry.id.clone(), index).is_some() {
                return Err(Error::DuplicateId {
                    id: entry.id,
                    line: n + 1,
                });
            }
            let page_index = match self.page_by_title.get(&entry.title) {
                Some(&i) => i,
                None => {
                    let category = entry
                        .category
                        .clone()
                        .unwrap_or_else(|| DEFAULT_CATEGORY.to_string());
                    let i = self.pages.len();
                    self.pages.push(Page {
                        title: entry.title.clone(),
                        passage_ids: Vec::new(),
                        category: category.clone(),
                    });
                    self.page_by_title.insert(entry.title.clone(), i);
                    self.categories.entry(category).or_default().push(i);
                    i
                }
            };
            self.pages[page_index].passage_ids.push(entry.id.clone());
            self.token_total += entry.tokens as u64;
            self.entries.push(entry);
        }
        Ok(())
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            passage_count: self.entries.len() as u64,
            page_count: self.pages.len() as u64,
            token_total: self.token_total,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get_passage(&self, id: &str) -> Result<Passage> {
        let index = self.index_of(id).ok_or_else(|| Error::NotFound {
            kind: "passage",
            id: id.to_string(),
        })?;
        self.passage_at(index)
    }

    /// Passage by dense index. Panics on out-of-range indexes.
    pub fn passage_at(&self, index: u32) -> Result<Passage> {
        let entry = &self.entries[index as usize];
        Ok(Passage {
            id: entry.id.clone(),
            page_title: entry.title.clone(),
            text: self.storage.text(index as usize, entry)?,
            category: entry.category.clone(),
        })
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.by_id.get(id).copied()
    }

    pub fn id_at(&self, index: u32) -> &str {
        &self.entries[index as usize].id
    }

    pub fn title_at(&self, index: u32) -> &str {
        &self.entries[index as usize].title
    }

    pub fn pages(&self) -> &[Page] {
        &self.pages
    }

    pub fn page(&self, title: &str) -> Option<&Page> {
        self.page_by_title.get(title).map(|&i| &self.pages[i])
    }

    /// Category names with their page counts.
    pub fn categories(&self) -> Vec<(String, usize)> {
        self.categories
            .iter()
            .map(|(c, pages)| (c.clone(), pages.len()))
            .collect()
    }

    pub fn store_dir(&self) -> Option<&Path> {
        self.storage.dir()
    }

    /// Draws a page uniformly from `category` (or all pages when `None`).
    /// Pure function of the corpus, the category and the seed.
    pub fn sample_page(&self, category: Option<&str>, seed: u64) -> Result<&Page> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match category {
            None => {
                if self.pages.is_empty() {
                    return Err(Error::EmptyCategory(DEFAULT_CATEGORY.to_string()));
                }
                Ok(&self.pages[rng.random_range(0..self.pages.len())])
            }
            Some(c) => {
                let eligible = self
                    .categories
                    .get(c)
                    .filter(|p| !p.is_empty())
                    .ok_or_else(|| Error::EmptyCategory(c.to_string()))?;
                Ok(&self.pages[eligible[rng.random_range(0..eligible.len())]])
            }
        }
    }
}
