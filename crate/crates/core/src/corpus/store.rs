// SPDX-License-Identifier: Apache-2.0

//! Passage text storage: an append-only JSONL record file plus a catalog of
//! byte offsets, or plain memory for fixtures.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Passage;
use crate::{Error, Result};

pub(crate) const RECORDS_FILE: &str = "passages.jsonl";
pub(crate) const CATALOG_FILE: &str = "catalog.jsonl";

/// Catalog row: everything about a passage except its text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Entry {
    pub id: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    pub offset: u64,
    pub len: u32,
    pub tokens: u32,
}

#[derive(Debug)]
pub(crate) enum Storage {
    Memory(Vec<String>),
    Disk { dir: PathBuf, records: File },
}

impl Storage {
    pub fn text(&self, index: usize, entry: &Entry) -> Result<String> {
        match self {
            Storage::Memory(texts) => Ok(texts[index].clone()),
            Storage::Disk { records, dir } => {
                let mut buf = vec![0u8; entry.len as usize];
                // read_at takes &File, so concurrent readers need no lock.
                records.read_exact_at(&mut buf, entry.offset)?;
                let passage: Passage = serde_json::from_slice(&buf).map_err(|e| Error::File {
                    path: dir.join(RECORDS_FILE),
                    message: format!("corrupt record at offset {}: {e}", entry.offset),
                })?;
                Ok(passage.text)
            }
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        match self {
            Storage::Memory(_) => None,
            Storage::Disk { dir, .. } => Some(dir),
        }
    }
}

pub(crate) fn open_disk(dir: &Path) -> Result<(Storage, Vec<Entry>)> {
    std::fs::create_dir_all(dir)?;
    let records_path = dir.join(RECORDS_FILE);
    let catalog_path = dir.join(CATALOG_FILE);
    let records = OpenOptions::new()
        .create(true)
        .append(true)
        .read(true)
        .open(&records_path)?;
    let mut entries = Vec::new();
    if catalog_path.exists() {
        let reader = BufReader::new(File::open(&catalog_path)?);
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: Entry = serde_json::from_str(&line).map_err(|e| Error::File {
                path: catalog_path.clone(),
                message: format!("line {}: {e}", n + 1),
            })?;
            entries.push(entry);
        }
    }
    let expected_len = entries.last().map(|e| e.offset + e.len as u64 + 1).unwrap_or(0);
    let actual_len = records.metadata()?.len();
    if actual_len < expected_len {
        return Err(Error::File {
            path: records_path,
            message: format!("record file is {actual_len} bytes, catalog expects {expected_len}"),
        });
    }
    Ok((
        Storage::Disk {
            dir: dir.to_path_buf(),
            records,
        },
        entries,
    ))
}

/// Appends passages to the record file and catalog. Returns the new entries.
pub(crate) fn append_disk(dir: &Path, start_offset: u64, passages: &[Passage]) -> Result<Vec<Entry>> {
    let mut records = OpenOptions::new().append(true).open(dir.join(RECORDS_FILE))?;
    let mut catalog = OpenOptions::new()
        .create(true)
        .append(true)
        .open(dir.join(CATALOG_FILE))?;
    // A crash between writes can leave records past the catalog end; the
    // catalog is authoritative and trailing bytes are never addressed.
    let mut offset = records.metadata()?.len().max(start_offset);
    let mut record_buf = Vec::new();
    let mut catalog_buf = Vec::new();
    let mut entries = Vec::with_capacity(passages.len());
    for p in passages {
        let line = serde_json::to_vec(p)?;
        let entry = Entry {
            id: p.id.clone(),
            title: p.page_title.clone(),
            category: p.category.clone(),
            offset,
            len: line.len() as u32,
            tokens: crate::text::whitespace_len(&p.text) as u32,
        };
        offset += line.len() as u64 + 1;
        record_buf.extend_from_slice(&line);
        record_buf.push(b'\n');
        serde_json::to_writer(&mut catalog_buf, &entry)?;
        catalog_buf.push(b'\n');
        entries.push(entry);
    }
    records.write_all(&record_buf)?;
    records.sync_data()?;
    catalog.write_all(&catalog_buf)?;
    catalog.sync_data()?;
    Ok(entries)
}
