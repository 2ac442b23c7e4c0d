// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::store::{self, RECORDS_FILE};
use super::{Corpus, CorpusStats, Passage, MAX_PASSAGE_TOKENS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    /// KILT-style passage rows. Accepts `_id`/`wikipedia_title` aliases and
    /// numeric ids.
    KiltJsonl,
    /// `{"id", "title", "text", "category"?}` exactly.
    PlainJsonl,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kilt-jsonl" => Ok(InputFormat::KiltJsonl),
            "plain-jsonl" => Ok(InputFormat::PlainJsonl),
            other => Err(Error::InvalidArgument(format!("unknown corpus format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub stats: CorpusStats,
    pub added: usize,
    /// Records already present with identical content.
    pub unchanged: usize,
    pub rejects: Vec<RecordError>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlainRecord {
    id: String,
    title: String,
    text: String,
    #[serde(default)]
    category: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyId {
    Str(String),
    Num(u64),
}

#[derive(Deserialize)]
struct KiltRecord {
    #[serde(alias = "_id", alias = "passage_id")]
    id: AnyId,
    #[serde(alias = "wikipedia_title")]
    title: String,
    #[serde(alias = "contents")]
    text: String,
    #[serde(default)]
    category: Option<String>,
}

fn parse_record(line: &str, format: InputFormat) -> std::result::Result<Passage, String> {
    let p = match format {
        InputFormat::PlainJsonl => {
            let r: PlainRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
            Passage {
                id: r.id,
                page_title: r.title,
                text: r.text,
                category: r.category,
            }
        }
        InputFormat::KiltJsonl => {
            let r: KiltRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
            Passage {
                id: match r.id {
                    AnyId::Str(s) => s,
                    AnyId::Num(n) => n.to_string(),
                },
                page_title: r.title,
                text: r.text,
                category: r.category,
            }
        }
    };
    validate(&p)?;
    Ok(p)
}

pub(crate) fn validate(p: &Passage) -> std::result::Result<(), String> {
    if p.id.is_empty() {
        return Err("empty id".into());
    }
    if p.text.trim().is_empty() {
        return Err("empty text".into());
    }
    let n = crate::text::whitespace_len(&p.text);
    if n > MAX_PASSAGE_TOKENS {
        return Err(format!("passage has {n} tokens, limit is {MAX_PASSAGE_TOKENS}"));
    }
    Ok(())
}

/// Ingests `source` into the store at `dir`.
///
/// Malformed records are skipped and listed in the report with their line
/// number. A duplicate id inside `source`, or an id already stored with
/// different content, aborts the ingest before anything is written.
/// Re-ingesting an identical file adds nothing.
pub(crate) fn ingest(dir: &Path, source: &Path, format: InputFormat) -> Result<(Corpus, IngestReport)> {
    let mut corpus = Corpus::open(dir)?;
    let file = File::open(source).map_err(|e| Error::File {
        path: source.to_path_buf(),
        message: e.to_string(),
    })?;
    let reader = BufReader::new(file);

    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut fresh = Vec::new();
    let mut rejects = Vec::new();
    let mut unchanged = 0;
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let passage = match parse_record(&line, format) {
            Ok(p) => p,
            Err(message) => {
                rejects.push(RecordError { line: line_no, message });
                continue;
            }
        };
        if let Some(_first) = seen.insert(passage.id.clone(), line_no) {
            return Err(Error::DuplicateId {
                id: passage.id,
                line: line_no,
            });
        }
        match corpus.index_of(&passage.id) {
            Some(existing) => {
                if corpus.passage_at(existing)? == passage {
                    unchanged += 1;
                } else {
                    return Err(Error::DuplicateId {
                        id: passage.id,
                        line: line_no,
                    });
                }
            }
            None => fresh.push(passage),
        }
    }

    let added = fresh.len();
    if !fresh.is_empty() {
        let start = std::fs::metadata(dir.join(RECORDS_FILE))?.len();
        let entries = store::append_disk(dir, start, &fresh)?;
        corpus.extend_entries(entries)?;
    }
    for r in &rejects {
        log::warn!("{}:{}: rejected record: {}", source.display(), r.line, r.message);
    }
    let report = IngestReport {
        stats: corpus.stats(),
        added,
        unchanged,
        rejects,
    };
    Ok((corpus, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_lines(dir: &Path, name: &str, lines: &[&str]) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        path
    }

    #[test]
    fn empty_file_gives_zero_stats() {
        let tmp = tempfile::tempdir().unwrap();
        let src = write_lines(tmp.path(), "empty.jsonl", &[]);
        let (_, report) = Corpus::ingest(tmp.path().join("store"), &src, InputFormat::PlainJsonl).unwrap();
        assert_eq!(report.stats, CorpusStats::default());
    }

    #[test]
    fn two_passages_one_page_and_idempotent_reingest() {
        let tmp = tempfile::tempdir().unwrap();
        let src = write_lines(
            tmp.path(),
            "two.jsonl",
            &[
                r#"{"id": "a1", "title": "Alpha", "text": "alpha one text"}"#,
                r#"{"id": "a2", "title": "Alpha", "text": "alpha two", "category": "Science"}"#,
            ],
        );
        let store = tmp.path().join("store");
        let (c, report) = Corpus::ingest(&store, &src, InputFormat::PlainJsonl).unwrap();
        assert_eq!(report.stats.passage_count, 2);
        assert_eq!(report.stats.page_count, 1);
        assert_eq!(report.stats.token_total, 5);
        assert_eq!(report.added, 2);
        let before = c.get_passage("a1").unwrap();
        drop(c);

        let (c, again) = Corpus::ingest(&store, &src, InputFormat::PlainJsonl).unwrap();
        assert_eq!(again.stats, report.stats);
        assert_eq!(again.added, 0);
        assert_eq!(again.unchanged, 2);
        assert_eq!(c.get_passage("a1").unwrap(), before);

        let reopened = Corpus::open(&store).unwrap();
        assert_eq!(reopened.get_passage("a2").unwrap().text, "alpha two");
    }

    #[test]
    fn malformed_lines_are_reported_and_skipped() {
        let tmp = tempfile::tempdir().unwrap();
        let src = write_lines(
            tmp.path(),
            "bad.jsonl",
            &[
                r#"{"id": "1", "title": "T", "text": "fine"}"#,
                r#"{"id": "2", "title": "T"}"#,
                r#"not json"#,
                r#"{"id": "3", "title": "T", "text": "   "}"#,
                r#"{"id": "4", "title": "T", "text": "also fine"}"#,
            ],
        );
        let (_, report) = Corpus::ingest(tmp.path().join("s"), &src, InputFormat::PlainJsonl).unwrap();
        assert_eq!(report.stats.passage_count, 2);
        let lines: Vec<usize> = report.rejects.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![2, 3, 4]);
    }

    #[test]
    fn duplicate_id_is_hard_error() {
        let tmp = tempfile::tempdir().unwrap();
        let src = write_lines(
            tmp.path(),
            "dup.jsonl",
            &[
                r#"{"id": "1", "title": "T", "text": "x"}"#,
                r#"{"id": "1", "title": "T", "text": "x"}"#,
            ],
        );
        let store = tmp.path().join("s");
        match Corpus::ingest(&store, &src, InputFormat::PlainJsonl) {
            Err(Error::DuplicateId { id, line }) => assert_eq!((id.as_str(), line), ("1", 2)),
            other => panic!("unexpected {other:?}"),
        }
        // Nothing was written.
        assert!(Corpus::open(&store).unwrap().is_empty());
    }

    #[test]
    fn conflicting_reingest_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let store = tmp.path().join("s");
        let a = write_lines(tmp.path(), "a.jsonl", &[r#"{"id": "1", "title": "T", "text": "x"}"#]);
        let b = write_lines(tmp.path(), "b.jsonl", &[r#"{"id": "1", "title": "T", "text": "changed"}"#]);
        Corpus::ingest(&store, &a, InputFormat::PlainJsonl).unwrap();
        assert!(matches!(
            Corpus::ingest(&store, &b, InputFormat::PlainJsonl),
            Err(Error::DuplicateId { .. })
        ));
    }

    #[test]
    fn kilt_aliases_accepted() {
        let tmp = tempfile::tempdir().unwrap();
        let src = write_lines(
            tmp.path(),
            "kilt.jsonl",
            &[r#"{"_id": 17, "wikipedia_title": "Rome", "text": "Rome is a city", "extra": 1}"#],
        );
        let (c, report) = Corpus::ingest(tmp.path().join("s"), &src, InputFormat::KiltJsonl).unwrap();
        assert!(report.rejects.is_empty());
        let p = c.get_passage("17").unwrap();
        assert_eq!(p.page_title, "Rome");
        // Plain format is strict about field names.
        let (_, strict) = Corpus::ingest(tmp.path().join("s2"), &src, InputFormat::PlainJsonl).unwrap();
        assert_eq!(strict.rejects.len(), 1);
    }

    #[test]
    fn overlong_passage_rejected() {
        let long = vec!["w"; MAX_PASSAGE_TOKENS + 1].join(" ");
        let line = serde_json::json!({"id": "x", "title": "T", "text": long}).to_string();
        let tmp = tempfile::tempdir().unwrap();
        let src = write_lines(tmp.path(), "long.jsonl", &[&line]);
        let (_, report) = Corpus::ingest(tmp.path().join("s"), &src, InputFormat::PlainJsonl).unwrap();
        assert_eq!(report.rejects.len(), 1);
    }
}
