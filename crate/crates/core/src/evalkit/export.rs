// SPDX-License-Identifier: Apache-2.0

//! Page-disjoint train/dev/test export and dataset statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::game::Claim;
use crate::{text, Error, Label, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Train, dev, test.
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            fractions: [0.8, 0.09, 0.11],
            seed: 7,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidArgument(format!("split fractions out of range: {:?}", self.fractions)));
        }
        let sum: f64 = self.fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Split of a page: a uniform draw from sha256(seed, title) against the
/// cumulative fractions.
pub fn assign_split(page: &str, spec: &SplitSpec) -> Split {
    let mut h = Sha256::new();
    h.update(spec.seed.to_le_bytes());
    h.update(page.as_bytes());
    let digest = h.finalize();
    let x = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    let u = (x >> 11) as f64 / (1u64 << 53) as f64;
    let [train, dev, _] = spec.fractions;
    if u < train {
        Split::Train
    } else if u < train + dev {
        Split::Dev
    } else {
        Split::Test
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportEvidence {
    pub page: String,
    pub text: String,
    #[serde(default)]
    pub passage_id: Option<String>,
}

/// One released claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRow {
    pub id: String,
    pub text: String,
    #[serde(serialize_with = "fever_label")]
    pub label: Label,
    pub gold_evidence: Vec<ExportEvidence>,
    #[serde(default)]
    pub category: Option<String>,
}

fn fever_label<S: serde::Serializer>(label: &Label, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match label {
        Label::Entailed => "SUPPORTS",
        Label::Refuted => "REFUTES",
    })
}

impl ExportRow {
    pub fn from_claim(claim: &Claim) -> ExportRow {
        ExportRow {
            id: claim.id.clone(),
            text: claim.text.clone(),
            label: claim.label,
            gold_evidence: claim
                .gold_evidence
                .iter()
                .map(|e| ExportEvidence {
                    page: e.page.clone(),
                    text: e.text.clone(),
                    passage_id: if e.kept { e.passage_id.clone() } else { None },
                })
                .collect(),
            category: Some(claim.category.clone()),
        }
    }

    pub fn page(&self) -> Option<&str> {
        self.gold_evidence.first().map(|e| e.page.as_str())
    }

    pub fn gold_passage_ids(&self) -> BTreeSet<String> {
        self.gold_evidence.iter().filter_map(|e| e.passage_id.clone()).collect()
    }
}

/// Assigns every claim to a split by its page. `exclude` holds ids removed
/// by quality review.
pub fn split_claims(
    claims: &[Claim],
    spec: &SplitSpec,
    exclude: &BTreeSet<String>,
) -> Result<BTreeMap<Split, Vec<ExportRow>>> {
    spec.validate()?;
    let mut out: BTreeMap<Split, Vec<ExportRow>> = Split::ALL.iter().map(|&s| (s, Vec::new())).collect();
    for claim in claims.iter().filter(|c| !exclude.contains(&c.id)) {
        let page = claim.page().ok_or_else(|| Error::NotFound {
            kind: "source page for claim",
            id: claim.id.clone(),
        })?;
        out.get_mut(&assign_split(page, spec))
            .expect("all splits present")
            .push(ExportRow::from_claim(claim));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub split: String,
    pub claims: usize,
    /// Percent.
    pub entailed_proportion: f64,
    pub pages: usize,
    /// Whitespace tokens.
    pub avg_claim_tokens: f64,
    /// Whitespace tokens over all gold evidence of a claim.
    pub avg_evidence_tokens: f64,
    /// Entailed proportion is more than 2 points away from 50%.
    pub unbalanced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub splits: Vec<SplitStats>,
    pub total: SplitStats,
}

fn stats_of<'a>(name: &str, rows: impl IntoIterator<Item = &'a ExportRow>) -> SplitStats {
    let rows: Vec<&ExportRow> = rows.into_iter().collect();
    let n = rows.len();
    let denom = n.max(1) as f64;
    let entailed = rows.iter().filter(|r| r.label == Label::Entailed).count();
    let pages: BTreeSet<&str> = rows.iter().filter_map(|r| r.page()).collect();
    let claim_tokens: usize = rows.iter().map(|r| text::whitespace_len(&r.text)).sum();
    let evidence_tokens: usize = rows
        .iter()
        .map(|r| r.gold_evidence.iter().map(|e| text::whitespace_len(&e.text)).sum::<usize>())
        .sum();
    let proportion = 100.0 * entailed as f64 / denom;
    SplitStats {
        split: name.to_string(),
        claims: n,
        entailed_proportion: proportion,
        pages: pages.len(),
        avg_claim_tokens: claim_tokens as f64 / denom,
        avg_evidence_tokens: evidence_tokens as f64 / denom,
        unbalanced: n > 0 && (proportion - 50.0).abs() > 2.0,
    }
}

pub fn dataset_stats(splits: &BTreeMap<Split, Vec<ExportRow>>) -> DatasetStats {
    DatasetStats {
        splits: Split::ALL
            .iter()
            .map(|s| stats_of(s.as_str(), splits.get(s).into_iter().flatten()))
            .collect(),
        total: stats_of("total", splits.values().flatten()),
    }
}

impl DatasetStats {
    /// Fixed-width table: claims, entailed proportion, pages, average tokens.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<8}{:>9}{:>11}{:>8}{:>8}{:>10}", "", "Claims", "Entailed", "Pages", "Claim", "Evidence");
        let row = |s: &mut String, st: &SplitStats| {
            let mut name = st.split.clone();
            if let Some(c) = name.get_mut(..1) {
                c.make_ascii_uppercase();
            }
            let _ = writeln!(
                s,
                "{:<8}{:>9}{:>10.1}%{:>8}{:>8.0}{:>10.0}{}",
                name,
                st.claims,
                st.entailed_proportion,
                st.pages,
                st.avg_claim_tokens,
                st.avg_evidence_tokens,
                if st.unbalanced { "  (unbalanced)" } else { "" }
            );
        };
        for st in &self.splits {
            row(&mut s, st);
        }
        row(&mut s, &self.total);
        s
    }
}

pub fn write_rows(path: &Path, rows: &[ExportRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ExportRow>> {
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", n + 1),
        })?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportReport {
    pub files: Vec<PathBuf>,
    pub stats: DatasetStats,
}

/// Writes `train.jsonl`, `dev.jsonl`, `test.jsonl` and `stats.json` into `dir`.
pub fn export_dataset(
    claims: &[Claim],
    spec: &SplitSpec,
    exclude: &BTreeSet<String>,
    dir: &Path,
) -> Result<ExportReport> {
    let splits = split_claims(claims, spec, exclude)?;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (split, rows) in &splits {
        let path = dir.join(format!("{}.jsonl", split.as_str()));
        write_rows(&path, rows)?;
        files.push(path);
    }
    let stats = dataset_stats(&splits);
    std::fs::write(dir.join("stats.json"), serde_json::to_vec_pretty(&stats)?)?;
    Ok(ExportReport { files, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GoldEvidence;

    fn claim(id: &str, page: &str, label: Label) -> Claim {
        Claim {
            id: id.into(),
            author_id: "u".into(),
            text: "a claim of five tokens".into(),
            label,
            gold_evidence: vec![GoldEvidence {
                page: page.into(),
                text: "some evidence".into(),
                passage_id: Some(format!("{page}#0")),
                precision: 1.0,
                kept: true,
            }],
            category: "all".into(),
            created_at: 0,
            flags: vec![],
            strategy_tags: vec![],
        }
    }

    #[test]
    fn fractions_must_sum_to_one() {
        assert!(SplitSpec { fractions: [0.5, 0.5, 0.1], seed: 0 }.validate().is_err());
        assert!(SplitSpec::default().validate().is_ok());
    }

    #[test]
    fn two_pages_deterministic_and_disjoint() {
        let spec = SplitSpec { fractions: [0.5, 0.25, 0.25], seed: 3 };
        let claims = vec![claim("1", "A", Label::Entailed), claim("2", "B", Label::Refuted), claim("3", "A", Label::Refuted)];
        let a = split_claims(&claims, &spec, &BTreeSet::new()).unwrap();
        let b = split_claims(&claims, &spec, &BTreeSet::new()).unwrap();
        assert_eq!(a, b);
        let mut owner: BTreeMap<&str, Split> = BTreeMap::new();
        for (split, rows) in &a {
            for r in rows {
                assert_eq!(*owner.entry(r.page().unwrap()).or_insert(*split), *split);
            }
        }
        assert_eq!(owner.len(), 2);
    }

    #[test]
    fn eight_balanced_claims_are_half_entailed() {
        let claims: Vec<Claim> = (0..8)
            .map(|i| claim(&i.to_string(), &format!("P{}", i % 3), if i % 2 == 0 { Label::Entailed } else { Label::Refuted }))
            .collect();
        let stats = dataset_stats(&split_claims(&claims, &SplitSpec::default(), &BTreeSet::new()).unwrap());
        assert_eq!(stats.total.claims, 8);
        assert_eq!(stats.total.entailed_proportion, 50.0);
        assert_eq!(stats.total.avg_claim_tokens, 5.0);
        assert_eq!(stats.total.avg_evidence_tokens, 2.0);
        assert!(!stats.total.unbalanced);
        assert!(stats.render().contains("Total"));
    }

    #[test]
    fn pageless_claim_is_an_error() {
        let mut c = claim("1", "A", Label::Entailed);
        c.gold_evidence.clear();
        assert!(split_claims(&[c], &SplitSpec::default(), &BTreeSet::new()).is_err());
    }

    #[test]
    fn rows_roundtrip_with_fever_labels() {
        let tmp = tempfile::tempdir().unwrap();
        let claims = vec![claim("1", "A", Label::Entailed), claim("2", "B", Label::Refuted)];
        let excluded: BTreeSet<String> = ["2".to_string()].into();
        let report = export_dataset(&claims, &SplitSpec::default(), &excluded, tmp.path()).unwrap();
        assert_eq!(report.stats.total.claims, 1);
        let mut all = Vec::new();
        let mut raw = String::new();
        for f in &report.files {
            raw.push_str(&std::fs::read_to_string(f).unwrap());
            all.extend(read_rows(f).unwrap());
        }
        assert!(raw.contains(r#""label":"SUPPORTS""#));
        assert!(!raw.contains("REFUTES"));
        assert_eq!(all, vec![ExportRow::from_claim(&claims[0])]);
    }
}
