// SPDX-License-Identifier: Apache-2.0

//! Two-class logistic regression over hashed unigram+bigram features.
//!
//! Training is full-batch gradient descent with Armijo backtracking, so the
//! regularized training loss never increases from one epoch to the next.
//! Parameters are optimized over the buckets that occur in the training
//! set and scattered into the full 2^20 space afterwards.

use std::collections::HashMap;
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Example, Verifier};
use crate::retrieval::features::{bucket_counts, BUCKET_COUNT};
use crate::{par, text, Error, Label, Result};

const MAGIC: &[u8; 5] = b"FM2LR";
const VERSION: u32 = 1;
/// Separates claim and evidence tokens. Contains a non-alphanumeric
/// character, so the tokenizer can never produce it.
pub const BOUNDARY: &str = "\u{1}sep";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// Features come from the claim alone; evidence is ignored.
    ClaimOnly,
    /// Claim and deduplicated evidence, joined by boundary markers.
    ClaimEvidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: u32,
    /// Initial step size for the line search.
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    /// Half-width of the uniform initialization; 0 starts from zero.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 4.0,
            l2: 1e-4,
            seed: 0,
            init_scale: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: u32,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    /// Regularized loss before training and after each epoch.
    pub loss_history: Vec<f64>,
}

/// L2-normalized hashed feature vector of one input.
pub fn featurize(mode: InputMode, claim: &str, evidence: &[&str]) -> Vec<(u32, f64)> {
    let mut tokens = text::tokenize(claim);
    if mode == InputMode::ClaimEvidence {
        let mut seen: Vec<&str> = Vec::new();
        for e in evidence {
            if seen.contains(e) {
                continue;
            }
            seen.push(e);
            tokens.push(BOUNDARY.to_string());
            tokens.extend(text::tokenize(e));
        }
    }
    let counts = bucket_counts(&tokens);
    let norm = counts.iter().map(|&(_, c)| (c as f64).powi(2)).sum::<f64>().sqrt();
    counts
        .into_iter()
        .map(|(b, c)| (b, c as f64 / norm.max(1.0)))
        .collect()
}

fn log_softmax2(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    [z[0] - lse, z[1] - lse]
}

/// Regularized mean cross-entropy over a fixed example set, with parameters
/// laid out as `[w_local(0, entail), w_local(0, refute), ..., b_entail, b_refute]`.
pub struct Objective {
    examples: Vec<Vec<(usize, f64)>>,
    labels: Vec<usize>,
    buckets: Vec<u32>,
    l2: f64,
}

impl Objective {
    pub fn new(mode: InputMode, examples: &[Example], l2: f64) -> Objective {
        let raw: Vec<Vec<(u32, f64)>> = par::map(examples, |e| {
            let ev: Vec<&str> = e.evidence.iter().map(String::as_str).collect();
            featurize(mode, &e.claim, &ev)
        });
        let mut buckets: Vec<u32> = raw.iter().flatten().map(|&(b, _)| b).collect();
        buckets.sort_unstable();
        buckets.dedup();
        let local: HashMap<u32, usize> = buckets.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        Objective {
            examples: raw
                .into_iter()
                .map(|f| f.into_iter().map(|(b, v)| (local[&b], v)).collect())
                .collect(),
            labels: examples.iter().map(|e| e.label.index()).collect(),
            buckets,
            l2,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.buckets.len() + 2
    }

    fn logits(&self, theta: &[f64], x: &[(usize, f64)]) -> [f64; 2] {
        let nb = self.buckets.len();
        let mut z = [theta[2 * nb], theta[2 * nb + 1]];
        for &(j, v) in x {
            z[0] += theta[2 * j] * v;
            z[1] += theta[2 * j + 1] * v;
        }
        z
    }

    fn penalty(&self, theta: &[f64]) -> f64 {
        let nb = self.buckets.len();
        0.5 * self.l2 * theta[..2 * nb].iter().map(|w| w * w).sum::<f64>()
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        let n = self.examples.len() as f64;
        let idx: Vec<usize> = (0..self.examples.len()).collect();
        let partial = par::map_chunks(&idx, par::REDUCE_CHUNK, |_, chunk| {
            chunk
                .iter()
                .map(|&i| -log_softmax2(self.logits(theta, &self.examples[i]))[self.labels[i]])
                .sum::<f64>()
        });
        partial.iter().sum::<f64>() / n + self.penalty(theta)
    }

    pub fn loss_and_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let n = self.examples.len() as f64;
        let nb = self.buckets.len();
        let idx: Vec<usize> = (0..self.examples.len()).collect();
        let partial = par::map_chunks(&idx, par::REDUCE_CHUNK, |_, chunk| {
            let mut loss = 0.0;
            let mut grad: Vec<(usize, f64)> = Vec::new();
            let mut gb = [0.0; 2];
            for &i in chunk {
                let x = &self.examples[i];
                let lp = log_softmax2(self.logits(theta, x));
                let y = self.labels[i];
                loss -= lp[y];
                let g = [lp[0].exp() - (y == 0) as u8 as f64, lp[1].exp() - (y == 1) as u8 as f64];
                for &(j, v) in x {
                    grad.push((2 * j, g[0] * v));
                    grad.push((2 * j + 1, g[1] * v));
                }
                gb[0] += g[0];
                gb[1] += g[1];
            }
            (loss, grad, gb)
        });
        let mut grad = vec![0.0; self.dim()];
        let mut loss = 0.0;
        for (l, g, gb) in partial {
            loss += l;
            for (k, v) in g {
                grad[k] += v;
            }
            grad[2 * nb] += gb[0];
            grad[2 * nb + 1] += gb[1];
        }
        for (k, g) in grad.iter_mut().enumerate() {
            *g /= n;
            if k < 2 * nb {
                *g += self.l2 * theta[k];
            }
        }
        (loss / n + self.penalty(theta), grad)
    }
}

#[derive(Clone, PartialEq)]
pub struct LinearModel {
    pub mode: InputMode,
    /// `[entail, refute]` weights per bucket, `BUCKET_COUNT` rows.
    pub weights: Vec<[f64; 2]>,
    pub bias: [f64; 2],
    pub meta: TrainingMeta,
}

impl std::fmt::Debug for LinearModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let nonzero = self.weights.iter().filter(|w| w[0] != 0.0 || w[1] != 0.0).count();
        f.debug_struct("LinearModel")
            .field("mode", &self.mode)
            .field("dim", &self.weights.len())
            .field("nonzero", &nonzero)
            .field("bias", &self.bias)
            .field("meta", &self.meta)
            .finish()
    }
}

impl LinearModel {
    pub fn train(mode: InputMode, examples: &[Example], config: &TrainConfig) -> Result<LinearModel> {
        let labels: std::collections::BTreeSet<Label> = examples.iter().map(|e| e.label).collect();
        if examples.len() < 2 || labels.len() < 2 {
            return Err(Error::SingleLabel(labels.len()));
        }
        let obj = Objective::new(mode, examples, config.l2);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut theta: Vec<f64> = (0..obj.dim())
            .map(|_| {
                if config.init_scale > 0.0 {
                    rng.random_range(-config.init_scale..config.init_scale)
                } else {
                    0.0
                }
            })
            .collect();
        let (mut loss, mut grad) = obj.loss_and_grad(&theta);
        let mut history = vec![loss];
        let mut step = config.learning_rate;
        for _ in 0..config.epochs {
            let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
            if gnorm2 < 1e-20 {
                history.push(loss);
                continue;
            }
            // Armijo backtracking; an epoch that finds no decrease keeps theta.
            let mut accepted = false;
            while step > 1e-12 {
                let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
                let trial_loss = obj.loss(&trial);
                if trial_loss <= loss - 1e-4 * step * gnorm2 {
                    theta = trial;
                    let (l, g) = obj.loss_and_grad(&theta);
                    loss = l;
                    grad = g;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            history.push(loss);
            if accepted {
                step = (step * 2.0).min(config.learning_rate * 16.0);
            } else {
                step = config.learning_rate;
            }
        }

        let nb = obj.buckets.len();
        let mut weights = vec![[0.0; 2]; BUCKET_COUNT];
        for (j, &b) in obj.buckets.iter().enumerate() {
            weights[b as usize] = [theta[2 * j], theta[2 * j + 1]];
        }
        Ok(LinearModel {
            mode,
            weights,
            bias: [theta[2 * nb], theta[2 * nb + 1]],
            meta: TrainingMeta {
                epochs: config.epochs,
                learning_rate: config.learning_rate,
                l2: config.l2,
                seed: config.seed,
                loss_history: history,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn logits_for(&self, claim: &str, evidence: &[&str]) -> [f64; 2] {
        let mut z = self.bias;
        for (b, v) in featurize(self.mode, claim, evidence) {
            let w = self.weights[b as usize];
            z[0] += w[0] * v;
            z[1] += w[1] * v;
        }
        z
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u32::<LittleEndian>(self.dim() as u32)?;
        w.write_u8(match self.mode {
            InputMode::ClaimOnly => 0,
            InputMode::ClaimEvidence => 1,
        })?;
        w.write_f64::<LittleEndian>(self.bias[0])?;
        w.write_f64::<LittleEndian>(self.bias[1])?;
        let meta = serde_json::to_vec(&self.meta)?;
        w.write_u32::<LittleEndian>(meta.len() as u32)?;
        w.write_all(&meta)?;
        let nonzero: Vec<(usize, &[f64; 2])> = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, row)| row[0] != 0.0 || row[1] != 0.0)
            .collect();
        w.write_u32::<LittleEndian>(nonzero.len() as u32)?;
        for (i, row) in nonzero {
            w.write_u32::<LittleEndian>(i as u32)?;
            w.write_f64::<LittleEndian>(row[0])?;
            w.write_f64::<LittleEndian>(row[1])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<LinearModel> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not an FM2LR model".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let dim = r.read_u32::<LittleEndian>()? as usize;
        if dim != BUCKET_COUNT {
            return Err(Error::Format(format!("model dim {dim}, expected {BUCKET_COUNT}")));
        }
        let mode = match r.read_u8()? {
            0 => InputMode::ClaimOnly,
            1 => InputMode::ClaimEvidence,
            m => return Err(Error::Format(format!("unknown input mode {m}"))),
        };
        let bias = [r.read_f64::<LittleEndian>()?, r.read_f64::<LittleEndian>()?];
        let meta_len = r.read_u32::<LittleEndian>()? as usize;
        let mut meta = vec![0u8; meta_len];
        r.read_exact(&mut meta)?;
        let meta: TrainingMeta = serde_json::from_slice(&meta)?;
        let nnz = r.read_u32::<LittleEndian>()? as usize;
        let mut weights = vec![[0.0; 2]; dim];
        for _ in 0..nnz {
            let i = r.read_u32::<LittleEndian>()? as usize;
            if i >= dim {
                return Err(Error::Format(format!("weight index {i} out of range")));
            }
            weights[i] = [r.read_f64::<LittleEndian>()?, r.read_f64::<LittleEndian>()?];
        }
        Ok(LinearModel {
            mode,
            weights,
            bias,
            meta,
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        self.write_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<LinearModel> {
        LinearModel::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

impl Verifier for LinearModel {
    fn logits(&self, claim: &str, evidence: &[&str]) -> Result<[f64; 2]> {
        Ok(self.logits_for(claim, evidence))
    }

    fn uses_evidence(&self) -> bool {
        self.mode == InputMode::ClaimEvidence
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(claim: &str, label: Label) -> Example {
        Example {
            claim: claim.into(),
            evidence: vec![],
            label,
        }
    }

    #[test]
    fn featurize_dedups_evidence_and_ignores_it_claim_only() {
        let a = featurize(InputMode::ClaimEvidence, "x y", &["p q", "p q"]);
        let b = featurize(InputMode::ClaimEvidence, "x y", &["p q"]);
        assert_eq!(a, b);
        assert_eq!(
            featurize(InputMode::ClaimOnly, "x y", &["p q"]),
            featurize(InputMode::ClaimOnly, "x y", &[])
        );
        let norm: f64 = a.iter().map(|(_, v)| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_label_rejected() {
        let data = [ex("a", Label::Refuted), ex("b", Label::Refuted)];
        assert!(matches!(
            LinearModel::train(InputMode::ClaimOnly, &data, &TrainConfig::default()),
            Err(Error::SingleLabel(1))
        ));
    }

    #[test]
    fn model_file_roundtrip() {
        let data = [ex("cats purr", Label::Entailed), ex("cats never purr", Label::Refuted)];
        let m = LinearModel::train(InputMode::ClaimOnly, &data, &TrainConfig { epochs: 5, ..Default::default() }).unwrap();
        let mut bytes = Vec::new();
        m.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..5], b"FM2LR");
        assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[9..13].try_into().unwrap()), BUCKET_COUNT as u32);
        let back = LinearModel::read_from(&bytes[..]).unwrap();
        assert_eq!(back, m);
        assert!(LinearModel::read_from(&b"FM2XX"[..]).is_err());
    }

    #[test]
    fn same_seed_same_model() {
        let data = [ex("a b", Label::Entailed), ex("c d", Label::Refuted), ex("a d", Label::Refuted)];
        let cfg = TrainConfig { epochs: 20, seed: 7, ..Default::default() };
        let a = LinearModel::train(InputMode::ClaimOnly, &data, &cfg).unwrap();
        let b = LinearModel::train(InputMode::ClaimOnly, &data, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
