// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use fm2_core::alignment::{align_batch, AlignConfig, EvidenceRecord};
use fm2_core::corpus::{Corpus, InputFormat};
use fm2_core::eventlog::{read_log, replay};
use fm2_core::evalkit::{self, ExportRow, RetrievalJudgment, Split, SplitSpec};
use fm2_core::game::{GameConfig, GameState};
use fm2_core::quality;
use fm2_core::retrieval::SparseIndex;
use fm2_core::verify::{self, Example, InputMode, LinearModel, Prediction, TrainConfig};
use fm2_core::Label;
use fm2_server::{build_state, serve, ServerConfig, SystemClock};
use serde::Serialize;

type CliResult<T = ()> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "fm2", version, about = "Claim game service and offline tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Passage store management.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Sparse index build and query.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Align evidence spans to corpus passages.
    Align {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        evidence: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = 2)]
        max_n: usize,
        /// Score every passage instead of only the evidence's page.
        #[arg(long)]
        full_scan: bool,
    },
    /// Claim quality reports from an event log.
    #[command(subcommand)]
    Quality(QualityCmd),
    /// Metrics and dataset export.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Entailment models.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Run the HTTP game service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "kilt-jsonl")]
        format: InputFormat,
    },
    Stats {
        #[arg(long)]
        store: PathBuf,
    },
}

#[derive(Subcommand)]
enum IndexCmd {
    BuildSparse {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Query {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        text: String,
    },
}

#[derive(Args)]
struct LogArgs {
    /// Game event log.
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum QualityCmd {
    /// MAP correctness per claim and the review queue.
    Map {
        #[command(flatten)]
        log: LogArgs,
        #[arg(long, default_value_t = 0.5)]
        min: f64,
    },
    /// Bigrams most associated with a label.
    Lmi {
        #[command(flatten)]
        log: LogArgs,
        #[arg(long, default_value = "refuted")]
        label: Label,
        #[arg(long, default_value_t = 6)]
        top: usize,
    },
    /// Human accuracy split by model correctness.
    Agreement {
        #[command(flatten)]
        log: LogArgs,
        /// Prediction JSONL.
        #[arg(long)]
        preds: PathBuf,
    },
    /// Like rates per label.
    Likes {
        #[command(flatten)]
        log: LogArgs,
    },
    /// Claims every voter got right without hints.
    Easy {
        #[command(flatten)]
        log: LogArgs,
        #[arg(long, default_value_t = 3)]
        min_votes: u32,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// R-precision and Recall@k of a retrieval run.
    Retrieval {
        /// Exported claims with gold passage ids.
        #[arg(long)]
        gold: PathBuf,
        /// JSONL of `{"claim_id", "retrieved": [...]}`.
        #[arg(long)]
        runs: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "5,10")]
        k: Vec<usize>,
    },
    /// Page-disjoint train/dev/test export of logged claims.
    Export {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.8,0.09,0.11")]
        fractions: Vec<f64>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Drop claims whose MAP correctness is below this.
        #[arg(long, default_value_t = 0.5)]
        min: f64,
    },
    /// Dataset statistics of exported split files.
    Stats {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Train a linear model on exported claims.
    Train {
        #[arg(long)]
        claims: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "claim-only")]
        mode: String,
        /// Store for evidence passages (claim-evidence mode).
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        epochs: u32,
    },
    /// Easy/hard split of claims under a claim-only model.
    Partition {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        claims: PathBuf,
    },
}

fn print<T: Serialize>(value: &T) -> CliResult {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(|e| format!("{}:{}: {e}", path.display(), n + 1))?);
        }
    }
    Ok(out)
}

fn load_state(path: &Path) -> CliResult<GameState> {
    Ok(replay(&read_log(path)?, &GameConfig::default())?)
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Corpus(CorpusCmd::Ingest { input, store, format }) => {
            let (_, report) = Corpus::ingest(&store, &input, format)?;
            for r in &report.rejects {
                eprintln!("rejected line {}: {}", r.line, r.message);
            }
            print(&report)
        }
        Command::Corpus(CorpusCmd::Stats { store }) => print(&Corpus::open(&store)?.stats()),
        Command::Index(IndexCmd::BuildSparse { store, out }) => {
            let corpus = Corpus::open(&store)?;
            let index = SparseIndex::build(&corpus)?;
            index.save(&out)?;
            eprintln!("indexed {} passages into {}", index.doc_count(), out.display());
            Ok(())
        }
        Command::Index(IndexCmd::Query { store, index, k, text }) => {
            let corpus = Corpus::open(&store)?;
            let index = SparseIndex::load(&index)?;
            for hit in index.query(&text, k) {
                let p = corpus.get_passage(&hit.passage_id)?;
                println!("{:>3}  {:.6}  {}  [{}]", hit.rank, hit.score, hit.passage_id, p.page_title);
            }
            Ok(())
        }
        Command::Align {
            store,
            evidence,
            threshold,
            max_n,
            full_scan,
        } => {
            let corpus = Corpus::open(&store)?;
            let records: Vec<EvidenceRecord> = read_jsonl(&evidence)?;
            let results = align_batch(&records, &corpus, full_scan, &AlignConfig { threshold, max_n })?;
            let dropped = results.iter().filter(|r| !r.kept).count();
            let mut out = BufWriter::new(std::io::stdout().lock());
            for r in &results {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
            eprintln!("{} aligned, {dropped} below threshold {threshold}", results.len());
            Ok(())
        }
        Command::Quality(cmd) => quality_cmd(cmd),
        Command::Eval(cmd) => eval_cmd(cmd),
        Command::Verify(cmd) => verify_cmd(cmd),
        Command::Serve { config } => {
            let config = ServerConfig::load(config.as_deref())?;
            let state = build_state(&config, Arc::new(SystemClock))?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(&config, state, async {
                let _ = tokio::signal::ctrl_c().await;
                log::info!("shutdown requested");
            }))?;
            Ok(())
        }
    }
}

fn quality_cmd(cmd: QualityCmd) -> CliResult {
    match cmd {
        QualityCmd::Map { log, min } => {
            let state = load_state(&log.log)?;
            let estimates: Vec<_> = quality::tallies_from_state(&state).iter().map(quality::map_correctness).collect();
            let queue = quality::review_queue(&estimates, min);
            if log.json {
                return print(&serde_json::json!({"estimates": estimates, "review_queue": queue}));
            }
            println!("{:<24}{:>7}{:>11}", "claim", "votes", "estimate");
            for e in &estimates {
                println!("{:<24}{:>7}{:>11.4}", e.claim_id, e.n_votes, e.posterior_mean);
            }
            println!("{} of {} claims below {min}", queue.len(), estimates.len());
            Ok(())
        }
        QualityCmd::Lmi { log, label, top } => {
            let state = load_state(&log.log)?;
            let report = quality::lmi_report(state.claims.values().map(|c| (c.text.as_str(), c.label)), label, top)?;
            if log.json {
                return print(&report);
            }
            println!("{:<32}{:>12}{:>10}{:>8}", "bigram", "lmi", "p(l|w)", "count");
            for r in &report.rows {
                println!("{:<32}{:>12.6}{:>10.4}{:>8}", r.bigram, r.lmi, r.p_label_given_w, r.count);
            }
            Ok(())
        }
        QualityCmd::Agreement { log, preds } => {
            let state = load_state(&log.log)?;
            let preds: Vec<Prediction> = read_jsonl(&preds)?;
            let predictions: BTreeMap<String, Label> = preds.into_iter().map(|p| (p.claim_id, p.label)).collect();
            let gold: BTreeMap<String, Label> = state.claims.values().map(|c| (c.id.clone(), c.label)).collect();
            let report = quality::agreement_report(&gold, &quality::tallies_from_state(&state), &predictions)?;
            if log.json {
                return print(&report);
            }
            println!("{:<18}{:>8}{:>10}", "model", "claims", "human acc");
            for (name, cell) in [("correct", &report.model_correct), ("incorrect", &report.model_incorrect)] {
                let acc = cell.human_accuracy.map(|a| format!("{a:.4}")).unwrap_or_else(|| "-".into());
                println!("{name:<18}{:>8}{acc:>10}", cell.claims);
            }
            println!("model accuracy {:.4}; {} claims without prediction", report.model_accuracy, report.uncovered.len());
            Ok(())
        }
        QualityCmd::Likes { log } => {
            let state = load_state(&log.log)?;
            print(&quality::like_report(&state.score_events, &state.claims))
        }
        QualityCmd::Easy { log, min_votes } => {
            let state = load_state(&log.log)?;
            print(&quality::detect_easy(&quality::tallies_from_state(&state), min_votes))
        }
    }
}

#[derive(serde::Deserialize)]
struct RunRow {
    claim_id: String,
    retrieved: Vec<String>,
}

fn eval_cmd(cmd: EvalCmd) -> CliResult {
    match cmd {
        EvalCmd::Retrieval { gold, runs, k } => {
            let gold = evalkit::read_rows(&gold)?;
            let runs: BTreeMap<String, Vec<String>> =
                read_jsonl::<RunRow>(&runs)?.into_iter().map(|r| (r.claim_id, r.retrieved)).collect();
            let judgments: Vec<RetrievalJudgment> = gold
                .iter()
                .map(|row| RetrievalJudgment {
                    claim_id: row.id.clone(),
                    gold: row.gold_passage_ids(),
                    retrieved: runs.get(&row.id).cloned().unwrap_or_default(),
                })
                .collect();
            print(&evalkit::evaluate_retrieval(&judgments, &k))
        }
        EvalCmd::Export {
            log,
            out,
            fractions,
            seed,
            min,
        } => {
            let fractions: [f64; 3] = fractions
                .try_into()
                .map_err(|_| "--fractions needs three comma-separated values")?;
            let state = load_state(&log)?;
            let estimates: Vec<_> = quality::tallies_from_state(&state).iter().map(quality::map_correctness).collect();
            let exclude: BTreeSet<String> = quality::review_queue(&estimates, min).into_iter().collect();
            let claims: Vec<_> = state.claims.values().cloned().collect();
            let report = evalkit::export_dataset(&claims, &SplitSpec { fractions, seed }, &exclude, &out)?;
            print!("{}", report.stats.render());
            print(&report.stats)
        }
        EvalCmd::Stats { dir } => {
            let mut splits = BTreeMap::new();
            for split in Split::ALL {
                let path = dir.join(format!("{}.jsonl", split.as_str()));
                if path.exists() {
                    splits.insert(split, evalkit::read_rows(&path)?);
                }
            }
            let stats = evalkit::dataset_stats(&splits);
            print!("{}", stats.render());
            print(&stats)
        }
    }
}

fn verify_cmd(cmd: VerifyCmd) -> CliResult {
    match cmd {
        VerifyCmd::Train {
            claims,
            out,
            mode,
            store,
            seed,
            epochs,
        } => {
            let rows = evalkit::read_rows(&claims)?;
            let mode = match mode.as_str() {
                "claim-only" => InputMode::ClaimOnly,
                "claim-evidence" => InputMode::ClaimEvidence,
                other => return Err(format!("unknown mode {other:?}").into()),
            };
            let corpus = store.map(|s| Corpus::open(&s)).transpose()?;
            let examples = rows
                .iter()
                .map(|r| example(r, mode, corpus.as_ref()))
                .collect::<CliResult<Vec<_>>>()?;
            let model = LinearModel::train(
                mode,
                &examples,
                &TrainConfig {
                    seed,
                    epochs,
                    ..TrainConfig::default()
                },
            )?;
            model.save(&out)?;
            let acc = examples
                .iter()
                .filter(|e| {
                    let ev: Vec<&str> = e.evidence.iter().map(String::as_str).collect();
                    verify::argmax(model.logits_for(&e.claim, &ev)) == e.label
                })
                .count() as f64
                / examples.len() as f64;
            eprintln!(
                "trained on {} claims, final loss {:.6}, train accuracy {acc:.4}",
                examples.len(),
                model.meta.loss_history.last().copied().unwrap_or(f64::NAN)
            );
            Ok(())
        }
        VerifyCmd::Partition { model, claims } => {
            let model = LinearModel::load(&model)?;
            let dev: Vec<(String, String, Label)> = evalkit::read_rows(&claims)?
                .into_iter()
                .map(|r| (r.id, r.text, r.label))
                .collect();
            print(&verify::partition_easy_hard(&model, &dev)?)
        }
    }
}

fn example(row: &ExportRow, mode: InputMode, corpus: Option<&Corpus>) -> CliResult<Example> {
    let evidence = match (mode, corpus) {
        (InputMode::ClaimOnly, _) => Vec::new(),
        (InputMode::ClaimEvidence, Some(c)) => row
            .gold_passage_ids()
            .iter()
            .map(|id| c.get_passage(id).map(|p| p.text))
            .collect::<fm2_core::Result<_>>()?,
        (InputMode::ClaimEvidence, None) => row.gold_evidence.iter().map(|e| e.text.clone()).collect(),
    };
    Ok(Example {
        claim: row.text.clone(),
        evidence,
        label: row.label,
    })
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
