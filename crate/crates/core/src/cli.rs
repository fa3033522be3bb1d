//! `stack-order` command line.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::corpus::{read_bank, read_corpus, validate_bank, write_bank, write_corpus, Document, Split};
use crate::embed::{synthesize, toy_embed, SplitPlan, SynthConfig};
use crate::error::{Error, Result};
use crate::graph::build_graph;
use crate::model::sentence_features;
use crate::trainer::{evaluate, predict, train, write_log, Checkpoint, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "stack-order", version, about = "Sentence ordering with a relational document graph")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus and its embedding bank.
    Synth(SynthArgs),
    /// Embed a corpus with the deterministic hashed toy embedder.
    ToyEmbed(ToyEmbedArgs),
    /// Check that a bank covers a corpus with 3n+1 finite vectors per document.
    Validate(DataArgs),
    /// Train a model and write the best-validation checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on one split.
    Eval(EvalArgs),
    /// Predict sentence orders and pairwise probabilities.
    Predict(PredictArgs),
    /// Write per-sentence feature vectors [projected input, encoder state].
    DumpEmbeddings(DumpArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Line-delimited JSON corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    /// STEB embedding bank.
    #[arg(long)]
    pub bank: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    pub docs: usize,
    /// Sentences per document; shorthand for --n-min N --n-max N.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub n_min: usize,
    #[arg(long, default_value_t = 5)]
    pub n_max: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// Per-component standard deviation of sentence-vector noise.
    #[arg(long, default_value_t = 0.0)]
    pub sent_noise: f64,
    /// Per-component standard deviation of past/future-vector noise.
    #[arg(long, default_value_t = 0.0)]
    pub csk_noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exact split sizes "TRAIN,VAL,TEST" (must sum to --docs); default is an 80/10/10 draw.
    #[arg(long)]
    pub split_counts: Option<String>,
    #[arg(long)]
    pub out_corpus: PathBuf,
    #[arg(long)]
    pub out_bank: PathBuf,
}

#[derive(Debug, Args)]
pub struct ToyEmbedArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output bank path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Default)]
pub struct AblationArgs {
    /// Drop past/future commonsense nodes and edges.
    #[arg(long)]
    pub no_csk: bool,
    /// Drop the global node and its edges.
    #[arg(long)]
    pub no_global: bool,
    /// Use one relation for past and future edges.
    #[arg(long)]
    pub merge_csk: bool,
}

impl AblationArgs {
    fn requested(&self) -> (Option<bool>, Option<bool>, Option<bool>) {
        (
            self.no_csk.then_some(false),
            self.no_global.then_some(false),
            self.merge_csk.then_some(true),
        )
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// key=value training configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Documents per batch.
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub dim_in: Option<usize>,
    #[arg(long)]
    pub dim_hidden: Option<usize>,
    #[command(flatten)]
    pub ablation: AblationArgs,
    /// Checkpoint output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Training log (line-delimited JSON); defaults to <out>.log.jsonl.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
    #[command(flatten)]
    pub ablation: AblationArgs,
    /// Write the report as one JSON record.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Single document to predict; otherwise every document of --split.
    #[arg(long)]
    pub doc: Option<String>,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Output file (line-delimited JSON); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long)]
    pub out: PathBuf,
}

fn load_data(args: &DataArgs) -> Result<(Vec<Document>, crate::corpus::EmbeddingBank)> {
    Ok((read_corpus(&args.corpus)?, read_bank(&args.bank)?))
}

fn write_lines(path: Option<&Path>, lines: &[String]) -> Result<()> {
    let mut buf = Vec::new();
    for l in lines {
        writeln!(buf, "{l}").expect("writing to memory");
    }
    match path {
        Some(p) => fs::write(p, buf).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .write_all(&buf)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn parse_counts(text: &str) -> Result<SplitPlan> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Invalid(format!("--split-counts `{text}` is not TRAIN,VAL,TEST")))?;
    match parts[..] {
        [train, val, test] => Ok(SplitPlan::Counts { train, val, test }),
        _ => Err(Error::Invalid(format!("--split-counts `{text}` needs three numbers"))),
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let (n_min, n_max) = a.n.map_or((a.n_min, a.n_max), |n| (n, n));
    let splits = match &a.split_counts {
        Some(s) => parse_counts(s)?,
        None => SplitPlan::default(),
    };
    let (docs, bank) = synthesize(&SynthConfig {
        num_docs: a.docs,
        n_min,
        n_max,
        dim: a.dim,
        sent_noise: a.sent_noise,
        csk_noise: a.csk_noise,
        seed: a.seed,
        splits,
    })?;
    write_corpus(&docs, &a.out_corpus)?;
    write_bank(&bank, &a.out_bank)?;
    println!("wrote {} documents", docs.len());
    Ok(())
}

fn cmd_toy_embed(a: &ToyEmbedArgs) -> Result<()> {
    let docs = read_corpus(&a.corpus)?;
    let bank = toy_embed(&docs, a.dim, a.seed)?;
    write_bank(&bank, &a.out)?;
    println!("embedded {} documents at width {}", docs.len(), a.dim);
    Ok(())
}

fn cmd_validate(a: &DataArgs) -> Result<()> {
    let (docs, bank) = load_data(a)?;
    let report = validate_bank(&docs, &bank);
    for f in &report.findings {
        println!("{f}");
    }
    if report.ok() {
        println!("ok: {} documents", docs.len());
        Ok(())
    } else {
        Err(Error::Invalid(format!("{} validation findings", report.findings.len())))
    }
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => TrainConfig::from_file(p)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = a.seed {
        config.seed = v;
    }
    if let Some(v) = a.epochs {
        config.epochs = v;
    }
    if let Some(v) = a.batch {
        config.batch_docs = v;
    }
    if let Some(v) = a.lr {
        config.lr = v;
    }
    if let Some(v) = a.dim_in {
        config.d_in = v;
    }
    if let Some(v) = a.dim_hidden {
        config.d_h = v;
    }
    if a.ablation.no_csk {
        config.graph.use_csk = false;
    }
    if a.ablation.no_global {
        config.graph.use_global = false;
    }
    if a.ablation.merge_csk {
        config.graph.merge_csk_relations = true;
    }
    config.validate()?;

    let (docs, bank) = load_data(&a.data)?;
    let outcome = train(&docs, &bank, &config)?;
    for e in &outcome.log {
        let tau = e.val_tau.map_or("n/a".to_string(), |t| format!("{t:.4}"));
        println!("epoch {:>3}  train_loss {:.6}  val_tau {tau}", e.epoch, e.train_loss);
    }
    outcome.checkpoint.save(&a.out)?;
    let log_path = a.log.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".log.jsonl");
        PathBuf::from(p)
    });
    write_log(&outcome.log, &log_path)?;
    println!(
        "saved epoch {} checkpoint to {}",
        outcome.checkpoint.epoch,
        a.out.display()
    );
    Ok(())
}

fn load_checkpoint(path: &Path, ablation: &AblationArgs) -> Result<Checkpoint> {
    let ck = Checkpoint::load(path)?;
    let (csk, global, merge) = ablation.requested();
    ck.check_ablation(csk, global, merge)?;
    Ok(ck)
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let split: Split = a.split.parse()?;
    let ck = load_checkpoint(&a.checkpoint, &a.ablation)?;
    let (docs, bank) = load_data(&a.data)?;
    let report = evaluate(&docs, &bank, &ck, split)?;
    println!("{report}");
    if let Some(path) = &a.report {
        write_lines(Some(path), &[report.summary_json()])?;
    }
    Ok(())
}

fn selected<'a>(docs: &'a [Document], doc: &Option<String>, split: &str) -> Result<Vec<&'a Document>> {
    match doc {
        Some(id) => docs
            .iter()
            .find(|d| &d.doc_id == id)
            .map(|d| vec![d])
            .ok_or_else(|| Error::MissingDocument(id.clone())),
        None => {
            let split: Split = split.parse()?;
            Ok(docs.iter().filter(|d| d.split == split).collect())
        }
    }
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let (docs, bank) = load_data(&a.data)?;
    let mut lines = Vec::new();
    for doc in selected(&docs, &a.doc, &a.split)? {
        let (order, matrix) = predict(doc, &bank, &ck)?;
        let n = matrix.len();
        let probs: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| matrix.get(i, j)).collect()).collect();
        lines.push(json!({"doc_id": doc.doc_id, "order": order, "probabilities": probs}).to_string());
    }
    write_lines(a.out.as_deref(), &lines)
}

fn cmd_dump(a: &DumpArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let (docs, bank) = load_data(&a.data)?;
    let mut lines = Vec::new();
    for doc in selected(&docs, &None, &a.split)? {
        let graph = build_graph(doc, bank.record(&doc.doc_id)?, &bank.dims(), ck.params.graph)?;
        let feats = sentence_features(&ck.params, &graph)?;
        for i in 0..doc.len() {
            lines.push(
                json!({
                    "doc_id": doc.doc_id,
                    "sentence": i,
                    "gold_position": i,
                    "relative_position": if doc.len() > 1 { i as f64 / (doc.len() - 1) as f64 } else { 0.0 },
                    "features": feats.row(i),
                })
                .to_string(),
            );
        }
    }
    write_lines(Some(&a.out), &lines)
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::ToyEmbed(a) => cmd_toy_embed(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Predict(a) => cmd_predict(a),
        Command::DumpEmbeddings(a) => cmd_dump(a),
    }
}

/// Parses process arguments, runs the command and returns the exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
