//! Training loop, checkpoint selection, evaluation and prediction.
//!
//! Per epoch the training documents are shuffled with a seeded generator and cut
//! into batches of `batch_docs`. Each batch contributes the mean BCE over all of
//! its gold-forward edges and one Adam step. Documents in a batch are processed
//! in parallel; their gradients are combined in document order, so results do
//! not depend on the number of worker threads.

mod checkpoint;
mod config;

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::TrainConfig;

use crate::classifier::PairwiseMatrix;
use crate::corpus::{validate_bank, Document, EmbeddingBank, Split};
use crate::error::{Error, Result};
use crate::graph::{build_graph, DocumentGraph};
use crate::metrics::{kendall_tau, MetricsReport};
use crate::model::{document_pass, predict_all_pairs, ModelParams};
use crate::numeric::{AdamConfig, AdamState, Tensor};
use crate::solver::topological_order;

/// Environment variable selecting the worker count. Results never depend on it.
pub const THREADS_ENV: &str = "STACK_ORDER_THREADS";

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV}=`{v}` is not a thread count")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Edge-weighted mean training loss over the epoch.
    pub train_loss: f64,
    pub val_tau: Option<f64>,
}

pub fn write_log(log: &[EpochLog], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for entry in log {
        let line = serde_json::to_string(entry).expect("log entries serialize");
        writeln!(out, "{line}").expect("writing to memory");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
}

fn graphs_for<'a>(
    docs: impl Iterator<Item = &'a Document>,
    bank: &EmbeddingBank,
    params: &ModelParams,
) -> Result<Vec<(&'a Document, DocumentGraph)>> {
    docs.map(|doc| {
        let record = bank.record(&doc.doc_id)?;
        let graph = build_graph(doc, record, &bank.dims(), params.graph)?;
        Ok((doc, graph))
    })
    .collect()
}

fn order_for(params: &ModelParams, graph: &DocumentGraph) -> Result<(Vec<usize>, PairwiseMatrix)> {
    let matrix = predict_all_pairs(params, graph)?;
    let order = topological_order(&matrix)?;
    Ok((order, matrix))
}

fn mean_tau(params: &ModelParams, graphs: &[(&Document, DocumentGraph)]) -> Result<Option<f64>> {
    let taus: Vec<Option<f64>> = graphs
        .par_iter()
        .map(|(_, g)| {
            let n = g.sentence_count();
            if n < 2 {
                return Ok(None);
            }
            let (order, _) = order_for(params, g)?;
            let gold: Vec<usize> = (0..n).collect();
            kendall_tau(&order, &gold).map(Some)
        })
        .collect::<Result<_>>()?;
    let vals: Vec<f64> = taus.into_iter().flatten().collect();
    Ok((!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64))
}

/// Trains from scratch and returns the checkpoint with the best validation τ
/// (earliest epoch on ties) together with the per-epoch log.
pub fn train(corpus: &[Document], bank: &EmbeddingBank, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let report = validate_bank(corpus, bank);
    if !report.ok() {
        let shown: Vec<String> = report.findings.iter().take(5).map(|f| f.to_string()).collect();
        return Err(Error::Invalid(format!(
            "bank does not match corpus ({} findings): {}",
            report.findings.len(),
            shown.join("; ")
        )));
    }
    let pool = worker_pool()?;
    pool.install(|| train_inner(corpus, bank, config))
}

fn train_inner(corpus: &[Document], bank: &EmbeddingBank, config: &TrainConfig) -> Result<TrainOutcome> {
    let mut params = ModelParams::init(bank.dims(), config.d_in, config.d_h, config.graph, config.seed);
    let names = params.names();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut adam = AdamState::new(AdamConfig::with_lr(config.lr), params.named().into_iter().map(|(_, t)| t));

    let train_docs: Vec<&Document> = corpus.iter().filter(|d| d.split == Split::Train).collect();
    let val_docs: Vec<&Document> = corpus.iter().filter(|d| d.split == Split::Val).collect();
    if train_docs.is_empty() || val_docs.is_empty() {
        return Err(Error::Invalid(format!(
            "training needs non-empty train and val splits (got {} and {})",
            train_docs.len(),
            val_docs.len()
        )));
    }
    let mut train_graphs = graphs_for(train_docs.into_iter(), bank, &params)?;
    train_graphs.retain(|(_, g)| g.sentence_count() >= 2);
    if train_graphs.is_empty() {
        return Err(Error::Invalid("no training document has two or more sentences".into()));
    }
    let val_graphs = graphs_for(val_docs.into_iter(), bank, &params)?;

    let mut shuffler = ChaCha8Rng::seed_from_u64(config.seed ^ 0x0053_4855_4646_4c45); // "SHUFFLE"
    let mut indices: Vec<usize> = (0..train_graphs.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<Checkpoint> = None;

    for epoch in 1..=config.epochs {
        indices.shuffle(&mut shuffler);
        let (mut loss_sum, mut edge_sum) = (0.0, 0usize);
        for (b, batch) in indices.chunks(config.batch_docs).enumerate() {
            let ctx = |msg: String| Error::Training {
                epoch,
                batch: b + 1,
                msg,
            };
            let passes: Vec<_> = batch
                .par_iter()
                .map(|&i| document_pass(&params, &train_graphs[i].1, config.log_clamp))
                .collect::<Result<_>>()
                .map_err(|e| ctx(e.to_string()))?;
            let passes: Vec<_> = passes.into_iter().flatten().collect();
            let edges: usize = passes.iter().map(|p| p.edges).sum();

            let mut grads: Vec<Tensor> = params.named().iter().map(|(_, t)| Tensor::zeros(t.shape())).collect();
            let mut batch_loss = 0.0;
            for pass in &passes {
                let weight = pass.edges as f64 / edges as f64;
                batch_loss += weight * pass.loss;
                for (acc, g) in grads.iter_mut().zip(&pass.grads) {
                    for (a, v) in acc.data_mut().iter_mut().zip(g.data()) {
                        *a += weight * v;
                    }
                }
            }
            if !batch_loss.is_finite() {
                return Err(ctx(format!("non-finite loss {batch_loss}")));
            }
            adam.step(&mut params.tensors_mut(), &grads, &name_refs)
                .map_err(|e| ctx(e.to_string()))?;
            loss_sum += batch_loss * edges as f64;
            edge_sum += edges;
        }

        let val_tau = mean_tau(&params, &val_graphs)?;
        log.push(EpochLog {
            epoch,
            train_loss: loss_sum / edge_sum as f64,
            val_tau,
        });
        let improved = match &best {
            None => true,
            Some(b) => match (val_tau, b.val_tau) {
                (Some(new), Some(old)) => new > old,
                (Some(_), None) => true,
                _ => false,
            },
        };
        if improved {
            best = Some(Checkpoint {
                config: config.clone(),
                params: params.clone(),
                adam: adam.clone(),
                epoch,
                val_tau,
            });
        }
    }

    Ok(TrainOutcome {
        checkpoint: best.expect("at least one epoch"),
        log,
    })
}

fn check_dims(bank: &EmbeddingBank, checkpoint: &Checkpoint) -> Result<()> {
    if bank.dims() != checkpoint.params.bank {
        return Err(Error::Config(format!(
            "bank widths {:?} differ from checkpoint widths {:?}",
            bank.dims(),
            checkpoint.params.bank
        )));
    }
    Ok(())
}

/// Scores every document of `split`, in corpus order.
pub fn evaluate(corpus: &[Document], bank: &EmbeddingBank, checkpoint: &Checkpoint, split: Split) -> Result<MetricsReport> {
    check_dims(bank, checkpoint)?;
    let docs: Vec<&Document> = corpus.iter().filter(|d| d.split == split).collect();
    let pool = worker_pool()?;
    let preds: Vec<Vec<usize>> = pool.install(|| {
        docs.par_iter()
            .map(|doc| predict(doc, bank, checkpoint).map(|(order, _)| order))
            .collect::<Result<_>>()
    })?;
    let ids: Vec<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
    let golds: Vec<Vec<usize>> = docs.iter().map(|d| (0..d.len()).collect()).collect();
    MetricsReport::compute(split.as_str(), &ids, &preds, &golds)
}

/// Predicted order and the pairwise probabilities behind it.
pub fn predict(doc: &Document, bank: &EmbeddingBank, checkpoint: &Checkpoint) -> Result<(Vec<usize>, PairwiseMatrix)> {
    check_dims(bank, checkpoint)?;
    let record = bank.record(&doc.doc_id)?;
    let graph = build_graph(doc, record, &bank.dims(), checkpoint.params.graph)?;
    order_for(&checkpoint.params, &graph)
}
