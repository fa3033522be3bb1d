//! Train on a noiseless synthetic corpus and report test metrics.
//!
//! ```bash
//! cargo run --release -p stack-order --example train_synthetic
//! cargo run --release -p stack-order --example train_synthetic -- 0.5 0.0 --no-csk
//! ```
//!
//! Positional arguments: sentence noise and commonsense noise (defaults 0 and 0).
//! `--no-csk`, `--no-global` and `--merge-csk` select ablations; `--seed N` and
//! `--epochs N` override the defaults.

use std::time::Instant;

use stack_order::corpus::Split;
use stack_order::embed::{synthesize, SplitPlan, SynthConfig};
use stack_order::trainer::{evaluate, train, TrainConfig};

fn main() -> stack_order::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut noise = Vec::new();
    let mut config = TrainConfig::default();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--no-csk" => config.graph.use_csk = false,
            "--no-global" => config.graph.use_global = false,
            "--merge-csk" => config.graph.merge_csk_relations = true,
            "--seed" => config.seed = it.next().and_then(|v| v.parse().ok()).unwrap_or(0),
            "--epochs" => config.epochs = it.next().and_then(|v| v.parse().ok()).unwrap_or(10),
            other => noise.push(other.parse::<f64>().expect("noise level")),
        }
    }
    let sent_noise = noise.first().copied().unwrap_or(0.0);
    let csk_noise = noise.get(1).copied().unwrap_or(0.0);

    let (corpus, bank) = synthesize(&SynthConfig {
        num_docs: 620,
        n_min: 5,
        n_max: 5,
        dim: 32,
        sent_noise,
        csk_noise,
        seed: config.seed,
        splits: SplitPlan::Counts {
            train: 500,
            val: 60,
            test: 60,
        },
    })?;

    let start = Instant::now();
    let outcome = train(&corpus, &bank, &config)?;
    for e in &outcome.log {
        println!(
            "epoch {:>2}  loss {:.5}  val tau {}",
            e.epoch,
            e.train_loss,
            e.val_tau.map_or("n/a".into(), |t| format!("{t:.4}"))
        );
    }
    println!(
        "best epoch {} ({:.1}s)",
        outcome.checkpoint.epoch,
        start.elapsed().as_secs_f64()
    );
    let report = evaluate(&corpus, &bank, &outcome.checkpoint, Split::Test)?;
    println!("{report}");
    Ok(())
}
