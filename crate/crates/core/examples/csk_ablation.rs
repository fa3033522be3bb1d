//! Full graph against the graph without commonsense nodes, on a corpus where
//! only the commonsense vectors carry clean order information.
//!
//! ```bash
//! cargo run --release -p stack-order --example csk_ablation
//! ```

use stack_order::corpus::Split;
use stack_order::embed::{synthesize, SplitPlan, SynthConfig};
use stack_order::trainer::{evaluate, train, TrainConfig};

fn main() -> stack_order::Result<()> {
    let mut gaps = Vec::new();
    for seed in 1..=3u64 {
        let (corpus, bank) = synthesize(&SynthConfig {
            num_docs: 620,
            n_min: 5,
            n_max: 5,
            dim: 32,
            sent_noise: 0.5,
            csk_noise: 0.0,
            seed,
            splits: SplitPlan::Counts { train: 500, val: 60, test: 60 },
        })?;
        let mut tau = [0.0; 2];
        for (slot, use_csk) in [(0, true), (1, false)] {
            let mut config = TrainConfig { seed, ..TrainConfig::default() };
            config.graph.use_csk = use_csk;
            let outcome = train(&corpus, &bank, &config)?;
            let report = evaluate(&corpus, &bank, &outcome.checkpoint, Split::Test)?;
            tau[slot] = report.tau.unwrap_or(f64::NAN);
        }
        println!("seed {seed}: full {:.4}  no-csk {:.4}", tau[0], tau[1]);
        gaps.push(tau[0] - tau[1]);
    }
    println!("mean gap {:.4}", gaps.iter().sum::<f64>() / gaps.len() as f64);
    Ok(())
}
