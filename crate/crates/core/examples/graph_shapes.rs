//! Node and edge counts of the document graph under each ablation.
//!
//! ```bash
//! cargo run -p stack-order --example graph_shapes -- 5
//! ```

use stack_order::embed::{synthesize, SplitPlan, SynthConfig};
use stack_order::graph::{build_graph, GraphConfig};

fn main() -> stack_order::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    let (docs, bank) = synthesize(&SynthConfig {
        num_docs: 1,
        n_min: n,
        n_max: n,
        dim: 8,
        splits: SplitPlan::Counts { train: 1, val: 0, test: 0 },
        ..SynthConfig::default()
    })?;
    let doc = &docs[0];
    println!("document {} with {n} sentences", doc.doc_id);
    println!("{:<8} {:<10} {:<6} {:>6} {:>6}", "csk", "global", "merge", "nodes", "edges");
    for config in GraphConfig::all_combinations() {
        let g = build_graph(doc, bank.record(&doc.doc_id)?, &bank.dims(), config)?;
        println!(
            "{:<8} {:<10} {:<6} {:>6} {:>6}",
            config.use_csk,
            config.use_global,
            config.merge_csk_relations,
            g.node_count(),
            g.edge_count()
        );
    }

    let full = build_graph(doc, bank.record(&doc.doc_id)?, &bank.dims(), GraphConfig::default())?;
    for rel in GraphConfig::default().active_relations() {
        let count = full.edges().iter().filter(|e| e.relation == rel).count();
        println!("{:<4} {count} edges", rel.short_name());
    }
    Ok(())
}
