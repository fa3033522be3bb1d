//! Pairwise scores of an untrained model and their antisymmetry.

use stack_order::embed::{synthesize, SplitPlan, SynthConfig};
use stack_order::graph::{build_graph, GraphConfig};
use stack_order::model::{predict_all_pairs, ModelParams};

fn main() -> stack_order::Result<()> {
    let (docs, bank) = synthesize(&SynthConfig {
        num_docs: 1,
        n_min: 4,
        n_max: 4,
        dim: 16,
        sent_noise: 0.05,
        splits: SplitPlan::Counts { train: 1, val: 0, test: 0 },
        ..SynthConfig::default()
    })?;
    let doc = &docs[0];
    let graph = build_graph(doc, bank.record(&doc.doc_id)?, &bank.dims(), GraphConfig::default())?;
    let params = ModelParams::init(bank.dims(), 16, 16, GraphConfig::default(), 3);
    println!("{} parameters", params.parameter_count());

    let m = predict_all_pairs(&params, &graph)?;
    let n = m.len();
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| if i == j { "   -  ".into() } else { format!("{:.4}", m.get(i, j)) })
            .collect();
        println!("{}", row.join(" "));
    }
    let worst = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| (m.get(i, j) + m.get(j, i) - 1.0).abs())
        .fold(0.0, f64::max);
    println!("max |p_ij + p_ji - 1| = {worst:.3e}");
    Ok(())
}
