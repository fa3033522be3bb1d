//! Compare backpropagated gradients with central differences on a small model.

use stack_order::embed::{synthesize, SplitPlan, SynthConfig};
use stack_order::graph::{build_graph, GraphConfig};
use stack_order::model::{document_loss, document_pass, ModelParams};
use stack_order::numeric::LOG_CLAMP;

fn main() -> stack_order::Result<()> {
    let (docs, bank) = synthesize(&SynthConfig {
        num_docs: 1,
        n_min: 3,
        n_max: 3,
        dim: 6,
        sent_noise: 0.3,
        csk_noise: 0.3,
        splits: SplitPlan::Counts { train: 1, val: 0, test: 0 },
        ..SynthConfig::default()
    })?;
    let doc = &docs[0];
    let graph = build_graph(doc, bank.record(&doc.doc_id)?, &bank.dims(), GraphConfig::default())?;
    let params = ModelParams::init(bank.dims(), 8, 8, GraphConfig::default(), 11);
    let pass = document_pass(&params, &graph, LOG_CLAMP)?.expect("three sentences");
    println!("loss {:.6}", pass.loss);

    let h = 1e-5;
    for (k, name) in params.names().iter().enumerate() {
        let mut worst: f64 = 0.0;
        for e in 0..pass.grads[k].numel() {
            let mut plus = params.clone();
            plus.tensors_mut()[k].data_mut()[e] += h;
            let mut minus = params.clone();
            minus.tensors_mut()[k].data_mut()[e] -= h;
            let fd = (document_loss(&plus, &graph, LOG_CLAMP)? - document_loss(&minus, &graph, LOG_CLAMP)?) / (2.0 * h);
            let an = pass.grads[k].data()[e];
            worst = worst.max((an - fd).abs() / an.abs().max(fd.abs()).max(1e-6));
        }
        println!("{name:<24} max relative error {worst:.2e}");
    }
    Ok(())
}
