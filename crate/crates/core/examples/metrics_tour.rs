//! Ordering metrics on a few hand-made predictions.

use stack_order::metrics::MetricsReport;

fn main() -> stack_order::Result<()> {
    let golds = vec![vec![0, 1, 2, 3, 4], vec![0, 1, 2, 3], vec![0, 1, 2], vec![0]];
    let preds = vec![vec![0, 1, 2, 3, 4], vec![1, 0, 2, 3], vec![2, 1, 0], vec![0]];
    let ids: Vec<String> = ["identity", "one swap", "reversed", "single"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let report = MetricsReport::compute("demo", &ids, &preds, &golds)?;
    println!("{report}");
    for d in &report.per_document {
        println!("{d:?}");
    }
    println!("{}", report.summary_json());
    Ok(())
}
