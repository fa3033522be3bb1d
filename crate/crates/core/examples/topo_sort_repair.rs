//! Ordering a tournament that contains a cycle.

use stack_order::classifier::PairwiseMatrix;
use stack_order::solver::topological_order;

fn show(name: &str, n: usize, p: Vec<f64>) -> stack_order::Result<()> {
    let m = PairwiseMatrix::from_probabilities(n, p)?;
    println!("{name}: {:?}", topological_order(&m)?);
    Ok(())
}

fn main() -> stack_order::Result<()> {
    // 0 -> 1 -> 2 -> 0, with 2 -> 0 the least confident edge.
    show(
        "3-cycle",
        3,
        vec![
            0.0, 0.9, 0.45, //
            0.1, 0.0, 0.8, //
            0.55, 0.2, 0.0,
        ],
    )?;
    // Acyclic: 2 before 0 before 1.
    show(
        "acyclic",
        3,
        vec![
            0.0, 0.7, 0.3, //
            0.3, 0.0, 0.1, //
            0.7, 0.9, 0.0,
        ],
    )?;
    // Every pair undecided: ties break toward the lower index.
    show("all ties", 4, vec![0.5; 16])?;
    Ok(())
}
