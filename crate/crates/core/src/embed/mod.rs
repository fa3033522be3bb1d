//! Embedding banks that need no pretrained encoder.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded from a
//! 64-bit value, with Gaussian draws from `rand_distr::StandardNormal`. Both are
//! portable, so banks are reproducible byte for byte.

mod synth;
mod toy;

pub use synth::{synthesize, SplitPlan, SynthConfig, CSK_OFFSET};
pub use toy::{toy_embed, tokenize};

/// SplitMix64 finalizer, used to derive independent seeds.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sum of rows taken in a canonical (lexicographic) order, so the result does
/// not depend on how the rows were arranged.
pub(crate) fn order_free_sum(rows: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut sorted: Vec<&Vec<f64>> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut acc = vec![0.0; dim];
    for r in sorted {
        for (a, v) in acc.iter_mut().zip(r) {
            *a += v;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_free_sum_ignores_row_order() {
        let rows = vec![vec![0.1, 1e16], vec![0.2, -1e16], vec![0.3, 1.0]];
        let mut rev = rows.clone();
        rev.reverse();
        assert_eq!(order_free_sum(&rows, 2), order_free_sum(&rev, 2));
    }
}
