//! Full order recovery from pairwise preferences by topological sorting.
//!
//! The tournament has an edge `x → y` whenever `p_xy > p_yx`; exact ties point
//! from the lower storage index. Among sources the one with the largest total
//! win margin `Σ_y (p_xy − 0.5)` goes first, lowest index on equal margins.
//! When every remaining node has an incoming edge the tournament is cyclic: the
//! surviving edge with the smallest confidence `|p_xy − 0.5|` is deleted (ties
//! broken by the smallest `(x, y)`) and the sort resumes.

use crate::classifier::PairwiseMatrix;
use crate::error::{Error, Result};

/// Orders sentence indices; `order[k]` is the sentence placed at position `k`.
pub fn topological_order(matrix: &PairwiseMatrix) -> Result<Vec<usize>> {
    let n = matrix.len();
    let mut edge = vec![false; n * n];
    for x in 0..n {
        for y in x + 1..n {
            let (pxy, pyx) = (matrix.get(x, y), matrix.get(y, x));
            if !(pxy.is_finite() && pyx.is_finite()) {
                return Err(Error::Invalid(format!("non-finite probability at ({x}, {y})")));
            }
            if pyx > pxy {
                edge[y * n + x] = true;
            } else {
                edge[x * n + y] = true;
            }
        }
    }

    let margin: Vec<f64> = (0..n)
        .map(|x| (0..n).filter(|&y| y != x).map(|y| matrix.get(x, y) - 0.5).sum())
        .collect();

    let mut placed = vec![false; n];
    let mut indegree: Vec<usize> = (0..n).map(|y| (0..n).filter(|&x| edge[x * n + y]).count()).collect();
    let mut order = Vec::with_capacity(n);
    let mut deletions = 0usize;

    while order.len() < n {
        let source = (0..n)
            .filter(|&x| !placed[x] && indegree[x] == 0)
            .fold(None, |best: Option<usize>, x| match best {
                Some(b) if margin[b] >= margin[x] => Some(b),
                _ => Some(x),
            });

        match source {
            Some(x) => {
                placed[x] = true;
                order.push(x);
                for y in 0..n {
                    if edge[x * n + y] {
                        edge[x * n + y] = false;
                        indegree[y] -= 1;
                    }
                }
            }
            None => {
                let mut weakest: Option<(f64, usize, usize)> = None;
                for x in (0..n).filter(|&x| !placed[x]) {
                    for y in (0..n).filter(|&y| !placed[y] && edge[x * n + y]) {
                        let conf = (matrix.get(x, y) - 0.5).abs();
                        if weakest.is_none_or(|(c, _, _)| conf < c) {
                            weakest = Some((conf, x, y));
                        }
                    }
                }
                let (_, x, y) = weakest.expect("a cycle has at least one edge");
                edge[x * n + y] = false;
                indegree[y] -= 1;
                deletions += 1;
                debug_assert!(deletions <= n * n.saturating_sub(1) / 2);
            }
        }
    }
    Ok(order)
}

/// Inverse permutation: `positions[s]` is where sentence `s` sits in `order`.
pub fn rank_to_positions(order: &[usize]) -> Result<Vec<usize>> {
    let n = order.len();
    let mut positions = vec![usize::MAX; n];
    for (k, &s) in order.iter().enumerate() {
        if s >= n || positions[s] != usize::MAX {
            return Err(Error::Invalid(format!("{order:?} is not a permutation of 0..{n}")));
        }
        positions[s] = k;
    }
    Ok(positions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(n: usize, entries: &[(usize, usize, f64)]) -> PairwiseMatrix {
        let mut p = vec![0.5; n * n];
        for &(i, j, v) in entries {
            p[i * n + j] = v;
            p[j * n + i] = 1.0 - v;
        }
        PairwiseMatrix::from_probabilities(n, p).unwrap()
    }

    /// Matrix agreeing with `gold` on every pair, confidences varying.
    fn consistent(gold: &[usize]) -> PairwiseMatrix {
        let pos = rank_to_positions(gold).unwrap();
        let n = gold.len();
        PairwiseMatrix::from_scores(n, |i, j| {
            let gap = pos[j] as f64 - pos[i] as f64;
            0.05 * gap + 0.01 * (i + j) as f64 * gap.signum()
        })
    }

    #[test]
    fn single_sentence() {
        assert_eq!(topological_order(&matrix(1, &[])).unwrap(), vec![0]);
        assert_eq!(topological_order(&matrix(0, &[])).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn three_cycle_drops_weakest_edge() {
        let m = matrix(3, &[(0, 1, 0.9), (1, 2, 0.9), (2, 0, 0.6)]);
        assert_eq!(topological_order(&m).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn all_ties_fall_back_to_storage_order() {
        assert_eq!(topological_order(&matrix(4, &[])).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn consistent_matrix_recovers_gold() {
        let gold = vec![3, 0, 4, 1, 2];
        assert_eq!(topological_order(&consistent(&gold)).unwrap(), gold);
    }

    #[test]
    fn positions_examples() {
        assert_eq!(rank_to_positions(&[2, 0, 1]).unwrap(), vec![1, 2, 0]);
        assert_eq!(rank_to_positions(&[0, 1, 2, 3]).unwrap(), vec![0, 1, 2, 3]);
        assert!(rank_to_positions(&[0, 0, 1]).is_err());
        assert!(rank_to_positions(&[0, 3]).is_err());
    }

    proptest! {
        #[test]
        fn inverse_of_inverse_is_identity(perm in Just((0..9usize).collect::<Vec<_>>()).prop_shuffle()) {
            let inv = rank_to_positions(&perm).unwrap();
            prop_assert_eq!(rank_to_positions(&inv).unwrap(), perm);
        }

        #[test]
        fn output_is_always_a_permutation(n in 1usize..9, raw in proptest::collection::vec(0.0f64..1.0, 64)) {
            let m = PairwiseMatrix::from_scores(n, |i, j| raw[(i * 8 + j) % 64] * 4.0 - 2.0);
            let order = topological_order(&m).unwrap();
            prop_assert!(rank_to_positions(&order).is_ok());
            prop_assert_eq!(order.len(), n);
            prop_assert_eq!(topological_order(&m).unwrap(), order);
        }

        #[test]
        fn consistent_matrices_sort_to_gold(gold in Just((0..8usize).collect::<Vec<_>>()).prop_shuffle()) {
            prop_assert_eq!(topological_order(&consistent(&gold)).unwrap(), gold);
        }
    }
}
