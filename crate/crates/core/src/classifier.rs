//! Antisymmetric pairwise order scoring.
//!
//! Sentence `i` is described by `m_i = [P(g_i), h_i]`, its projected initial
//! embedding next to its encoder state. A pair is scored as
//! `f(m_i, m_j) = wᵀ sin(m_i − m_j)`, which is odd in its arguments, and turned
//! into complementary probabilities by a softmax over `(f, −f)`.

use crate::error::{Error, Result};
use crate::numeric::{two_way_softmax, Tape, Tensor, Var};
use crate::rgcn::Encoded;

pub fn score_pair(m_i: &[f64], m_j: &[f64], w: &[f64]) -> Result<f64> {
    if m_i.len() != m_j.len() || w.len() != m_i.len() {
        return Err(Error::shape(
            "score_pair",
            format!("m_i {}, m_j {}, w {}", m_i.len(), m_j.len(), w.len()),
        ));
    }
    Ok(m_i
        .iter()
        .zip(m_j)
        .zip(w)
        .map(|((a, b), wk)| wk * (a - b).sin())
        .sum())
}

/// `(p_ij, p_ji) = softmax(f, −f)`.
pub fn pair_probabilities(f: f64) -> (f64, f64) {
    two_way_softmax(f, -f)
}

/// Probabilities `p_ij` that sentence `i` precedes sentence `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseMatrix {
    n: usize,
    p: Vec<f64>,
}

impl PairwiseMatrix {
    /// Builds the matrix from upper-triangle scores `score(i, j)` for `i < j`.
    pub fn from_scores(n: usize, mut score: impl FnMut(usize, usize) -> f64) -> Self {
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let (pij, pji) = pair_probabilities(score(i, j));
                p[i * n + j] = pij;
                p[j * n + i] = pji;
            }
        }
        Self { n, p }
    }

    /// Takes a full row-major matrix; the diagonal is ignored.
    pub fn from_probabilities(n: usize, mut p: Vec<f64>) -> Result<Self> {
        if p.len() != n * n {
            return Err(Error::Invalid(format!(
                "pairwise matrix for n={n} needs {} entries, got {}",
                n * n,
                p.len()
            )));
        }
        for i in 0..n {
            p[i * n + i] = 0.0;
            for j in 0..n {
                let v = p[i * n + j];
                if i != j && !(v > 0.0 && v < 1.0 || v == 0.0 || v == 1.0) {
                    return Err(Error::Invalid(format!("p[{i}][{j}] = {v} is not a probability")));
                }
                if i < j && (v + p[j * n + i] - 1.0).abs() > 1e-9 {
                    return Err(Error::Invalid(format!(
                        "p[{i}][{j}] + p[{j}][{i}] = {} differs from 1",
                        v + p[j * n + i]
                    )));
                }
            }
        }
        Ok(Self { n, p })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `p_ij`; the diagonal reads as 0.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    /// Decision rule: `i` precedes `j` iff `p_ij > p_ji`.
    pub fn prefers(&self, i: usize, j: usize) -> bool {
        self.get(i, j) > self.get(j, i)
    }

    pub fn off_diagonal_count(&self) -> usize {
        self.n * self.n.saturating_sub(1)
    }
}

/// `m = [projected, hidden]` restricted to the `n` sentence nodes.
pub fn pair_features(tape: &mut Tape, encoded: Encoded, n: usize) -> Result<Var> {
    let rows: Vec<usize> = (0..n).collect();
    let g = tape.select_rows(encoded.projected, &rows)?;
    let h = tape.select_rows(encoded.hidden, &rows)?;
    tape.concat_cols(g, h)
}

/// Scores `f(m_a, m_b)` for each `(a, b)` in `pairs`, as a vector.
pub fn pair_scores(tape: &mut Tape, features: Var, w: Var, pairs: Vec<(usize, usize)>) -> Result<Var> {
    let diff = tape.pair_diff(features, pairs)?;
    let s = tape.sin(diff);
    tape.row_dot(s, w)
}

/// All `(i, j)` with `i < j`: the gold-forward edges of a document in storage order.
pub fn forward_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Matrix of pair probabilities from a features matrix `[n, d]` and weights `w`.
pub fn matrix_from_features(features: &Tensor, w: &[f64]) -> Result<PairwiseMatrix> {
    let n = features.rows();
    let mut err = None;
    let m = PairwiseMatrix::from_scores(n, |i, j| match score_pair(features.row(i), features.row(j), w) {
        Ok(f) => f,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(m),
    }
}
