//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the crate's graph builder, encoder or metric code;
//! everything is rebuilt from the bank record with plain loops.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use stack_order::corpus::{BankDims, BankRecord, NodeRole};
use stack_order::graph::{GraphConfig, Relation};
use stack_order::model::ModelParams;
use stack_order::numeric::Tensor;
use stack_order::rgcn::{RgcnLayer, RgcnParameters};

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Tensor::matrix(rows, cols, data).unwrap()
}

pub fn random_record(rng: &mut ChaCha8Rng, n: usize, dims: &BankDims) -> BankRecord {
    BankRecord::new(
        gaussian(rng, n, dims.sentence),
        gaussian(rng, n, dims.past),
        gaussian(rng, n, dims.future),
        gaussian(rng, 1, dims.global),
    )
    .unwrap()
}

fn matvec(w: &Tensor, x: &[f64]) -> Vec<f64> {
    let cols = w.cols();
    assert_eq!(cols, x.len());
    (0..w.rows())
        .map(|a| (0..cols).map(|b| w.data()[a * cols + b] * x[b]).sum())
        .collect()
}

fn rows_of(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows()).map(|i| t.row(i).to_vec()).collect()
}

/// Node inputs in layout order: sentences, then past, future and global when enabled.
pub fn dense_inputs(record: &BankRecord, config: GraphConfig) -> (Vec<NodeRole>, Vec<Vec<f64>>) {
    let mut roles = Vec::new();
    let mut x = Vec::new();
    let mut add = |role: NodeRole| {
        for row in rows_of(record.vectors(role)) {
            roles.push(role);
            x.push(row);
        }
    };
    add(NodeRole::Sentence);
    if config.use_csk {
        add(NodeRole::Past);
        add(NodeRole::Future);
    }
    if config.use_global {
        add(NodeRole::Global);
    }
    (roles, x)
}

/// `adj[r][i][j] = 1` when node `j` sends a message of relation `r` to node `i`.
pub fn dense_adjacency(n: usize, config: GraphConfig) -> Vec<(Relation, Vec<Vec<f64>>)> {
    let total = n + if config.use_csk { 2 * n } else { 0 } + usize::from(config.use_global);
    let empty = || vec![vec![0.0; total]; total];
    let mut s = empty();
    let mut p = empty();
    let mut f = empty();
    let mut g = empty();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s[i][j] = 1.0;
            }
        }
        if config.use_csk {
            p[i][n + i] = 1.0;
            if config.merge_csk_relations {
                p[i][2 * n + i] = 1.0;
            } else {
                f[i][2 * n + i] = 1.0;
            }
        }
        if config.use_global {
            g[i][total - 1] = 1.0;
        }
    }
    vec![
        (Relation::SentenceToSentence, s),
        (Relation::PastToSentence, p),
        (Relation::FutureToSentence, f),
        (Relation::GlobalToSentence, g),
    ]
}

fn dense_layer(x: &[Vec<f64>], adj: &[(Relation, Vec<Vec<f64>>)], layer: &RgcnLayer) -> Vec<Vec<f64>> {
    let total = x.len();
    (0..total)
        .map(|i| {
            let mut acc = matvec(&layer.self_loop, &x[i]);
            for (rel, a) in adj {
                let deg: f64 = a[i].iter().sum();
                if deg == 0.0 {
                    continue;
                }
                let w = &layer
                    .relations
                    .iter()
                    .find(|(r, _)| r == rel)
                    .expect("weight for every used relation")
                    .1;
                for j in 0..total {
                    if a[i][j] != 0.0 {
                        for (o, v) in acc.iter_mut().zip(matvec(w, &x[j])) {
                            *o += a[i][j] * v / deg;
                        }
                    }
                }
            }
            acc.into_iter().map(|v| v.max(0.0)).collect()
        })
        .collect()
}

/// Projected inputs and second-layer states for every node.
pub fn dense_encode(params: &RgcnParameters, record: &BankRecord, config: GraphConfig) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = record.count(NodeRole::Sentence);
    let (roles, raw) = dense_inputs(record, config);
    let projected: Vec<Vec<f64>> = roles
        .iter()
        .zip(&raw)
        .map(|(role, v)| {
            match &params.projections.iter().find(|(r, _)| r == role).unwrap().1 {
                Some(p) => matvec(p, v),
                None => v.clone(),
            }
        })
        .collect();
    let adj = dense_adjacency(n, config);
    let h1 = dense_layer(&projected, &adj, &params.layers[0]);
    let h2 = dense_layer(&h1, &adj, &params.layers[1]);
    (projected, h2)
}

/// Sentence features `[projected | hidden]`.
pub fn dense_features(params: &ModelParams, record: &BankRecord) -> Vec<Vec<f64>> {
    let n = record.count(NodeRole::Sentence);
    let (g, h) = dense_encode(&params.rgcn, record, params.graph);
    (0..n).map(|i| g[i].iter().chain(&h[i]).copied().collect()).collect()
}

pub fn dense_score(m_i: &[f64], m_j: &[f64], w: &[f64]) -> f64 {
    (0..w.len()).map(|k| w[k] * (m_i[k] - m_j[k]).sin()).sum()
}

/// Probability that `i` precedes `j` given score `f`: `e^f / (e^f + e^-f)`.
pub fn dense_prob(f: f64) -> f64 {
    f.exp() / (f.exp() + (-f).exp())
}

/// Training loss of one document in the gold order.
pub fn dense_loss(params: &ModelParams, record: &BankRecord, eps: f64) -> f64 {
    let m = dense_features(params, record);
    let w = params.classifier.data();
    let n = m.len();
    let mut total = 0.0;
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            let p = dense_prob(dense_score(&m[i], &m[j], w));
            total -= p.clamp(eps, 1.0 - eps).ln();
            count += 1;
        }
    }
    total / count as f64
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
    v
}

fn position(order: &[usize], s: usize) -> usize {
    order.iter().position(|&x| x == s).unwrap()
}

/// `(concordant − discordant) / C(n, 2)`.
pub fn brute_tau(pred: &[usize], gold: &[usize]) -> f64 {
    let n = pred.len();
    let (mut c, mut d) = (0i64, 0i64);
    for a in 0..n {
        for b in 0..n {
            if a < b {
                let sp = position(pred, a) as i64 - position(pred, b) as i64;
                let sg = position(gold, a) as i64 - position(gold, b) as i64;
                if sp.signum() == sg.signum() {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
    }
    (c - d) as f64 / (n * (n - 1) / 2) as f64
}

/// Longest common subsequence by enumerating every subsequence of `a`.
pub fn brute_lcs(a: &[usize], b: &[usize]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let sub: Vec<usize> = (0..a.len()).filter(|k| mask & (1 << k) != 0).map(|k| a[k]).collect();
        let mut it = b.iter();
        if sub.iter().all(|x| it.any(|y| y == x)) {
            best = best.max(sub.len());
        }
    }
    best
}

pub fn brute_window(pred: &[usize], gold: &[usize], w: usize) -> usize {
    (0..pred.len())
        .filter(|&s| position(pred, s).abs_diff(position(gold, s)) <= w)
        .count()
}
