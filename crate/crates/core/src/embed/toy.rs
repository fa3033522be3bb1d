use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{mix64, order_free_sum};
use crate::corpus::{BankDims, BankRecord, Document, EmbeddingBank};
use crate::error::{Error, Result};
use crate::numeric::Tensor;

const PAST_TAG: u64 = 0x7061_7374; // "past"
const FUTURE_TAG: u64 = 0x6675_7475; // "futu"

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

fn role_matrix(seed: u64, tag: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(tag)));
    let scale = 1.0 / (dim as f64).sqrt();
    gaussian_vec(&mut rng, dim * dim)
        .into_iter()
        .map(|v| v * scale)
        .collect()
}

fn apply(matrix: &[f64], v: &[f64]) -> Vec<f64> {
    let dim = v.len();
    (0..dim)
        .map(|r| matrix[r * dim..(r + 1) * dim].iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

struct ToyEmbedder {
    dim: usize,
    seed: u64,
    past: Vec<f64>,
    future: Vec<f64>,
}

impl ToyEmbedder {
    fn token(&self, token: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(fnv1a(token.as_bytes()) ^ self.seed));
        gaussian_vec(&mut rng, self.dim)
    }

    fn sentence(&self, text: &str) -> Option<Vec<f64>> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return None;
        }
        let mut acc = vec![0.0; self.dim];
        for t in &tokens {
            for (a, v) in acc.iter_mut().zip(self.token(t)) {
                *a += v;
            }
        }
        Some(normalize(acc))
    }
}

/// Deterministic hashed bag-of-tokens embeddings for arbitrary text.
///
/// Sentence vectors are normalized sums of per-token Gaussian vectors seeded by
/// the token hash. Past and future vectors apply two fixed seeded random maps to
/// the sentence vector. The global vector is the normalized mean of the sentence
/// vectors and does not depend on sentence order.
pub fn toy_embed(corpus: &[Document], dim: usize, seed: u64) -> Result<EmbeddingBank> {
    if dim < 8 {
        return Err(Error::Invalid(format!("toy embedding dim must be at least 8, got {dim}")));
    }
    let embedder = ToyEmbedder {
        dim,
        seed,
        past: role_matrix(seed, PAST_TAG, dim),
        future: role_matrix(seed, FUTURE_TAG, dim),
    };

    let mut bank = EmbeddingBank::new(BankDims::uniform(dim));
    for doc in corpus {
        let mut sentences = Vec::with_capacity(doc.len());
        for (i, text) in doc.sentences.iter().enumerate() {
            let v = embedder.sentence(text).ok_or_else(|| {
                Error::Invalid(format!("document `{}` sentence {i} has no tokens", doc.doc_id))
            })?;
            sentences.push(v);
        }
        let past: Vec<Vec<f64>> = sentences.iter().map(|s| apply(&embedder.past, s)).collect();
        let future: Vec<Vec<f64>> = sentences.iter().map(|s| apply(&embedder.future, s)).collect();
        let global = normalize(order_free_sum(&sentences, dim));

        let record = BankRecord::new(
            Tensor::from_rows(&sentences, dim)?,
            Tensor::from_rows(&past, dim)?,
            Tensor::from_rows(&future, dim)?,
            Tensor::from_rows(&[global], dim)?,
        )?;
        bank.insert(doc.doc_id.clone(), record)?;
    }
    Ok(bank)
}
