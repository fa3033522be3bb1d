use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::order_free_sum;
use crate::corpus::{BankDims, BankRecord, Document, EmbeddingBank, Split};
use crate::error::{Error, Result};
use crate::numeric::Tensor;

/// Latent-time offset of the past/future vectors relative to their sentence.
pub const CSK_OFFSET: f64 = 0.1;

const TOKENS_PER_SENTENCE: usize = 6;
const VOCAB: u32 = 5000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplitPlan {
    /// Independent draw per document; the remainder after `train + val` is test.
    Fractions { train: f64, val: f64 },
    /// Exact split sizes, assigned through a seeded shuffle. Must sum to `num_docs`.
    Counts { train: usize, val: usize, test: usize },
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan::Fractions {
            train: 0.8,
            val: 0.1,
        }
    }
}

/// Synthetic corpus with a linear order signal.
///
/// Sentence `i` of an `n`-sentence document has latent time `t = i / (n - 1)`.
/// With a fixed unit direction `u`, its sentence vector is `u·t + ε_sent`, its
/// past vector `u·(t − δ) + ε_csk` and its future vector `u·(t + δ) + ε_csk`,
/// where `δ = CSK_OFFSET`. Noise terms are i.i.d. Gaussian per component with
/// standard deviations `sent_noise` and `csk_noise`, so both are in units of the
/// signal norm `|u| = 1`. The global vector is the mean of the sentence vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub num_docs: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub dim: usize,
    pub sent_noise: f64,
    pub csk_noise: f64,
    pub seed: u64,
    pub splits: SplitPlan,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_docs: 500,
            n_min: 5,
            n_max: 5,
            dim: 32,
            sent_noise: 0.0,
            csk_noise: 0.0,
            seed: 0,
            splits: SplitPlan::default(),
        }
    }
}

impl SynthConfig {
    fn check(&self) -> Result<()> {
        if self.n_min < 2 || self.n_max > 12 || self.n_min > self.n_max {
            return Err(Error::Invalid(format!(
                "sentence count range [{}, {}] must lie within [2, 12]",
                self.n_min, self.n_max
            )));
        }
        if self.dim == 0 {
            return Err(Error::Invalid("dim must be positive".into()));
        }
        if !(self.sent_noise >= 0.0 && self.csk_noise >= 0.0) {
            return Err(Error::Invalid("noise levels must be non-negative".into()));
        }
        match self.splits {
            SplitPlan::Fractions { train, val } => {
                if !(train >= 0.0 && val >= 0.0 && train + val <= 1.0) {
                    return Err(Error::Invalid(format!(
                        "split fractions train={train}, val={val} are not a distribution"
                    )));
                }
            }
            SplitPlan::Counts { train, val, test } => {
                if train + val + test != self.num_docs {
                    return Err(Error::Invalid(format!(
                        "split counts {train}+{val}+{test} differ from num_docs {}",
                        self.num_docs
                    )));
                }
            }
        }
        Ok(())
    }
}

fn noisy(rng: &mut ChaCha8Rng, u: &[f64], t: f64, sigma: f64) -> Vec<f64> {
    u.iter()
        .map(|&ui| {
            let e: f64 = rng.sample(StandardNormal);
            ui * t + sigma * e
        })
        .collect()
}

/// Generates a corpus and matching bank. Draw order: `u`, split assignment,
/// then per document its length, token text and vectors.
pub fn synthesize(config: &SynthConfig) -> Result<(Vec<Document>, EmbeddingBank)> {
    config.check()?;
    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let u = loop {
        let raw: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            break raw.into_iter().map(|x| x / norm).collect::<Vec<_>>();
        }
    };

    let splits: Vec<Split> = match config.splits {
        SplitPlan::Fractions { train, val } => (0..config.num_docs)
            .map(|_| {
                let r: f64 = rng.random();
                if r < train {
                    Split::Train
                } else if r < train + val {
                    Split::Val
                } else {
                    Split::Test
                }
            })
            .collect(),
        SplitPlan::Counts { train, val, test } => {
            let mut s: Vec<Split> = std::iter::repeat_n(Split::Train, train)
                .chain(std::iter::repeat_n(Split::Val, val))
                .chain(std::iter::repeat_n(Split::Test, test))
                .collect();
            s.shuffle(&mut rng);
            s
        }
    };

    let width = config.num_docs.max(1).to_string().len();
    let mut docs = Vec::with_capacity(config.num_docs);
    let mut bank = EmbeddingBank::new(BankDims::uniform(dim));
    for (k, split) in splits.into_iter().enumerate() {
        let n = rng.random_range(config.n_min..=config.n_max);
        let sentences = (0..n)
            .map(|_| {
                (0..TOKENS_PER_SENTENCE)
                    .map(|_| format!("w{}", rng.random_range(0..VOCAB)))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();

        let mut sent = Vec::with_capacity(n);
        let mut past = Vec::with_capacity(n);
        let mut future = Vec::with_capacity(n);
        for i in 0..n {
            let t = i as f64 / (n - 1) as f64;
            sent.push(noisy(&mut rng, &u, t, config.sent_noise));
            past.push(noisy(&mut rng, &u, t - CSK_OFFSET, config.csk_noise));
            future.push(noisy(&mut rng, &u, t + CSK_OFFSET, config.csk_noise));
        }
        let global: Vec<f64> = order_free_sum(&sent, dim)
            .into_iter()
            .map(|v| v / n as f64)
            .collect();

        let doc_id = format!("synth-{k:0width$}");
        let record = BankRecord::new(
            Tensor::from_rows(&sent, dim)?,
            Tensor::from_rows(&past, dim)?,
            Tensor::from_rows(&future, dim)?,
            Tensor::from_rows(&[global], dim)?,
        )?;
        bank.insert(doc_id.clone(), record)?;
        docs.push(Document {
            doc_id,
            split,
            sentences,
        });
    }
    Ok((docs, bank))
}
