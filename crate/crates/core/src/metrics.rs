//! Order-prediction metrics.
//!
//! Orders are permutations where `order[k]` is the sentence at position `k`.
//! Kendall's τ is averaged per document over documents with at least two
//! sentences. PMR, first and last accuracy, and the LCS ratio are averaged per
//! document; absolute accuracy and the displacement window are pooled over all
//! sentences. Single-sentence documents count as correct everywhere except τ.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::rank_to_positions;

fn check_pair(pred: &[usize], gold: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    if pred.len() != gold.len() {
        return Err(Error::Invalid(format!(
            "prediction has {} items, gold has {}",
            pred.len(),
            gold.len()
        )));
    }
    Ok((rank_to_positions(pred)?, rank_to_positions(gold)?))
}

fn check_aligned(preds: &[Vec<usize>], golds: &[Vec<usize>]) -> Result<()> {
    if preds.len() != golds.len() {
        return Err(Error::Invalid(format!(
            "{} predictions for {} gold orders",
            preds.len(),
            golds.len()
        )));
    }
    Ok(())
}

/// Number of sentence pairs whose relative order differs between the two orders.
pub fn discordant_pairs(pred: &[usize], gold: &[usize]) -> Result<usize> {
    let (pp, gp) = check_pair(pred, gold)?;
    let n = pred.len();
    let mut count = 0;
    for a in 0..n {
        for b in a + 1..n {
            if (pp[a] < pp[b]) != (gp[a] < gp[b]) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// `τ = 1 − 2I / C(n, 2)`.
pub fn kendall_tau(pred: &[usize], gold: &[usize]) -> Result<f64> {
    let n = pred.len();
    if n < 2 {
        return Err(Error::Invalid("Kendall's tau needs at least two items".into()));
    }
    let inversions = discordant_pairs(pred, gold)? as i64;
    let pairs = (n * (n - 1) / 2) as i64;
    // Integer numerator, so the result is a single correctly rounded division.
    Ok((pairs - 2 * inversions) as f64 / pairs as f64)
}

/// Percentage of exactly recovered orders.
pub fn pmr(preds: &[Vec<usize>], golds: &[Vec<usize>]) -> Result<f64> {
    check_aligned(preds, golds)?;
    if preds.is_empty() {
        return Ok(0.0);
    }
    let mut exact = 0;
    for (p, g) in preds.iter().zip(golds) {
        check_pair(p, g)?;
        exact += usize::from(p == g);
    }
    Ok(100.0 * exact as f64 / preds.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionalAccuracy {
    pub first: f64,
    pub last: f64,
    pub absolute: f64,
}

/// First/last accuracy per document and absolute accuracy over all sentences, in percent.
pub fn positional_accuracies(preds: &[Vec<usize>], golds: &[Vec<usize>]) -> Result<PositionalAccuracy> {
    check_aligned(preds, golds)?;
    let (mut first, mut last, mut exact, mut total) = (0usize, 0usize, 0usize, 0usize);
    for (p, g) in preds.iter().zip(golds) {
        check_pair(p, g)?;
        if p.is_empty() {
            continue;
        }
        first += usize::from(p[0] == g[0]);
        last += usize::from(p[p.len() - 1] == g[g.len() - 1]);
        exact += p.iter().zip(g).filter(|(a, b)| a == b).count();
        total += p.len();
    }
    let docs = preds.len().max(1) as f64;
    Ok(PositionalAccuracy {
        first: 100.0 * first as f64 / docs,
        last: 100.0 * last as f64 / docs,
        absolute: 100.0 * exact as f64 / total.max(1) as f64,
    })
}

pub fn lcs_length(a: &[usize], b: &[usize]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &x in a {
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `100 · LCS(pred, gold) / n`; subsequences need not be contiguous.
pub fn lcs_ratio(pred: &[usize], gold: &[usize]) -> Result<f64> {
    check_pair(pred, gold)?;
    if pred.is_empty() {
        return Ok(100.0);
    }
    Ok(100.0 * lcs_length(pred, gold) as f64 / pred.len() as f64)
}

/// Sentences within `window` positions of their gold position.
pub fn displacement_hits(pred: &[usize], gold: &[usize], window: usize) -> Result<usize> {
    let (pp, gp) = check_pair(pred, gold)?;
    Ok(pp.iter().zip(&gp).filter(|(a, b)| a.abs_diff(**b) <= window).count())
}

pub fn displacement_window(pred: &[usize], gold: &[usize], window: usize) -> Result<f64> {
    let hits = displacement_hits(pred, gold, window)?;
    if pred.is_empty() {
        return Ok(100.0);
    }
    Ok(100.0 * hits as f64 / pred.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentScore {
    pub doc_id: String,
    pub n: usize,
    /// Absent for single-sentence documents.
    pub tau: Option<f64>,
    pub exact: bool,
    pub lcs_ratio: f64,
    pub predicted: Vec<usize>,
}

/// Aggregate over one split. Percentages lie in `[0, 100]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub split: String,
    pub documents: usize,
    /// Documents contributing to τ.
    pub tau_documents: usize,
    /// Mean per-document τ; absent when no document has two or more sentences.
    pub tau: Option<f64>,
    pub pmr: f64,
    pub first_acc: f64,
    pub last_acc: f64,
    pub abs_acc: f64,
    pub lcs_ratio: f64,
    pub d_win1: f64,
    pub per_document: Vec<DocumentScore>,
}

impl MetricsReport {
    /// `preds[k]` is the predicted order for the document `(ids[k], golds[k])`.
    pub fn compute(split: &str, ids: &[String], preds: &[Vec<usize>], golds: &[Vec<usize>]) -> Result<Self> {
        check_aligned(preds, golds)?;
        if ids.len() != preds.len() {
            return Err(Error::Invalid("document ids misaligned with predictions".into()));
        }
        let mut per_document = Vec::with_capacity(preds.len());
        let (mut tau_sum, mut tau_docs) = (0.0, 0usize);
        let (mut lcs_sum, mut win_hits, mut sentences) = (0.0, 0usize, 0usize);
        for ((id, p), g) in ids.iter().zip(preds).zip(golds) {
            let tau = if p.len() >= 2 {
                let t = kendall_tau(p, g)?;
                tau_sum += t;
                tau_docs += 1;
                Some(t)
            } else {
                check_pair(p, g)?;
                None
            };
            let lcs = lcs_ratio(p, g)?;
            lcs_sum += lcs;
            win_hits += displacement_hits(p, g, 1)?;
            sentences += p.len();
            per_document.push(DocumentScore {
                doc_id: id.clone(),
                n: p.len(),
                tau,
                exact: p == g,
                lcs_ratio: lcs,
                predicted: p.clone(),
            });
        }
        let pos = positional_accuracies(preds, golds)?;
        let docs = preds.len();
        Ok(Self {
            split: split.to_string(),
            documents: docs,
            tau_documents: tau_docs,
            tau: (tau_docs > 0).then(|| tau_sum / tau_docs as f64),
            pmr: pmr(preds, golds)?,
            first_acc: pos.first,
            last_acc: pos.last,
            abs_acc: pos.absolute,
            lcs_ratio: if docs == 0 { 0.0 } else { lcs_sum / docs as f64 },
            d_win1: 100.0 * win_hits as f64 / sentences.max(1) as f64,
            per_document,
        })
    }

    /// One JSON line without the per-document breakdown.
    pub fn summary_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("per_document");
        }
        v.to_string()
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "split {} ({} documents)", self.split, self.documents)?;
        writeln!(
            f,
            "{:>8} {:>7} {:>7} {:>7} {:>7} {:>7} {:>8}",
            "tau", "PMR", "First", "Last", "Abs", "LCS", "D-Win=1"
        )?;
        let tau = match self.tau {
            Some(t) => format!("{t:.4}"),
            None => "n/a".to_string(),
        };
        write!(
            f,
            "{:>8} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>8.2}",
            tau, self.pmr, self.first_acc, self.last_acc, self.abs_acc, self.lcs_ratio, self.d_win1
        )?;
        if self.tau.is_none() {
            write!(f, "\nno multi-sentence documents: tau undefined")?;
        }
        Ok(())
    }
}
