//! Full scorer: projections, RGCN encoder and the pairwise classifier.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::{forward_pairs, matrix_from_features, pair_features, pair_scores, PairwiseMatrix};
use crate::corpus::BankDims;
use crate::error::{Error, Result};
use crate::graph::{DocumentGraph, GraphConfig};
use crate::numeric::{bce_pairwise_loss, Tape, Tensor, Var};
use crate::rgcn::{encode_on_tape, glorot, RgcnParameters, RgcnVars};

pub const CLASSIFIER_NAME: &str = "classifier.w";

/// Every learned tensor of the model, plus the settings that fix its shape.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub graph: GraphConfig,
    pub bank: BankDims,
    pub rgcn: RgcnParameters,
    /// Classifier weights `w`, length `d_in + d_h`.
    pub classifier: Tensor,
}

pub struct ModelVars {
    pub rgcn: RgcnVars,
    pub classifier: Var,
}

impl ModelVars {
    pub fn all(&self) -> Vec<Var> {
        let mut v = self.rgcn.all();
        v.push(self.classifier);
        v
    }
}

impl ModelParams {
    pub fn init(bank: BankDims, d_in: usize, d_h: usize, graph: GraphConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rgcn = RgcnParameters::init(&bank, d_in, d_h, &graph, &mut rng);
        let w = glorot(&mut rng, 1, d_in + d_h);
        Self {
            graph,
            bank,
            rgcn,
            classifier: Tensor::vector(w.into_data()),
        }
    }

    pub fn d_in(&self) -> usize {
        self.rgcn.d_in()
    }

    pub fn d_h(&self) -> usize {
        self.rgcn.d_h()
    }

    /// Parameters with stable names, in registration order.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut v = self.rgcn.named();
        v.push((CLASSIFIER_NAME.to_string(), &self.classifier));
        v
    }

    pub fn names(&self) -> Vec<String> {
        self.named().into_iter().map(|(n, _)| n).collect()
    }

    /// Same order as [`Self::named`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.rgcn.tensors_mut();
        v.push(&mut self.classifier);
        v
    }

    pub fn parameter_count(&self) -> usize {
        self.named().iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn register(&self, tape: &mut Tape) -> ModelVars {
        let rgcn = self.rgcn.register(tape);
        let classifier = tape.leaf(self.classifier.clone());
        ModelVars { rgcn, classifier }
    }

    fn check_graph(&self, graph: &DocumentGraph) -> Result<()> {
        if graph.config() != self.graph {
            return Err(Error::Config(format!(
                "graph built with {:?} but model expects {:?}",
                graph.config(),
                self.graph
            )));
        }
        Ok(())
    }
}

/// Features `m_i = [P(g_i), h_i]` of the sentence nodes, recorded on `tape`.
pub fn sentence_features_on_tape(tape: &mut Tape, graph: &DocumentGraph, vars: &ModelVars) -> Result<Var> {
    let encoded = encode_on_tape(tape, graph, &vars.rgcn)?;
    pair_features(tape, encoded, graph.sentence_count())
}

/// Sentence features `[n, d_in + d_h]`.
pub fn sentence_features(params: &ModelParams, graph: &DocumentGraph) -> Result<Tensor> {
    params.check_graph(graph)?;
    let mut tape = Tape::new();
    let vars = params.register(&mut tape);
    let m = sentence_features_on_tape(&mut tape, graph, &vars)?;
    Ok(tape.value(m).clone())
}

/// Probabilities for every sentence pair of the document.
pub fn predict_all_pairs(params: &ModelParams, graph: &DocumentGraph) -> Result<PairwiseMatrix> {
    let m = sentence_features(params, graph)?;
    matrix_from_features(&m, params.classifier.data())
}

/// Loss and gradients of one document.
#[derive(Debug)]
pub struct DocumentPass {
    /// Mean `-ln p` over the document's gold-forward edges.
    pub loss: f64,
    pub edges: usize,
    /// One gradient per parameter, in [`ModelParams::named`] order.
    pub grads: Vec<Tensor>,
}

fn record_loss(tape: &mut Tape, params: &ModelParams, graph: &DocumentGraph, eps: f64) -> Result<(ModelVars, Var)> {
    params.check_graph(graph)?;
    let vars = params.register(tape);
    let m = sentence_features_on_tape(tape, graph, &vars)?;
    let scores = pair_scores(tape, m, vars.classifier, forward_pairs(graph.sentence_count()))?;
    let p = tape.pair_softmax(scores);
    let loss = bce_pairwise_loss(tape, p, eps)?;
    Ok((vars, loss))
}

/// Forward and backward pass over one document; `None` for single-sentence
/// documents, which have no pairs to learn from.
pub fn document_pass(params: &ModelParams, graph: &DocumentGraph, eps: f64) -> Result<Option<DocumentPass>> {
    let n = graph.sentence_count();
    if n < 2 {
        return Ok(None);
    }
    let mut tape = Tape::new();
    let (vars, loss) = record_loss(&mut tape, params, graph, eps)?;
    let mut grads = tape.backward(loss)?;
    Ok(Some(DocumentPass {
        loss: tape.value(loss).item(),
        edges: n * (n - 1) / 2,
        grads: vars.all().into_iter().map(|v| grads.take(v)).collect(),
    }))
}

/// Loss only.
pub fn document_loss(params: &ModelParams, graph: &DocumentGraph, eps: f64) -> Result<f64> {
    let mut tape = Tape::new();
    let (_, loss) = record_loss(&mut tape, params, graph, eps)?;
    Ok(tape.value(loss).item())
}
