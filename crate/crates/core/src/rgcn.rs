//! Two-layer relational graph convolution.
//!
//! Each layer computes, for every node `i`,
//!
//! ```text
//! x_i' = ReLU( Σ_r (1 / |N_i^r|) Σ_{j ∈ N_i^r} W_r x_j  +  W_0 x_i )
//! ```
//!
//! where `N_i^r` holds the sources of edges `(j, r, i)`. Relations with an empty
//! neighborhood contribute nothing. Layer-1 inputs are the initial embeddings
//! mapped into a shared width by a per-role projection.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{BankDims, NodeRole};
use crate::error::{Error, Result};
use crate::graph::{DocumentGraph, GraphConfig, Relation};
use crate::numeric::{Tape, Tensor, Var};

/// Uniform Glorot initialization of a `[fan_out, fan_in]` matrix.
pub(crate) fn glorot(rng: &mut ChaCha8Rng, fan_out: usize, fan_in: usize) -> Tensor {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_out * fan_in).map(|_| rng.random_range(-a..=a)).collect();
    Tensor::matrix(fan_out, fan_in, data).expect("consistent shape")
}

#[derive(Clone, Debug, PartialEq)]
pub struct RgcnLayer {
    /// One `[d_out, d_in]` weight per active relation, in [`Relation::ALL`] order.
    pub relations: Vec<(Relation, Tensor)>,
    pub self_loop: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RgcnParameters {
    /// `[d_in, d_role]` projection per active role; `None` means identity.
    pub projections: Vec<(NodeRole, Option<Tensor>)>,
    pub layers: [RgcnLayer; 2],
}

impl RgcnParameters {
    /// Seeded initialization. A role whose bank width already equals `d_in`
    /// enters without projection.
    pub fn init(bank: &BankDims, d_in: usize, d_h: usize, config: &GraphConfig, rng: &mut ChaCha8Rng) -> Self {
        let projections = config
            .active_roles()
            .into_iter()
            .map(|role| {
                let width = bank.get(role);
                let p = (width != d_in).then(|| glorot(rng, d_in, width));
                (role, p)
            })
            .collect();
        let mut layer = |input: usize| RgcnLayer {
            relations: config
                .active_relations()
                .into_iter()
                .map(|r| (r, glorot(rng, d_h, input)))
                .collect(),
            self_loop: glorot(rng, d_h, input),
        };
        let first = layer(d_in);
        let second = layer(d_h);
        Self {
            projections,
            layers: [first, second],
        }
    }

    pub fn d_in(&self) -> usize {
        self.layers[0].self_loop.shape()[1]
    }

    pub fn d_h(&self) -> usize {
        self.layers[1].self_loop.shape()[0]
    }

    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (role, p) in &self.projections {
            if let Some(p) = p {
                out.push((format!("proj.{}", role.name()), p));
            }
        }
        for (l, layer) in self.layers.iter().enumerate() {
            for (r, w) in &layer.relations {
                out.push((format!("layer{}.rel.{}", l + 1, r.short_name()), w));
            }
            out.push((format!("layer{}.self", l + 1), &layer.self_loop));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = self
            .projections
            .iter_mut()
            .filter_map(|(_, p)| p.as_mut())
            .collect();
        for layer in &mut self.layers {
            out.extend(layer.relations.iter_mut().map(|(_, w)| w));
            out.push(&mut layer.self_loop);
        }
        out
    }

    /// Records every parameter as a tape leaf, in [`Self::named`] order.
    pub fn register(&self, tape: &mut Tape) -> RgcnVars {
        let projections = self
            .projections
            .iter()
            .map(|(role, p)| (*role, p.as_ref().map(|p| tape.leaf(p.clone()))))
            .collect();
        let mut layer = |l: &RgcnLayer| LayerVars {
            relations: l.relations.iter().map(|(r, w)| (*r, tape.leaf(w.clone()))).collect(),
            self_loop: tape.leaf(l.self_loop.clone()),
        };
        let first = layer(&self.layers[0]);
        let second = layer(&self.layers[1]);
        RgcnVars {
            projections,
            layers: [first, second],
        }
    }
}

#[derive(Clone, Debug)]
pub struct LayerVars {
    pub relations: Vec<(Relation, Var)>,
    pub self_loop: Var,
}

/// Tape handles for [`RgcnParameters`].
#[derive(Clone, Debug)]
pub struct RgcnVars {
    pub projections: Vec<(NodeRole, Option<Var>)>,
    pub layers: [LayerVars; 2],
}

impl RgcnVars {
    pub fn all(&self) -> Vec<Var> {
        let mut out: Vec<Var> = self.projections.iter().filter_map(|(_, v)| *v).collect();
        for layer in &self.layers {
            out.extend(layer.relations.iter().map(|(_, v)| *v));
            out.push(layer.self_loop);
        }
        out
    }
}

/// Projected inputs and final states, both `[node_count, ·]`.
#[derive(Clone, Copy, Debug)]
pub struct Encoded {
    pub projected: Var,
    pub hidden: Var,
}

fn layer_forward(tape: &mut Tape, graph: &DocumentGraph, x: Var, layer: &LayerVars) -> Result<Var> {
    let mut sum = tape.linear(x, layer.self_loop)?;
    for &(relation, w) in &layer.relations {
        let sources = graph.in_neighbors(relation);
        if sources.iter().all(Vec::is_empty) {
            continue;
        }
        let agg = tape.mean_aggregate(x, sources)?;
        let msg = tape.linear(agg, w).map_err(|e| match e {
            Error::Shape { detail, .. } => Error::shape(
                "rgcn",
                format!("relation `{relation}`: {detail}"),
            ),
            other => other,
        })?;
        sum = tape.add(sum, msg)?;
    }
    Ok(tape.relu(sum))
}

/// Runs both layers over `graph`, recording on `tape`.
pub fn encode_on_tape(tape: &mut Tape, graph: &DocumentGraph, vars: &RgcnVars) -> Result<Encoded> {
    let config = graph.config();
    for relation in config.active_relations() {
        for layer in &vars.layers {
            if !layer.relations.iter().any(|(r, _)| *r == relation) {
                return Err(Error::shape(
                    "rgcn",
                    format!("no weight for relation `{relation}` present in the graph"),
                ));
            }
        }
    }

    let mut parts = Vec::with_capacity(graph.blocks().len());
    for block in graph.blocks() {
        let proj = vars
            .projections
            .iter()
            .find(|(role, _)| *role == block.role)
            .ok_or_else(|| {
                Error::shape("rgcn", format!("no input projection for {} nodes", block.role.name()))
            })?
            .1;
        let g = tape.leaf(block.embeddings.clone());
        let x = match proj {
            Some(p) => tape.linear(g, p).map_err(|e| match e {
                Error::Shape { detail, .. } => {
                    Error::shape("rgcn", format!("{} projection: {detail}", block.role.name()))
                }
                other => other,
            })?,
            None => g,
        };
        parts.push(x);
    }
    let projected = tape.concat_rows(&parts).map_err(|e| match e {
        Error::Shape { detail, .. } => Error::shape(
            "rgcn",
            format!("projected role widths disagree ({detail}); roles without projection must match d_in"),
        ),
        other => other,
    })?;
    let h1 = layer_forward(tape, graph, projected, &vars.layers[0])?;
    let hidden = layer_forward(tape, graph, h1, &vars.layers[1])?;
    Ok(Encoded { projected, hidden })
}

/// Final node states `[node_count, d_h]` without keeping the tape.
pub fn encode(graph: &DocumentGraph, params: &RgcnParameters) -> Result<Tensor> {
    let mut tape = Tape::new();
    let vars = params.register(&mut tape);
    let out = encode_on_tape(&mut tape, graph, &vars)?;
    Ok(tape.value(out.hidden).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::BankRecord;
    use rand::SeedableRng;
    use crate::graph::build_graph_from_record;

    fn identity_params(d: usize, config: &GraphConfig, fill: f64) -> RgcnParameters {
        let layer = || RgcnLayer {
            relations: config
                .active_relations()
                .into_iter()
                .map(|r| (r, Tensor::matrix(d, d, vec![fill; d * d]).unwrap()))
                .collect(),
            self_loop: Tensor::identity(d),
        };
        RgcnParameters {
            projections: config.active_roles().into_iter().map(|r| (r, None)).collect(),
            layers: [layer(), layer()],
        }
    }

    fn rows(n: usize, d: usize, f: impl Fn(usize, usize) -> f64) -> Tensor {
        Tensor::matrix(n, d, (0..n * d).map(|k| f(k / d, k % d)).collect()).unwrap()
    }

    #[test]
    fn isolated_node_sees_only_itself() {
        // Single sentence, no context nodes: empty neighborhoods everywhere.
        let d = 3;
        let config = GraphConfig {
            use_csk: false,
            use_global: false,
            merge_csk_relations: false,
        };
        let g0 = Tensor::matrix(1, d, vec![-0.5, 0.25, 2.0]).unwrap();
        let empty = Tensor::zeros(&[0, d]);
        let rec = BankRecord::new(g0.clone(), empty.clone(), empty, Tensor::zeros(&[1, d])).unwrap();
        let graph = build_graph_from_record(&rec, config).unwrap();
        let h = encode(&graph, &identity_params(d, &config, 7.0)).unwrap();
        assert_eq!(h.data(), &[0.0, 0.25, 2.0]);
    }

    #[test]
    fn identical_neighbors_average_to_one_message() {
        // Sentence 0 receives sentence edges from 1 and 2 carrying identical state.
        let d = 2;
        let config = GraphConfig {
            use_csk: false,
            use_global: false,
            merge_csk_relations: false,
        };
        let sent = Tensor::matrix(3, d, vec![0.0, 0.0, 0.5, 0.75, 0.5, 0.75]).unwrap();
        let empty = Tensor::zeros(&[0, d]);
        let rec = BankRecord::new(sent, empty.clone(), empty, Tensor::zeros(&[1, d])).unwrap();
        let graph = build_graph_from_record(&rec, config).unwrap();

        let w = Tensor::matrix(d, d, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let zero = Tensor::zeros(&[d, d]);
        let params = RgcnParameters {
            projections: vec![(NodeRole::Sentence, None)],
            layers: [
                RgcnLayer {
                    relations: vec![(Relation::SentenceToSentence, w)],
                    self_loop: zero.clone(),
                },
                RgcnLayer {
                    relations: vec![(Relation::SentenceToSentence, zero)],
                    self_loop: Tensor::identity(d),
                },
            ],
        };
        let mut tape = Tape::new();
        let vars = params.register(&mut tape);
        let projected = tape.leaf(graph.blocks()[0].embeddings.clone());
        let h1 = layer_forward(&mut tape, &graph, projected, &vars.layers[0]).unwrap();
        let wx = [1.0 * 0.5 + 2.0 * 0.75, -0.5 + 0.5 * 0.75];
        let row0 = tape.value(h1).row(0);
        assert!((row0[0] - wx[0]).abs() < 1e-15);
        assert!((row0[1] - wx[1].max(0.0)).abs() < 1e-15);
    }

    #[test]
    fn outputs_are_non_negative_and_finite() {
        let d = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let config = GraphConfig::default();
        let rec = BankRecord::new(
            rows(4, d, |i, j| (i as f64 - 1.5) * (j as f64 + 0.3)),
            rows(4, d, |i, j| (i * j) as f64 * 0.1 - 0.2),
            rows(4, d, |i, j| (i + j) as f64 * -0.1),
            rows(1, d, |_, j| j as f64),
        )
        .unwrap();
        let graph = build_graph_from_record(&rec, config).unwrap();
        let params = RgcnParameters::init(&BankDims::uniform(d), 6, 5, &config, &mut rng);
        let h = encode(&graph, &params).unwrap();
        assert_eq!(h.shape(), &[13, 5]);
        assert!(h.is_finite() && h.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn zero_csk_inputs_equal_removing_their_messages() {
        // With past/future embeddings zeroed, CSK messages vanish in layer 1 but
        // their own states feed layer 2 via W_0 only: ReLU(W_0 · 0) = 0. So the
        // sentence states must equal a graph with CSK relation weights zeroed.
        let d = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let config = GraphConfig::default();
        let rec = BankRecord::new(
            rows(3, d, |i, j| 0.3 * i as f64 - 0.1 * j as f64 + 0.05),
            Tensor::zeros(&[3, d]),
            Tensor::zeros(&[3, d]),
            rows(1, d, |_, j| 0.2 * j as f64),
        )
        .unwrap();
        let graph = build_graph_from_record(&rec, config).unwrap();
        let params = RgcnParameters::init(&BankDims::uniform(d), d, 4, &config, &mut rng);
        let mut silenced = params.clone();
        for layer in &mut silenced.layers {
            for (r, w) in &mut layer.relations {
                if matches!(r, Relation::PastToSentence | Relation::FutureToSentence) {
                    *w = Tensor::zeros(w.shape());
                }
            }
        }
        let a = encode(&graph, &params).unwrap();
        let b = encode(&graph, &silenced).unwrap();
        for i in 0..3 {
            assert_eq!(a.row(i), b.row(i));
        }
    }

    #[test]
    fn missing_relation_weight_is_named() {
        let d = 2;
        let config = GraphConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let narrow = GraphConfig {
            use_csk: false,
            ..config
        };
        let params = RgcnParameters::init(&BankDims::uniform(d), d, d, &narrow, &mut rng);
        let rec = BankRecord::new(
            rows(2, d, |_, _| 0.1),
            rows(2, d, |_, _| 0.1),
            rows(2, d, |_, _| 0.1),
            rows(1, d, |_, _| 0.1),
        )
        .unwrap();
        let graph = build_graph_from_record(&rec, config).unwrap();
        let err = encode(&graph, &params).unwrap_err().to_string();
        assert!(err.contains("past"), "{err}");
    }

    #[test]
    fn width_mismatch_names_role() {
        let config = GraphConfig {
            use_csk: false,
            use_global: false,
            merge_csk_relations: false,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // Parameters expect 5-wide sentences, graph carries 3-wide.
        let params = RgcnParameters::init(&BankDims::uniform(5), 4, 4, &config, &mut rng);
        let rec = BankRecord::new(
            rows(2, 3, |_, _| 0.1),
            Tensor::zeros(&[0, 3]),
            Tensor::zeros(&[0, 3]),
            rows(1, 3, |_, _| 0.1),
        )
        .unwrap();
        let graph = build_graph_from_record(&rec, config).unwrap();
        let err = encode(&graph, &params).unwrap_err().to_string();
        assert!(err.contains("sentence projection"), "{err}");
    }
}
