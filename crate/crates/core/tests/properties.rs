mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stack_order::classifier::{pair_probabilities, score_pair, PairwiseMatrix};
use stack_order::corpus::{BankDims, Document, EmbeddingBank, NodeRole, Split};
use stack_order::embed::toy_embed;
use stack_order::graph::{build_graph_from_record, GraphConfig};
use stack_order::metrics::kendall_tau;
use stack_order::model::{predict_all_pairs, ModelParams};
use stack_order::solver::{rank_to_positions, topological_order};

fn config_strategy() -> impl Strategy<Value = GraphConfig> {
    (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(c, g, m)| GraphConfig {
        use_csk: c,
        use_global: g,
        merge_csk_relations: m,
    })
}

fn matrix_strategy() -> impl Strategy<Value = PairwiseMatrix> {
    (1usize..=9)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(prop_oneof![Just(0.5), 0.0f64..=1.0], n * n)))
        .prop_map(|(n, raw)| {
            let mut p = vec![0.0; n * n];
            for i in 0..n {
                for j in i + 1..n {
                    p[i * n + j] = raw[i * n + j];
                    p[j * n + i] = 1.0 - raw[i * n + j];
                }
            }
            PairwiseMatrix::from_probabilities(n, p).unwrap()
        })
}

proptest! {
    #[test]
    fn pair_scores_are_odd_and_probabilities_complementary(
        pair in (1usize..12).prop_flat_map(|d| (
            prop::collection::vec(-4.0f64..4.0, d),
            prop::collection::vec(-4.0f64..4.0, d),
            prop::collection::vec(-2.0f64..2.0, d),
        ))
    ) {
        let (a, b, w) = pair;
        let f = score_pair(&a, &b, &w).unwrap();
        let g = score_pair(&b, &a, &w).unwrap();
        prop_assert!((f + g).abs() <= 1e-12);
        let (p, q) = pair_probabilities(f);
        prop_assert!((p + q - 1.0).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(score_pair(&a, &a, &w).unwrap(), 0.0);
    }

    #[test]
    fn solver_output_is_a_permutation(m in matrix_strategy()) {
        let order = topological_order(&m).unwrap();
        prop_assert!(rank_to_positions(&order).is_ok());
        prop_assert_eq!(order.len(), m.len());
    }

    #[test]
    fn consistent_preferences_are_recovered(
        gold in (1usize..=8).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle()),
        conf in 0.51f64..1.0,
    ) {
        let n = gold.len();
        let pos = rank_to_positions(&gold).unwrap();
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    p[i * n + j] = if pos[i] < pos[j] { conf } else { 1.0 - conf };
                }
            }
        }
        let m = PairwiseMatrix::from_probabilities(n, p).unwrap();
        prop_assert_eq!(topological_order(&m).unwrap(), gold);
    }

    #[test]
    fn graph_size_follows_closed_form(n in 1usize..=30, config in config_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let record = common::random_record(&mut rng, n, &BankDims::uniform(2));
        let g = build_graph_from_record(&record, config).unwrap();
        let csk = if config.use_csk { 2 * n } else { 0 };
        let glob = usize::from(config.use_global);
        prop_assert_eq!(g.node_count(), n + csk + glob);
        prop_assert_eq!(g.edge_count(), n * (n - 1) + csk + glob * n);
        prop_assert!(g.edges().iter().all(|e| e.target < n && e.source != e.target));
    }

    #[test]
    fn tau_is_bounded_and_symmetric(
        perms in (2usize..=10).prop_flat_map(|n| (
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
        ))
    ) {
        let (a, b) = perms;
        let t = kendall_tau(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&t));
        prop_assert_eq!(t, kendall_tau(&b, &a).unwrap());
        prop_assert_eq!(kendall_tau(&a, &a).unwrap(), 1.0);
        prop_assert!((t - common::brute_tau(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn model_probabilities_are_complementary(seed in any::<u64>(), n in 1usize..=7, config in config_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = BankDims { sentence: 5, past: 3, future: 4, global: 6 };
        let record = common::random_record(&mut rng, n, &dims);
        let params = ModelParams::init(dims, 4, 4, config, seed);
        let graph = build_graph_from_record(&record, config).unwrap();
        let m = predict_all_pairs(&params, &graph).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    prop_assert!((m.get(i, j) + m.get(j, i) - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn sentence_permutation_permutes_encoder_outputs(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = BankDims::uniform(3);
        let record = common::random_record(&mut rng, n, &dims);
        let perm = common::random_permutation(&mut rng, n);
        let pick = |role: NodeRole| {
            let t = record.vectors(role);
            let rows: Vec<&[f64]> = perm.iter().map(|&i| t.row(i)).collect();
            stack_order::numeric::Tensor::from_rows(&rows, t.cols()).unwrap()
        };
        let shuffled = stack_order::corpus::BankRecord::new(
            pick(NodeRole::Sentence),
            pick(NodeRole::Past),
            pick(NodeRole::Future),
            record.vectors(NodeRole::Global).clone(),
        ).unwrap();
        let params = ModelParams::init(dims, 3, 3, GraphConfig::default(), seed);
        let a = predict_all_pairs(&params, &build_graph_from_record(&record, params.graph).unwrap()).unwrap();
        let b = predict_all_pairs(&params, &build_graph_from_record(&shuffled, params.graph).unwrap()).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    prop_assert!((b.get(i, j) - a.get(perm[i], perm[j])).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn toy_global_vector_ignores_sentence_order(
        words in prop::collection::vec("[a-z]{1,6}( [a-z]{1,6}){0,4}", 2..6),
        seed in any::<u64>(),
    ) {
        let doc = |sentences: Vec<String>| Document { doc_id: "d".into(), split: Split::Train, sentences };
        let mut rev = words.clone();
        rev.reverse();
        let a = toy_embed(&[doc(words)], 8, seed).unwrap();
        let b = toy_embed(&[doc(rev)], 8, seed).unwrap();
        let ga = a.record("d").unwrap().vectors(NodeRole::Global);
        let gb = b.record("d").unwrap().vectors(NodeRole::Global);
        prop_assert_eq!(ga, gb);
    }

    #[test]
    fn bank_bytes_round_trip(seed in any::<u64>(), ns in prop::collection::vec(1usize..5, 0..4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = BankDims { sentence: 3, past: 2, future: 2, global: 4 };
        let mut bank = EmbeddingBank::new(dims);
        for (k, &n) in ns.iter().enumerate() {
            bank.insert(format!("doc{k}"), common::random_record(&mut rng, n, &dims)).unwrap();
        }
        let bytes = bank.to_bytes();
        let back = EmbeddingBank::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &bank);
        prop_assert_eq!(back.to_bytes(), bytes.clone());
        if !bytes.is_empty() {
            prop_assert!(EmbeddingBank::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        }
    }
}
