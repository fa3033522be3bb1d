mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stack_order::metrics::{
    displacement_hits, kendall_tau, lcs_length, lcs_ratio, pmr, positional_accuracies, MetricsReport,
};

#[test]
fn exhaustive_against_brute_force_for_small_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 2..=6 {
        for gold in [(0..n).collect::<Vec<_>>(), common::random_permutation(&mut rng, n)] {
            for pred in common::permutations(n) {
                let tau = kendall_tau(&pred, &gold).unwrap();
                assert!((tau - common::brute_tau(&pred, &gold)).abs() < 1e-12, "{pred:?} vs {gold:?}");
                assert_eq!(lcs_length(&pred, &gold), common::brute_lcs(&pred, &gold));
                for w in 0..3 {
                    assert_eq!(displacement_hits(&pred, &gold, w).unwrap(), common::brute_window(&pred, &gold, w));
                }
            }
        }
    }
}

#[test]
fn reversed_and_identity_extremes() {
    for n in 2..=12 {
        let id: Vec<usize> = (0..n).collect();
        let rev: Vec<usize> = id.iter().rev().copied().collect();
        assert_eq!(kendall_tau(&id, &id).unwrap(), 1.0);
        assert_eq!(kendall_tau(&rev, &id).unwrap(), -1.0);
        assert_eq!(lcs_ratio(&rev, &id).unwrap(), 100.0 / n as f64);
    }
}

#[test]
fn tau_distribution_over_all_permutations_is_symmetric() {
    for n in [4, 5] {
        let gold: Vec<usize> = (0..n).collect();
        let taus: Vec<f64> = common::permutations(n).iter().map(|p| kendall_tau(p, &gold).unwrap()).collect();
        let mean = taus.iter().sum::<f64>() / taus.len() as f64;
        assert!(mean.abs() < 1e-12);
        let exact = common::permutations(n).iter().filter(|p| **p == gold).count();
        assert_eq!(exact, 1);
    }
}

#[test]
fn aggregation_over_all_permutations_of_four() {
    let gold: Vec<usize> = (0..4).collect();
    let preds = common::permutations(4);
    let golds = vec![gold.clone(); preds.len()];
    // Each sentence lands in each slot in 6 of 24 permutations.
    let acc = positional_accuracies(&preds, &golds).unwrap();
    assert!((acc.first - 25.0).abs() < 1e-12);
    assert!((acc.last - 25.0).abs() < 1e-12);
    assert!((acc.absolute - 25.0).abs() < 1e-12);
    assert!((pmr(&preds, &golds).unwrap() - 100.0 / 24.0).abs() < 1e-12);

    let ids: Vec<String> = (0..preds.len()).map(|k| format!("p{k}")).collect();
    let report = MetricsReport::compute("all", &ids, &preds, &golds).unwrap();
    assert!(report.tau.unwrap().abs() < 1e-12);
    // |pos − gold| ≤ 1 counted over every sentence of every permutation.
    let hits: usize = preds.iter().map(|p| common::brute_window(p, &gold, 1)).sum();
    assert!((report.d_win1 - 100.0 * hits as f64 / 96.0).abs() < 1e-12);
}

#[test]
fn pooled_and_per_document_means_differ_as_defined() {
    let golds = vec![vec![0, 1], vec![0, 1, 2, 3, 4, 5]];
    let preds = vec![vec![1, 0], vec![0, 1, 2, 3, 4, 5]];
    let ids = vec!["a".to_string(), "b".to_string()];
    let r = MetricsReport::compute("x", &ids, &preds, &golds).unwrap();
    assert!((r.tau.unwrap() - 0.0).abs() < 1e-12);
    assert!((r.pmr - 50.0).abs() < 1e-12);
    assert!((r.abs_acc - 75.0).abs() < 1e-12);
    assert!((r.lcs_ratio - 75.0).abs() < 1e-12);
    assert!((r.first_acc - 50.0).abs() < 1e-12);
}

#[test]
fn single_sentence_documents_are_excluded_from_tau_only() {
    let ids = vec!["one".to_string(), "two".to_string()];
    let r = MetricsReport::compute("x", &ids, &[vec![0], vec![1, 0]], &[vec![0], vec![0, 1]]).unwrap();
    assert_eq!(r.tau_documents, 1);
    assert_eq!(r.tau, Some(-1.0));
    assert!((r.pmr - 50.0).abs() < 1e-12);
    assert!((r.first_acc - 50.0).abs() < 1e-12);
    assert!((r.abs_acc - 100.0 / 3.0).abs() < 1e-12);

    let only = MetricsReport::compute("x", &ids[..1], &[vec![0]], &[vec![0]]).unwrap();
    assert_eq!(only.tau, None);
    assert!(only.to_string().contains("tau undefined"));
}

#[test]
fn rotations_of_five_under_the_displacement_window() {
    let gold: Vec<usize> = (0..5).collect();
    let left = vec![2, 3, 4, 0, 1];
    let right = vec![3, 4, 0, 1, 2];
    // Every sentence moves by 2 or 3 positions.
    assert_eq!(common::brute_window(&left, &gold, 1), 0);
    assert_eq!(displacement_hits(&left, &gold, 1).unwrap(), 0);
    assert_eq!(displacement_hits(&right, &gold, 1).unwrap(), 0);
    let one = vec![1, 2, 3, 4, 0];
    assert_eq!(displacement_hits(&one, &gold, 1).unwrap(), 4);
}

#[test]
fn malformed_orders_are_rejected() {
    assert!(kendall_tau(&[0, 0], &[0, 1]).is_err());
    assert!(kendall_tau(&[0, 1, 2], &[0, 1]).is_err());
    assert!(kendall_tau(&[0], &[0]).is_err());
    assert!(lcs_ratio(&[0, 5], &[0, 1]).is_err());
}
