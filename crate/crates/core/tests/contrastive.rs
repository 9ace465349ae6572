mod common;

use common::*;
use hodgecl::contrastive::{
    contrastive_loss, embedding_similarity, infonce_loss, normalize_weights, weighted_infonce_loss, ContrastiveBatch,
    SimilarityCache, SpectralGammas, SpectralWeights,
};
use hodgecl::datasets::{build_two_hole_map, TriangularGridSpec};
use hodgecl::hodge_project;
use hodgecl::HodgeContext;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_batch(rng: &mut ChaCha8Rng, b: usize, d: usize) -> ContrastiveBatch {
    let reps = (0..2 * b).map(|_| random_vec(rng, d)).collect();
    ContrastiveBatch::from_representations((0..b).collect(), reps).unwrap()
}

fn uniform(batch: &ContrastiveBatch) -> Vec<Vec<f64>> {
    batch
        .negatives
        .iter()
        .map(|n| vec![1.0 / n.len() as f64; n.len()])
        .collect()
}

#[test]
fn hand_evaluated_pair() {
    // one anchor's views agree, the other anchor's views point the other way
    let reps = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0], vec![-1.0, 0.0]];
    let batch = ContrastiveBatch::from_representations(vec![0, 1], reps).unwrap();
    // every pair: -1/τ + log(2 e^{-1/τ}) = log 2 - 2/τ with τ = 1
    let out = infonce_loss(&batch, 1.0).unwrap();
    assert!((out.loss - 4.0 * (2f64.ln() - 2.0)).abs() < 1e-12);
}

#[test]
fn negatives_exclude_the_anchors_own_views() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let batch = random_batch(&mut rng, 5, 3);
    for (i, negs) in batch.negatives.iter().enumerate() {
        assert_eq!(negs.len(), 8);
        assert!(negs.iter().all(|&r| r / 2 != i));
    }
    let two = random_batch(&mut rng, 2, 3);
    assert!(two.negatives.iter().all(|n| n.len() == 2));
}

#[test]
fn uniform_weights_shift_the_loss_by_log_m() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let b = rng.gen_range(2..7);
        let batch = random_batch(&mut rng, b, 4);
        let tau = rng.gen_range(0.1..1.5);
        let m = (2 * b - 2) as f64;
        let plain = infonce_loss(&batch, tau).unwrap();
        let weighted = contrastive_loss(&batch, tau, Some(&uniform(&batch)), false).unwrap();
        let pairs = batch.num_pairs() as f64;
        assert!((weighted.loss - (plain.loss - pairs * m.ln())).abs() <= 1e-10);
        for (g, h) in plain.grads.iter().flatten().zip(weighted.grads.iter().flatten()) {
            assert!((g - h).abs() <= 1e-10);
        }
    }
}

#[test]
fn heavier_negative_raises_the_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let batch = random_batch(&mut rng, 4, 3);
    let w = uniform(&batch);
    let base = contrastive_loss(&batch, 0.5, Some(&w), false).unwrap().loss;
    for i in 0..4 {
        for k in 0..w[i].len() {
            let mut heavier = w.clone();
            heavier[i][k] *= 2.0;
            assert!(contrastive_loss(&batch, 0.5, Some(&heavier), false).unwrap().loss > base);
        }
    }
}

#[test]
fn weight_shape_is_checked() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let batch = random_batch(&mut rng, 3, 2);
    let bad = SpectralWeights {
        gammas: SpectralGammas::default(),
        weights: vec![vec![0.5; 3]; 3],
    };
    assert!(weighted_infonce_loss(&batch, 0.5, &bad).is_err());
}

#[test]
fn normalized_weights() {
    assert_eq!(normalize_weights(&[1.0, 3.0]).unwrap(), vec![0.25, 0.75]);
    assert_eq!(normalize_weights(&[2.0; 4]).unwrap(), vec![0.25; 4]);
    assert!(normalize_weights(&[0.0, 0.0]).is_err());
}

#[test]
fn opposite_flows_score_six() {
    let map = build_two_hole_map(&TriangularGridSpec::desk_default()).unwrap();
    let ctx = HodgeContext::new(map.complex).unwrap();
    let gammas = SpectralGammas { h: 1.0, g: 1.0, c: 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random_vec(&mut rng, ctx.num_edges());
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let (a, b) = (
        hodge_project(&x, &ctx.basis).unwrap(),
        hodge_project(&neg, &ctx.basis).unwrap(),
    );
    assert!((embedding_similarity(&a, &b, &gammas) - 6.0).abs() < 1e-12);
    assert!(embedding_similarity(&a, &a, &gammas).abs() < 1e-12);
}

#[test]
fn harmonic_only_scores_ignore_the_gradient_part() {
    let ctx = HodgeContext::new(hollow_cycle()).unwrap();
    let gammas = SpectralGammas { h: 1.0, g: 0.0, c: 0.0 };
    let x = [1.0, 0.5, -0.2, 0.3];
    let y = [0.2, -1.0, 0.4, 0.8];
    let base = embedding_similarity(
        &hodge_project(&x, &ctx.basis).unwrap(),
        &hodge_project(&y, &ctx.basis).unwrap(),
        &gammas,
    );
    // adding a gradient flow (coboundary of a vertex potential) to y
    let grad = ctx.basis.u_g.col(0);
    let y2: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a + 3.0 * g).collect();
    let moved = embedding_similarity(
        &hodge_project(&x, &ctx.basis).unwrap(),
        &hodge_project(&y2, &ctx.basis).unwrap(),
        &gammas,
    );
    assert!((base - moved).abs() < 1e-12);
}

#[test]
fn cached_weights_are_normalized_per_anchor() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ctx = HodgeContext::new(random_grid(&mut rng)).unwrap();
    let emb: Vec<_> = (0..6)
        .map(|_| hodge_project(&random_vec(&mut rng, ctx.num_edges()), &ctx.basis).unwrap())
        .collect();
    let cache = SimilarityCache::new(&emb, SpectralGammas { h: 1.0, g: 0.5, c: 0.5 });
    let mut idx: Vec<usize> = (0..6).collect();
    idx.shuffle(&mut rng);
    let reps = (0..8).map(|_| random_vec(&mut rng, 3)).collect();
    let batch = ContrastiveBatch::from_representations(idx[..4].to_vec(), reps).unwrap();
    let w = cache.batch_weights(&batch).unwrap();
    for wi in &w.weights {
        assert!((wi.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(wi.iter().all(|&v| v >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_ignores_anchor_order(seed in any::<u64>(), tau in 0.1f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = rng.gen_range(2..6);
        let batch = random_batch(&mut rng, b, 3);
        let mut order: Vec<usize> = (0..b).collect();
        order.shuffle(&mut rng);
        let reps = order
            .iter()
            .flat_map(|&i| [batch.representations[2 * i].clone(), batch.representations[2 * i + 1].clone()])
            .collect();
        let shuffled = ContrastiveBatch::from_representations(order.clone(), reps).unwrap();
        let a = infonce_loss(&batch, tau).unwrap().loss;
        let c = infonce_loss(&shuffled, tau).unwrap().loss;
        prop_assert!((a - c).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn normalized_weights_sum_to_one(scores in prop::collection::vec(0.0f64..10.0, 1..20)) {
        prop_assume!(scores.iter().sum::<f64>() > 1e-6);
        let w = normalize_weights(&scores).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}
