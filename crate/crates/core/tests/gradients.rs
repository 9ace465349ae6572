mod common;

use common::*;
use hodgecl::contrastive::{build_batch, contrastive_loss, BatchItem};
use hodgecl::datasets::{build_two_hole_map, generate_dataset, TriangularGridSpec};
use hodgecl::rng;
use hodgecl::scnn::{init_parameters, scnn_backward_acc, scnn_forward, EncoderShape, ScnnParameters};
use hodgecl::{EdgeOperators, HodgeContext};

#[test]
fn scnn_parameter_gradients_match_finite_differences() {
    for seed in 0..20 {
        let e = scnn_gradient_error(seed);
        assert!(e <= 1e-4, "instance {seed}: relative error {e:e}");
    }
}

#[test]
fn infonce_gradients_match_finite_differences() {
    for seed in 0..20 {
        let e = loss_gradient_error(seed, false);
        assert!(e <= 1e-4, "instance {seed}: relative error {e:e}");
    }
}

#[test]
fn weighted_infonce_gradients_match_finite_differences() {
    for seed in 0..20 {
        let e = loss_gradient_error(100 + seed, true);
        assert!(e <= 1e-4, "instance {seed}: relative error {e:e}");
    }
}

#[test]
fn augmentation_objective_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let e = augment_gradient_error(seed);
        assert!(e <= 1e-5, "instance {seed}: relative error {e:e}");
    }
}

/// The full contrastive objective through the encoder, with the masks fixed.
#[test]
fn contrastive_loss_through_the_encoder() {
    let map = build_two_hole_map(&TriangularGridSpec::desk_default()).unwrap();
    let ds = generate_dataset(&map, 6, 0, 0, 5).unwrap();
    let ctx = HodgeContext::new(map.complex.clone()).unwrap();
    let ops = EdgeOperators::normalized(&ctx.laplacians, &ctx.basis);
    let shape = EncoderShape {
        hidden: vec![3, 3],
        order_low: 1,
        order_up: 1,
        embed_dim: 3,
    };
    let params = init_parameters(&mut rng::stream(1, &[]), &shape).unwrap();
    let drop = vec![0.3; ctx.num_edges()];
    let items: Vec<BatchItem<'_>> = ds
        .flows
        .iter()
        .enumerate()
        .map(|(index, f)| BatchItem {
            index,
            flow: &f.flow,
            drop: &drop,
        })
        .collect();
    let (batch, tapes) = build_batch(&items, &params, &ops, &mut rng::stream(2, &[])).unwrap();
    let out = contrastive_loss(&batch, 0.5, None, false).unwrap();
    let mut grad = params.zeros_like();
    for (t, g) in tapes.iter().zip(&out.grads) {
        scnn_backward_acc(&params, &ops, t, g, &mut grad).unwrap();
    }
    let analytic = grad.to_flat();
    let loss = |theta: &[f64]| {
        let mut p: ScnnParameters = params.clone();
        p.set_flat(theta).unwrap();
        let reps = batch
            .views
            .iter()
            .flat_map(|v| {
                v.iter()
                    .map(|x| scnn_forward(&p, &ops, x).unwrap().1)
                    .collect::<Vec<_>>()
            })
            .collect();
        let b = hodgecl::contrastive::ContrastiveBatch::from_representations(batch.anchors.clone(), reps).unwrap();
        contrastive_loss(&b, 0.5, None, false).unwrap().loss
    };
    let flat = params.to_flat();
    for k in 0..flat.len() {
        let e = rel_err(central_diff(loss, &flat, k, 1e-6), analytic[k], 1e-6);
        assert!(e <= 1e-4, "parameter {k}: {e:e}");
    }
}
