mod common;

use common::*;
use hodgecl::datasets::{build_two_hole_map, TriangularGridSpec};
use hodgecl::hodge::Component;
use hodgecl::linalg::{eig_sym, Mat};
use hodgecl::{hodge_project, HodgeContext, SimplicialComplex2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check_algebra(sc: &SimplicialComplex2, seed: u64) {
    let e = algebra_errors(sc, seed);
    assert!(e.boundary_exact, "boundary of a boundary");
    assert!(e.dims_exact, "dimensions against exact ranks");
    assert!(e.laplacian_product <= 1e-10);
    assert!(
        e.reconstruction <= 1e-8 && e.orthogonality <= 1e-8 && e.parseval <= 1e-8,
        "{e:?}"
    );
}

#[test]
fn filled_triangle_has_no_harmonic_flow() {
    let sc = filled_triangle();
    check_algebra(&sc, 1);
    let ctx = HodgeContext::new(sc).unwrap();
    assert_eq!(ctx.basis.dims(), (2, 1, 0));
}

#[test]
fn hollow_cycle_has_one_harmonic_flow() {
    let sc = hollow_cycle();
    check_algebra(&sc, 2);
    let ctx = HodgeContext::new(sc).unwrap();
    assert_eq!(ctx.basis.dims(), (3, 0, 1));
    // edges are sorted: [0,1], [0,3], [1,2], [2,3]; the flow circulates 0-1-2-3-0
    let u = ctx.basis.u_h.col(0);
    let circulation = [u[0], u[2], u[3], -u[1]];
    for v in circulation {
        assert!((v.abs() - 0.5).abs() < 1e-10);
        assert!((v - circulation[0]).abs() < 1e-10);
    }
}

#[test]
fn random_grids_satisfy_the_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..20 {
        check_algebra(&random_grid(&mut rng), k);
    }
}

#[test]
fn two_hole_map_has_two_harmonic_dimensions() {
    let map = build_two_hole_map(&TriangularGridSpec::desk_default()).unwrap();
    let ctx = HodgeContext::new(map.complex).unwrap();
    assert_eq!(ctx.basis.dims().2, 2);
}

#[test]
fn eigensolver_small_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in [1, 2, 5, 17, 40] {
        let m = random_symmetric(&mut rng, n);
        let e = eig_sym(&m, 1e-12).unwrap();
        let lambda = Mat::diag(&e.values);
        let resid = m
            .matmul(&e.vectors)
            .unwrap()
            .max_abs_diff(&e.vectors.matmul(&lambda).unwrap());
        let gram = e.vectors.transpose().matmul(&e.vectors).unwrap();
        assert!(resid <= 1e-8 && gram.max_abs_diff(&Mat::identity(n)) <= 1e-8, "n = {n}");
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn eigensolver_rejects_asymmetric_input() {
    let m = Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
    assert!(eig_sym(&m, 1e-12).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_complexes_satisfy_the_algebra(seed in any::<u64>(), n in 3usize..9, edge_p in 0.3f64..0.9, fill in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc = random_complex(&mut rng, n, edge_p, fill);
        check_algebra(&sc, seed);
    }

    #[test]
    fn projection_is_linear(seed in any::<u64>(), a in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc = random_complex(&mut rng, 6, 0.6, 0.5);
        let ctx = HodgeContext::new(sc).unwrap();
        let n = ctx.num_edges();
        let x = random_vec(&mut rng, n);
        let y = random_vec(&mut rng, n);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + v).collect();
        let (ex, ey, ec) = (
            hodge_project(&x, &ctx.basis).unwrap(),
            hodge_project(&y, &ctx.basis).unwrap(),
            hodge_project(&combo, &ctx.basis).unwrap(),
        );
        for c in Component::ALL {
            for ((p, q), r) in ex.component(c).iter().zip(ey.component(c)).zip(ec.component(c)) {
                prop_assert!((a * p + q - r).abs() < 1e-9);
            }
        }
    }
}
