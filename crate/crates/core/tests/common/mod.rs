#![allow(dead_code)]

use hodgecl::augment::{expected_gap, mask_flow, objective_and_gradient, SpectralGapObjective};
use hodgecl::contrastive::{contrastive_loss, ContrastiveBatch};
use hodgecl::datasets::{build_two_hole_map, HoleRect, TriangularGridSpec};
use hodgecl::hodge::{hodge_decompose, Component, DEFAULT_TOL_ZERO};
use hodgecl::linalg::{dot, norm, Mat};
use hodgecl::scnn::{init_parameters, scnn_backward, scnn_forward, EncoderShape, ScnnParameters};
use hodgecl::{
    build_complex, hodge_basis, hodge_laplacians, hodge_project, EdgeOperators, HodgeContext, SimplicialComplex2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn filled_triangle() -> SimplicialComplex2 {
    build_complex(3, &[[0, 1], [0, 2], [1, 2]], &[[0, 1, 2]]).unwrap()
}

/// A square with no filled triangles: one hole.
pub fn hollow_cycle() -> SimplicialComplex2 {
    build_complex(4, &[[0, 1], [1, 2], [2, 3], [0, 3]], &[]).unwrap()
}

/// Random edges over `n` vertices, then every triangle whose three edges
/// exist is filled with probability `fill`.
pub fn random_complex<R: Rng>(rng: &mut R, n: usize, edge_p: f64, fill: f64) -> SimplicialComplex2 {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(edge_p) {
                edges.push([a, b]);
            }
        }
    }
    let has = |a: usize, b: usize| edges.contains(&[a, b]);
    let mut tris = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if has(a, b) && has(a, c) && has(b, c) && rng.gen_bool(fill) {
                    tris.push([a, b, c]);
                }
            }
        }
    }
    build_complex(n, &edges, &tris).unwrap()
}

/// A triangulated grid of random size with up to two random holes.
pub fn random_grid<R: Rng>(rng: &mut R) -> SimplicialComplex2 {
    loop {
        let rows = rng.gen_range(4..8);
        let cols = rng.gen_range(4..8);
        let holes = (0..rng.gen_range(0..3))
            .map(|_| HoleRect {
                row: rng.gen_range(1..rows - 2),
                col: rng.gen_range(1..cols - 2),
                height: 1,
                width: rng.gen_range(1..3),
            })
            .collect();
        let spec = TriangularGridSpec {
            rows,
            cols,
            holes,
            diagonal_seed: rng.gen_bool(0.5).then(|| rng.gen()),
        };
        if let Ok(map) = build_two_hole_map(&spec) {
            return map.complex;
        }
    }
}

/// Exact rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn bareiss_rank(m: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev = 1i128;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| a[r][c] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        for r in rank + 1..rows {
            for k in c + 1..cols {
                a[r][k] = (a[rank][c] * a[r][k] - a[r][c] * a[rank][k]) / prev;
            }
            a[r][c] = 0;
        }
        prev = a[rank][c];
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> Mat {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Central difference of `f` along coordinate `k` of `x`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], k: usize, h: f64) -> f64 {
    let mut a = x.to_vec();
    let mut b = x.to_vec();
    a[k] += h;
    b[k] -= h;
    (f(&a) - f(&b)) / (2.0 * h)
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest relative error between the backward pass and central
/// differences of `dzᵀ z` over every parameter of a random encoder.
pub fn scnn_gradient_error(seed: u64) -> f64 {
    let mut rng = rng_for(seed);
    let sc = if rng.gen_bool(0.5) {
        random_grid(&mut rng)
    } else {
        random_complex(&mut rng, 6, 0.7, 0.6)
    };
    let ctx = HodgeContext::new(sc).unwrap();
    let ops = if rng.gen_bool(0.5) {
        EdgeOperators::normalized(&ctx.laplacians, &ctx.basis)
    } else {
        EdgeOperators::from_laplacians(&ctx.laplacians)
    };
    let shape = EncoderShape {
        hidden: (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1..5)).collect(),
        order_low: rng.gen_range(0..4),
        order_up: rng.gen_range(0..4),
        embed_dim: rng.gen_range(1..4),
    };
    let mut params = init_parameters(&mut rng, &shape).unwrap();
    for b in &mut params.bias {
        *b = rng.gen_range(-0.5..0.5);
    }
    let x: Vec<f64> = random_vec(&mut rng, ctx.num_edges()).iter().map(|v| 0.5 * v).collect();
    let dz = random_vec(&mut rng, shape.embed_dim);
    let (tape, _) = scnn_forward(&params, &ops, &x).unwrap();
    let analytic = scnn_backward(&params, &ops, &tape, &dz).unwrap().to_flat();
    let flat = params.to_flat();
    let f = |theta: &[f64]| {
        let mut p: ScnnParameters = params.clone();
        p.set_flat(theta).unwrap();
        let (_, z) = scnn_forward(&p, &ops, &x).unwrap();
        z.iter().zip(&dz).map(|(a, b)| a * b).sum::<f64>()
    };
    (0..flat.len())
        .map(|k| rel_err(central_diff(f, &flat, k, 1e-6), analytic[k], 1e-6))
        .fold(0.0, f64::max)
}

/// Largest relative error of the loss gradient with respect to every
/// representation entry, for a random batch.
pub fn loss_gradient_error(seed: u64, weighted: bool) -> f64 {
    let mut rng = rng_for(seed);
    let b = rng.gen_range(2..6);
    let d = rng.gen_range(2..6);
    let reps: Vec<Vec<f64>> = (0..2 * b).map(|_| random_vec(&mut rng, d)).collect();
    let tau = rng.gen_range(0.2..1.0);
    let include_positive = rng.gen_bool(0.5);
    let weights: Option<Vec<Vec<f64>>> = weighted.then(|| {
        (0..b)
            .map(|_| {
                let raw: Vec<f64> = (0..2 * (b - 1)).map(|_| rng.gen_range(0.05..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect()
    });
    let anchors: Vec<usize> = (0..b).collect();
    let loss = |flat: &[f64]| {
        let reps: Vec<Vec<f64>> = flat.chunks(d).map(<[f64]>::to_vec).collect();
        let batch = ContrastiveBatch::from_representations(anchors.clone(), reps).unwrap();
        contrastive_loss(&batch, tau, weights.as_deref(), include_positive)
            .unwrap()
            .loss
    };
    let batch = ContrastiveBatch::from_representations(anchors.clone(), reps.clone()).unwrap();
    let out = contrastive_loss(&batch, tau, weights.as_deref(), include_positive).unwrap();
    let flat: Vec<f64> = reps.concat();
    let analytic: Vec<f64> = out.grads.concat();
    (0..flat.len())
        .map(|k| rel_err(central_diff(loss, &flat, k, 1e-6), analytic[k], 1e-6))
        .fold(0.0, f64::max)
}

/// Largest relative error of the augmentation objective's gradient.
pub fn augment_gradient_error(seed: u64) -> f64 {
    let mut rng = rng_for(seed);
    let ctx = HodgeContext::new(random_complex(&mut rng, 6, 0.7, 0.5)).unwrap();
    let n = ctx.num_edges();
    let x = random_vec(&mut rng, n);
    let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
    let sign = |r: &mut ChaCha8Rng| if r.gen_bool(0.5) { 1.0 } else { -1.0 };
    let obj = SpectralGapObjective {
        sign_g: sign(&mut rng),
        sign_c: sign(&mut rng),
        sign_h: sign(&mut rng),
        weight_c: rng.gen_range(0.5..3.0),
        weight_h: rng.gen_range(0.5..3.0),
    };
    let (_, grad) = objective_and_gradient(&x, &ctx.basis, &p, &obj).unwrap();
    let f = |q: &[f64]| objective_and_gradient(&x, &ctx.basis, q, &obj).unwrap().0;
    (0..n)
        .map(|k| rel_err(central_diff(f, &p, k, 1e-4), grad[k], 1e-6))
        .fold(0.0, f64::max)
}

/// `|closed form - Monte-Carlo mean| / standard error` for one random
/// instance and a random Hodge block.
pub fn expected_gap_z_score(seed: u64, draws: usize) -> f64 {
    let mut rng = rng_for(seed);
    let ctx = HodgeContext::new(if rng.gen_bool(0.5) {
        hollow_cycle()
    } else {
        random_complex(&mut rng, 6, 0.7, 0.5)
    })
    .unwrap();
    let n = ctx.num_edges();
    let comps: Vec<Component> = Component::ALL
        .into_iter()
        .filter(|&c| ctx.basis.block(c).cols() > 0)
        .collect();
    let u = ctx.basis.block(comps[rng.gen_range(0..comps.len())]);
    let x = random_vec(&mut rng, n);
    let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let q: Vec<f64> = p.iter().map(|v| 1.0 - v).collect();
    let closed = expected_gap(&x, u, &q).unwrap();
    let ux = u.tr_matvec(&x).unwrap();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let view = mask_flow(&x, &p, &mut rng).unwrap();
        let uv = u.tr_matvec(&view).unwrap();
        let g: f64 = ux.iter().zip(&uv).map(|(a, b)| (a - b) * (a - b)).sum();
        sum += g;
        sum_sq += g * g;
    }
    let m = draws as f64;
    let mean = sum / m;
    let var = (sum_sq / m - mean * mean) * m / (m - 1.0);
    let se = (var / m).sqrt();
    if se == 0.0 {
        return if (closed - mean).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    (closed - mean).abs() / se
}

/// Exact projection onto `{p ∈ [0,1]^N, Σp ≤ budget}` by enumerating which
/// coordinates sit at 0, at 1 or in between, with the budget constraint
/// active or not, and keeping the nearest feasible candidate.
pub fn projection_oracle(v: &[f64], budget: f64) -> Vec<f64> {
    let n = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let ones = state.iter().filter(|&&s| s == 1).count() as f64;
        let mut lambdas = vec![0.0];
        if !free.is_empty() {
            let l = (free.iter().map(|&i| v[i]).sum::<f64>() + ones - budget) / free.len() as f64;
            if l > 0.0 {
                lambdas.push(l);
            }
        }
        for lambda in lambdas {
            let p: Vec<f64> = (0..n)
                .map(|i| match state[i] {
                    0 => 0.0,
                    1 => 1.0,
                    _ => v[i] - lambda,
                })
                .collect();
            let feasible =
                p.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)) && p.iter().sum::<f64>() <= budget + 1e-12;
            if !feasible {
                continue;
            }
            let d: f64 = p.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.as_ref().is_none_or(|b| d < b.0) {
                best = Some((d, p));
            }
        }
    }
    best.expect("the zero vector is always feasible").1
}

/// Worst-case errors of the Hodge identities on one complex.
#[derive(Clone, Copy, Debug, Default)]
pub struct AlgebraErrors {
    /// `B1 B2` is exactly zero in integer arithmetic.
    pub boundary_exact: bool,
    /// Subspace dimensions equal the exact integer ranks.
    pub dims_exact: bool,
    pub laplacian_product: f64,
    pub reconstruction: f64,
    pub orthogonality: f64,
    pub parseval: f64,
}

impl AlgebraErrors {
    pub fn merge(self, o: AlgebraErrors) -> AlgebraErrors {
        AlgebraErrors {
            boundary_exact: self.boundary_exact && o.boundary_exact,
            dims_exact: self.dims_exact && o.dims_exact,
            laplacian_product: self.laplacian_product.max(o.laplacian_product),
            reconstruction: self.reconstruction.max(o.reconstruction),
            orthogonality: self.orthogonality.max(o.orthogonality),
            parseval: self.parseval.max(o.parseval),
        }
    }
}

/// Measures the identities on `sc` with three random flows.
pub fn algebra_errors(sc: &SimplicialComplex2, seed: u64) -> AlgebraErrors {
    let inc = sc.incidence_matrices();
    let lap = hodge_laplacians(&inc);
    let prod = lap.l1_low.matmul(&lap.l1_up).unwrap().to_dense();
    let basis = hodge_basis(&lap, DEFAULT_TOL_ZERO).unwrap();
    let r1 = bareiss_rank(&inc.b1.to_dense());
    let r2 = bareiss_rank(&inc.b2.to_dense());
    let mut e = AlgebraErrors {
        boundary_exact: inc.b1.matmul(&inc.b2).is_zero(),
        dims_exact: basis.dims() == (r1, r2, sc.num_edges() - r1 - r2),
        laplacian_product: prod.max_abs(),
        ..AlgebraErrors::default()
    };
    let mut rng = rng_for(seed);
    for _ in 0..3 {
        let x = random_vec(&mut rng, sc.num_edges());
        let parts = hodge_decompose(&x, &basis).unwrap();
        for i in 0..x.len() {
            let sum = parts.gradient[i] + parts.curl[i] + parts.harmonic[i];
            e.reconstruction = e.reconstruction.max((sum - x[i]).abs());
        }
        for (a, b) in [
            (&parts.gradient, &parts.curl),
            (&parts.gradient, &parts.harmonic),
            (&parts.curl, &parts.harmonic),
        ] {
            e.orthogonality = e.orthogonality.max(dot(a, b).abs());
        }
        let emb = hodge_project(&x, &basis).unwrap();
        let energy: f64 = Component::ALL.iter().map(|&c| norm(emb.component(c)).powi(2)).sum();
        e.parseval = e.parseval.max((energy - dot(&x, &x)).abs());
    }
    e
}
