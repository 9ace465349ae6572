//! Fixtures shared by the benchmarks: the default trajectory map, a few of
//! its flows and a desk-sized encoder.

use hodgecl::datasets::{build_two_hole_map, generate_dataset, TriangularGridSpec};
use hodgecl::linalg::Mat;
use hodgecl::scnn::{init_parameters, EncoderShape};
use hodgecl::{EdgeOperators, HodgeContext, ScnnParameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub context: HodgeContext,
    pub operators: EdgeOperators,
    pub flows: Vec<Vec<f64>>,
    pub params: ScnnParameters,
}

impl Fixture {
    pub fn new() -> Self {
        let map = build_two_hole_map(&TriangularGridSpec::desk_default()).expect("default map is valid");
        let context = HodgeContext::new(map.complex.clone()).expect("default map decomposes");
        let operators = EdgeOperators::normalized(&context.laplacians, &context.basis);
        let ds = generate_dataset(&map, 16, 0, 0, 0).expect("trajectories route");
        let shape = EncoderShape {
            hidden: vec![16, 16, 16],
            order_low: 2,
            order_up: 2,
            embed_dim: 16,
        };
        let params = init_parameters(&mut ChaCha8Rng::seed_from_u64(0), &shape).expect("valid shape");
        Self {
            context,
            operators,
            flows: ds.flows.into_iter().map(|f| f.flow.0).collect(),
            params,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.context.num_edges()
    }
}

impl Default for Fixture {
    fn default() -> Self {
        Self::new()
    }
}

pub fn random_symmetric(n: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng.gen_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Two Gaussian-ish clusters in `dim` dimensions with labels.
pub fn svm_toy(n: usize, dim: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let shift = if label == 1 { 1.0 } else { -1.0 };
            let z = (0..dim).map(|_| shift + rng.gen_range(-1.5..1.5)).collect();
            (z, label)
        })
        .unzip()
}
