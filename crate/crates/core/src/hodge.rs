//! Hodge Laplacians, the gradient/curl/harmonic eigenbasis and projections
//! of edge flows onto it.

use serde::{Deserialize, Serialize};

use crate::complex::{IncidenceMatrices, SimplicialComplex2};
use crate::error::{dim_mismatch, Result};
use crate::linalg::{dot, eig_sym, Mat, SparseMatrix};

/// A real signal on oriented edges; the sign is relative to the edge's
/// low-to-high orientation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeFlow(pub Vec<f64>);

impl EdgeFlow {
    pub fn zeros(n: usize) -> Self {
        EdgeFlow(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }
}

impl std::ops::Deref for EdgeFlow {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for EdgeFlow {
    fn from(v: Vec<f64>) -> Self {
        EdgeFlow(v)
    }
}

/// All Hodge Laplacians of a 2-complex, sparse.
#[derive(Clone, Debug)]
pub struct HodgeLaplacians {
    pub l0: SparseMatrix,
    pub l1_low: SparseMatrix,
    pub l1_up: SparseMatrix,
    pub l1: SparseMatrix,
    pub l2: SparseMatrix,
}

/// `L0 = B1 B1ᵀ`, `L1 = B1ᵀ B1 + B2 B2ᵀ`, `L2 = B2ᵀ B2`.
pub fn hodge_laplacians(inc: &IncidenceMatrices) -> HodgeLaplacians {
    let b1 = inc.b1.to_sparse();
    let b2 = inc.b2.to_sparse();
    let b1t = b1.transpose();
    let b2t = b2.transpose();
    let l0 = b1.matmul(&b1t).expect("shapes agree");
    let l1_low = b1t.matmul(&b1).expect("shapes agree");
    let l1_up = b2.matmul(&b2t).expect("shapes agree");
    let l1 = l1_low.add(&l1_up).expect("shapes agree");
    let l2 = b2t.matmul(&b2).expect("shapes agree");
    HodgeLaplacians {
        l0,
        l1_low,
        l1_up,
        l1,
        l2,
    }
}

/// Orthonormal bases of the gradient, curl and harmonic subspaces.
#[derive(Clone, Debug)]
pub struct HodgeBasis {
    pub u_g: Mat,
    pub u_c: Mat,
    pub u_h: Mat,
    pub eigvals_g: Vec<f64>,
    pub eigvals_c: Vec<f64>,
}

/// Which Hodge subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Gradient,
    Curl,
    Harmonic,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Gradient, Component::Curl, Component::Harmonic];

    pub fn name(self) -> &'static str {
        match self {
            Component::Gradient => "gradient",
            Component::Curl => "curl",
            Component::Harmonic => "harmonic",
        }
    }
}

impl HodgeBasis {
    pub fn num_edges(&self) -> usize {
        self.u_g.rows()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.u_g.cols(), self.u_c.cols(), self.u_h.cols())
    }

    pub fn block(&self, c: Component) -> &Mat {
        match c {
            Component::Gradient => &self.u_g,
            Component::Curl => &self.u_c,
            Component::Harmonic => &self.u_h,
        }
    }

    /// `[U_G U_C U_H]`.
    pub fn stacked(&self) -> Mat {
        let n = self.num_edges();
        let (g, c, h) = self.dims();
        let mut out = Mat::zeros(n, g + c + h);
        for i in 0..n {
            let row = out.row_mut(i);
            row[..g].copy_from_slice(self.u_g.row(i));
            row[g..g + c].copy_from_slice(self.u_c.row(i));
            row[g + c..].copy_from_slice(self.u_h.row(i));
        }
        out
    }
}

/// Default zero-eigenvalue tolerance, relative to the largest eigenvalue of `L1`.
pub const DEFAULT_TOL_ZERO: f64 = 1e-8;

/// Splits the edge space into gradient, curl and harmonic bases.
///
/// `U_G` comes from the nonzero spectrum of `L1_low` and `U_C` from that of
/// `L1_up`, which keeps the blocks unmixed when the two share eigenvalues.
/// `U_H` spans the null space of `L1`.
pub fn hodge_basis(lap: &HodgeLaplacians, tol_zero: f64) -> Result<HodgeBasis> {
    let n = lap.l1.rows();
    let low = eig_sym(&lap.l1_low.to_dense(), 1e-12)?;
    let up = eig_sym(&lap.l1_up.to_dense(), 1e-12)?;
    let full = eig_sym(&lap.l1.to_dense(), 1e-12)?;

    let lambda_max = full.values.last().copied().unwrap_or(0.0);
    let thr = tol_zero * lambda_max.max(1.0);

    let pick = |values: &[f64], keep: &dyn Fn(f64) -> bool| -> Vec<usize> {
        values
            .iter()
            .enumerate()
            .filter(|(_, &v)| keep(v))
            .map(|(i, _)| i)
            .collect()
    };
    let g_idx = pick(&low.values, &|v| v > thr);
    let c_idx = pick(&up.values, &|v| v > thr);
    let h_idx = pick(&full.values, &|v| v <= thr);

    if g_idx.len() + c_idx.len() + h_idx.len() != n {
        return Err(dim_mismatch(format!(
            "hodge dimensions {} + {} + {} != {n} edges (tol_zero {tol_zero:e})",
            g_idx.len(),
            c_idx.len(),
            h_idx.len()
        )));
    }

    Ok(HodgeBasis {
        u_g: low.vectors.select_cols(&g_idx),
        u_c: up.vectors.select_cols(&c_idx),
        u_h: full.vectors.select_cols(&h_idx),
        eigvals_g: g_idx.iter().map(|&i| low.values[i]).collect(),
        eigvals_c: c_idx.iter().map(|&i| up.values[i]).collect(),
    })
}

/// Spectral coordinates of a flow in each Hodge block.
#[derive(Clone, Debug, PartialEq)]
pub struct HodgeEmbedding {
    pub tilde_g: Vec<f64>,
    pub tilde_c: Vec<f64>,
    pub tilde_h: Vec<f64>,
}

impl HodgeEmbedding {
    pub fn component(&self, c: Component) -> &[f64] {
        match c {
            Component::Gradient => &self.tilde_g,
            Component::Curl => &self.tilde_c,
            Component::Harmonic => &self.tilde_h,
        }
    }
}

fn check_len(x: &[f64], basis: &HodgeBasis) -> Result<()> {
    if x.len() != basis.num_edges() {
        return Err(dim_mismatch(format!(
            "flow of length {} on {} edges",
            x.len(),
            basis.num_edges()
        )));
    }
    Ok(())
}

pub fn hodge_project(x: &[f64], basis: &HodgeBasis) -> Result<HodgeEmbedding> {
    check_len(x, basis)?;
    Ok(HodgeEmbedding {
        tilde_g: basis.u_g.tr_matvec(x)?,
        tilde_c: basis.u_c.tr_matvec(x)?,
        tilde_h: basis.u_h.tr_matvec(x)?,
    })
}

/// The three Hodge components of a flow, `x = x_G + x_C + x_H`.
#[derive(Clone, Debug, PartialEq)]
pub struct HodgeComponents {
    pub gradient: EdgeFlow,
    pub curl: EdgeFlow,
    pub harmonic: EdgeFlow,
}

pub fn hodge_decompose(x: &[f64], basis: &HodgeBasis) -> Result<HodgeComponents> {
    let emb = hodge_project(x, basis)?;
    Ok(HodgeComponents {
        gradient: EdgeFlow(basis.u_g.matvec(&emb.tilde_g)?),
        curl: EdgeFlow(basis.u_c.matvec(&emb.tilde_c)?),
        harmonic: EdgeFlow(basis.u_h.matvec(&emb.tilde_h)?),
    })
}

/// A complex together with its Laplacians and Hodge basis, built once.
#[derive(Clone, Debug)]
pub struct HodgeContext {
    pub complex: SimplicialComplex2,
    pub incidence: IncidenceMatrices,
    pub laplacians: HodgeLaplacians,
    pub basis: HodgeBasis,
}

impl HodgeContext {
    pub fn new(complex: SimplicialComplex2) -> Result<Self> {
        let incidence = complex.incidence_matrices();
        let laplacians = hodge_laplacians(&incidence);
        let basis = hodge_basis(&laplacians, DEFAULT_TOL_ZERO)?;
        Ok(Self {
            complex,
            incidence,
            laplacians,
            basis,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.complex.num_edges()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::build_complex;

    fn filled() -> SimplicialComplex2 {
        build_complex(3, &[[0, 1], [0, 2], [1, 2]], &[[0, 1, 2]]).unwrap()
    }

    fn hollow() -> SimplicialComplex2 {
        build_complex(3, &[[0, 1], [0, 2], [1, 2]], &[]).unwrap()
    }

    fn dense(m: &SparseMatrix) -> Vec<Vec<f64>> {
        let d = m.to_dense();
        (0..d.rows()).map(|i| d.row(i).to_vec()).collect()
    }

    #[test]
    fn filled_triangle_laplacians() {
        let lap = hodge_laplacians(&filled().incidence_matrices());
        assert_eq!(
            dense(&lap.l1_low),
            vec![vec![2.0, 1.0, -1.0], vec![1.0, 2.0, 1.0], vec![-1.0, 1.0, 2.0]]
        );
        assert_eq!(
            dense(&lap.l1_up),
            vec![vec![1.0, -1.0, 1.0], vec![-1.0, 1.0, -1.0], vec![1.0, -1.0, 1.0]]
        );
        assert!(lap.l1_low.matmul(&lap.l1_up).unwrap().is_zero());
        assert_eq!(lap.l1.to_dense(), {
            let mut m = Mat::identity(3);
            m.scale(3.0);
            m
        });
        let e = eig_sym(&lap.l1.to_dense(), 1e-12).unwrap();
        assert!(e.values.iter().all(|&v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn hollow_cycle_upper_laplacian_vanishes() {
        let lap = hodge_laplacians(&hollow().incidence_matrices());
        assert!(lap.l1_up.is_zero());
        assert_eq!(lap.l1.to_dense(), lap.l1_low.to_dense());
    }

    #[test]
    fn basis_dimensions() {
        let b = HodgeContext::new(filled()).unwrap().basis;
        assert_eq!(b.dims(), (2, 1, 0));

        let b = HodgeContext::new(hollow()).unwrap().basis;
        assert_eq!(b.dims(), (2, 0, 1));
        let h = b.u_h.col(0);
        let s = 1.0 / 3f64.sqrt();
        let sign = h[0].signum();
        for (v, w) in h.iter().zip([s, -s, s]) {
            assert!((v - sign * w).abs() < 1e-10);
        }

        // a path graph (tree) with no triangles
        let tree = build_complex(4, &[[0, 1], [1, 2], [1, 3]], &[]).unwrap();
        assert_eq!(HodgeContext::new(tree).unwrap().basis.dims(), (3, 0, 0));
    }

    #[test]
    fn projection_of_basis_vector() {
        let b = HodgeContext::new(hollow()).unwrap().basis;
        let x = b.u_h.col(0);
        let e = hodge_project(&x, &b).unwrap();
        assert!((e.tilde_h[0] - 1.0).abs() < 1e-12);
        assert!(e.tilde_g.iter().all(|v| v.abs() < 1e-12));
        assert!(e.tilde_c.is_empty());
    }

    #[test]
    fn zero_flow_decomposes_to_zero() {
        let b = HodgeContext::new(filled()).unwrap().basis;
        let e = hodge_project(&[0.0; 3], &b).unwrap();
        assert!(e.tilde_g.iter().chain(&e.tilde_c).all(|&v| v == 0.0));
        let d = hodge_decompose(&[0.0; 3], &b).unwrap();
        for c in [&d.gradient, &d.curl, &d.harmonic] {
            assert!(c.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn harmonic_cycle_flow_is_purely_harmonic() {
        let b = HodgeContext::new(hollow()).unwrap().basis;
        let d = hodge_decompose(&[1.0, -1.0, 1.0], &b).unwrap();
        for (h, x) in d.harmonic.iter().zip([1.0, -1.0, 1.0]) {
            assert!((h - x).abs() < 1e-12);
        }
        assert!(d.gradient.iter().all(|v| v.abs() < 1e-12));
        assert!(d.curl.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn length_mismatch_is_reported() {
        let b = HodgeContext::new(filled()).unwrap().basis;
        assert!(hodge_project(&[1.0, 2.0], &b).is_err());
        assert!(hodge_decompose(&[1.0; 4], &b).is_err());
    }
}
