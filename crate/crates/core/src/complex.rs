//! Oriented 2-dimensional simplicial complexes and their boundary maps.
//!
//! Edges are oriented from the lower to the higher vertex index. A triangle
//! `(i, j, k)` with `i < j < k` has boundary `(j,k) - (i,k) + (i,j)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

/// A validated complex with vertices, edges and filled triangles.
///
/// Edges and triangles are stored sorted lexicographically; the position of
/// an edge in [`edges`](Self::edges) is its index in every edge flow.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ComplexRecord", into = "ComplexRecord")]
pub struct SimplicialComplex2 {
    num_vertices: usize,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    edge_index: BTreeMap<[usize; 2], usize>,
}

/// The on-disk form of a complex.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexRecord {
    pub num_vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TryFrom<ComplexRecord> for SimplicialComplex2 {
    type Error = Error;

    fn try_from(r: ComplexRecord) -> Result<Self> {
        build_complex(r.num_vertices, &r.edges, &r.triangles)
    }
}

impl From<SimplicialComplex2> for ComplexRecord {
    fn from(sc: SimplicialComplex2) -> Self {
        ComplexRecord {
            num_vertices: sc.num_vertices,
            edges: sc.edges,
            triangles: sc.triangles,
        }
    }
}

/// Canonicalizes and validates a complex.
///
/// Vertex order inside each simplex is irrelevant on input; the result holds
/// sorted simplices in lexicographic order.
pub fn build_complex(
    num_vertices: usize,
    edges: &[[usize; 2]],
    triangles: &[[usize; 3]],
) -> Result<SimplicialComplex2> {
    let check = |v: usize| {
        if v >= num_vertices {
            Err(Error::IndexOutOfRange { index: v, num_vertices })
        } else {
            Ok(())
        }
    };

    let mut edge_set = BTreeSet::new();
    for &[a, b] in edges {
        check(a)?;
        check(b)?;
        if a == b {
            return Err(Error::DuplicateSimplex(vec![a, b]));
        }
        let e = [a.min(b), a.max(b)];
        if !edge_set.insert(e) {
            return Err(Error::DuplicateSimplex(e.to_vec()));
        }
    }

    let mut tri_set = BTreeSet::new();
    for t in triangles {
        for &v in t {
            check(v)?;
        }
        let mut s = *t;
        s.sort_unstable();
        if s[0] == s[1] || s[1] == s[2] || !tri_set.insert(s) {
            return Err(Error::DuplicateSimplex(s.to_vec()));
        }
        for face in [[s[0], s[1]], [s[0], s[2]], [s[1], s[2]]] {
            if !edge_set.contains(&face) {
                return Err(Error::MissingFace {
                    triangle: s,
                    edge: face,
                });
            }
        }
    }

    let edges: Vec<[usize; 2]> = edge_set.into_iter().collect();
    let edge_index = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    Ok(SimplicialComplex2 {
        num_vertices,
        edges,
        triangles: tri_set.into_iter().collect(),
        edge_index,
    })
}

impl SimplicialComplex2 {
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Index of the edge joining `a` and `b`, in either order.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&[a.min(b), a.max(b)]).copied()
    }

    /// Neighbor lists of the 1-skeleton, sorted.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices];
        for &[a, b] in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for n in &mut adj {
            n.sort_unstable();
        }
        adj
    }

    pub fn to_record(&self) -> ComplexRecord {
        self.clone().into()
    }

    /// Deterministic JSON form (`num_vertices`, `edges`, `triangles`).
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("complex serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: ComplexRecord = serde_json::from_str(s)?;
        rec.try_into()
    }

    /// Signed boundary matrices.
    pub fn incidence_matrices(&self) -> IncidenceMatrices {
        let mut b1 = Vec::with_capacity(2 * self.edges.len());
        for (e, &[tail, head]) in self.edges.iter().enumerate() {
            b1.push((tail, e, -1));
            b1.push((head, e, 1));
        }
        let mut b2 = Vec::with_capacity(3 * self.triangles.len());
        for (t, &[i, j, k]) in self.triangles.iter().enumerate() {
            let idx = |a, b| self.edge_index(a, b).expect("validated face");
            b2.push((idx(i, j), t, 1));
            b2.push((idx(i, k), t, -1));
            b2.push((idx(j, k), t, 1));
        }
        IncidenceMatrices {
            b1: IntMatrix::new(self.num_vertices, self.edges.len(), b1),
            b2: IntMatrix::new(self.edges.len(), self.triangles.len(), b2),
        }
    }
}

/// Sparse integer matrix in triplet form, sorted by `(row, col)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, i64)>,
}

impl IntMatrix {
    fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize, i64)>) -> Self {
        entries.sort_unstable();
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, i64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut d = vec![vec![0; self.cols]; self.rows];
        for &(r, c, v) in &self.entries {
            d[r][c] += v;
        }
        d
    }

    /// Exact integer product.
    pub fn matmul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut by_row: Vec<Vec<(usize, i64)>> = vec![Vec::new(); other.rows];
        for &(r, c, v) in &other.entries {
            by_row[r].push((c, v));
        }
        let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for &(i, k, a) in &self.entries {
            for &(j, b) in &by_row[k] {
                *acc.entry((i, j)).or_insert(0) += a * b;
            }
        }
        IntMatrix::new(
            self.rows,
            other.cols,
            acc.into_iter()
                .filter(|&(_, v)| v != 0)
                .map(|((i, j), v)| (i, j, v))
                .collect(),
        )
    }

    pub fn transpose(&self) -> IntMatrix {
        IntMatrix::new(
            self.cols,
            self.rows,
            self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, _, v)| v == 0)
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let trip: Vec<_> = self.entries.iter().map(|&(r, c, v)| (r, c, v as f64)).collect();
        SparseMatrix::from_triplets(self.rows, self.cols, &trip)
    }
}

/// Node-to-edge (`b1`) and edge-to-triangle (`b2`) incidence matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceMatrices {
    pub b1: IntMatrix,
    pub b2: IntMatrix,
}
