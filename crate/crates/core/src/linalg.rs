//! Small dense and sparse matrix kernels.
//!
//! Matrices in this crate are at most a few hundred rows, so a row-major
//! `Vec<f64>` with straightforward loops is enough. The symmetric eigensolver
//! is a cyclic Jacobi iteration.

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim_mismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(dim_mismatch("ragged rows"));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    /// Single-column matrix.
    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        let mut out = Mat::zeros(self.rows, other.cols);
        self.matmul_acc(other, &mut out)?;
        Ok(out)
    }

    /// `out += self * other`.
    pub fn matmul_acc(&self, other: &Mat, out: &mut Mat) -> Result<()> {
        if self.cols != other.rows || out.rows != self.rows || out.cols != other.cols {
            return Err(dim_mismatch(format!(
                "matmul {:?} x {:?} -> {:?}",
                self.shape(),
                other.shape(),
                out.shape()
            )));
        }
        let n = other.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(())
    }

    /// `out += selfᵀ * other`.
    pub fn tr_matmul_acc(&self, other: &Mat, out: &mut Mat) -> Result<()> {
        if self.rows != other.rows || out.rows != self.cols || out.cols != other.cols {
            return Err(dim_mismatch(format!(
                "transposed matmul {:?}ᵀ x {:?} -> {:?}",
                self.shape(),
                other.shape(),
                out.shape()
            )));
        }
        let n = other.cols;
        for r in 0..self.rows {
            let b_row = other.row(r);
            for (i, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(())
    }

    /// `out += self * otherᵀ`.
    pub fn matmul_tr_acc(&self, other: &Mat, out: &mut Mat) -> Result<()> {
        if self.cols != other.cols || out.rows != self.rows || out.cols != other.rows {
            return Err(dim_mismatch(format!(
                "matmul {:?} x {:?}ᵀ -> {:?}",
                self.shape(),
                other.shape(),
                out.shape()
            )));
        }
        for i in 0..self.rows {
            let a_row = self.row(i);
            for j in 0..other.rows {
                out.data[i * out.cols + j] += dot(a_row, other.row(j));
            }
        }
        Ok(())
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(dim_mismatch(format!("matvec {:?} x {}", self.shape(), x.len())));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(dim_mismatch(format!(
                "transposed matvec {:?} x {}",
                self.shape(),
                x.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        if self.shape() != other.shape() {
            return Err(dim_mismatch("matrix add"));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Mat { data, ..*self })
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Mat) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(dim_mismatch("matrix axpy"));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest `|A_ij - A_ji|`; `None` when the matrix is not square.
    pub fn asymmetry(&self) -> Option<f64> {
        if self.rows != self.cols {
            return None;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        Some(worst)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Columns `idx` of `self`, in order.
    pub fn select_cols(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (k, &j) in idx.iter().enumerate() {
                out[(i, k)] = self[(i, j)];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        let mut entry_rows = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                entry_rows.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in entry_rows.into_iter().zip(col_idx).zip(values) {
            if v != 0.0 {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        }
    }

    pub fn from_dense(m: &Mat) -> Self {
        let mut trip = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m[(i, j)] != 0.0 {
                    trip.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), &trip)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// Nonzeros of row `i` as `(col, value)`.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                trip.push((j, i, v));
            }
        }
        SparseMatrix::from_triplets(self.cols, self.rows, &trip)
    }

    /// Sparse-sparse product.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(dim_mismatch("sparse matmul"));
        }
        let mut trip = Vec::new();
        let mut acc = vec![0.0; other.cols];
        let mut touched = Vec::new();
        for i in 0..self.rows {
            for (k, a) in self.row_entries(i) {
                for (j, b) in other.row_entries(k) {
                    if acc[j] == 0.0 {
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &j in &touched {
                if acc[j] != 0.0 {
                    trip.push((i, j, acc[j]));
                }
                acc[j] = 0.0;
            }
            touched.clear();
        }
        Ok(SparseMatrix::from_triplets(self.rows, other.cols, &trip))
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(dim_mismatch("sparse add"));
        }
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for m in [self, other] {
            for i in 0..m.rows {
                trip.extend(m.row_entries(i).map(|(j, v)| (i, j, v)));
            }
        }
        Ok(SparseMatrix::from_triplets(self.rows, self.cols, &trip))
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(dim_mismatch("sparse matvec"));
        }
        Ok((0..self.rows)
            .map(|i| self.row_entries(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }

    /// `self * x` for a dense multi-column `x`.
    pub fn matmul_dense(&self, x: &Mat) -> Result<Mat> {
        if x.rows() != self.cols {
            return Err(dim_mismatch(format!(
                "sparse {}x{} times dense {:?}",
                self.rows,
                self.cols,
                x.shape()
            )));
        }
        let f = x.cols();
        let mut out = Mat::zeros(self.rows, f);
        for i in 0..self.rows {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            let out_row = &mut out.as_mut_slice()[i * f..(i + 1) * f];
            for (&j, &v) in self.col_idx[span.clone()].iter().zip(&self.values[span]) {
                for (o, &xv) in out_row.iter_mut().zip(x.row(j)) {
                    *o += v * xv;
                }
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.to_dense().asymmetry().unwrap_or(f64::INFINITY)
    }
}

/// Symmetric eigendecomposition result.
#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: Mat,
    pub sweeps: usize,
}

/// Convergence controls for [`eig_sym`].
#[derive(Clone, Copy, Debug)]
pub struct JacobiOptions {
    /// Stop once the off-diagonal Frobenius norm falls below
    /// `threshold * ||M||_F`.
    pub threshold: f64,
    pub max_sweeps: usize,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self {
            threshold: 1e-12,
            max_sweeps: 100,
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Eigenvalues are returned ascending with matching orthonormal eigenvector
/// columns. `tol` is the accepted asymmetry of the input.
pub fn eig_sym(m: &Mat, tol: f64) -> Result<SymEigen> {
    eig_sym_with(m, tol, JacobiOptions::default())
}

pub fn eig_sym_with(m: &Mat, tol: f64, opts: JacobiOptions) -> Result<SymEigen> {
    let asym = m
        .asymmetry()
        .ok_or_else(|| dim_mismatch(format!("eig_sym of non-square {:?}", m.shape())))?;
    if asym > tol.max(1e-12) {
        return Err(dim_mismatch(format!(
            "eig_sym of non-symmetric matrix (asymmetry {asym:e})"
        )));
    }
    let n = m.rows();
    let mut a = m.clone();
    // Work on the exact symmetrization so rotations stay consistent.
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
    let mut v = Mat::identity(n);
    let scale = a.frobenius();
    let target = opts.threshold * scale.max(f64::MIN_POSITIVE);

    let off_norm = |a: &Mat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[(i, j)] * a[(i, j)];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    let mut off = off_norm(&a);
    while off > target {
        if sweeps == opts.max_sweeps {
            return Err(Error::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // Skip rotations that cannot change the diagonal in floating point.
                if sweeps > 4 && apq.abs() < 1e-3 * f64::EPSILON * (app.abs().min(aqq.abs())) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s, t, apq);
            }
        }
        off = off_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = v.select_cols(&order);
    Ok(SymEigen {
        values,
        vectors,
        sweeps,
    })
}

#[allow(clippy::too_many_arguments)]
fn rotate(a: &mut Mat, v: &mut Mat, p: usize, q: usize, c: f64, s: f64, t: f64, apq: f64) {
    let n = a.rows();
    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a[(k, p)] = new_kp;
        a[(p, k)] = new_kp;
        a[(k, q)] = new_kq;
        a[(q, k)] = new_kq;
    }
    for k in 0..n {
        let row = v.row_mut(k);
        let vkp = row[p];
        let vkq = row[q];
        row[p] = c * vkp - s * vkq;
        row[q] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn residual(m: &Mat, e: &SymEigen) -> (f64, f64) {
        let mu = m.matmul(&e.vectors).unwrap();
        let ul = e.vectors.matmul(&Mat::diag(&e.values)).unwrap();
        let mut gram = Mat::zeros(m.cols(), m.cols());
        e.vectors.tr_matmul_acc(&e.vectors, &mut gram).unwrap();
        (mu.max_abs_diff(&ul), gram.max_abs_diff(&Mat::identity(m.cols())))
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let m = Mat::identity(4);
        let e = eig_sym(&m, 1e-12).unwrap();
        assert!(e.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(m.matmul(&e.vectors).unwrap().max_abs_diff(&e.vectors) < 1e-15);
    }

    #[test]
    fn diagonal_is_sorted() {
        let m = Mat::diag(&[3.0, 1.0, 2.0]);
        let e = eig_sym(&m, 1e-12).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        // permutation eigenvectors
        assert_eq!(e.vectors.col(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(e.vectors.col(1), vec![0.0, 0.0, 1.0]);
        assert_eq!(e.vectors.col(2), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn random_matrices_have_small_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 5, 17, 40] {
            let m = random_symmetric(n, &mut rng);
            let e = eig_sym(&m, 1e-12).unwrap();
            let (res, orth) = residual(&m, &e);
            assert!(res < 1e-10, "n={n} residual {res}");
            assert!(orth < 1e-10, "n={n} orth {orth}");
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(eig_sym(&m, 1e-12), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn sweep_cap_reports_no_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_symmetric(12, &mut rng);
        let opts = JacobiOptions {
            threshold: 1e-12,
            max_sweeps: 1,
        };
        assert!(matches!(
            eig_sym_with(&m, 1e-12, opts),
            Err(Error::NoConvergence { sweeps: 1, .. })
        ));
    }

    #[test]
    fn sparse_dense_products_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut d = Mat::zeros(6, 5);
        for i in 0..6 {
            for j in 0..5 {
                if rng.gen_bool(0.4) {
                    d[(i, j)] = rng.gen_range(-2.0..2.0);
                }
            }
        }
        let s = SparseMatrix::from_dense(&d);
        assert_eq!(s.to_dense(), d);
        let x = Mat::from_vec(5, 3, (0..15).map(|k| k as f64 - 7.0).collect()).unwrap();
        assert!(s.matmul_dense(&x).unwrap().max_abs_diff(&d.matmul(&x).unwrap()) < 1e-12);
        let st = s.transpose();
        let prod = st.matmul(&s).unwrap().to_dense();
        assert!(prod.max_abs_diff(&d.transpose().matmul(&d).unwrap()) < 1e-12);
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let s = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, -1.0), (1, 0, 2.0), (1, 0, 3.0)]);
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.to_dense()[(1, 0)], 5.0);
    }
}
