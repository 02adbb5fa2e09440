//! Dense row-major linear algebra for desk-scale frame computations.
//!
//! Everything here is double precision and allocation-light: Gram matrices,
//! Gram–Schmidt and Löwdin orthonormalization, and a cyclic Jacobi solver for
//! symmetric eigenproblems. Matrices up to a few hundred rows are the target.

use std::fmt;

use crate::error::{Error, Result};

/// Maximum number of full Jacobi sweeps before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal convergence threshold, relative to the Frobenius norm.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
/// Symmetry check threshold for `sym_eigen` inputs.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting empty shapes, a length
    /// mismatch, and non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDims(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Malformed(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(n_rows, n_cols, rows.concat())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n_cols = columns.len();
        let n_rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::DimensionMismatch("ragged columns".into()));
        }
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in 0..n_rows {
            data.extend(columns.iter().map(|c| c[r]));
        }
        Self::from_vec(n_rows, n_cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute entrywise difference. Shapes must agree.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

/// Symmetric eigendecomposition: `a = V diag(eigenvalues) Vᵀ`.
#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Nondecreasing.
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: Matrix,
}

impl SymEigen {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn reconstruct(&self) -> Matrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n)
                    .map(|k| v.get(i, k) * self.eigenvalues[k] * v.get(j, k))
                    .sum();
                out.set(i, j, s);
                out.set(j, i, s);
            }
        }
        out
    }
}

/// Threshold below which the smallest Gram eigenvalue marks `s` columns as
/// numerically dependent.
pub fn rank_tolerance(s: usize, lambda_max: f64) -> f64 {
    s as f64 * f64::EPSILON * lambda_max
}

/// `aᵀa`, exactly symmetric.
pub fn gram(a: &Matrix) -> Matrix {
    let n = a.cols();
    let mut g = Matrix::zeros(n, n);
    for r in 0..a.rows() {
        let row = a.row(r);
        for i in 0..n {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..n {
                g.data[i * n + j] += ri * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g.data[i * n + j] = g.data[j * n + i];
        }
    }
    g
}

/// `aᵀb` for two matrices with the same row count.
pub fn cross_gram(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "row counts differ: {} vs {}",
            a.rows(),
            b.rows()
        )));
    }
    let (p, q) = (a.cols(), b.cols());
    let mut out = Matrix::zeros(p, q);
    for r in 0..a.rows() {
        let (ra, rb) = (a.row(r), b.row(r));
        for i in 0..p {
            let x = ra[i];
            let dst = &mut out.data[i * q..(i + 1) * q];
            for (d, &y) in dst.iter_mut().zip(rb) {
                *d += x * y;
            }
        }
    }
    Ok(out)
}

/// `u uᵀ`, the orthogonal projector onto the column span of a
/// column-orthonormal `u`.
pub fn projector(u: &Matrix) -> Matrix {
    gram(&u.transpose())
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let scale = a.max_abs().max(1.0);
    for i in 0..n {
        for j in 0..i {
            let deviation = (a.get(i, j) - a.get(j, i)).abs();
            if deviation > SYMMETRY_TOLERANCE * scale {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    deviation,
                });
            }
        }
    }

    // work on the symmetrized copy
    let mut w = a.clone();
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (w.get(i, j) + w.get(j, i));
            w.set(i, j, m);
            w.set(j, i, m);
        }
    }
    let mut v = Matrix::identity(n);
    let threshold = JACOBI_TOLERANCE * w.frobenius_norm();

    let max_off_diag = |w: &Matrix| {
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                m = m.max(w.get(i, j).abs());
            }
        }
        m
    };

    let mut converged = max_off_diag(&w) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (w.get(p, p), w.get(q, q));
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                w.set(p, p, app - t * apq);
                w.set(q, q, aqq + t * apq);
                w.set(p, q, 0.0);
                w.set(q, p, 0.0);
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let (akp, akq) = (w.get(k, p), w.get(k, q));
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    w.set(k, p, new_kp);
                    w.set(p, k, new_kp);
                    w.set(k, q, new_kq);
                    w.set(q, k, new_kq);
                }
                for k in 0..n {
                    let (vkp, vkq) = (v.get(k, p), v.get(k, q));
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
        sweeps += 1;
        converged = max_off_diag(&w) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w.get(i, i).total_cmp(&w.get(j, j)));
    let eigenvalues = order.iter().map(|&i| w.get(i, i)).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors.set(k, dst, v.get(k, src));
        }
    }
    Ok(SymEigen {
        eigenvalues,
        eigenvectors,
    })
}

fn check_tall(a: &Matrix) -> Result<()> {
    if a.rows() < a.cols() {
        return Err(Error::InvalidDims(format!(
            "need rows >= cols to orthonormalize, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(())
}

fn check_rank(eig: &SymEigen) -> Result<f64> {
    let tolerance = rank_tolerance(eig.eigenvalues.len(), eig.max());
    if eig.min() <= tolerance {
        return Err(Error::RankDeficient {
            min_eigenvalue: eig.min(),
            tolerance,
        });
    }
    Ok(tolerance)
}

/// Orthonormal basis of the column span of `a`, in Gram–Schmidt order.
///
/// Modified Gram–Schmidt with one reorthogonalization pass; the diagonal of
/// the implied `R` factor is positive, so orthonormal input comes back
/// unchanged.
pub fn qr_orthonormalize(a: &Matrix) -> Result<Matrix> {
    check_tall(a)?;
    check_rank(&sym_eigen(&gram(a))?)?;

    let mut q = a.columns();
    for j in 0..q.len() {
        for _pass in 0..2 {
            for i in 0..j {
                let (done, rest) = q.split_at_mut(j);
                let proj: f64 = done[i].iter().zip(&rest[0]).map(|(x, y)| x * y).sum();
                for (y, x) in rest[0].iter_mut().zip(&done[i]) {
                    *y -= proj * x;
                }
            }
        }
        let norm = q[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        q[j].iter_mut().for_each(|x| *x /= norm);
    }
    Matrix::from_columns(&q)
}

/// Löwdin orthonormalization: returns `X G^{-1/2}` with `G = XᵀX`.
///
/// On the span of the columns this coincides with applying `(S†)^{1/2}` to
/// each column, where `S = Σ xⱼxⱼᵀ`. The inverse square root is taken from
/// the eigendecomposition of the small `s×s` Gram matrix.
pub fn pinv_sqrt_apply(vectors: &Matrix) -> Result<Matrix> {
    check_tall(vectors)?;
    let eig = sym_eigen(&gram(vectors))?;
    let floor = check_rank(&eig)?;

    let s = vectors.cols();
    let inv_sqrt: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| 1.0 / l.max(floor).sqrt())
        .collect();
    let v = &eig.eigenvectors;
    let mut g_inv_sqrt = Matrix::zeros(s, s);
    for i in 0..s {
        for j in i..s {
            let x: f64 = (0..s).map(|k| v.get(i, k) * inv_sqrt[k] * v.get(j, k)).sum();
            g_inv_sqrt.set(i, j, x);
            g_inv_sqrt.set(j, i, x);
        }
    }
    vectors.matmul(&g_inv_sqrt)
}

/// [`pinv_sqrt_apply`] followed by one Newton–Schulz step `U(3I − UᵀU)/2`
/// toward the same polar factor. The eigensolver residual is amplified by the
/// condition number of the Gram matrix; the extra step squares that error.
pub fn lowdin_orthonormalize(vectors: &Matrix) -> Result<Matrix> {
    let u = pinv_sqrt_apply(vectors)?;
    let s = u.cols();
    let mut step = gram(&u);
    step.scale(-0.5);
    for i in 0..s {
        step.set(i, i, step.get(i, i) + 1.5);
    }
    u.matmul(&step)
}

/// `max |aᵀa − I|`, the orthonormality defect of the columns of `a`.
pub fn orthonormality_defect(a: &Matrix) -> f64 {
    let g = gram(a);
    g.max_abs_diff(&Matrix::identity(a.cols()))
}
