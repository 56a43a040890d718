//! Dense linear algebra used by the solvers and the ball maximizer.
//!
//! Everything here is small and allocation-light: row-major matrices, a
//! cyclic Jacobi eigensolver for symmetric positive semidefinite input, and
//! the closed-form extrema of a linear function over an L2 ball.

use crate::error::{Error, Result};

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims("DenseMatrix::new", rows * cols, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("DenseMatrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

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
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::dims("DenseMatrix::from_rows", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
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
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    /// `self * v`
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ * v`
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                axpy(vi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::dims("DenseMatrix::matmul", self.cols, other.rows));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                axpy(a, orow, dst);
            }
        }
        Ok(out)
    }

    /// `selfᵀ self`
    pub fn gram(&self) -> DenseMatrix {
        let k = self.cols;
        let mut g = Self::zeros(k, k);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..k {
                if r[a] == 0.0 {
                    continue;
                }
                for b in a..k {
                    g.data[a * k + b] += r[a] * r[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                g.data[a * k + b] = g.data[b * k + a];
            }
        }
        g
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Rejects non-square input and entries whose mirror differs by more than
    /// `rel_tol * max(1, max|a|)`.
    pub fn check_symmetric(&self, rel_tol: f64) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let tol = rel_tol * self.max_abs().max(1.0);
        for i in 0..self.rows {
            for j in 0..i {
                let dev = (self.get(i, j) - self.get(j, i)).abs();
                if dev > tol {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        deviation: dev,
                    });
                }
            }
        }
        Ok(())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `A = Qᵀ diag(phi) Q`; the rows of `q` are the eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub q: DenseMatrix,
    pub phi: Vec<f64>,
}

impl EigenDecomposition {
    /// Eigenvector `i` (row `i` of `Q`).
    pub fn vector(&self, i: usize) -> &[f64] {
        self.q.row(i)
    }

    /// `Qᵀ diag(phi) Q`
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.phi.len();
        let mut a = DenseMatrix::zeros(n, n);
        for (k, &phi) in self.phi.iter().enumerate() {
            let v = self.q.row(k);
            for i in 0..n {
                let s = phi * v[i];
                if s == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a.data[i * n + j] += s * v[j];
                }
            }
        }
        a
    }
}

pub const JACOBI_OFF_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const PSD_CLIP_TOL: f64 = 1e-10;

/// Eigendecomposition of a symmetric positive semidefinite matrix by cyclic
/// Jacobi rotations.
///
/// Eigenvalues come back in the order the rotations leave them (unsorted).
/// Slightly negative eigenvalues produced by roundoff are clipped to zero;
/// anything below `-PSD_CLIP_TOL * max(1, max|a|)` is rejected.
pub fn sym_eigendecompose(a: &DenseMatrix) -> Result<EigenDecomposition> {
    a.check_symmetric(SYMMETRY_TOL)?;
    let n = a.rows();
    let scale = a.max_abs().max(1.0);
    let (mut phi, v) = jacobi(a)?;
    for p in phi.iter_mut() {
        if *p < 0.0 {
            if *p > -PSD_CLIP_TOL * scale {
                *p = 0.0;
            } else {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: *p });
            }
        }
    }
    // columns of V are eigenvectors; Q = Vᵀ
    let q = v.transpose();
    debug_assert_eq!(q.rows(), n);
    Ok(EigenDecomposition { q, phi })
}

fn jacobi(a0: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a0.rows();
    let mut a = a0.clone();
    // symmetrize exactly so rotations act on a true symmetric matrix
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, m);
            a.set(j, i, m);
        }
    }
    let mut v = DenseMatrix::identity(n);
    let frob = a.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_OFF_TOL * frob;

    let off_norm = |a: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a.get(i, j) * a.get(i, j);
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= threshold || off == 0.0 {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                } else {
                    0.0
                };
                if t == 0.0 {
                    continue;
                }
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let phi = (0..n).map(|i| a.get(i, i)).collect();
    Ok((phi, v))
}

/// Extrema of `aᵀv` over `‖v - c‖₂ ≤ S`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearExtrema {
    pub min: f64,
    pub max: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
}

/// Closed-form minimum and maximum of a linear function over an L2 ball,
/// attained at `c ∓ (S/‖a‖)a`. A zero direction yields `0` at the center.
pub fn ball_linear_extrema(a: &[f64], c: &[f64], radius: f64) -> Result<LinearExtrema> {
    if a.len() != c.len() {
        return Err(Error::dims("ball_linear_extrema", c.len(), a.len()));
    }
    if !(radius >= 0.0) {
        return Err(Error::InvalidBall(format!("radius {radius} must be nonnegative")));
    }
    let na = norm2(a);
    if na == 0.0 {
        return Ok(LinearExtrema {
            min: 0.0,
            max: 0.0,
            argmin: c.to_vec(),
            argmax: c.to_vec(),
        });
    }
    let center = dot(a, c);
    let spread = radius * na;
    let step = radius / na;
    let argmin = c.iter().zip(a).map(|(ci, ai)| ci - step * ai).collect();
    let argmax = c.iter().zip(a).map(|(ci, ai)| ci + step * ai).collect();
    Ok(LinearExtrema {
        min: center - spread,
        max: center + spread,
        argmin,
        argmax,
    })
}
