//! Dense complex-matrix substrate: Hermitian eigendecomposition (cyclic
//! Jacobi), trace norm, tensor products and partial traces.
//!
//! Matrices are stored row-major. Dimensions in this toolkit stay small
//! (tens, not hundreds), so the Jacobi solver is the right trade-off:
//! simple, accurate to machine precision, and free of external
//! dependencies. Convergence is declared when the off-diagonal Frobenius
//! mass drops below 1e-12 (relative to the matrix scale).

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-9;

const JACOBI_OFF_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Zero matrix of the given shape. Panics on a zero dimension; every
    /// matrix in the toolkit has at least one row and one column.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        ComplexMatrix {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Builds a matrix entry by entry from `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = ComplexMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from nested real/imaginary pairs; rows must be equal length.
    pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::ShapeMismatch {
                reason: "matrix must have at least one row and one column".into(),
            });
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch {
                reason: "matrix rows have unequal lengths".into(),
            });
        }
        Ok(ComplexMatrix::from_fn(rows.len(), cols, |i, j| {
            Complex64::new(rows[i][j].0, rows[i][j].1)
        }))
    }

    /// Diagonal matrix from real entries.
    pub fn diag(values: &[f64]) -> Self {
        let mut m = ComplexMatrix::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m.set(i, i, Complex64::new(*v, 0.0));
        }
        m
    }

    /// Outer product `v w†` of two complex vectors.
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        ComplexMatrix::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.at(j, i).conj())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = self.clone();
        for (e, o) in m.entries.iter_mut().zip(&other.entries) {
            *e += o;
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = self.clone();
        for (e, o) in m.entries.iter_mut().zip(&other.entries) {
            *e -= o;
        }
        m
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut m = self.clone();
        for e in m.entries.iter_mut() {
            *e *= factor;
        }
        m
    }

    pub fn scaled_re(&self, factor: f64) -> Self {
        self.scaled(Complex64::new(factor, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut m = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.at(i, k);
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = m.at(i, j) + aik * other.at(k, j);
                    m.set(i, j, v);
                }
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.at(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entrywise absolute difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm of `m − m†`, the quantity the Hermiticity tolerance
    /// is measured on.
    pub fn hermiticity_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut sum = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                sum += (self.at(i, j) - self.at(j, i).conj()).norm_sqr();
            }
        }
        sum.sqrt()
    }

    /// `(m + m†)/2`.
    pub fn hermitized(&self) -> Self {
        assert!(self.is_square());
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| {
            (self.at(i, j) + self.at(j, i).conj()) * 0.5
        })
    }

    fn off_diagonal_frobenius(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    sum += self.at(i, j).norm_sqr();
                }
            }
        }
        sum.sqrt()
    }
}

/// Checks Hermiticity within the relative tolerance and returns the
/// symmetrized matrix `(m + m†)/2` to suppress numerical drift downstream.
pub fn require_hermitian(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let scale = m.frobenius_norm().max(1.0);
    let defect = m.hermiticity_defect();
    if defect > HERMITICITY_TOL * scale {
        return Err(Error::NotHermitian {
            deviation: defect,
            tolerance: HERMITICITY_TOL * scale,
        });
    }
    Ok(m.hermitized())
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching unitary of column eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianSpectrum {
    /// Rebuilds `V diag(λ) V†`; used by the reconstruction invariant tests.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v.at(i, k) * self.eigenvalues[k] * v.at(j, k).conj())
                .sum()
        })
    }
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// Each sweep annihilates every off-diagonal element once via a complex
/// Givens rotation (a phase removal composed with a real Jacobi rotation);
/// quadratic convergence makes a handful of sweeps enough at these sizes.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianSpectrum> {
    let a0 = require_hermitian(m)?;
    let n = a0.rows();
    let mut a = a0;
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(1.0);
    let tol = JACOBI_OFF_TOL * scale;
    let elem_tol = tol / (2.0 * n as f64);

    let mut converged = a.off_diagonal_frobenius() <= tol;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                let b = apq.norm();
                if b <= elem_tol {
                    continue;
                }
                let app = a.at(p, p).re;
                let aqq = a.at(q, q).re;
                let phase = Complex64::from_polar(1.0, -apq.arg());
                let tau = (aqq - app) / (2.0 * b);
                let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Rotation G: G[p,p]=c, G[p,q]=s, G[q,p]=-s·φ̄, G[q,q]=c·φ̄.
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    a.set(k, p, akp * c - akq * s * phase);
                    a.set(k, q, akp * s + akq * c * phase);
                }
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    a.set(p, k, apk * c - aqk * s * phase.conj());
                    a.set(q, k, apk * s + aqk * c * phase.conj());
                }
                a.set(p, q, Complex64::new(0.0, 0.0));
                a.set(q, p, Complex64::new(0.0, 0.0));
                let dp = a.at(p, p);
                let dq = a.at(q, q);
                a.set(p, p, Complex64::new(dp.re, 0.0));
                a.set(q, q, Complex64::new(dq.re, 0.0));
                for k in 0..n {
                    let vkp = v.at(k, p);
                    let vkq = v.at(k, q);
                    v.set(k, p, vkp * c - vkq * s * phase);
                    v.set(k, q, vkp * s + vkq * c * phase);
                }
            }
        }
        sweeps += 1;
        converged = a.off_diagonal_frobenius() <= tol;
    }
    if !converged {
        return Err(Error::EigNotConverged {
            sweeps,
            off_diagonal: a.off_diagonal_frobenius(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.at(i, i).re.partial_cmp(&a.at(j, j).re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.at(i, i).re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v.at(i, order[j]));
    Ok(HermitianSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Trace norm `Σ|λ_i|` of a Hermitian matrix.
///
/// The toolkit restricts `‖·‖₁` to Hermitian arguments; every use is a
/// difference of states or another Hermitian residual.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    let spectrum = hermitian_eig(m)?;
    Ok(spectrum.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// Kronecker product with index convention
/// `(i_a·rows_b + i_b, j_a·cols_b + j_b)`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca) = (a.rows(), a.cols());
    let (rb, cb) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(ra * rb, ca * cb, |i, j| {
        a.at(i / rb, j / cb) * b.at(i % rb, j % cb)
    })
}

/// Which tensor factor `partial_trace` keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

/// Partial trace over one factor of a bipartite operator on
/// `dims.0 · dims.1`. The trace of the result equals the trace of the input.
pub fn partial_trace(
    m: &ComplexMatrix,
    dims: (usize, usize),
    keep: Factor,
) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if m.rows() != d1 * d2 {
        return Err(Error::DimensionMismatch {
            expected: d1 * d2,
            got: m.rows(),
        });
    }
    let out = match keep {
        Factor::First => ComplexMatrix::from_fn(d1, d1, |i, j| {
            (0..d2).map(|k| m.at(i * d2 + k, j * d2 + k)).sum()
        }),
        Factor::Second => ComplexMatrix::from_fn(d2, d2, |i, j| {
            (0..d1).map(|k| m.at(k * d2 + i, k * d2 + j)).sum()
        }),
    };
    Ok(out)
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            let row: Vec<[f64; 2]> = (0..self.cols)
                .map(|j| {
                    let e = self.at(i, j);
                    [e.re, e.im]
                })
                .collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        if raw.is_empty() || raw[0].is_empty() {
            return Err(de::Error::custom(
                "matrix must have at least one row and one column",
            ));
        }
        let cols = raw[0].len();
        if raw.iter().any(|r| r.len() != cols) {
            return Err(de::Error::custom("matrix rows have unequal lengths"));
        }
        Ok(ComplexMatrix::from_fn(raw.len(), cols, |i, j| {
            Complex64::new(raw[i][j][0], raw[i][j][1])
        }))
    }
}
