//! Seeded random generation of states, unitaries, channels and
//! distributions for tests and solver restarts.
//!
//! Everything is parameterized over the caller's generator; call sites use
//! `ChaCha8Rng` so that streams are stable across platforms and releases.

use num_complex::Complex64;
use rand::Rng;

use crate::channels::{DensityOperator, KrausChannel};
use crate::linalg::{self, ComplexMatrix};

/// One standard normal sample via Box-Muller.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let mut u: f64 = rng.gen();
    while u <= f64::MIN_POSITIVE {
        u = rng.gen();
    }
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng))
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, complex_gaussian(rng));
        }
    }
    m
}

/// Haar-like random pure state from a normalized Gaussian vector.
pub fn pure_state<R: Rng>(rng: &mut R, dim: usize) -> DensityOperator {
    let v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    DensityOperator::pure(&v).expect("Gaussian vector is nonzero")
}

/// Full-rank random density operator `G G† / tr(G G†)`.
pub fn density_operator<R: Rng>(rng: &mut R, dim: usize) -> DensityOperator {
    let g = gaussian_matrix(rng, dim, dim);
    let m = g.matmul(&g.adjoint());
    let trace = m.trace().re;
    DensityOperator::new(m.scaled_re(1.0 / trace)).expect("Gram matrix is a valid state")
}

/// Random unitary via modified Gram-Schmidt on a Gaussian matrix.
pub fn unitary<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, dim, dim);
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|j| (0..dim).map(|i| g.at(i, j)).collect())
        .collect();
    for j in 0..dim {
        for k in 0..j {
            let overlap: Complex64 = (0..dim).map(|i| cols[k][i].conj() * cols[j][i]).sum();
            for i in 0..dim {
                let correction = overlap * cols[k][i];
                cols[j][i] -= correction;
            }
        }
        let norm: f64 = cols[j].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in cols[j].iter_mut() {
            *a /= norm;
        }
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Random channel from a stacked Gaussian block normalized by the polar
/// factor: `A_i = B_i (Σ B_k† B_k)^{-1/2}`.
pub fn kraus_channel<R: Rng>(
    rng: &mut R,
    dim_in: usize,
    dim_out: usize,
    kraus_count: usize,
) -> KrausChannel {
    assert!(
        kraus_count * dim_out >= dim_in,
        "channel would not be trace-preserving"
    );
    let blocks: Vec<ComplexMatrix> = (0..kraus_count)
        .map(|_| gaussian_matrix(rng, dim_out, dim_in))
        .collect();
    let mut gram = ComplexMatrix::zeros(dim_in, dim_in);
    for b in &blocks {
        gram = gram.add(&b.adjoint().matmul(b));
    }
    let inv_sqrt = inverse_sqrt(&gram);
    let kraus = blocks.iter().map(|b| b.matmul(&inv_sqrt)).collect();
    KrausChannel::new(dim_in, dim_out, kraus).expect("polar normalization preserves trace")
}

fn inverse_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    let spectrum = linalg::hermitian_eig(m).expect("Gram matrix is Hermitian");
    let v = &spectrum.eigenvectors;
    let dim = m.rows();
    let mut scaled = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        let l = spectrum.eigenvalues[j];
        assert!(l > 1e-10, "Gram matrix is numerically singular");
        let inv = 1.0 / l.sqrt();
        for i in 0..dim {
            scaled.set(i, j, v.at(i, j) * inv);
        }
    }
    scaled.matmul(&v.adjoint())
}

/// Random probability vector, uniform on the simplex.
pub fn distribution<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim)
        .map(|_| {
            let mut u: f64 = rng.gen();
            while u <= f64::MIN_POSITIVE {
                u = rng.gen();
            }
            -u.ln()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|&x| x / total).collect()
}

/// Row-stochastic matrix with independent uniform rows.
pub fn stochastic_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| distribution(rng, cols)).collect()
}

/// Mixed bag of probe states: alternating pure and full-rank mixed.
pub fn probe_states<R: Rng>(rng: &mut R, dim: usize, count: usize) -> Vec<DensityOperator> {
    (0..count)
        .map(|i| {
            if i % 2 == 0 {
                pure_state(rng, dim)
            } else {
                density_operator(rng, dim)
            }
        })
        .collect()
}
