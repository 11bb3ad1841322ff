//! Entropic and information quantities, all in bits (base-2 logarithms).
//!
//! Eigenvalues in `[-1e-9, 0)` are clamped to zero before entropy
//! evaluation so that numerical PSD drift cannot produce NaN; anything
//! below `-1e-9` is reported as a positivity error.

use crate::channels::{self, CQSource, DensityOperator, KrausChannel};
use crate::linalg::{self, ComplexMatrix, Factor};
use crate::{Error, Result};

/// Eigenvalues this far below zero are treated as numerical noise.
pub const EIG_CLAMP_TOL: f64 = 1e-9;

/// Weighted set of states on one Hilbert space.
#[derive(Debug, Clone)]
pub struct Ensemble {
    prior: Vec<f64>,
    states: Vec<DensityOperator>,
}

impl Ensemble {
    pub fn new(prior: Vec<f64>, states: Vec<DensityOperator>) -> Result<Self> {
        if prior.len() != states.len() || prior.is_empty() {
            return Err(Error::ShapeMismatch {
                reason: format!(
                    "ensemble needs equally many weights ({}) and states ({}), at least one",
                    prior.len(),
                    states.len()
                ),
            });
        }
        channels::validate_distribution(&prior, 1e-12)?;
        let dim = states[0].dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(Ensemble { prior, states })
    }

    /// Pushes a source through a channel: `{P(x), N(F(x))}`.
    pub fn from_source_through(src: &CQSource, ch: &KrausChannel) -> Result<Ensemble> {
        let states = src
            .states()
            .iter()
            .map(|s| channels::apply(ch, s))
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(src.prior().to_vec(), states)
    }

    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    /// Barycenter `Σ P(x) ρ_x`.
    pub fn average(&self) -> DensityOperator {
        let dim = self.dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (p, s) in self.prior.iter().zip(&self.states) {
            if *p > 0.0 {
                acc = acc.add(&s.matrix().scaled_re(*p));
            }
        }
        DensityOperator::new_unchecked(acc)
    }
}

fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigenvalues {
        if l < -EIG_CLAMP_TOL {
            return Err(Error::NotPsd { min_eigenvalue: l });
        }
        if l > 0.0 {
            s -= l * l.log2();
        }
    }
    Ok(s.max(0.0))
}

/// Von Neumann entropy `S(ρ) = −Σ λ log λ` with `0·log 0 ≡ 0`.
pub fn vn_entropy(rho: &DensityOperator) -> Result<f64> {
    vn_entropy_matrix(rho.matrix())
}

/// Entropy of a Hermitian matrix assumed to be a state up to tolerances.
pub(crate) fn vn_entropy_matrix(m: &ComplexMatrix) -> Result<f64> {
    let spectrum = linalg::hermitian_eig(m)?;
    entropy_from_eigenvalues(&spectrum.eigenvalues)
}

/// Binary entropy `h(ν) = −ν log ν − (1−ν) log(1−ν)`.
pub fn binary_entropy(nu: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::OutOfRange {
            what: "binary entropy argument",
            value: nu,
        });
    }
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    Ok((term(nu) + term(1.0 - nu)).max(0.0))
}

/// Shannon entropy of a probability vector.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    channels::validate_distribution(p, 1e-9)?;
    let mut s = 0.0;
    for &x in p {
        if x > 0.0 {
            s -= x * x.log2();
        }
    }
    Ok(s.max(0.0))
}

/// Holevo quantity `χ = S(Σ P(x) ρ_x) − Σ P(x) S(ρ_x)`, clamped at zero
/// when the numerical value is within `-1e-9` of it.
pub fn holevo(e: &Ensemble) -> Result<f64> {
    let mats: Vec<&ComplexMatrix> = e.states.iter().map(|s| s.matrix()).collect();
    chi_matrices(&e.prior, &mats)
}

/// Holevo quantity on raw matrices; assumes the inputs are valid states.
pub(crate) fn chi_matrices(prior: &[f64], states: &[&ComplexMatrix]) -> Result<f64> {
    let dim = states[0].rows();
    let mut avg = ComplexMatrix::zeros(dim, dim);
    let mut mean_entropy = 0.0;
    for (&p, m) in prior.iter().zip(states) {
        if p > 0.0 {
            avg = avg.add(&m.scaled_re(p));
            mean_entropy += p * vn_entropy_matrix(m)?;
        }
    }
    let chi = vn_entropy_matrix(&avg)? - mean_entropy;
    if chi < 0.0 && chi >= -EIG_CLAMP_TOL {
        return Ok(0.0);
    }
    Ok(chi)
}

/// Conditional entropy `S(P|Q) = S(φ^{PQ}) − S(φ^Q)` on a bipartite state
/// with factor dimensions `(dP, dQ)`.
pub fn conditional_entropy(joint: &DensityOperator, dims: (usize, usize)) -> Result<f64> {
    if dims.0 * dims.1 != joint.dim() {
        return Err(Error::DimensionMismatch {
            expected: dims.0 * dims.1,
            got: joint.dim(),
        });
    }
    let s_pq = vn_entropy(joint)?;
    let q_marginal = linalg::partial_trace(joint.matrix(), dims, Factor::Second)?;
    let s_q = vn_entropy_matrix(&q_marginal)?;
    Ok(s_pq - s_q)
}

/// Mutual information `I(X;Y)` of a joint probability matrix.
pub fn classical_mi(joint: &[Vec<f64>]) -> Result<f64> {
    if joint.is_empty() || joint[0].is_empty() {
        return Err(Error::InvalidDistribution {
            reason: "joint distribution must be nonempty".into(),
        });
    }
    let cols = joint[0].len();
    if joint.iter().any(|row| row.len() != cols) {
        return Err(Error::ShapeMismatch {
            reason: "joint distribution rows must have equal lengths".into(),
        });
    }
    let mut total = 0.0;
    for row in joint {
        for &p in row {
            if p < 0.0 || !p.is_finite() {
                return Err(Error::InvalidDistribution {
                    reason: format!("joint entry {p} is negative or not finite"),
                });
            }
            total += p;
        }
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution {
            reason: format!("joint entries sum to {total}, expected 1"),
        });
    }
    let px: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let py: Vec<f64> = (0..cols)
        .map(|y| joint.iter().map(|row| row[y]).sum())
        .collect();
    let mut mi = 0.0;
    for (x, row) in joint.iter().enumerate() {
        for (y, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (px[x] * py[y])).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}
