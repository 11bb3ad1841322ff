//! Quantum channel representations (Kraus, Stinespring), complementary
//! channels, classical-quantum sources and arbitrarily varying families.
//!
//! A channel is stored as its Kraus operators `A_i` with
//! `N(ρ) = Σ A_i ρ A_i†` and `Σ A_i† A_i = 1`. The canonical Stinespring
//! isometry `U = Σ_j A_j ⊗ |j⟩` fixes the environment basis once and for
//! all; the complementary channel (the eavesdropper's view when the
//! environment is hostile) is derived from that same choice, so all
//! security quantities are reproducible. Tracing the dilated output over
//! the environment recovers the channel; tracing over the output gives the
//! complementary channel with entries `V′(ρ)[j,k] = tr(A_k† A_j ρ)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::linalg::{self, ComplexMatrix, Factor};
use crate::{Error, Result};

/// Tolerance on trace-preservation, isometry and density-operator checks.
pub const CHANNEL_TOL: f64 = 1e-9;

/// Tolerance on probability vectors embedded in sources.
pub const PRIOR_TOL: f64 = 1e-12;

const MAX_BLOCKLENGTH: usize = 4;

/// Hermitian, positive semidefinite, trace-one operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity (1e-9 relative), positivity (min eigenvalue
    /// ≥ −1e-9) and unit trace (±1e-9), storing the symmetrized matrix.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let m = linalg::require_hermitian(&matrix)?;
        let spectrum = linalg::hermitian_eig(&m)?;
        let min = spectrum.eigenvalues[0];
        if min < -CHANNEL_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        let trace = m.trace().re;
        if (trace - 1.0).abs() > CHANNEL_TOL {
            return Err(Error::InvalidTrace { trace });
        }
        Ok(DensityOperator {
            dim: m.rows(),
            matrix: m,
        })
    }

    /// Wraps a matrix that is valid by construction (e.g. the output of a
    /// trace-preserving channel on a valid state), skipping the spectral
    /// check. Hermitian symmetrization is still applied.
    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        let m = matrix.hermitized();
        DensityOperator {
            dim: m.rows(),
            matrix: m,
        }
    }

    /// Pure state `v v† / ‖v‖²`.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr <= 0.0 {
            return Err(Error::InvalidDistribution {
                reason: "state vector must be nonzero".into(),
            });
        }
        let scaled: Vec<Complex64> = amplitudes.iter().map(|a| a / norm_sqr.sqrt()).collect();
        Ok(DensityOperator {
            dim: scaled.len(),
            matrix: ComplexMatrix::outer(&scaled, &scaled),
        })
    }

    /// Computational basis state `|index⟩⟨index|`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut m = ComplexMatrix::zeros(dim, dim);
        m.set(index, index, Complex64::new(1.0, 0.0));
        DensityOperator { dim, matrix: m }
    }

    /// Maximally mixed state `1/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0 / dim as f64, 0.0));
        }
        DensityOperator { dim, matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Re-runs the full invariant check; used by diagnostics and tests.
    pub fn validate(&self) -> Result<()> {
        DensityOperator::new(self.matrix.clone()).map(|_| ())
    }

    /// Trace distance helper `‖ρ − σ‖₁`.
    pub fn trace_norm_diff(&self, other: &DensityOperator) -> Result<f64> {
        linalg::trace_norm(&self.matrix.sub(&other.matrix))
    }
}

impl Serialize for DensityOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(deserializer)?;
        DensityOperator::new(m).map_err(serde::de::Error::custom)
    }
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Validates operator shapes and the trace-preserving relation
    /// `Σ A_i† A_i = 1` to 1e-9 in Frobenius norm.
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::ShapeMismatch {
                reason: "channel needs at least one Kraus operator".into(),
            });
        }
        for a in &kraus {
            if a.rows() != dim_out || a.cols() != dim_in {
                return Err(Error::ShapeMismatch {
                    reason: format!(
                        "Kraus operator is {}x{}, expected {}x{}",
                        a.rows(),
                        a.cols(),
                        dim_out,
                        dim_in
                    ),
                });
            }
        }
        let mut gram = ComplexMatrix::zeros(dim_in, dim_in);
        for a in &kraus {
            gram = gram.add(&a.adjoint().matmul(a));
        }
        let residual = gram.sub(&ComplexMatrix::identity(dim_in)).frobenius_norm();
        if residual > CHANNEL_TOL {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(KrausChannel {
            dim_in,
            dim_out,
            kraus,
        })
    }

    /// Infers dimensions from the first operator.
    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let (dim_out, dim_in) = match kraus.first() {
            Some(a) => (a.rows(), a.cols()),
            None => {
                return Err(Error::ShapeMismatch {
                    reason: "channel needs at least one Kraus operator".into(),
                })
            }
        };
        KrausChannel::new(dim_in, dim_out, kraus)
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![ComplexMatrix::identity(dim)],
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Linear action `Σ A m A†` on an arbitrary matrix.
    pub fn apply_to_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for a in &self.kraus {
            out = out.add(&a.matmul(m).matmul(&a.adjoint()));
        }
        out
    }
}

/// Applies a channel to a state.
pub fn apply(ch: &KrausChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    if rho.dim() != ch.dim_in {
        return Err(Error::DimensionMismatch {
            expected: ch.dim_in,
            got: rho.dim(),
        });
    }
    Ok(DensityOperator::new_unchecked(
        ch.apply_to_matrix(rho.matrix()),
    ))
}

/// Isometric extension `U: H_in → H_out ⊗ H_env` of a channel.
#[derive(Debug, Clone)]
pub struct StinespringIsometry {
    pub dim_in: usize,
    pub dim_out: usize,
    pub dim_env: usize,
    pub u: ComplexMatrix,
}

impl StinespringIsometry {
    pub fn validate(&self) -> Result<()> {
        let gram = self.u.adjoint().matmul(&self.u);
        let residual = gram
            .sub(&ComplexMatrix::identity(self.dim_in))
            .frobenius_norm();
        if residual > CHANNEL_TOL {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(())
    }

    /// The dilated output `U ρ U†` on `H_out ⊗ H_env`.
    pub fn dilate(&self, rho: &DensityOperator) -> Result<ComplexMatrix> {
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in,
                got: rho.dim(),
            });
        }
        Ok(self.u.matmul(rho.matrix()).matmul(&self.u.adjoint()))
    }

    /// Output marginal `tr_env(U ρ U†)`.
    pub fn output_marginal(&self, rho: &DensityOperator) -> Result<ComplexMatrix> {
        linalg::partial_trace(
            &self.dilate(rho)?,
            (self.dim_out, self.dim_env),
            Factor::First,
        )
    }

    /// Environment marginal `tr_out(U ρ U†)`.
    pub fn env_marginal(&self, rho: &DensityOperator) -> Result<ComplexMatrix> {
        linalg::partial_trace(
            &self.dilate(rho)?,
            (self.dim_out, self.dim_env),
            Factor::Second,
        )
    }
}

/// Canonical dilation `U = Σ_j A_j ⊗ |j⟩` with the environment dimension
/// equal to the number of Kraus operators supplied (no minimization is
/// attempted; a minimal Kraus set keeps the environment at most
/// `dim_in²`-dimensional).
pub fn to_stinespring(ch: &KrausChannel) -> StinespringIsometry {
    let dim_env = ch.kraus.len();
    let mut u = ComplexMatrix::zeros(ch.dim_out * dim_env, ch.dim_in);
    for (j, a) in ch.kraus.iter().enumerate() {
        for i in 0..ch.dim_out {
            for k in 0..ch.dim_in {
                u.set(i * dim_env + j, k, a.at(i, k));
            }
        }
    }
    StinespringIsometry {
        dim_in: ch.dim_in,
        dim_out: ch.dim_out,
        dim_env,
        u,
    }
}

/// Complementary channel `V′` mapping the input to the environment state,
/// `V′(ρ)[j,k] = tr(A_k† A_j ρ)`.
///
/// Its Kraus operators are the row slices of the canonical dilation:
/// `C_i[j,k] = A_j[i,k]` for each output index `i`.
pub fn complementary(ch: &KrausChannel) -> KrausChannel {
    let env = ch.kraus.len();
    let kraus: Vec<ComplexMatrix> = (0..ch.dim_out)
        .map(|i| ComplexMatrix::from_fn(env, ch.dim_in, |j, k| ch.kraus[j].at(i, k)))
        .collect();
    KrausChannel::new(ch.dim_in, env, kraus).expect("complementary construction preserves trace")
}

/// Tensor product channel with Kraus set `{A_i ⊗ B_j}` (i-major order).
pub fn tensor_channels(a: &KrausChannel, b: &KrausChannel) -> KrausChannel {
    let mut kraus = Vec::with_capacity(a.kraus.len() * b.kraus.len());
    for ka in &a.kraus {
        for kb in &b.kraus {
            kraus.push(linalg::tensor(ka, kb));
        }
    }
    KrausChannel {
        dim_in: a.dim_in * b.dim_in,
        dim_out: a.dim_out * b.dim_out,
        kraus,
    }
}

/// `n`-fold tensor power of a channel; `n` is capped at 4 because the
/// Kraus count and dimensions grow geometrically.
pub fn channel_power(ch: &KrausChannel, n: usize) -> Result<KrausChannel> {
    if n < 1 || n > MAX_BLOCKLENGTH {
        return Err(Error::BlocklengthTooLarge {
            n,
            max: MAX_BLOCKLENGTH,
        });
    }
    let mut out = ch.clone();
    for _ in 1..n {
        out = tensor_channels(&out, ch);
    }
    Ok(out)
}

/// Finite classical alphabet mapped to input states, with a prior.
#[derive(Debug, Clone)]
pub struct CQSource {
    alphabet: Vec<String>,
    states: Vec<DensityOperator>,
    prior: Vec<f64>,
}

impl CQSource {
    pub fn new(
        alphabet: Vec<String>,
        states: Vec<DensityOperator>,
        prior: Vec<f64>,
    ) -> Result<Self> {
        if alphabet.len() != states.len() || alphabet.len() != prior.len() {
            return Err(Error::ShapeMismatch {
                reason: format!(
                    "alphabet ({}), states ({}) and prior ({}) must have equal lengths",
                    alphabet.len(),
                    states.len(),
                    prior.len()
                ),
            });
        }
        if alphabet.is_empty() {
            return Err(Error::ShapeMismatch {
                reason: "source alphabet must be nonempty".into(),
            });
        }
        validate_distribution(&prior, PRIOR_TOL)?;
        let dim = states[0].dim();
        if states.iter().any(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: states.iter().map(|s| s.dim()).find(|&d| d != dim).unwrap(),
            });
        }
        Ok(CQSource {
            alphabet,
            states,
            prior,
        })
    }

    /// Source over classical basis states `|0⟩⟨0| … |k-1⟩⟨k-1|` of the
    /// given dimension, uniform prior.
    pub fn classical_basis(dim: usize, symbols: usize) -> Self {
        assert!(symbols >= 1 && symbols <= dim);
        let alphabet = (0..symbols).map(|i| i.to_string()).collect();
        let states = (0..symbols)
            .map(|i| DensityOperator::basis(dim, i))
            .collect();
        let prior = vec![1.0 / symbols as f64; symbols];
        CQSource {
            alphabet,
            states,
            prior,
        }
    }

    pub fn len(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphabet.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn state(&self, x: usize) -> &DensityOperator {
        &self.states[x]
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// Replaces the prior, keeping alphabet and states.
    pub fn with_prior(&self, prior: Vec<f64>) -> Result<Self> {
        CQSource::new(self.alphabet.clone(), self.states.clone(), prior)
    }

    /// Average channel output `W(P) = Σ_x P(x) N(F(x))`.
    pub fn average_output(&self, ch: &KrausChannel) -> Result<DensityOperator> {
        if self.dim() != ch.dim_in() {
            return Err(Error::DimensionMismatch {
                expected: ch.dim_in(),
                got: self.dim(),
            });
        }
        let mut acc = ComplexMatrix::zeros(ch.dim_out(), ch.dim_out());
        for (p, s) in self.prior.iter().zip(&self.states) {
            acc = acc.add(&ch.apply_to_matrix(s.matrix()).scaled_re(*p));
        }
        Ok(DensityOperator::new_unchecked(acc))
    }
}

/// Finite family `{N_θ : θ ∈ Θ}` with shared input/output dimensions.
#[derive(Debug, Clone)]
pub struct AVQCFamily {
    theta: Vec<String>,
    channels: Vec<KrausChannel>,
}

impl AVQCFamily {
    pub fn new(theta: Vec<String>, channels: Vec<KrausChannel>) -> Result<Self> {
        if theta.len() != channels.len() || theta.is_empty() {
            return Err(Error::ShapeMismatch {
                reason: format!(
                    "need equally many labels ({}) and channels ({}), at least one",
                    theta.len(),
                    channels.len()
                ),
            });
        }
        let mut sorted = theta.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != theta.len() {
            return Err(Error::ShapeMismatch {
                reason: "channel labels must be distinct".into(),
            });
        }
        let (din, dout) = (channels[0].dim_in(), channels[0].dim_out());
        if channels
            .iter()
            .any(|c| c.dim_in() != din || c.dim_out() != dout)
        {
            return Err(Error::ShapeMismatch {
                reason: "all channels in a family must share input and output dimensions".into(),
            });
        }
        Ok(AVQCFamily { theta, channels })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn dim_in(&self) -> usize {
        self.channels[0].dim_in()
    }

    pub fn dim_out(&self) -> usize {
        self.channels[0].dim_out()
    }

    pub fn labels(&self) -> &[String] {
        &self.theta
    }

    pub fn channel(&self, index: usize) -> &KrausChannel {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[KrausChannel] {
        &self.channels
    }

    /// Tensor channel `N_{θ₁} ⊗ … ⊗ N_{θₙ}` for a state sequence.
    pub fn sequence_channel(&self, seq: &[usize]) -> KrausChannel {
        assert!(!seq.is_empty());
        let mut out = self.channels[seq[0]].clone();
        for &t in &seq[1..] {
            out = tensor_channels(&out, &self.channels[t]);
        }
        out
    }

    /// The family of complementary channels, sharing labels.
    pub fn complementary_family(&self) -> AVQCFamily {
        AVQCFamily {
            theta: self.theta.clone(),
            channels: self.channels.iter().map(complementary).collect(),
        }
    }
}

/// Jammer mixture `B_q = Σ_θ q(θ) N_θ` in Kraus form `{√q(θ) A_i^{(θ)}}`.
pub fn mixture_channel(fam: &AVQCFamily, q: &[f64]) -> Result<KrausChannel> {
    if q.len() != fam.len() {
        return Err(Error::InvalidDistribution {
            reason: format!(
                "mixture weight count {} does not match family size {}",
                q.len(),
                fam.len()
            ),
        });
    }
    validate_distribution(q, 1e-9)?;
    let mut kraus = Vec::new();
    for (weight, ch) in q.iter().zip(fam.channels()) {
        let w = weight.max(0.0).sqrt();
        for a in ch.kraus() {
            kraus.push(a.scaled_re(w));
        }
    }
    Ok(KrausChannel {
        dim_in: fam.dim_in(),
        dim_out: fam.dim_out(),
        kraus,
    })
}

/// Checks entries ≥ 0 (up to a tiny negative tolerance) and unit sum.
pub fn validate_distribution(p: &[f64], tol: f64) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution {
            reason: "distribution must be nonempty".into(),
        });
    }
    if let Some(&bad) = p.iter().find(|&&x| x < -tol.max(1e-12) || !x.is_finite()) {
        return Err(Error::InvalidDistribution {
            reason: format!("entry {bad} is negative or not finite"),
        });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution {
            reason: format!("entries sum to {sum}, expected 1"),
        });
    }
    Ok(())
}

// ---- JSON file formats ----------------------------------------------------

#[derive(Deserialize)]
struct RawChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl Serialize for KrausChannel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("KrausChannel", 3)?;
        st.serialize_field("dim_in", &self.dim_in)?;
        st.serialize_field("dim_out", &self.dim_out)?;
        st.serialize_field("kraus", &self.kraus)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for KrausChannel {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let raw = RawChannel::deserialize(deserializer)?;
        KrausChannel::new(raw.dim_in, raw.dim_out, raw.kraus).map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
struct RawFamily {
    theta: Vec<String>,
    channels: BTreeMap<String, KrausChannel>,
}

impl Serialize for AVQCFamily {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, &KrausChannel> = self
            .theta
            .iter()
            .map(String::as_str)
            .zip(self.channels.iter())
            .collect();
        let mut st = serializer.serialize_struct("AVQCFamily", 2)?;
        st.serialize_field("theta", &self.theta)?;
        st.serialize_field("channels", &map)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for AVQCFamily {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let mut raw = RawFamily::deserialize(deserializer)?;
        let mut channels = Vec::with_capacity(raw.theta.len());
        for label in &raw.theta {
            match raw.channels.remove(label) {
                Some(ch) => channels.push(ch),
                None => {
                    return Err(serde::de::Error::custom(format!(
                        "channel label {label:?} listed in theta but missing from channels"
                    )))
                }
            }
        }
        if let Some(extra) = raw.channels.keys().next() {
            return Err(serde::de::Error::custom(format!(
                "channel {extra:?} not listed in theta"
            )));
        }
        AVQCFamily::new(raw.theta, channels).map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
struct RawSource {
    alphabet: Vec<String>,
    states: BTreeMap<String, DensityOperator>,
    prior: Vec<f64>,
}

impl Serialize for CQSource {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, &DensityOperator> = self
            .alphabet
            .iter()
            .map(String::as_str)
            .zip(self.states.iter())
            .collect();
        let mut st = serializer.serialize_struct("CQSource", 3)?;
        st.serialize_field("alphabet", &self.alphabet)?;
        st.serialize_field("states", &map)?;
        st.serialize_field("prior", &self.prior)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for CQSource {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let mut raw = RawSource::deserialize(deserializer)?;
        let mut states = Vec::with_capacity(raw.alphabet.len());
        for label in &raw.alphabet {
            match raw.states.remove(label) {
                Some(s) => states.push(s),
                None => {
                    return Err(serde::de::Error::custom(format!(
                        "state {label:?} listed in alphabet but missing from states"
                    )))
                }
            }
        }
        CQSource::new(raw.alphabet, states, raw.prior).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// 2 → 3 channel moving `|0⟩,|1⟩` to `|1⟩,|2⟩` through one isometry.
    fn shift_channel() -> KrausChannel {
        let mut a = ComplexMatrix::zeros(3, 2);
        a.set(1, 0, c(1.0));
        a.set(2, 1, c(1.0));
        KrausChannel::new(2, 3, vec![a]).unwrap()
    }

    /// 2 → 3 channel embedding the qubit unchanged.
    fn embed_channel() -> KrausChannel {
        let mut a = ComplexMatrix::zeros(3, 2);
        a.set(0, 0, c(1.0));
        a.set(1, 1, c(1.0));
        KrausChannel::new(2, 3, vec![a]).unwrap()
    }

    #[test]
    fn identity_channel_fixes_states() {
        let rho = DensityOperator::pure(&[c(0.6), c(0.8)]).unwrap();
        let out = apply(&KrausChannel::identity(2), &rho).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn shift_channel_moves_basis_state() {
        let out = apply(&shift_channel(), &DensityOperator::basis(2, 0)).unwrap();
        assert!(
            out.matrix()
                .max_abs_diff(DensityOperator::basis(3, 1).matrix())
                < 1e-15
        );
    }

    #[test]
    fn random_channel_output_is_valid_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let ch = random::kraus_channel(&mut rng, 3, 2, 3);
            let rho = random::density_operator(&mut rng, 3);
            let out = apply(&ch, &rho).unwrap();
            out.validate().unwrap();
        }
    }

    #[test]
    fn apply_rejects_dim_mismatch() {
        let rho = DensityOperator::basis(3, 0);
        assert!(matches!(
            apply(&KrausChannel::identity(2), &rho),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn stinespring_of_isometric_channel_is_the_kraus_operator() {
        let ch = shift_channel();
        let st = to_stinespring(&ch);
        assert_eq!(st.dim_env, 1);
        assert!(st.u.max_abs_diff(&ch.kraus()[0]) < 1e-15);
        st.validate().unwrap();
    }

    #[test]
    fn stinespring_round_trip_matches_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = random::kraus_channel(&mut rng, 2, 2, 2);
        let st = to_stinespring(&ch);
        st.validate().unwrap();
        for probe in random::probe_states(&mut rng, 2, 4) {
            let via_dilation = st.output_marginal(&probe).unwrap();
            let direct = apply(&ch, &probe).unwrap();
            assert!(via_dilation.max_abs_diff(direct.matrix()) < 1e-9);
        }
    }

    #[test]
    fn env_marginal_matches_complementary_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = random::kraus_channel(&mut rng, 3, 2, 3);
        let st = to_stinespring(&ch);
        let comp = complementary(&ch);
        for probe in random::probe_states(&mut rng, 3, 5) {
            let via_dilation = st.env_marginal(&probe).unwrap();
            let direct = apply(&comp, &probe).unwrap();
            assert!(via_dilation.max_abs_diff(direct.matrix()) < 1e-9);
            assert!((direct.matrix().trace().re - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn complementary_entries_are_kraus_overlaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = random::kraus_channel(&mut rng, 2, 3, 2);
        let comp = complementary(&ch);
        let rho = random::density_operator(&mut rng, 2);
        let env = apply(&comp, &rho).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                let expected = ch.kraus()[k]
                    .adjoint()
                    .matmul(&ch.kraus()[j])
                    .matmul(rho.matrix())
                    .trace();
                assert!((env.matrix().at(j, k) - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn single_kraus_channel_leaks_nothing() {
        // Complementary of an isometric channel is a constant map onto the
        // unique environment basis state.
        let comp = complementary(&shift_channel());
        assert_eq!(comp.dim_out(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for probe in random::probe_states(&mut rng, 2, 4) {
            let env = apply(&comp, &probe).unwrap();
            assert!((env.matrix().at(0, 0).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_channel_complementary_is_constant() {
        let comp = complementary(&KrausChannel::identity(3));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random::density_operator(&mut rng, 3);
        let env = apply(&comp, &rho).unwrap();
        assert!((env.matrix().at(0, 0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let t = tensor_channels(&KrausChannel::identity(2), &KrausChannel::identity(2));
        assert_eq!(t.kraus().len(), 1);
        assert!(t.kraus()[0].max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn tensor_kraus_count_multiplies() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random::kraus_channel(&mut rng, 2, 2, 2);
        let b = random::kraus_channel(&mut rng, 2, 2, 3);
        assert_eq!(tensor_channels(&a, &b).kraus().len(), 6);
    }

    #[test]
    fn tensor_acts_factorwise_on_product_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random::kraus_channel(&mut rng, 2, 3, 2);
        let b = random::kraus_channel(&mut rng, 2, 2, 2);
        let rho = random::density_operator(&mut rng, 2);
        let sigma = random::density_operator(&mut rng, 2);
        let joint = DensityOperator::new_unchecked(linalg::tensor(rho.matrix(), sigma.matrix()));
        let combined = apply(&tensor_channels(&a, &b), &joint).unwrap();
        let separate = linalg::tensor(
            apply(&a, &rho).unwrap().matrix(),
            apply(&b, &sigma).unwrap().matrix(),
        );
        assert!(combined.matrix().max_abs_diff(&separate) < 1e-12);
    }

    #[test]
    fn channel_power_basics() {
        let ch = embed_channel();
        let p1 = channel_power(&ch, 1).unwrap();
        assert_eq!(p1.kraus().len(), 1);
        let p2 = channel_power(&ch, 2).unwrap();
        assert_eq!(p2.kraus().len(), 1);
        assert_eq!(p2.dim_out(), 9);
        // |01⟩⟨01| keeps its basis position in the embedded output space.
        let rho01 = DensityOperator::basis(4, 1);
        let out = apply(&p2, &rho01).unwrap();
        assert!(
            out.matrix()
                .max_abs_diff(DensityOperator::basis(9, 1).matrix())
                < 1e-15
        );
        assert!(matches!(
            channel_power(&ch, 5),
            Err(Error::BlocklengthTooLarge { .. })
        ));
    }

    #[test]
    fn mixture_point_mass_reproduces_member() {
        let fam = AVQCFamily::new(
            vec!["a".into(), "b".into()],
            vec![embed_channel(), shift_channel()],
        )
        .unwrap();
        let mix = mixture_channel(&fam, &[0.0, 1.0]).unwrap();
        let rho = DensityOperator::basis(2, 0);
        let out = apply(&mix, &rho).unwrap();
        let direct = apply(&shift_channel(), &rho).unwrap();
        assert!(out.matrix().max_abs_diff(direct.matrix()) < 1e-15);
    }

    #[test]
    fn mixture_equals_convex_combination_of_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fam = AVQCFamily::new(
            vec!["a".into(), "b".into(), "c".into()],
            (0..3)
                .map(|_| random::kraus_channel(&mut rng, 2, 3, 2))
                .collect(),
        )
        .unwrap();
        let q = [0.5, 0.2, 0.3];
        let mix = mixture_channel(&fam, &q).unwrap();
        let rho = random::density_operator(&mut rng, 2);
        let mixed = apply(&mix, &rho).unwrap();
        let mut acc = ComplexMatrix::zeros(3, 3);
        for (w, ch) in q.iter().zip(fam.channels()) {
            acc = acc.add(&ch.apply_to_matrix(rho.matrix()).scaled_re(*w));
        }
        assert!(mixed.matrix().max_abs_diff(&acc) < 1e-12);
        assert!((mixed.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        let fam = AVQCFamily::new(vec!["a".into()], vec![KrausChannel::identity(2)]).unwrap();
        assert!(matches!(
            mixture_channel(&fam, &[0.5]),
            Err(Error::InvalidDistribution { .. })
        ));
    }

    #[test]
    fn density_operator_rejects_bad_trace() {
        let m = ComplexMatrix::diag(&[0.7, 0.7]);
        assert!(matches!(
            DensityOperator::new(m),
            Err(Error::InvalidTrace { .. })
        ));
    }

    #[test]
    fn density_operator_rejects_negative_eigenvalue() {
        let m = ComplexMatrix::diag(&[1.5, -0.5]);
        assert!(matches!(DensityOperator::new(m), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn channel_json_round_trip() {
        let ch = shift_channel();
        let text = serde_json::to_string(&ch).unwrap();
        let back: KrausChannel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ch);
    }

    #[test]
    fn channel_json_rejects_non_trace_preserving() {
        let mut a = ComplexMatrix::zeros(2, 2);
        a.set(0, 0, c(0.5));
        let text = serde_json::to_string(&RawChannelForTest {
            dim_in: 2,
            dim_out: 2,
            kraus: vec![a],
        })
        .unwrap();
        let err = serde_json::from_str::<KrausChannel>(&text).unwrap_err();
        assert!(err.to_string().contains("trace-preserving"));
    }

    #[derive(Serialize)]
    struct RawChannelForTest {
        dim_in: usize,
        dim_out: usize,
        kraus: Vec<ComplexMatrix>,
    }

    #[test]
    fn family_json_rejects_missing_channel() {
        let text = r#"{"theta":["a","b"],"channels":{"a":{"dim_in":2,"dim_out":2,"kraus":[[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]]}}}"#;
        let err = serde_json::from_str::<AVQCFamily>(text).unwrap_err();
        assert!(err.to_string().contains("missing from channels"));
    }

    #[test]
    fn source_json_round_trip_and_validation() {
        let src = CQSource::classical_basis(2, 2);
        let text = serde_json::to_string(&src).unwrap();
        let back: CQSource = serde_json::from_str(&text).unwrap();
        assert_eq!(back.alphabet(), src.alphabet());
        assert_eq!(back.prior(), src.prior());

        let bad = r#"{"alphabet":["0"],"states":{"0":[[[0.7,0.0]]]},"prior":[1.0]}"#;
        let err = serde_json::from_str::<CQSource>(bad).unwrap_err();
        assert!(err.to_string().contains("trace"));
    }
}
