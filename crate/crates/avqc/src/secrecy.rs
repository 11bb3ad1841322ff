//! Finite-letter secrecy functionals.
//!
//! For a channel family `{N_θ}` with complementaries `{V′_θ}` and a
//! classical-quantum source `F`, the jammer-adapted functional at
//! blocklength `n` is
//!
//! ```text
//! (1/n) · max_P [ min_q χ(P, (B_q∘F)^{⊗n}) − max_{θⁿ} χ(P, Z_{θⁿ}∘Fⁿ) ]
//! ```
//!
//! where `P` ranges over distributions on the product alphabet, `B_q` is
//! the mixture channel of `q ∈ Δ(Θ)` applied i.i.d. across the `n` uses,
//! and the maximum over jammer sequences `θⁿ` is evaluated by full
//! enumeration. The compound-channel variants fix one channel for all
//! uses, with the channel either known to the coder (CSI: min of
//! per-channel optima) or unknown (no CSI: one prior against the worst
//! channel).
//!
//! Prior and mixture searches follow the grid-plus-refinement scheme of
//! [`crate::opt`]; reported values are re-evaluated at the reported
//! arguments, so a report can always be checked by recomputation.

use serde::{Deserialize, Serialize};

use crate::channels::{self, complementary, AVQCFamily, CQSource, DensityOperator};
use crate::entropy;
use crate::linalg::ComplexMatrix;
use crate::opt::{self, SimplexSearch};
use crate::{Error, Result};

const MAX_N: usize = 3;
const MAX_PRODUCT: usize = 4096;
const INNER_SEED_SALT: u64 = 0xd6e8_feb8_6659_fd93;

/// Optimization budget for the functionals.
#[derive(Debug, Clone)]
pub struct FunctionalOpts {
    /// Simplex grid resolution used in dimensions up to 3.
    pub grid_resolution: usize,
    /// Multistart count for Nelder-Mead in higher dimensions.
    pub nm_starts: usize,
    /// Nelder-Mead iteration cap per start.
    pub nm_max_iters: usize,
    pub seed: u64,
}

impl Default for FunctionalOpts {
    fn default() -> Self {
        FunctionalOpts {
            grid_resolution: 64,
            nm_starts: 16,
            nm_max_iters: 2000,
            seed: 0,
        }
    }
}

impl FunctionalOpts {
    fn outer_cfg(&self) -> SimplexSearch {
        SimplexSearch {
            grid_resolution: self.grid_resolution,
            starts: self.nm_starts,
            nm_max_iters: self.nm_max_iters,
            seed: self.seed,
        }
    }

    fn inner_cfg(&self) -> SimplexSearch {
        SimplexSearch {
            grid_resolution: self.grid_resolution,
            starts: self.nm_starts,
            nm_max_iters: self.nm_max_iters,
            seed: self.seed ^ INNER_SEED_SALT,
        }
    }
}

/// Classical preprocessing `U → A`: an auxiliary alphabet, its prior, and
/// a stochastic kernel into the source alphabet. A common choice of
/// auxiliary size is `|A| + 1`; nothing here depends on that choice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessedSource {
    pub u_alphabet: Vec<String>,
    pub p_u: Vec<f64>,
    /// `kernel[u][a] = E(a|u)`, rows are distributions.
    pub kernel: Vec<Vec<f64>>,
}

impl PreprocessedSource {
    pub fn new(u_alphabet: Vec<String>, p_u: Vec<f64>, kernel: Vec<Vec<f64>>) -> Result<Self> {
        let source = PreprocessedSource {
            u_alphabet,
            p_u,
            kernel,
        };
        source.validate()?;
        Ok(source)
    }

    pub fn validate(&self) -> Result<()> {
        if self.u_alphabet.is_empty()
            || self.u_alphabet.len() != self.p_u.len()
            || self.u_alphabet.len() != self.kernel.len()
        {
            return Err(Error::ShapeMismatch {
                reason: "auxiliary alphabet, prior, and kernel rows must align".into(),
            });
        }
        channels::validate_distribution(&self.p_u, 1e-12)?;
        let width = self.kernel[0].len();
        for row in &self.kernel {
            if row.len() != width {
                return Err(Error::ShapeMismatch {
                    reason: "kernel rows must share one length".into(),
                });
            }
            channels::validate_distribution(row, 1e-12)?;
        }
        Ok(())
    }
}

/// Replaces the source alphabet by the auxiliary one: the state of `u`
/// is the kernel-weighted average of the original states.
pub fn with_preprocessing(src: &CQSource, pre: &PreprocessedSource) -> Result<CQSource> {
    pre.validate()?;
    if pre.kernel[0].len() != src.len() {
        return Err(Error::ShapeMismatch {
            reason: format!(
                "kernel rows have {} columns but the source alphabet has {} symbols",
                pre.kernel[0].len(),
                src.len()
            ),
        });
    }
    let dim = src.dim();
    let mut states = Vec::with_capacity(pre.u_alphabet.len());
    for row in &pre.kernel {
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (a, &weight) in row.iter().enumerate() {
            if weight > 0.0 {
                m = m.add(&src.state(a).matrix().scaled_re(weight));
            }
        }
        states.push(DensityOperator::new(m)?);
    }
    CQSource::new(pre.u_alphabet.clone(), states, pre.p_u.clone())
}

/// Result of the jammer-adapted functional with the maximizing and
/// minimizing arguments, sufficient to recompute `value`.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalReport {
    /// Bits per channel use; may be negative.
    pub value: f64,
    /// `max(value, 0)`, the capacity-style reading.
    pub clamped: f64,
    /// Distribution over the product alphabet of `n` source symbols.
    pub argmax_prior: Vec<f64>,
    /// Single-letter mixture over the family achieving the inner minimum.
    pub argmin_q: Vec<f64>,
    /// Jammer sequence achieving the maximal leakage, as channel labels.
    pub argmax_theta_seq: Vec<String>,
    pub n: usize,
}

/// Exact worst-case eavesdropper information for the source prior used
/// i.i.d. over `n` uses.
#[derive(Debug, Clone, Serialize)]
pub struct EavesdropperReport {
    /// Holevo information of the environment ensemble at the worst `θⁿ`.
    pub chi: f64,
    /// `chi / n`.
    pub per_use: f64,
    pub argmax_theta_seq: Vec<String>,
    pub n: usize,
}

/// Precomputed single-letter data shared by all functional evaluations.
struct Evaluator {
    n: usize,
    theta_count: usize,
    /// Product source symbols, lexicographic.
    symbols: Vec<Vec<usize>>,
    /// Jammer sequences, lexicographic.
    theta_seqs: Vec<Vec<usize>>,
    /// `out[θ][a] = N_θ(F(a))`.
    out_single: Vec<Vec<ComplexMatrix>>,
    /// `env[θ][a] = V′_θ(F(a))`.
    env_single: Vec<Vec<ComplexMatrix>>,
    /// Entropies of `env_single`.
    env_entropy: Vec<Vec<f64>>,
}

impl Evaluator {
    fn build(fam: &AVQCFamily, src: &CQSource, n: usize) -> Result<Evaluator> {
        if fam.dim_in() != src.dim() {
            return Err(Error::DimensionMismatch {
                expected: fam.dim_in(),
                got: src.dim(),
            });
        }
        if n < 1 || n > MAX_N {
            return Err(Error::BlocklengthTooLarge { n, max: MAX_N });
        }
        let theta_seq_count = fam.len().pow(n as u32);
        if theta_seq_count > MAX_PRODUCT {
            return Err(Error::BlocklengthTooLarge {
                n: theta_seq_count,
                max: MAX_PRODUCT,
            });
        }
        let symbol_count = src.len().pow(n as u32);
        if symbol_count > MAX_PRODUCT {
            return Err(Error::BlocklengthTooLarge {
                n: symbol_count,
                max: MAX_PRODUCT,
            });
        }

        let mut out_single = Vec::with_capacity(fam.len());
        let mut env_single = Vec::with_capacity(fam.len());
        let mut env_entropy = Vec::with_capacity(fam.len());
        for theta in 0..fam.len() {
            let channel = fam.channel(theta);
            let complement = complementary(channel);
            let mut outs = Vec::with_capacity(src.len());
            let mut envs = Vec::with_capacity(src.len());
            let mut entropies = Vec::with_capacity(src.len());
            for a in 0..src.len() {
                outs.push(channel.apply_to_matrix(src.state(a).matrix()));
                let env = complement.apply_to_matrix(src.state(a).matrix());
                entropies.push(entropy::vn_entropy_matrix(&env)?);
                envs.push(env);
            }
            out_single.push(outs);
            env_single.push(envs);
            env_entropy.push(entropies);
        }

        Ok(Evaluator {
            n,
            theta_count: fam.len(),
            symbols: opt::index_sequences(src.len(), n),
            theta_seqs: opt::index_sequences(fam.len(), n),
            out_single,
            env_single,
            env_entropy,
        })
    }

    /// `χ(P, outputs)` where the output of product symbol `x` is the
    /// tensor product `⊗_i per_letter[selector(i, x_i)]`. Uses entropy
    /// additivity on product states, so only the ensemble average needs a
    /// full-size eigendecomposition.
    fn chi_product(
        &self,
        prior: &[f64],
        per_letter: &[Vec<ComplexMatrix>],
        letter_entropy: &[Vec<f64>],
        pick: impl Fn(usize) -> usize,
    ) -> Result<f64> {
        let dim: usize = (0..self.n).map(|i| per_letter[pick(i)][0].rows()).product();
        let mut average = ComplexMatrix::zeros(dim, dim);
        let mut conditional = 0.0;
        for (x, symbol) in self.symbols.iter().enumerate() {
            let p = prior[x];
            if p <= 0.0 {
                continue;
            }
            let mut product = per_letter[pick(0)][symbol[0]].clone();
            for i in 1..self.n {
                product = crate::linalg::tensor(&product, &per_letter[pick(i)][symbol[i]]);
            }
            average = average.add(&product.scaled_re(p));
            let mut h = 0.0;
            for i in 0..self.n {
                h += letter_entropy[pick(i)][symbol[i]];
            }
            conditional += p * h;
        }
        let chi = entropy::vn_entropy_matrix(&average)? - conditional;
        Ok(chi.max(0.0))
    }

    /// `χ(P, (B_q)^{⊗n}∘Fⁿ)` for a single-letter mixture `q`.
    fn chi_mixture(&self, prior: &[f64], q: &[f64]) -> Result<f64> {
        let dim_out = self.out_single[0][0].rows();
        let letters = self.out_single[0].len();
        let mut mixed = vec![ComplexMatrix::zeros(dim_out, dim_out); letters];
        for (theta, weight) in q.iter().enumerate() {
            let w = weight.max(0.0);
            if w == 0.0 {
                continue;
            }
            for (a, m) in mixed.iter_mut().enumerate() {
                *m = m.add(&self.out_single[theta][a].scaled_re(w));
            }
        }
        let mut entropies = vec![Vec::with_capacity(letters)];
        for m in &mixed {
            entropies[0].push(entropy::vn_entropy_matrix(m)?);
        }
        self.chi_product(prior, &[mixed], &entropies, |_| 0)
    }

    /// `χ(P, Z_{θⁿ}∘Fⁿ)` for one jammer sequence.
    fn chi_environment(&self, prior: &[f64], theta_seq: &[usize]) -> Result<f64> {
        self.chi_product(prior, &self.env_single, &self.env_entropy, |i| theta_seq[i])
    }

    /// `χ(P, (N_θ)^{⊗n}∘Fⁿ)` for one fixed channel (compound use).
    fn chi_fixed_channel(&self, prior: &[f64], theta: usize) -> Result<f64> {
        let seq = vec![theta; self.n];
        let mut entropies = Vec::with_capacity(self.out_single.len());
        for outs in &self.out_single {
            let mut row = Vec::with_capacity(outs.len());
            for m in outs {
                row.push(entropy::vn_entropy_matrix(m)?);
            }
            entropies.push(row);
        }
        self.chi_product(prior, &self.out_single, &entropies, |i| seq[i])
    }

    /// Exact maximum of the environment information over all `θⁿ`.
    fn worst_environment(&self, prior: &[f64]) -> Result<(f64, usize)> {
        let mut best = (f64::NEG_INFINITY, 0);
        for (t, seq) in self.theta_seqs.iter().enumerate() {
            let chi = self.chi_environment(prior, seq)?;
            if chi > best.0 {
                best = (chi, t);
            }
        }
        Ok(best)
    }

    /// `min_q χ(P,B_qⁿ) − max_{θⁿ} χ(P,Z_{θⁿ})` for one prior.
    fn inner_difference(&self, prior: &[f64], inner_cfg: &SimplexSearch) -> Result<InnerPoint> {
        let (q, chi_b) = opt::minimize_over_simplex(
            self.theta_count,
            |q| self.chi_mixture(prior, q).unwrap_or(f64::INFINITY),
            inner_cfg,
        );
        let (chi_z, worst_seq) = self.worst_environment(prior)?;
        Ok(InnerPoint {
            difference: chi_b - chi_z,
            q,
            worst_seq,
        })
    }

    fn iid_prior(&self, single: &[f64]) -> Vec<f64> {
        self.symbols
            .iter()
            .map(|symbol| symbol.iter().map(|&a| single[a]).product())
            .collect()
    }
}

struct InnerPoint {
    difference: f64,
    q: Vec<f64>,
    worst_seq: usize,
}

/// Jammer-adapted secrecy functional at blocklength `n`: the prior over
/// product symbols is maximized numerically, the mixture `q` minimized
/// numerically, and the jammer sequence enumerated exactly. The reported
/// value is the re-evaluation at the reported arguments.
pub fn avqc_secrecy_functional(
    fam: &AVQCFamily,
    src: &CQSource,
    n: usize,
    opts: &FunctionalOpts,
) -> Result<FunctionalReport> {
    let evaluator = Evaluator::build(fam, src, n)?;
    let inner_cfg = opts.inner_cfg();
    let outer_cfg = opts.outer_cfg();
    let dim = evaluator.symbols.len();

    let (prior, _) = opt::maximize_over_simplex(
        dim,
        |p| {
            evaluator
                .inner_difference(p, &inner_cfg)
                .map(|point| point.difference)
                .unwrap_or(f64::NEG_INFINITY)
        },
        &outer_cfg,
    );
    let point = evaluator.inner_difference(&prior, &inner_cfg)?;
    let value = point.difference / n as f64;
    let labels = fam.labels();
    Ok(FunctionalReport {
        value,
        clamped: value.max(0.0),
        argmax_prior: prior,
        argmin_q: point.q,
        argmax_theta_seq: evaluator.theta_seqs[point.worst_seq]
            .iter()
            .map(|&t| labels[t].clone())
            .collect(),
        n,
    })
}

/// Recomputes the functional's χ difference at explicitly given
/// arguments; reports can be audited against their `value` with this.
pub fn evaluate_functional_at(
    fam: &AVQCFamily,
    src: &CQSource,
    prior: &[f64],
    q: &[f64],
    theta_seq: &[String],
) -> Result<f64> {
    let n = theta_seq.len();
    let evaluator = Evaluator::build(fam, src, n)?;
    if prior.len() != evaluator.symbols.len() {
        return Err(Error::ShapeMismatch {
            reason: format!(
                "prior has {} entries but the product alphabet has {}",
                prior.len(),
                evaluator.symbols.len()
            ),
        });
    }
    channels::validate_distribution(prior, 1e-9)?;
    channels::validate_distribution(q, 1e-9)?;
    let seq = resolve_labels(fam, theta_seq)?;
    let chi_b = evaluator.chi_mixture(prior, q)?;
    let chi_z = evaluator.chi_environment(prior, &seq)?;
    Ok((chi_b - chi_z) / n as f64)
}

fn resolve_labels(fam: &AVQCFamily, theta_seq: &[String]) -> Result<Vec<usize>> {
    let labels = fam.labels();
    theta_seq
        .iter()
        .map(|l| {
            labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::ShapeMismatch {
                    reason: format!("unknown channel label '{l}'"),
                })
        })
        .collect()
}

/// Exact worst-case environment information over all jammer sequences,
/// with the source prior extended i.i.d. to `n` uses.
pub fn eavesdropper_chi_worstcase(
    fam: &AVQCFamily,
    src: &CQSource,
    n: usize,
) -> Result<EavesdropperReport> {
    let evaluator = Evaluator::build(fam, src, n)?;
    let prior = evaluator.iid_prior(src.prior());
    let (chi, worst) = evaluator.worst_environment(&prior)?;
    let labels = fam.labels();
    Ok(EavesdropperReport {
        chi,
        per_use: chi / n as f64,
        argmax_theta_seq: evaluator.theta_seqs[worst]
            .iter()
            .map(|&t| labels[t].clone())
            .collect(),
        n,
    })
}

/// Environment information for one specific jammer sequence (given by
/// labels), with the source prior extended i.i.d. over the uses.
pub fn eavesdropper_chi_sequence(
    fam: &AVQCFamily,
    src: &CQSource,
    theta_seq: &[String],
) -> Result<f64> {
    let evaluator = Evaluator::build(fam, src, theta_seq.len())?;
    let prior = evaluator.iid_prior(src.prior());
    let seq = resolve_labels(fam, theta_seq)?;
    evaluator.chi_environment(&prior, &seq)
}

/// Compound-channel secrecy with channel-state information at the coder:
/// each channel is optimized separately, the worst one decides.
pub fn compound_secrecy_csi(fam: &AVQCFamily, src: &CQSource, n: usize) -> Result<f64> {
    if n > 2 {
        return Err(Error::BlocklengthTooLarge { n, max: 2 });
    }
    let evaluator = Evaluator::build(fam, src, n)?;
    let opts = FunctionalOpts::default();
    let outer_cfg = opts.outer_cfg();
    let dim = evaluator.symbols.len();
    let mut worst = f64::INFINITY;
    for theta in 0..fam.len() {
        let (_, value) = opt::maximize_over_simplex(
            dim,
            |p| {
                let chi_b = evaluator
                    .chi_fixed_channel(p, theta)
                    .unwrap_or(f64::NEG_INFINITY);
                let chi_z = evaluator
                    .chi_environment(p, &vec![theta; n])
                    .unwrap_or(f64::INFINITY);
                chi_b - chi_z
            },
            &outer_cfg,
        );
        worst = worst.min(value / n as f64);
    }
    Ok(worst)
}

/// Compound-channel secrecy without channel-state information: one prior
/// must work against the worst channel for the receiver and the best one
/// for the environment.
pub fn compound_secrecy_nocsi(fam: &AVQCFamily, src: &CQSource, n: usize) -> Result<f64> {
    if n > 2 {
        return Err(Error::BlocklengthTooLarge { n, max: 2 });
    }
    let evaluator = Evaluator::build(fam, src, n)?;
    let opts = FunctionalOpts::default();
    let outer_cfg = opts.outer_cfg();
    let dim = evaluator.symbols.len();
    let objective = |p: &[f64]| {
        let mut min_b = f64::INFINITY;
        let mut max_z = f64::NEG_INFINITY;
        for theta in 0..evaluator.theta_count {
            match evaluator.chi_fixed_channel(p, theta) {
                Ok(v) => min_b = min_b.min(v),
                Err(_) => return f64::NEG_INFINITY,
            }
            match evaluator.chi_environment(p, &vec![theta; evaluator.n]) {
                Ok(v) => max_z = max_z.max(v),
                Err(_) => return f64::NEG_INFINITY,
            }
        }
        min_b - max_z
    };
    let (_, value) = opt::maximize_over_simplex(dim, objective, &outer_cfg);
    Ok(value / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::KrausChannel;
    use num_complex::Complex64;

    fn classical_source(dim: usize) -> CQSource {
        CQSource::classical_basis(dim, dim)
    }

    fn quick_opts() -> FunctionalOpts {
        FunctionalOpts {
            grid_resolution: 32,
            nm_starts: 6,
            ..FunctionalOpts::default()
        }
    }

    fn dephasing_channel() -> KrausChannel {
        let mut k0 = ComplexMatrix::zeros(2, 2);
        k0.set(0, 0, Complex64::new(1.0, 0.0));
        let mut k1 = ComplexMatrix::zeros(2, 2);
        k1.set(1, 1, Complex64::new(1.0, 0.0));
        KrausChannel::new(2, 2, vec![k0, k1]).unwrap()
    }

    fn constant_channel() -> KrausChannel {
        let mut k0 = ComplexMatrix::zeros(2, 2);
        k0.set(0, 0, Complex64::new(1.0, 0.0));
        let mut k1 = ComplexMatrix::zeros(2, 2);
        k1.set(0, 1, Complex64::new(1.0, 0.0));
        KrausChannel::new(2, 2, vec![k0, k1]).unwrap()
    }

    #[test]
    fn noiseless_channel_with_trivial_environment_gives_one_bit() {
        let fam = AVQCFamily::new(vec!["id".into()], vec![KrausChannel::identity(2)]).unwrap();
        let src = classical_source(2);
        let report = avqc_secrecy_functional(&fam, &src, 1, &quick_opts()).unwrap();
        assert!((report.value - 1.0).abs() < 1e-6, "value {}", report.value);
        assert!((report.argmax_prior[0] - 0.5).abs() < 1e-4);
        assert_eq!(report.argmax_theta_seq, vec!["id".to_string()]);
    }

    #[test]
    fn constant_channel_family_has_zero_functional() {
        let fam = AVQCFamily::new(vec!["const".into()], vec![constant_channel()]).unwrap();
        let src = classical_source(2);
        let report = avqc_secrecy_functional(&fam, &src, 1, &quick_opts()).unwrap();
        assert!(report.value.abs() < 1e-9, "value {}", report.value);
    }

    #[test]
    fn reported_value_is_reproducible_from_reported_arguments() {
        let fam = AVQCFamily::new(
            vec!["id".into(), "deph".into()],
            vec![KrausChannel::identity(2), dephasing_channel()],
        )
        .unwrap();
        let src = classical_source(2);
        for n in 1..=2 {
            let report = avqc_secrecy_functional(&fam, &src, n, &quick_opts()).unwrap();
            let recomputed = evaluate_functional_at(
                &fam,
                &src,
                &report.argmax_prior,
                &report.argmin_q,
                &report.argmax_theta_seq,
            )
            .unwrap();
            assert!(
                (report.value - recomputed).abs() < 1e-9,
                "n={n}: {} vs {recomputed}",
                report.value
            );
        }
    }

    #[test]
    fn dephasing_environment_sees_the_full_classical_message() {
        let fam = AVQCFamily::new(vec!["deph".into()], vec![dephasing_channel()]).unwrap();
        let src = classical_source(2);
        for n in 1..=2 {
            let report = eavesdropper_chi_worstcase(&fam, &src, n).unwrap();
            assert!((report.chi - n as f64).abs() < 1e-9);
            assert!((report.per_use - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_kraus_channels_leak_nothing() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(7);
        let fam = AVQCFamily::new(
            vec!["a".into(), "b".into()],
            (0..2)
                .map(|_| crate::random::kraus_channel(&mut rng, 2, 3, 1))
                .collect(),
        )
        .unwrap();
        let src = classical_source(2);
        for n in 1..=2 {
            let report = eavesdropper_chi_worstcase(&fam, &src, n).unwrap();
            assert!(report.chi.abs() < 1e-9, "n={n} chi {}", report.chi);
        }
    }

    #[test]
    fn environment_term_is_permutation_invariant_for_iid_priors() {
        let fam = AVQCFamily::new(
            vec!["deph".into(), "const".into()],
            vec![dephasing_channel(), constant_channel()],
        )
        .unwrap();
        let src = classical_source(2).with_prior(vec![0.3, 0.7]).unwrap();
        let forward =
            eavesdropper_chi_sequence(&fam, &src, &["deph".into(), "const".into()]).unwrap();
        let backward =
            eavesdropper_chi_sequence(&fam, &src, &["const".into(), "deph".into()]).unwrap();
        assert!((forward - backward).abs() < 1e-9);
    }

    #[test]
    fn ordering_between_functional_and_compound_variants() {
        let fam = AVQCFamily::new(
            vec!["id".into(), "deph".into()],
            vec![KrausChannel::identity(2), dephasing_channel()],
        )
        .unwrap();
        let src = classical_source(2);
        let avqc = avqc_secrecy_functional(&fam, &src, 1, &FunctionalOpts::default())
            .unwrap()
            .value;
        let nocsi = compound_secrecy_nocsi(&fam, &src, 1).unwrap();
        let csi = compound_secrecy_csi(&fam, &src, 1).unwrap();
        assert!(avqc <= nocsi + 1e-6, "avqc {avqc} nocsi {nocsi}");
        assert!(nocsi <= csi + 1e-6, "nocsi {nocsi} csi {csi}");
    }

    #[test]
    fn singleton_compound_matches_plain_wiretap_difference() {
        let fam = AVQCFamily::new(vec!["deph".into()], vec![dephasing_channel()]).unwrap();
        let src = classical_source(2);
        let csi = compound_secrecy_csi(&fam, &src, 1).unwrap();
        let nocsi = compound_secrecy_nocsi(&fam, &src, 1).unwrap();
        assert!((csi - nocsi).abs() < 1e-9);
        // The dephasing environment learns exactly what the receiver does.
        assert!(csi.abs() < 1e-6, "csi {csi}");
    }

    #[test]
    fn identity_preprocessing_keeps_the_source() {
        let src = classical_source(2);
        let pre = PreprocessedSource::new(
            vec!["u0".into(), "u1".into()],
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let mapped = with_preprocessing(&src, &pre).unwrap();
        assert_eq!(mapped.alphabet(), &["u0".to_string(), "u1".to_string()]);
        for a in 0..2 {
            assert!(mapped.state(a).trace_norm_diff(src.state(a)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn merging_kernel_averages_states() {
        let src = classical_source(2);
        let pre =
            PreprocessedSource::new(vec!["u".into()], vec![1.0], vec![vec![0.5, 0.5]]).unwrap();
        let mapped = with_preprocessing(&src, &pre).unwrap();
        let expected = DensityOperator::maximally_mixed(2);
        assert!(mapped.state(0).trace_norm_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn preprocessing_cannot_beat_the_unprocessed_optimum() {
        let fam = AVQCFamily::new(
            vec!["id".into(), "deph".into()],
            vec![KrausChannel::identity(2), dephasing_channel()],
        )
        .unwrap();
        let src = classical_source(2);
        let pre = PreprocessedSource::new(
            vec!["u0".into(), "u1".into()],
            vec![0.5, 0.5],
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
        )
        .unwrap();
        let mapped = with_preprocessing(&src, &pre).unwrap();
        let raw = avqc_secrecy_functional(&fam, &src, 1, &quick_opts()).unwrap();
        let processed = avqc_secrecy_functional(&fam, &mapped, 1, &quick_opts()).unwrap();
        assert!(
            processed.value <= raw.value + 1e-6,
            "processed {} raw {}",
            processed.value,
            raw.value
        );
    }

    #[test]
    fn rejects_oversized_blocklengths() {
        let fam = AVQCFamily::new(vec!["id".into()], vec![KrausChannel::identity(2)]).unwrap();
        let src = classical_source(2);
        assert!(matches!(
            avqc_secrecy_functional(&fam, &src, 4, &quick_opts()),
            Err(Error::BlocklengthTooLarge { .. })
        ));
        assert!(matches!(
            compound_secrecy_csi(&fam, &src, 3),
            Err(Error::BlocklengthTooLarge { .. })
        ));
    }

    #[test]
    fn kernel_shape_mismatch_is_reported() {
        let src = classical_source(2);
        let pre = PreprocessedSource::new(vec!["u".into()], vec![1.0], vec![vec![0.5, 0.25, 0.25]])
            .unwrap();
        assert!(matches!(
            with_preprocessing(&src, &pre),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
