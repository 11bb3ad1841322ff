//! Exact scoring of explicit block codes against jammer sequences.
//!
//! A code is a stochastic encoder from messages to product source symbols
//! together with a decoding POVM on the n-fold output space. Everything
//! here is evaluated by full enumeration (product alphabets are capped at
//! 4096 symbols), so the scores are the textbook definitions made
//! executable rather than estimates: average and maximal decoding error
//! under one jammer sequence, their exact worst case over all sequences,
//! and the Holevo information the environment obtains about a uniformly
//! distributed message. Randomness-assisted codes are weighted code
//! lists; the jammer is scored against the weighted averages.

use serde::{Deserialize, Serialize};

use crate::channels::{self, complementary, AVQCFamily, CQSource};
use crate::entropy;
use crate::linalg::{self, ComplexMatrix};
use crate::opt;
use crate::{Error, Result};

const MAX_PRODUCT: usize = 4096;
const POVM_TOL: f64 = 1e-9;

/// Which decoding-error statistic a worst-case search optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorCriterion {
    #[serde(rename = "avg")]
    Average,
    Max,
}

/// Stochastic encoder over product symbols plus a decoding POVM.
#[derive(Debug, Clone)]
pub struct BlockCode {
    n: usize,
    /// `encoder[j][x] = E(x|j)` over the product alphabet, lexicographic.
    encoder: Vec<Vec<f64>>,
    decoder: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct RawCode {
    n: usize,
    encoder: Vec<Vec<f64>>,
    decoder: Vec<ComplexMatrix>,
}

impl BlockCode {
    pub fn new(n: usize, encoder: Vec<Vec<f64>>, decoder: Vec<ComplexMatrix>) -> Result<Self> {
        if n == 0 {
            return Err(Error::BlocklengthTooLarge { n: 0, max: 4 });
        }
        if encoder.is_empty() || encoder.len() != decoder.len() {
            return Err(Error::ShapeMismatch {
                reason: format!(
                    "encoder has {} messages but decoder has {} operators",
                    encoder.len(),
                    decoder.len()
                ),
            });
        }
        let width = encoder[0].len();
        for row in &encoder {
            if row.len() != width {
                return Err(Error::ShapeMismatch {
                    reason: "encoder rows must share one length".into(),
                });
            }
            channels::validate_distribution(row, 1e-9)?;
        }

        let dim = decoder[0].rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        let mut cleaned = Vec::with_capacity(decoder.len());
        for d in &decoder {
            if d.rows() != dim || d.cols() != dim {
                return Err(Error::ShapeMismatch {
                    reason: "decoder operators must be square and share one dimension".into(),
                });
            }
            let herm = linalg::require_hermitian(d)?;
            let spectrum = linalg::hermitian_eig(&herm)?;
            let min = spectrum
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min < -POVM_TOL {
                return Err(Error::NotPsd {
                    min_eigenvalue: min,
                });
            }
            sum = sum.add(&herm);
            cleaned.push(herm);
        }
        let deviation = sum.sub(&ComplexMatrix::identity(dim)).frobenius_norm();
        if deviation > POVM_TOL * (dim as f64).sqrt().max(1.0) {
            return Err(Error::ShapeMismatch {
                reason: format!(
                    "decoder operators must sum to the identity (deviation {deviation:.3e})"
                ),
            });
        }
        Ok(BlockCode {
            n,
            encoder,
            decoder: cleaned,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j_count(&self) -> usize {
        self.encoder.len()
    }

    pub fn encoder(&self) -> &[Vec<f64>] {
        &self.encoder
    }

    pub fn decoder(&self) -> &[ComplexMatrix] {
        &self.decoder
    }
}

impl Serialize for BlockCode {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        RawCode {
            n: self.n,
            encoder: self.encoder.clone(),
            decoder: self.decoder.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BlockCode {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let raw = RawCode::deserialize(deserializer)?;
        BlockCode::new(raw.n, raw.encoder, raw.decoder).map_err(serde::de::Error::custom)
    }
}

/// Weighted list of codes sharing blocklength, message count, and spaces.
#[derive(Debug, Clone, Serialize)]
pub struct RandomizedCode {
    codes: Vec<BlockCode>,
    weights: Vec<f64>,
}

impl RandomizedCode {
    pub fn new(codes: Vec<BlockCode>, weights: Vec<f64>) -> Result<Self> {
        if codes.is_empty() || codes.len() != weights.len() {
            return Err(Error::ShapeMismatch {
                reason: "need equally many codes and weights, at least one".into(),
            });
        }
        channels::validate_distribution(&weights, 1e-9)?;
        let first = &codes[0];
        for c in &codes[1..] {
            if c.n != first.n
                || c.j_count() != first.j_count()
                || c.encoder[0].len() != first.encoder[0].len()
                || c.decoder[0].rows() != first.decoder[0].rows()
            {
                return Err(Error::ShapeMismatch {
                    reason: "all codes must share blocklength, message count, and spaces".into(),
                });
            }
        }
        Ok(RandomizedCode { codes, weights })
    }

    pub fn codes(&self) -> &[BlockCode] {
        &self.codes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Everything an evaluation needs, validated once.
struct CodeContext<'a> {
    code: &'a BlockCode,
    fam: &'a AVQCFamily,
    symbols: Vec<Vec<usize>>,
    /// `out[θ][a] = N_θ(F(a))`.
    out_single: Vec<Vec<ComplexMatrix>>,
    /// `env[θ][a] = V′_θ(F(a))`.
    env_single: Vec<Vec<ComplexMatrix>>,
}

impl<'a> CodeContext<'a> {
    fn build(code: &'a BlockCode, fam: &'a AVQCFamily, src: &CQSource) -> Result<Self> {
        if fam.dim_in() != src.dim() {
            return Err(Error::DimensionMismatch {
                expected: fam.dim_in(),
                got: src.dim(),
            });
        }
        let symbol_count = src.len().pow(code.n as u32);
        if symbol_count > MAX_PRODUCT {
            return Err(Error::BlocklengthTooLarge {
                n: symbol_count,
                max: MAX_PRODUCT,
            });
        }
        if code.encoder[0].len() != symbol_count {
            return Err(Error::ShapeMismatch {
                reason: format!(
                    "encoder rows have {} entries but the product alphabet has {symbol_count}",
                    code.encoder[0].len()
                ),
            });
        }
        let dim_out = fam.dim_out().pow(code.n as u32);
        if code.decoder[0].rows() != dim_out {
            return Err(Error::DimensionMismatch {
                expected: dim_out,
                got: code.decoder[0].rows(),
            });
        }

        let mut out_single = Vec::with_capacity(fam.len());
        let mut env_single = Vec::with_capacity(fam.len());
        for theta in 0..fam.len() {
            let ch = fam.channel(theta);
            let comp = complementary(ch);
            out_single.push(
                (0..src.len())
                    .map(|a| ch.apply_to_matrix(src.state(a).matrix()))
                    .collect(),
            );
            env_single.push(
                (0..src.len())
                    .map(|a| comp.apply_to_matrix(src.state(a).matrix()))
                    .collect(),
            );
        }
        Ok(CodeContext {
            code,
            fam,
            symbols: opt::index_sequences(src.len(), code.n),
            out_single,
            env_single,
        })
    }

    fn resolve_seq(&self, theta_seq: &[String]) -> Result<Vec<usize>> {
        if theta_seq.len() != self.code.n {
            return Err(Error::ShapeMismatch {
                reason: format!(
                    "jammer sequence has {} entries but the code has blocklength {}",
                    theta_seq.len(),
                    self.code.n
                ),
            });
        }
        let labels = self.fam.labels();
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

    /// The channel output of each message under one jammer sequence,
    /// taken from `per_letter` (receiver or environment side).
    fn message_states(
        &self,
        per_letter: &[Vec<ComplexMatrix>],
        seq: &[usize],
    ) -> Vec<ComplexMatrix> {
        let dim: usize = (0..self.code.n)
            .map(|i| per_letter[seq[i]][0].rows())
            .product();
        self.code
            .encoder
            .iter()
            .map(|row| {
                let mut state = ComplexMatrix::zeros(dim, dim);
                for (x, symbol) in self.symbols.iter().enumerate() {
                    let p = row[x];
                    if p <= 0.0 {
                        continue;
                    }
                    let mut product = per_letter[seq[0]][symbol[0]].clone();
                    for i in 1..self.code.n {
                        product = linalg::tensor(&product, &per_letter[seq[i]][symbol[i]]);
                    }
                    state = state.add(&product.scaled_re(p));
                }
                state
            })
            .collect()
    }

    fn error(&self, seq: &[usize], criterion: ErrorCriterion) -> f64 {
        let states = self.message_states(&self.out_single, seq);
        let successes = states
            .iter()
            .zip(&self.code.decoder)
            .map(|(state, d)| state.matmul(d).trace().re);
        let value = match criterion {
            ErrorCriterion::Average => 1.0 - successes.sum::<f64>() / self.code.j_count() as f64,
            ErrorCriterion::Max => 1.0 - successes.fold(f64::INFINITY, f64::min),
        };
        value.clamp(0.0, 1.0)
    }

    fn leakage(&self, seq: &[usize]) -> Result<f64> {
        let states = self.message_states(&self.env_single, seq);
        let prior = vec![1.0 / states.len() as f64; states.len()];
        let refs: Vec<&ComplexMatrix> = states.iter().collect();
        entropy::chi_matrices(&prior, &refs)
    }

    fn theta_sequences(&self) -> Result<Vec<Vec<usize>>> {
        let count = self.fam.len().pow(self.code.n as u32);
        if count > MAX_PRODUCT {
            return Err(Error::BlocklengthTooLarge {
                n: count,
                max: MAX_PRODUCT,
            });
        }
        Ok(opt::index_sequences(self.fam.len(), self.code.n))
    }

    fn seq_labels(&self, seq: &[usize]) -> Vec<String> {
        seq.iter().map(|&t| self.fam.labels()[t].clone()).collect()
    }
}

/// Average decoding error `1 − (1/J) Σ_j tr(N_{θⁿ}(Fⁿ(E(·|j))) D_j)`.
pub fn avg_error(
    code: &BlockCode,
    fam: &AVQCFamily,
    src: &CQSource,
    theta_seq: &[String],
) -> Result<f64> {
    let ctx = CodeContext::build(code, fam, src)?;
    let seq = ctx.resolve_seq(theta_seq)?;
    Ok(ctx.error(&seq, ErrorCriterion::Average))
}

/// Maximal decoding error `1 − min_j tr(N_{θⁿ}(Fⁿ(E(·|j))) D_j)`.
pub fn max_error(
    code: &BlockCode,
    fam: &AVQCFamily,
    src: &CQSource,
    theta_seq: &[String],
) -> Result<f64> {
    let ctx = CodeContext::build(code, fam, src)?;
    let seq = ctx.resolve_seq(theta_seq)?;
    Ok(ctx.error(&seq, ErrorCriterion::Max))
}

/// Exact worst case of the chosen error statistic over all jammer
/// sequences, with the first maximizing sequence in lexicographic order.
pub fn worst_case(
    code: &BlockCode,
    fam: &AVQCFamily,
    src: &CQSource,
    criterion: ErrorCriterion,
) -> Result<(f64, Vec<String>)> {
    let ctx = CodeContext::build(code, fam, src)?;
    let seqs = ctx.theta_sequences()?;
    use rayon::prelude::*;
    let values: Vec<f64> = seqs
        .par_iter()
        .map(|seq| ctx.error(seq, criterion))
        .collect();
    let mut best = 0usize;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    Ok((values[best], ctx.seq_labels(&seqs[best])))
}

/// Holevo information of the environment about a uniform message under
/// one jammer sequence.
pub fn leakage(
    code: &BlockCode,
    fam: &AVQCFamily,
    src: &CQSource,
    theta_seq: &[String],
) -> Result<f64> {
    let ctx = CodeContext::build(code, fam, src)?;
    let seq = ctx.resolve_seq(theta_seq)?;
    ctx.leakage(&seq)
}

/// Scores a weighted code list: for each jammer sequence the per-code
/// error and leakage are averaged with the code weights, and the worst
/// sequence is reported for each quantity separately.
pub fn randomized_eval(
    rc: &RandomizedCode,
    fam: &AVQCFamily,
    src: &CQSource,
    criterion: ErrorCriterion,
) -> Result<(f64, f64)> {
    let contexts: Vec<CodeContext> = rc
        .codes
        .iter()
        .map(|code| CodeContext::build(code, fam, src))
        .collect::<Result<_>>()?;
    let seqs = contexts[0].theta_sequences()?;
    use rayon::prelude::*;
    let scores: Vec<Result<(f64, f64)>> = seqs
        .par_iter()
        .map(|seq| {
            let mut error = 0.0;
            let mut leak = 0.0;
            for (ctx, &w) in contexts.iter().zip(&rc.weights) {
                error += w * ctx.error(seq, criterion);
                leak += w * ctx.leakage(seq)?;
            }
            Ok((error, leak))
        })
        .collect();
    let mut worst_error = 0.0_f64;
    let mut worst_leak = 0.0_f64;
    for score in scores {
        let (e, l) = score?;
        worst_error = worst_error.max(e);
        worst_leak = worst_leak.max(l);
    }
    Ok((worst_error, worst_leak))
}
