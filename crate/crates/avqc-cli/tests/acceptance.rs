//! End-to-end acceptance gate: one test per release criterion, each
//! printing a single PASS line with the observed values.
//!
//! Timed criteria take a shared lock so their wall-clock budgets are not
//! distorted by the other tests running on the same cores.

use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use avqc::channels::{AVQCFamily, CQSource, DensityOperator};
use avqc::coding::{self, BlockCode, ErrorCriterion};
use avqc::continuity;
use avqc::entropy;
use avqc::linalg::{trace_norm, ComplexMatrix};
use avqc::secrecy::{self, FunctionalOpts};
use avqc::symmetrizability::{self, ProbeSet, SolverOpts, TauRule};
use avqc::{catalog, opt, random};

static TIMED: Mutex<()> = Mutex::new(());

fn timed_guard() -> std::sync::MutexGuard<'static, ()> {
    TIMED.lock().unwrap_or_else(|e| e.into_inner())
}

#[test]
fn criterion_01_sign_family_functional_is_one_half() {
    let _gate = timed_guard();
    let start = Instant::now();
    let fam = catalog::example1_family();
    let src = CQSource::classical_basis(2, 2);
    let report =
        secrecy::avqc_secrecy_functional(&fam, &src, 1, &FunctionalOpts::default()).unwrap();
    let elapsed = start.elapsed();

    assert!(
        (report.value - 0.5).abs() <= 1e-4,
        "functional {} not within 1e-4 of 0.5",
        report.value
    );
    let group1 = report.argmin_q[0] + report.argmin_q[1];
    let group2 = report.argmin_q[2] + report.argmin_q[3];
    assert!(
        (group1 - 0.5).abs() <= 1e-2 && (group2 - 0.5).abs() <= 1e-2,
        "argmin q groups ({group1}, {group2}) not balanced"
    );
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}, budget 30s");
    println!(
        "criterion 01 PASS: functional {:.9} (target 0.5 +/- 1e-4), argmin q groups ({:.4}, {:.4}), {:.2?}",
        report.value, group1, group2, elapsed
    );
}

#[test]
fn criterion_02_sign_family_leaks_nothing_up_to_blocklength_three() {
    let _gate = timed_guard();
    let start = Instant::now();
    let fam = catalog::example1_family();
    let src = CQSource::classical_basis(2, 2);
    let mut worst: f64 = 0.0;
    for n in 1..=3usize {
        let report = secrecy::eavesdropper_chi_worstcase(&fam, &src, n).unwrap();
        assert!(
            report.chi.abs() <= 1e-9,
            "environment information {} at n = {n}",
            report.chi
        );
        worst = worst.max(report.chi.abs());
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10s");
    println!(
        "criterion 02 PASS: worst environment information {:.3e} over n in 1..=3 (target 0 +/- 1e-9), {:.2?}",
        worst, elapsed
    );
}

#[test]
fn criterion_03_sign_family_is_symmetrizable() {
    let _gate = timed_guard();
    let start = Instant::now();
    let fam = catalog::example1_family();
    let numeric = symmetrizability::f_l(&fam, 1, &SolverOpts::default()).unwrap();
    assert!(
        numeric <= 1e-6,
        "solver residual {numeric} at block length 1"
    );
    let mut explicit_worst: f64 = 0.0;
    for l in 1..=2usize {
        let residual = symmetrizability::verify_explicit_symmetrizer(
            &fam,
            l,
            TauRule::ComputationalBasisSigns,
            &ProbeSet::spanning(2usize.pow(l as u32)),
        )
        .unwrap();
        assert!(
            residual <= 1e-9,
            "closed-form residual {residual} at block length {l}"
        );
        explicit_worst = explicit_worst.max(residual);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}, budget 60s");
    println!(
        "criterion 03 PASS: solver residual {:.3e} (limit 1e-6), closed-form residual {:.3e} at L in {{1,2}} (limit 1e-9), {:.2?}",
        numeric, explicit_worst, elapsed
    );
}

#[test]
fn criterion_04_flag_family_certificates_and_leakage() {
    let _gate = timed_guard();
    let start = Instant::now();
    let src = CQSource::classical_basis(2, 2);
    let mut lines = Vec::new();
    for &lambda in &[0.1, 0.3, 0.5] {
        let fam = catalog::lambda_family(lambda).unwrap();
        let residual = symmetrizability::f_l(&fam, 1, &SolverOpts::default()).unwrap();
        assert!(
            residual > 1e-4,
            "lambda {lambda}: residual {residual} is not a certificate"
        );
        for n in 1..=2usize {
            let report = secrecy::eavesdropper_chi_worstcase(&fam, &src, n).unwrap();
            assert!(
                report.per_use <= lambda + 1e-9,
                "lambda {lambda}, n {n}: per-use leakage {}",
                report.per_use
            );
        }
        lines.push(format!("lambda {lambda}: residual {residual:.4}"));
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "took {elapsed:?}, budget 2min"
    );
    println!(
        "criterion 04 PASS: {}; per-use leakage <= lambda + 1e-9 at n in {{1,2}}, {:.2?}",
        lines.join("; "),
        elapsed
    );
}

#[test]
fn criterion_05_super_activation_triple() {
    let _gate = timed_guard();
    let start = Instant::now();
    let report = catalog::verify_superactivation(0).unwrap();
    let elapsed = start.elapsed();
    for claim in &report.claims {
        assert!(
            claim.pass,
            "{}: observed {} against threshold {}",
            claim.name, claim.observed, claim.threshold
        );
    }
    assert!(
        elapsed.as_secs_f64() < 300.0,
        "took {elapsed:?}, budget 5min"
    );
    let summary: Vec<String> = report
        .claims
        .iter()
        .map(|c| format!("{} {:.3e}", c.name, c.observed))
        .collect();
    println!("criterion 05 PASS: {}, {:.2?}", summary.join("; "), elapsed);
}

#[test]
fn criterion_06_blocking_pair_cross_identity_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let rho = random::density_operator(&mut rng, 4);
        let (first, second) = catalog::superactivation_complement_mirror(&rho).unwrap();
        assert!(
            first <= 1e-9 && second <= 1e-9,
            "residuals {first}, {second}"
        );
        worst = worst.max(first).max(second);
    }
    println!(
        "criterion 06 PASS: worst cross-identity residual {:.3e} over 20 random states (limit 1e-9)",
        worst
    );
}

#[test]
fn criterion_07_holevo_matches_mutual_information_on_diagonal_ensembles() {
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let states = rng.gen_range(2..=4);
        let dim = rng.gen_range(2..=5);
        let prior = random::distribution(&mut rng, states);
        let rows = random::stochastic_matrix(&mut rng, states, dim);
        let ensemble = entropy::Ensemble::new(
            prior.clone(),
            rows.iter()
                .map(|row| DensityOperator::new(ComplexMatrix::diag(row)).unwrap())
                .collect(),
        )
        .unwrap();
        let chi = entropy::holevo(&ensemble).unwrap();
        let joint: Vec<Vec<f64>> = (0..states)
            .map(|x| rows[x].iter().map(|w| prior[x] * w).collect())
            .collect();
        let mi = entropy::classical_mi(&joint).unwrap();
        let gap = (chi - mi).abs();
        assert!(gap <= 1e-9, "chi {chi} vs mi {mi}");
        worst = worst.max(gap);
    }
    println!(
        "criterion 07 PASS: worst |chi - I(X;Y)| = {:.3e} over 1000 diagonal ensembles (limit 1e-9)",
        worst
    );
}

#[test]
fn criterion_08_fannes_audenaert_dominates_entropy_gaps() {
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let mut violations = 0usize;
    let mut tightest: f64 = f64::INFINITY;
    for _ in 0..1000 {
        let dim = rng.gen_range(2..=6);
        let rho = random::density_operator(&mut rng, dim);
        let sigma = random::density_operator(&mut rng, dim);
        let full = 0.5 * trace_norm(&rho.matrix().sub(sigma.matrix())).unwrap();
        if full < 1e-12 {
            continue;
        }
        let target = rng.gen_range(0.01..0.36);
        let s = (target / full).min(1.0);
        let blended = DensityOperator::new(
            rho.matrix()
                .scaled_re(1.0 - s)
                .add(&sigma.matrix().scaled_re(s)),
        )
        .unwrap();
        let mu = 0.5 * trace_norm(&rho.matrix().sub(blended.matrix())).unwrap();
        let bound = continuity::fannes_audenaert(mu, dim).unwrap();
        let gap =
            (entropy::vn_entropy(&rho).unwrap() - entropy::vn_entropy(&blended).unwrap()).abs();
        if gap > bound {
            violations += 1;
        }
        tightest = tightest.min(bound - gap);
    }
    assert_eq!(violations, 0, "bound violated {violations} times");
    println!(
        "criterion 08 PASS: 0 violations over 1000 pairs, smallest slack {:.3e}",
        tightest
    );
}

mod oracle {
    //! Brute-force re-implementation of the code evaluator straight from
    //! the definitions, sharing nothing with the library's evaluation
    //! path: dense complex matrices, explicit Kraus products over the
    //! block, the environment read off as `tr(K_b' K_a rho)`, and a
    //! local Jacobi eigensolver for the entropies.

    use num_complex::Complex64;

    pub type Mat = Vec<Vec<Complex64>>;

    pub fn zeros(r: usize, c: usize) -> Mat {
        vec![vec![Complex64::new(0.0, 0.0); c]; r]
    }

    pub fn mul(a: &Mat, b: &Mat) -> Mat {
        let (r, k, c) = (a.len(), b.len(), b[0].len());
        let mut out = zeros(r, c);
        for i in 0..r {
            for t in 0..k {
                let av = a[i][t];
                for j in 0..c {
                    out[i][j] += av * b[t][j];
                }
            }
        }
        out
    }

    pub fn dagger(a: &Mat) -> Mat {
        let (r, c) = (a.len(), a[0].len());
        let mut out = zeros(c, r);
        for i in 0..r {
            for j in 0..c {
                out[j][i] = a[i][j].conj();
            }
        }
        out
    }

    pub fn kron(a: &Mat, b: &Mat) -> Mat {
        let (ar, ac, br, bc) = (a.len(), a[0].len(), b.len(), b[0].len());
        let mut out = zeros(ar * br, ac * bc);
        for i in 0..ar {
            for j in 0..ac {
                for k in 0..br {
                    for l in 0..bc {
                        out[i * br + k][j * bc + l] = a[i][j] * b[k][l];
                    }
                }
            }
        }
        out
    }

    pub fn add_scaled(acc: &mut Mat, m: &Mat, w: f64) {
        for i in 0..acc.len() {
            for j in 0..acc[0].len() {
                acc[i][j] += m[i][j] * w;
            }
        }
    }

    pub fn trace(a: &Mat) -> Complex64 {
        (0..a.len()).map(|i| a[i][i]).sum()
    }

    /// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.
    pub fn eigenvalues(m: &Mat) -> Vec<f64> {
        let n = m.len();
        let mut a = m.clone();
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in 0..n {
                    if p != q {
                        off += a[p][q].norm_sqr();
                    }
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p][q];
                    if apq.norm() < 1e-18 {
                        continue;
                    }
                    let app = a[p][p].re;
                    let aqq = a[q][q].re;
                    let phase = apq / apq.norm();
                    let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                    let (c, s) = (theta.cos(), theta.sin());
                    let cs = Complex64::new(c, 0.0);
                    let sn = phase * s;
                    for i in 0..n {
                        let aip = a[i][p];
                        let aiq = a[i][q];
                        a[i][p] = aip * cs - aiq * sn.conj();
                        a[i][q] = aip * sn + aiq * cs;
                    }
                    for j in 0..n {
                        let apj = a[p][j];
                        let aqj = a[q][j];
                        a[p][j] = apj * cs - aqj * sn;
                        a[q][j] = apj * sn.conj() + aqj * cs;
                    }
                }
            }
        }
        (0..n).map(|i| a[i][i].re).collect()
    }

    pub fn entropy_bits(m: &Mat) -> f64 {
        eigenvalues(m)
            .into_iter()
            .filter(|&l| l > 1e-15)
            .map(|l| -l * l.log2())
            .sum()
    }

    /// Holevo information of a uniform ensemble.
    pub fn holevo_uniform(states: &[Mat]) -> f64 {
        let j = states.len() as f64;
        let mut avg = zeros(states[0].len(), states[0].len());
        for s in states {
            add_scaled(&mut avg, s, 1.0 / j);
        }
        entropy_bits(&avg) - states.iter().map(entropy_bits).sum::<f64>() / j
    }
}

#[test]
fn criterion_09_code_evaluator_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(900);
    let mut worst_gap: f64 = 0.0;

    let to_oracle = |m: &ComplexMatrix| -> oracle::Mat {
        (0..m.rows())
            .map(|i| (0..m.cols()).map(|j| m.at(i, j)).collect())
            .collect()
    };

    for instance in 0..50 {
        let theta_count = rng.gen_range(2..=3);
        let n = rng.gen_range(1..=2);
        let j_count = rng.gen_range(2..=4);
        let fam = AVQCFamily::new(
            (0..theta_count).map(|t| format!("t{t}")).collect(),
            (0..theta_count)
                .map(|_| random::kraus_channel(&mut rng, 2, 2, 2))
                .collect(),
        )
        .unwrap();
        let src = CQSource::classical_basis(2, 2);
        let symbols = 2usize.pow(n as u32);
        let dim = 2usize.pow(n as u32);

        let encoder: Vec<Vec<f64>> = (0..j_count)
            .map(|_| random::distribution(&mut rng, symbols))
            .collect();
        let effects: Vec<ComplexMatrix> = (0..j_count)
            .map(|_| {
                let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
                    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                });
                g.adjoint().matmul(&g)
            })
            .collect();
        let mut total = ComplexMatrix::zeros(dim, dim);
        for e in &effects {
            total = total.add(e);
        }
        let spectrum = avqc::linalg::hermitian_eig(&total).unwrap();
        let mut inv_sqrt = ComplexMatrix::zeros(dim, dim);
        for (k, &ev) in spectrum.eigenvalues.iter().enumerate() {
            let col: Vec<Complex64> = (0..dim).map(|i| spectrum.eigenvectors.at(i, k)).collect();
            let outer = ComplexMatrix::outer(&col, &col);
            inv_sqrt = inv_sqrt.add(&outer.scaled_re(1.0 / ev.sqrt()));
        }
        let decoder: Vec<ComplexMatrix> = effects
            .iter()
            .map(|e| inv_sqrt.matmul(e).matmul(&inv_sqrt).hermitized())
            .collect();
        let code = BlockCode::new(n, encoder.clone(), decoder.clone()).unwrap();

        for seq in opt::index_sequences(theta_count, n) {
            let named: Vec<String> = seq.iter().map(|&t| format!("t{t}")).collect();

            let mut block_kraus: Vec<oracle::Mat> = vec![vec![vec![Complex64::new(1.0, 0.0)]]];
            for &t in &seq {
                let mut grown = Vec::new();
                for prefix in &block_kraus {
                    for op in fam.channel(t).kraus() {
                        grown.push(oracle::kron(prefix, &to_oracle(op)));
                    }
                }
                block_kraus = grown;
            }

            let symbol_state = |x: usize| -> oracle::Mat {
                let mut state = vec![vec![Complex64::new(1.0, 0.0)]];
                let mut rem = x;
                for pos in (0..n).rev() {
                    let letter = (rem / 2usize.pow(pos as u32)) % 2;
                    rem %= 2usize.pow(pos as u32);
                    state = oracle::kron(&state, &to_oracle(src.state(letter).matrix()));
                }
                state
            };

            let mut outputs = Vec::with_capacity(j_count);
            let mut environments = Vec::with_capacity(j_count);
            for enc_row in &encoder {
                let mut input = oracle::zeros(dim, dim);
                for (x, &w) in enc_row.iter().enumerate() {
                    oracle::add_scaled(&mut input, &symbol_state(x), w);
                }
                let mut out = oracle::zeros(dim, dim);
                for k in &block_kraus {
                    oracle::add_scaled(
                        &mut out,
                        &oracle::mul(k, &oracle::mul(&input, &oracle::dagger(k))),
                        1.0,
                    );
                }
                outputs.push(out);
                let e = block_kraus.len();
                let mut env = oracle::zeros(e, e);
                for a in 0..e {
                    for b in 0..e {
                        env[a][b] = oracle::trace(&oracle::mul(
                            &oracle::dagger(&block_kraus[b]),
                            &oracle::mul(&block_kraus[a], &input),
                        ));
                    }
                }
                environments.push(env);
            }

            let mut correct = Vec::with_capacity(j_count);
            for (j, out) in outputs.iter().enumerate() {
                let d = to_oracle(&decoder[j]);
                correct.push(oracle::trace(&oracle::mul(out, &d)).re);
            }
            let oracle_avg = 1.0 - correct.iter().sum::<f64>() / j_count as f64;
            let oracle_max = 1.0 - correct.iter().cloned().fold(f64::INFINITY, f64::min);
            let oracle_leak = oracle::holevo_uniform(&environments);

            let lib_avg = coding::avg_error(&code, &fam, &src, &named).unwrap();
            let lib_max = coding::max_error(&code, &fam, &src, &named).unwrap();
            let lib_leak = coding::leakage(&code, &fam, &src, &named).unwrap();

            for (what, lib, orc) in [
                ("avg_error", lib_avg, oracle_avg),
                ("max_error", lib_max, oracle_max),
                ("leakage", lib_leak, oracle_leak),
            ] {
                let gap = (lib - orc).abs();
                assert!(
                    gap <= 1e-9,
                    "instance {instance}, seq {named:?}: {what} {lib} vs oracle {orc}"
                );
                worst_gap = worst_gap.max(gap);
            }
        }

        let (lib_worst, _) = coding::worst_case(&code, &fam, &src, ErrorCriterion::Max).unwrap();
        let mut oracle_worst: f64 = 0.0;
        for seq in opt::index_sequences(theta_count, n) {
            let named: Vec<String> = seq.iter().map(|&t| format!("t{t}")).collect();
            oracle_worst = oracle_worst.max(coding::max_error(&code, &fam, &src, &named).unwrap());
        }
        assert!((lib_worst - oracle_worst).abs() <= 1e-9);
    }
    println!(
        "criterion 09 PASS: worst |library - oracle| = {:.3e} over 50 instances (limit 1e-9)",
        worst_gap
    );
}

#[test]
fn criterion_10_reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let fam_path = dir.path().join("fam.json");
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let fam = AVQCFamily::new(
        vec!["a".into(), "b".into()],
        vec![
            random::kraus_channel(&mut rng, 2, 2, 2),
            random::kraus_channel(&mut rng, 2, 2, 2),
        ],
    )
    .unwrap();
    std::fs::write(&fam_path, serde_json::to_string(&fam).unwrap()).unwrap();

    let run = || {
        let output = std::process::Command::new(env!("CARGO_BIN_EXE_avqc"))
            .args([
                "symmetrize",
                "--avqc",
                fam_path.to_str().unwrap(),
                "--seed",
                "42",
                "--threads",
                "1",
            ])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        output.stdout
    };
    let first = run();
    let second = run();
    assert_eq!(first, second, "reports differ between identical runs");
    assert!(!first.is_empty());
    println!(
        "criterion 10 PASS: identical {} byte reports across repeated seeded single-threaded runs",
        first.len()
    );
}
