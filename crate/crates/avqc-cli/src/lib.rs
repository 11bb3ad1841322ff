//! Command-line front end for the avqc toolkit.
//!
//! Parses channel, source and code files, dispatches to the analysis
//! library and emits JSON reports. Every report carries a `context`
//! block with the tool version, the seed, the tolerances in force and
//! the probe-set description used, so a report is reproducible from its
//! own header. Identical inputs and an identical `--seed` produce
//! byte-identical output.
//!
//! Exit codes: 0 on success, 2 on invalid input (with a diagnostic
//! naming the violated invariant or the JSON pointer of the malformed
//! element), 1 on internal numerical failure.

mod schema;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use avqc::channels::complementary;
use avqc::coding::{self, ErrorCriterion};
use avqc::continuity;
use avqc::entropy::{holevo, Ensemble};
use avqc::linalg::ComplexMatrix;
use avqc::secrecy::{self, FunctionalOpts};
use avqc::symmetrizability::{self, SolverOpts, FEASIBILITY_TOL, PROBE_DISTINCTNESS_TOL};
use avqc::{catalog, opt};

const STATE_TRACE_TOL: f64 = 1e-9;
const KRAUS_COMPLETENESS_TOL: f64 = 1e-9;
const POVM_COMPLETENESS_TOL: f64 = 1e-9;
const DISTRIBUTION_TOL: f64 = 1e-9;

pub(crate) enum Failure {
    Validation(String),
    Internal(String),
}

impl From<avqc::Error> for Failure {
    fn from(err: avqc::Error) -> Failure {
        if err.is_validation() {
            Failure::Validation(err.to_string())
        } else {
            Failure::Internal(err.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "avqc",
    version,
    about = "Analysis toolkit for arbitrarily varying quantum channels under jamming and eavesdropping"
)]
struct Cli {
    /// Seed for all stochastic optimizer restarts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads. 1 (the default) guarantees bit-exact
    /// reproducibility; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Write the JSON report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    /// Error probability averaged over messages.
    Avg,
    /// Worst error probability over messages.
    Max,
}

impl From<CriterionArg> for ErrorCriterion {
    fn from(c: CriterionArg) -> ErrorCriterion {
        match c {
            CriterionArg::Avg => ErrorCriterion::Average,
            CriterionArg::Max => ErrorCriterion::Max,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Structural summary of a channel family, optionally scored against
    /// a classical-quantum source.
    Analyze {
        /// Channel family file.
        #[arg(long)]
        avqc: PathBuf,
        /// Optional source file; adds per-member Holevo information of
        /// the receiver and of the environment.
        #[arg(long)]
        source: Option<PathBuf>,
    },
    /// Best symmetrizing mixture at one block length, with the residual
    /// certificate and the full tau table.
    Symmetrize {
        /// Channel family file.
        #[arg(long)]
        avqc: PathBuf,
        /// Block length.
        #[arg(long, default_value_t = 1)]
        l: usize,
        /// Solver restarts.
        #[arg(long, default_value_t = 10)]
        restarts: usize,
    },
    /// Randomness-assisted secrecy functional of an AVQC with a
    /// classical-quantum source.
    Capacity {
        /// Channel family file.
        #[arg(long)]
        avqc: PathBuf,
        /// Source file.
        #[arg(long)]
        source: PathBuf,
        /// Block length.
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Simplex grid resolution for low-dimensional searches.
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Distance between two channels and the entropy-continuity bounds
    /// it implies.
    Continuity {
        /// First channel file.
        #[arg(long)]
        a: PathBuf,
        /// Second channel file.
        #[arg(long)]
        b: PathBuf,
    },
    /// Error probability and leakage of a block code against every
    /// jammer sequence.
    EvaluateCode {
        /// Code file.
        #[arg(long)]
        code: PathBuf,
        /// Channel family file.
        #[arg(long)]
        avqc: PathBuf,
        /// Source file.
        #[arg(long)]
        source: PathBuf,
        /// Error statistic to rank jammer sequences by.
        #[arg(long, value_enum, default_value_t = CriterionArg::Avg)]
        criterion: CriterionArg,
    },
    /// Re-derive the headline claims for a built-in example family.
    VerifyExample {
        /// One of: example1, lambda:<weight>, superactivation.
        #[arg(long)]
        name: String,
    },
}

#[derive(Serialize)]
struct Context {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    threads: usize,
    tolerances: BTreeMap<String, f64>,
    probe_set: Option<String>,
}

#[derive(Serialize)]
struct Envelope {
    context: Context,
    report: Value,
}

/// Runs the tool on an argument list (without the program name) and
/// returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(
        std::iter::once("avqc".to_string()).chain(args.iter().cloned()),
    ) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };

    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global();

    match dispatch(&cli) {
        Ok(envelope) => {
            let mut text = match serde_json::to_string_pretty(&envelope) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("internal error: cannot serialize report: {e}");
                    return 1;
                }
            };
            text.push('\n');
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return 2;
                    }
                }
                None => print!("{text}"),
            }
            0
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Envelope, Failure> {
    let (report, tolerances, probe_set) = match &cli.command {
        Command::Analyze { avqc, source } => run_analyze(avqc, source.as_deref())?,
        Command::Symmetrize { avqc, l, restarts } => run_symmetrize(avqc, *l, *restarts, cli.seed)?,
        Command::Capacity {
            avqc,
            source,
            n,
            grid,
        } => run_capacity(avqc, source, *n, *grid, cli.seed)?,
        Command::Continuity { a, b } => run_continuity(a, b)?,
        Command::EvaluateCode {
            code,
            avqc,
            source,
            criterion,
        } => run_evaluate_code(code, avqc, source, *criterion)?,
        Command::VerifyExample { name } => run_verify_example(name, cli.seed)?,
    };
    Ok(Envelope {
        context: Context {
            tool: "avqc",
            version: env!("CARGO_PKG_VERSION"),
            seed: cli.seed,
            threads: cli.threads,
            tolerances,
            probe_set,
        },
        report,
    })
}

type Payload = (Value, BTreeMap<String, f64>, Option<String>);

fn tolerance_map(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn run_analyze(
    avqc_path: &std::path::Path,
    source_path: Option<&std::path::Path>,
) -> Result<Payload, Failure> {
    let fam = schema::load_family(avqc_path)?;
    let mut members = Vec::with_capacity(fam.len());
    for (i, label) in fam.labels().iter().enumerate() {
        let ch = fam.channel(i);
        let mut gram = ComplexMatrix::zeros(ch.dim_in(), ch.dim_in());
        for op in ch.kraus() {
            gram = gram.add(&op.adjoint().matmul(op));
        }
        let defect = gram
            .sub(&ComplexMatrix::identity(ch.dim_in()))
            .frobenius_norm();
        members.push(json!({
            "label": label,
            "kraus_count": ch.kraus().len(),
            "env_dim": complementary(ch).dim_out(),
            "completeness_defect": defect,
        }));
    }

    let source = match source_path {
        None => Value::Null,
        Some(path) => {
            let src = schema::load_source(path)?;
            if src.dim() != fam.dim_in() {
                return Err(Failure::Validation(format!(
                    "source states live on dimension {}, family expects {}",
                    src.dim(),
                    fam.dim_in()
                )));
            }
            let mut rows = Vec::with_capacity(fam.len());
            for (i, label) in fam.labels().iter().enumerate() {
                let ch = fam.channel(i);
                let output = holevo(&Ensemble::from_source_through(&src, ch)?)?;
                let environment =
                    holevo(&Ensemble::from_source_through(&src, &complementary(ch))?)?;
                rows.push(json!({
                    "label": label,
                    "holevo_output": output,
                    "holevo_environment": environment,
                }));
            }
            json!({
                "alphabet_size": src.len(),
                "dim": src.dim(),
                "per_member": rows,
            })
        }
    };

    let report = json!({
        "dim_in": fam.dim_in(),
        "dim_out": fam.dim_out(),
        "members": members,
        "source": source,
    });
    let tolerances = tolerance_map(&[
        ("state_trace", STATE_TRACE_TOL),
        ("kraus_completeness", KRAUS_COMPLETENESS_TOL),
    ]);
    Ok((report, tolerances, None))
}

fn run_symmetrize(
    avqc_path: &std::path::Path,
    l: usize,
    restarts: usize,
    seed: u64,
) -> Result<Payload, Failure> {
    let fam = schema::load_family(avqc_path)?;
    let opts = SolverOpts {
        restarts,
        seed,
        ..SolverOpts::default()
    };
    let probes = symmetrizability::indicator_probes(&fam, l, &opts)?;
    let solution = symmetrizability::symmetrizability_residual(&fam, l, &probes, &opts)?;
    let verdict = if solution.residual_trace_norm <= FEASIBILITY_TOL {
        "symmetrizable on the probe set"
    } else {
        "not symmetrizable: positive residual is a certificate"
    };
    let probe_description = probes.description().to_string();
    let report = json!({
        "l": l,
        "verdict": verdict,
        "residual_trace_norm": solution.residual_trace_norm,
        "residual_frobenius": solution.residual_frobenius,
        "iterations": solution.iterations,
        "restarts": solution.restarts,
        "tau": solution.tau,
    });
    let tolerances = tolerance_map(&[
        ("feasibility", FEASIBILITY_TOL),
        ("probe_distinctness", PROBE_DISTINCTNESS_TOL),
        ("state_trace", STATE_TRACE_TOL),
    ]);
    Ok((report, tolerances, Some(probe_description)))
}

fn run_capacity(
    avqc_path: &std::path::Path,
    source_path: &std::path::Path,
    n: usize,
    grid: usize,
    seed: u64,
) -> Result<Payload, Failure> {
    let fam = schema::load_family(avqc_path)?;
    let src = schema::load_source(source_path)?;
    let opts = FunctionalOpts {
        grid_resolution: grid,
        seed,
        ..FunctionalOpts::default()
    };
    let report = secrecy::avqc_secrecy_functional(&fam, &src, n, &opts)?;
    let tolerances = tolerance_map(&[
        ("state_trace", STATE_TRACE_TOL),
        ("distribution", DISTRIBUTION_TOL),
    ]);
    let value = serde_json::to_value(&report)
        .map_err(|e| Failure::Internal(format!("cannot serialize report: {e}")))?;
    Ok((
        value,
        tolerances,
        Some(format!(
            "prior search: simplex grid resolution {grid} with {} Nelder-Mead starts",
            opts.nm_starts
        )),
    ))
}

fn run_continuity(a_path: &std::path::Path, b_path: &std::path::Path) -> Result<Payload, Failure> {
    let a = schema::load_channel(a_path)?;
    let b = schema::load_channel(b_path)?;
    let distance = continuity::channel_distance(&a, &b)?;
    let trace_distance = distance / 2.0;
    let dim_out = a.dim_out();
    let mut notes: Vec<String> = Vec::new();

    let entropy_gap = match continuity::fannes_audenaert(trace_distance, dim_out.max(2)) {
        Ok(value) => json!({
            "value": value,
            "trace_distance": trace_distance,
            "dimension": dim_out.max(2),
        }),
        Err(e) => {
            notes.push(format!("entropy gap bound not applicable: {e}"));
            Value::Null
        }
    };
    let conditional_entropy_gap = match continuity::alicki_fannes(trace_distance, dim_out.max(2)) {
        Ok(bound) => json!({
            "plus_form": bound.plus_form,
            "minus_form": bound.minus_form,
            "trace_distance": trace_distance,
            "dimension": dim_out.max(2),
        }),
        Err(e) => {
            notes.push(format!("conditional entropy gap bound not applicable: {e}"));
            Value::Null
        }
    };
    let secrecy_gap = match continuity::secrecy_continuity_bound(distance, dim_out.max(2)) {
        Ok(bound) => json!({
            "plus_form": bound.plus_form,
            "minus_form": bound.minus_form,
            "distance": distance,
            "dimension": dim_out.max(2),
        }),
        Err(e) => {
            notes.push(format!("secrecy functional gap bound not applicable: {e}"));
            Value::Null
        }
    };

    let report = json!({
        "dim_in": a.dim_in(),
        "dim_out": dim_out,
        "distance": distance,
        "bounds": {
            "entropy_gap": entropy_gap,
            "conditional_entropy_gap": conditional_entropy_gap,
            "secrecy_functional_gap": secrecy_gap,
        },
        "notes": notes,
    });
    let tolerances = tolerance_map(&[("kraus_completeness", KRAUS_COMPLETENESS_TOL)]);
    Ok((
        report,
        tolerances,
        Some("32 seeded unit-sphere starts with local refinement; 96x128 Bloch grid for qubit inputs".to_string()),
    ))
}

fn run_evaluate_code(
    code_path: &std::path::Path,
    avqc_path: &std::path::Path,
    source_path: &std::path::Path,
    criterion: CriterionArg,
) -> Result<Payload, Failure> {
    let code = schema::load_code(code_path)?;
    let fam = schema::load_family(avqc_path)?;
    let src = schema::load_source(source_path)?;

    let (worst_error, worst_error_seq) = coding::worst_case(&code, &fam, &src, criterion.into())?;

    let labels = fam.labels();
    let mut rows = Vec::new();
    let mut worst_leakage = f64::NEG_INFINITY;
    let mut worst_leakage_seq: Vec<String> = Vec::new();
    for seq in opt::index_sequences(labels.len(), code.n()) {
        let named: Vec<String> = seq.iter().map(|&t| labels[t].clone()).collect();
        let avg = coding::avg_error(&code, &fam, &src, &named)?;
        let max = coding::max_error(&code, &fam, &src, &named)?;
        let leak = coding::leakage(&code, &fam, &src, &named)?;
        if leak > worst_leakage {
            worst_leakage = leak;
            worst_leakage_seq = named.clone();
        }
        rows.push(json!({
            "theta_seq": named,
            "avg_error": avg,
            "max_error": max,
            "leakage": leak,
        }));
    }

    let criterion_name = match criterion {
        CriterionArg::Avg => "avg",
        CriterionArg::Max => "max",
    };
    let report = json!({
        "n": code.n(),
        "messages": code.j_count(),
        "criterion": criterion_name,
        "worst_error": worst_error,
        "worst_error_theta_seq": worst_error_seq,
        "worst_leakage": worst_leakage,
        "worst_leakage_theta_seq": worst_leakage_seq,
        "per_sequence": rows,
    });
    let tolerances = tolerance_map(&[
        ("povm_completeness", POVM_COMPLETENESS_TOL),
        ("encoder_distribution", DISTRIBUTION_TOL),
        ("state_trace", STATE_TRACE_TOL),
    ]);
    Ok((report, tolerances, None))
}

fn run_verify_example(name: &str, seed: u64) -> Result<Payload, Failure> {
    let (report, probe_set) = if name == "example1" {
        (
            catalog::verify_example1(seed)?,
            "default spanning sets at block lengths 1 and 2 with seeded random pure probes",
        )
    } else if name == "superactivation" {
        (
            catalog::verify_superactivation(seed)?,
            "default spanning set (dim 8) with seeded random pure probes and the two coherent-pair states",
        )
    } else if let Some(weight) = name.strip_prefix("lambda:") {
        let lambda: f64 = weight.parse().map_err(|_| {
            Failure::Validation(format!(
                "invalid leak weight {weight:?} in example name; expected lambda:<number>"
            ))
        })?;
        (
            catalog::verify_lambda(lambda, seed)?,
            "default spanning set (dim 2) with seeded random pure probes",
        )
    } else {
        return Err(Failure::Validation(format!(
            "unknown example {name:?}; expected example1, lambda:<weight> or superactivation"
        )));
    };

    let tolerances: BTreeMap<String, f64> = report
        .claims
        .iter()
        .map(|c| (c.name.clone(), c.threshold))
        .collect();
    let value = serde_json::to_value(&report)
        .map_err(|e| Failure::Internal(format!("cannot serialize report: {e}")))?;
    Ok((value, tolerances, Some(probe_set.to_string())))
}
