//! Command-line front end. Five subcommands cover the toolkit: `solve`
//! runs the exact simplex and reports potentials alongside the plan,
//! `certify` replays the optimality certificates, `truncate` verifies the
//! core-restriction error bounds, `entropic` walks a Sinkhorn ladder
//! against the exact value, and `oracle` cross-checks the solver against
//! exhaustive vertex enumeration.
//!
//! Every command reads a problem document (or synthesizes a seeded one),
//! prints a [`RunReport`](crate::report::RunReport) as JSON on standard
//! output, and exits nonzero exactly when the report's failure list is
//! nonempty. Reports are deterministic apart from the timing field.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::certify::{
    check_cyclical_monotonicity_guarded, check_splitting, duality_gap, extract_support,
    GapVerdict, DEFAULT_SET_GUARD,
};
use crate::conjugacy::improve_sweep;
use crate::document::{parse_problem, ProblemDocument};
use crate::entropic::{entropic_ladder, DEFAULT_SINKHORN_TOL};
use crate::error::MotError;
use crate::lp::{
    build_lp, enumerate_vertices, solve_instance, solve_primal, SolveOptions,
    DEFAULT_ENTRY_GUARD, DEFAULT_VERTEX_GUARD,
};
use crate::report::{
    monotonicity_witness_doc, solve_section_from, splitting_violation_doc, truncation_row,
    CertifySection, EntropicRow, MonotonicityOutcome, NumberPair, OracleSection, RunReport,
    SplittingOutcome,
};
use crate::scalar::{Rational, Scalar};
use crate::tensor::eval_primal_cost;
use crate::truncation::TruncationLab;

#[derive(Parser, Debug)]
#[command(
    name = "mot",
    version,
    about = "Discrete multimarginal optimal transport: exact solver, certificates, truncation bounds, entropic approximation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the transport program exactly and report plan, potentials, and gap.
    Solve(SolveArgs),
    /// Replay the optimality certificates for a freshly solved instance.
    Certify(CertifyArgs),
    /// Restrict marginals to high-mass cores and verify every error bound.
    Truncate(TruncateArgs),
    /// Run a Sinkhorn ladder and compare against the exact optimum.
    Entropic(EntropicArgs),
    /// Cross-check the solver against exhaustive vertex enumeration.
    Oracle(OracleArgs),
}

impl Command {
    fn input(&self) -> &InputArgs {
        match self {
            Command::Solve(a) => &a.input,
            Command::Certify(a) => &a.input,
            Command::Truncate(a) => &a.input,
            Command::Entropic(a) => &a.input,
            Command::Oracle(a) => &a.input,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Certify(_) => "certify",
            Command::Truncate(_) => "truncate",
            Command::Entropic(_) => "entropic",
            Command::Oracle(_) => "oracle",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Arbitrary-precision rationals; every comparison is exact.
    Rational,
    /// Double precision with magnitude-scaled tolerances.
    Float,
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Rational => "rational",
        Mode::Float => "float",
    }
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Problem document to read (JSON).
    #[arg(long, conflicts_with = "seed")]
    pub input: Option<PathBuf>,
    /// Synthesize a reproducible instance from this seed instead of reading a file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shape of the synthesized instance, e.g. "3x4x5" or "3,4,5".
    #[arg(long, default_value = "3,3,3")]
    pub shape: String,
    /// Arithmetic mode for solving.
    #[arg(long, value_enum, default_value_t = Mode::Rational)]
    pub mode: Mode,
    /// Refuse cost tensors with more than this many entries.
    #[arg(long, default_value_t = DEFAULT_ENTRY_GUARD)]
    pub guard_entries: usize,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Keep plan entries strictly above this mass in the report.
    #[arg(long, default_value = "0")]
    pub threshold: String,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Largest tuple-family size checked for cyclical monotonicity.
    #[arg(long, default_value_t = 2)]
    pub nmax_cycles: usize,
    /// Support threshold: entries strictly above it form the candidate set.
    #[arg(long, default_value = "0")]
    pub threshold: String,
    /// Refuse supports larger than this for the monotonicity sweep.
    #[arg(long, default_value_t = DEFAULT_SET_GUARD)]
    pub guard_support: usize,
}

#[derive(Args, Debug)]
pub struct TruncateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Single truncation level.
    #[arg(long, conflicts_with = "eps_ladder")]
    pub eps: Option<String>,
    /// Comma-separated truncation levels, checked in order.
    #[arg(long, value_delimiter = ',')]
    pub eps_ladder: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct EntropicArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated regularization strengths; defaults to the cost's
    /// sup norm scaled by 1, 0.1, and 0.01.
    #[arg(long, value_delimiter = ',')]
    pub eps_ladder: Option<Vec<f64>>,
    /// Sweep budget per rung.
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Marginal residual at which a rung counts as converged.
    #[arg(long, default_value_t = DEFAULT_SINKHORN_TOL)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Refuse enumeration when the plan has more than this many entries.
    #[arg(long, default_value_t = DEFAULT_VERTEX_GUARD)]
    pub guard_vertices: usize,
}

/// Executes a parsed command line and returns the process exit code,
/// printing the report to standard output.
pub fn run(cli: Cli) -> i32 {
    let started = Instant::now();
    let command = cli.command.name();
    let mode = mode_name(cli.command.input().mode);
    let mut report = match execute(&cli) {
        Ok(report) => report,
        Err(err) => {
            let mut report = RunReport::new(command, mode, String::new());
            report.fail("run", err.to_string());
            report
        }
    };
    report.timing_ms = started.elapsed().as_millis() as u64;
    // Tolerate a closed pipe (e.g. piping into head) instead of panicking.
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{}", report.to_json());
    report.exit_code()
}

/// Builds the report for a parsed command line without printing it.
pub fn execute(cli: &Cli) -> Result<RunReport, MotError> {
    match &cli.command {
        Command::Solve(args) => match args.input.mode {
            Mode::Rational => solve_command::<Rational>(args),
            Mode::Float => solve_command::<f64>(args),
        },
        Command::Certify(args) => match args.input.mode {
            Mode::Rational => certify_command::<Rational>(args),
            Mode::Float => certify_command::<f64>(args),
        },
        Command::Truncate(args) => match args.input.mode {
            Mode::Rational => truncate_command::<Rational>(args),
            Mode::Float => truncate_command::<f64>(args),
        },
        Command::Entropic(args) => match args.input.mode {
            Mode::Rational => entropic_command::<Rational>(args),
            Mode::Float => entropic_command::<f64>(args),
        },
        Command::Oracle(args) => match args.input.mode {
            Mode::Rational => oracle_command::<Rational>(args),
            Mode::Float => oracle_command::<f64>(args),
        },
    }
}

/// Reads the document from disk, or synthesizes one from the seed. The
/// synthesized instance is rendered through the document layer so both
/// arithmetic modes parse the same exact number strings and the digest
/// does not depend on the mode.
pub fn resolve_document(input: &InputArgs) -> Result<ProblemDocument, MotError> {
    if let Some(path) = &input.input {
        let text = fs::read_to_string(path).map_err(|e| MotError::Schema {
            path: "input".to_string(),
            message: format!("{}: {e}", path.display()),
        })?;
        parse_problem(&text)
    } else if let Some(seed) = input.seed {
        let dims = parse_shape(&input.shape)?;
        let (measures, cost) = crate::fixtures::random_instance_with_dims::<Rational>(seed, &dims);
        Ok(ProblemDocument::from_instance(&measures, &cost))
    } else {
        Err(MotError::Schema {
            path: "input".to_string(),
            message: "provide --input FILE or --seed N".to_string(),
        })
    }
}

pub fn parse_shape(text: &str) -> Result<Vec<usize>, MotError> {
    let parts: Vec<&str> = text
        .split(|ch| ch == 'x' || ch == ',')
        .filter(|p| !p.is_empty())
        .collect();
    let dims: Option<Vec<usize>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match dims {
        Some(dims) if dims.len() >= 3 && dims.iter().all(|&n| n >= 1) => Ok(dims),
        _ => Err(MotError::Schema {
            path: "shape".to_string(),
            message: format!("expected at least three positive sizes, got {text:?}"),
        }),
    }
}

fn new_report(command: &str, input: &InputArgs, doc: &ProblemDocument) -> RunReport {
    RunReport::new(command, mode_name(input.mode), doc.digest())
}

fn solve_command<S: Scalar>(args: &SolveArgs) -> Result<RunReport, MotError> {
    let doc = resolve_document(&args.input)?;
    let mut report = new_report("solve", &args.input, &doc);
    let (measures, cost, warnings) = doc.instance::<S>(args.input.guard_entries)?;
    report.warnings = warnings;

    let solution = solve_instance(&measures, &cost, &SolveOptions::default())?;
    let improved = improve_sweep(&solution.duals, &cost, &measures)?;
    let gap = duality_gap(&solution.coupling, &improved.family, &cost)?;
    let threshold = S::parse_number(&args.threshold)?;
    let support = extract_support(&solution.coupling, &threshold);
    let entries: Vec<(Vec<usize>, S)> = support
        .iter()
        .map(|index| (index.clone(), solution.coupling.at(index).clone()))
        .collect();
    report.solve = Some(solve_section_from(
        &gap,
        solution.pivots,
        &support,
        entries,
        improved.family.vectors(),
    ));

    match &gap.verdict {
        GapVerdict::Optimal => {}
        GapVerdict::Suboptimal => {
            report.fail(
                "duality-gap",
                format!("gap {} is nonzero", gap.gap.format_exact()),
            );
        }
        GapVerdict::InfeasibleDual { witness, slack } => {
            report.fail(
                "dual-admissibility",
                format!("family exceeds the cost at {witness:?} by {slack}"),
            );
        }
    }
    if !improved.fixed_point.iter().all(|&b| b) {
        report.fail("conjugate-fixed-point", "improved family is not a fixed point");
    }
    if !improved.bounds_ok {
        report.fail("potential-bounds", "improved family leaves the a priori box");
    }
    Ok(report)
}

fn certify_command<S: Scalar>(args: &CertifyArgs) -> Result<RunReport, MotError> {
    let doc = resolve_document(&args.input)?;
    let mut report = new_report("certify", &args.input, &doc);
    let (measures, cost, warnings) = doc.instance::<S>(args.input.guard_entries)?;
    report.warnings = warnings;

    let solution = solve_instance(&measures, &cost, &SolveOptions::default())?;
    let improved = improve_sweep(&solution.duals, &cost, &measures)?;
    let threshold = S::parse_number(&args.threshold)?;
    let support = extract_support(&solution.coupling, &threshold);
    let tol = S::default_tol(cost.sup_norm());

    let splitting = match check_splitting(&support, &improved.family, &cost, &tol) {
        Ok(cert) => SplittingOutcome {
            passed: true,
            min_slack: Some(NumberPair::of(&cert.min_slack)),
            max_equality_gap: Some(NumberPair::of(&cert.max_equality_gap)),
            violation: None,
        },
        Err(violation) => {
            report.fail(
                "splitting",
                format!("violated at {:?}", violation.index),
            );
            SplittingOutcome {
                passed: false,
                min_slack: None,
                max_equality_gap: None,
                violation: Some(splitting_violation_doc(&violation)),
            }
        }
    };

    let witness = check_cyclical_monotonicity_guarded(
        &support,
        &cost,
        args.nmax_cycles,
        args.nmax_cycles,
        args.guard_support,
    )?;
    let monotonicity = match &witness {
        None => MonotonicityOutcome {
            passed: true,
            witness: None,
        },
        Some(w) => {
            report.fail(
                "cyclical-monotonicity",
                format!("rearrangement of {:?} lowers the cost", w.tuples),
            );
            MonotonicityOutcome {
                passed: false,
                witness: Some(monotonicity_witness_doc(w)),
            }
        }
    };

    report.certify = Some(CertifySection {
        support_size: support.len(),
        n_max: args.nmax_cycles,
        splitting,
        monotonicity,
    });
    Ok(report)
}

fn truncate_command<S: Scalar>(args: &TruncateArgs) -> Result<RunReport, MotError> {
    let doc = resolve_document(&args.input)?;
    let mut report = new_report("truncate", &args.input, &doc);
    let (measures, cost, warnings) = doc.instance::<S>(args.input.guard_entries)?;
    report.warnings = warnings;

    let rung_texts: Vec<String> = if let Some(ladder) = &args.eps_ladder {
        ladder.clone()
    } else if let Some(eps) = &args.eps {
        vec![eps.clone()]
    } else {
        vec!["1/5".to_string(), "1/10".to_string(), "1/20".to_string()]
    };
    let rungs: Vec<S> = rung_texts
        .iter()
        .map(|t| S::parse_number(t))
        .collect::<Result<_, _>>()?;

    let lab = TruncationLab::new(measures, cost, SolveOptions::default())?;
    let mut rows = Vec::with_capacity(rungs.len());
    for (text, eps) in rung_texts.iter().zip(&rungs) {
        let row = lab.run(eps)?;
        if !row.checks.all() {
            report.fail(
                "truncation-bounds",
                format!(
                    "eps {text}: mass {} value {} potentials {} dual {} recovery {}",
                    row.checks.mass,
                    row.checks.value,
                    row.checks.potentials,
                    row.checks.dual_value,
                    row.checks.recovery
                ),
            );
        }
        rows.push(truncation_row(&row));
    }
    report.truncation = Some(rows);
    Ok(report)
}

fn entropic_command<S: Scalar>(args: &EntropicArgs) -> Result<RunReport, MotError> {
    let doc = resolve_document(&args.input)?;
    let mut report = new_report("entropic", &args.input, &doc);
    let (measures, cost, warnings) = doc.instance::<f64>(args.input.guard_entries)?;
    report.warnings = warnings;

    // The reference optimum comes from the LP in the requested mode, so
    // rational mode compares the ladder against an exact value.
    let reference = {
        let (measures_s, cost_s, _) = doc.instance::<S>(args.input.guard_entries)?;
        solve_instance(&measures_s, &cost_s, &SolveOptions::default())?
            .value
            .to_f64()
    };

    let sup = *cost.sup_norm();
    let scale = if sup > 0.0 { sup } else { 1.0 };
    let rungs: Vec<f64> = args
        .eps_ladder
        .clone()
        .unwrap_or_else(|| vec![scale, 0.1 * scale, 0.01 * scale]);
    let entropy_rate: f64 = cost.shape().dims().iter().map(|&n| (n as f64).ln()).sum();
    let slack = 1e-8 * (1.0 + sup);

    let runs = entropic_ladder(&measures, &cost, &rungs, args.max_iters, args.tol)?;
    let mut rows = Vec::with_capacity(runs.len());
    for (state, plan) in &runs {
        let value = eval_primal_cost(plan, &cost)?;
        let gap = value - reference;
        let entropy_bound = state.epsilon * entropy_rate;
        if !state.converged {
            report.fail(
                "sinkhorn-convergence",
                format!(
                    "eps {}: residual {} after {} sweeps",
                    state.epsilon, state.marginal_residual, state.iterations
                ),
            );
        }
        if gap < -slack || gap > entropy_bound + slack {
            report.fail(
                "entropy-bracket",
                format!(
                    "eps {}: gap {gap} outside [0, {entropy_bound}]",
                    state.epsilon
                ),
            );
        }
        rows.push(EntropicRow {
            epsilon: state.epsilon,
            iterations: state.iterations,
            marginal_residual: state.marginal_residual,
            converged: state.converged,
            value,
            reference_value: Some(reference),
            gap: Some(gap),
            entropy_bound,
        });
    }
    report.entropic = Some(rows);
    Ok(report)
}

fn oracle_command<S: Scalar>(args: &OracleArgs) -> Result<RunReport, MotError> {
    let doc = resolve_document(&args.input)?;
    let mut report = new_report("oracle", &args.input, &doc);
    let (measures, cost, warnings) = doc.instance::<S>(args.input.guard_entries)?;
    report.warnings = warnings;

    let lp = build_lp(&measures, &cost, args.input.guard_entries)?;
    let solution = solve_primal(&lp, &SolveOptions::default())?;
    let vertices = enumerate_vertices(&lp, args.guard_vertices)?;
    let mut minimum: Option<S> = None;
    for vertex in &vertices {
        let value = eval_primal_cost(vertex, &cost)?;
        if minimum.as_ref().map_or(true, |best| &value < best) {
            minimum = Some(value);
        }
    }
    let minimum = minimum.ok_or(MotError::GuardExceeded {
        what: "vertex enumeration produced no vertices",
        got: 0,
        guard: args.guard_vertices,
    })?;
    let tol = S::default_tol(cost.sup_norm());
    let agrees = (minimum.clone() - &solution.value).abs() <= tol;
    if !agrees {
        report.fail(
            "vertex-oracle",
            format!(
                "solver value {} differs from vertex minimum {}",
                solution.value.format_exact(),
                minimum.format_exact()
            ),
        );
    }
    report.oracle = Some(OracleSection {
        vertex_count: vertices.len(),
        vertex_minimum: NumberPair::of(&minimum),
        solver_value: NumberPair::of(&solution.value),
        agrees,
    });
    Ok(report)
}
