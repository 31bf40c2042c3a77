//! Structured run reports: the JSON emitted by every command.
//!
//! Values appear twice, as an exact number string and as a decimal, so
//! rational-mode equalities survive serialization. Reports are
//! deterministic: the digest is taken over the serialization with the
//! timing field zeroed, and two runs of the same document with the same
//! flags produce identical digests.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certify::{GapReport, GapVerdict, MonotonicityWitness, SplittingViolation};
use crate::scalar::Scalar;
use crate::truncation::TruncationReport;

/// An exact number string paired with its decimal approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumberPair {
    pub exact: String,
    pub decimal: f64,
}

impl NumberPair {
    pub fn of<S: Scalar>(value: &S) -> Self {
        NumberPair {
            exact: value.format_exact(),
            decimal: value.to_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub mode: String,
    pub instance_digest: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Vec<TruncationRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropic: Option<Vec<EntropicRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    /// Failed checks; the process exits nonzero exactly when nonempty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<Failure>,
    /// Wall-clock milliseconds; excluded from the digest.
    pub timing_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub check: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSection {
    pub primal_value: NumberPair,
    pub dual_value: NumberPair,
    pub gap: NumberPair,
    pub verdict: String,
    pub pivots: usize,
    pub support_size: usize,
    pub coupling: Vec<CouplingEntry>,
    pub potentials: Vec<Vec<NumberPair>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingEntry {
    pub index: Vec<usize>,
    pub mass: NumberPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifySection {
    pub support_size: usize,
    pub n_max: usize,
    pub splitting: SplittingOutcome,
    pub monotonicity: MonotonicityOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingOutcome {
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_slack: Option<NumberPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_equality_gap: Option<NumberPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation: Option<SplittingViolationDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingViolationDoc {
    pub index: Vec<usize>,
    pub side: String,
    pub family_sum: NumberPair,
    pub cost_value: NumberPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityOutcome {
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<MonotonicityWitnessDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityWitnessDoc {
    pub tuples: Vec<Vec<usize>>,
    pub permutations: Vec<Vec<usize>>,
    pub lhs: NumberPair,
    pub rhs: NumberPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub eps: NumberPair,
    pub core_sizes: Vec<usize>,
    pub complement_mass: NumberPair,
    pub i_full: NumberPair,
    pub i_trunc: NumberPair,
    pub i_glued: NumberPair,
    pub j_full: NumberPair,
    pub j_trunc: NumberPair,
    pub c_bound: NumberPair,
    pub check_mass: bool,
    pub check_value: bool,
    pub check_potentials: bool,
    pub check_dual_value: bool,
    pub check_recovery: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropicRow {
    pub epsilon: f64,
    pub iterations: usize,
    pub marginal_residual: f64,
    pub converged: bool,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    pub entropy_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSection {
    pub vertex_count: usize,
    pub vertex_minimum: NumberPair,
    pub solver_value: NumberPair,
    pub agrees: bool,
}

impl RunReport {
    pub fn new(command: &str, mode: &str, instance_digest: String) -> Self {
        RunReport {
            version: "1".to_string(),
            command: command.to_string(),
            mode: mode.to_string(),
            instance_digest,
            warnings: Vec::new(),
            solve: None,
            certify: None,
            truncation: None,
            entropic: None,
            oracle: None,
            failures: Vec::new(),
            timing_ms: 0,
        }
    }

    pub fn fail(&mut self, check: &str, message: impl Into<String>) {
        self.failures.push(Failure {
            check: check.to_string(),
            message: message.into(),
        });
    }

    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// SHA-256 over the compact serialization with `timing_ms` zeroed.
    pub fn digest(&self) -> String {
        let mut stripped = self.clone();
        stripped.timing_ms = 0;
        let canonical = serde_json::to_string(&stripped).expect("report serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Fills a gap report into the value fields of a solve section.
pub fn solve_section_from<S: Scalar>(
    gap: &GapReport<S>,
    pivots: usize,
    support: &[Vec<usize>],
    coupling_entries: Vec<(Vec<usize>, S)>,
    potentials: &[Vec<S>],
) -> SolveSection {
    SolveSection {
        primal_value: NumberPair::of(&gap.primal_value),
        dual_value: NumberPair::of(&gap.dual_value),
        gap: NumberPair::of(&gap.gap),
        verdict: verdict_label(&gap.verdict).to_string(),
        pivots,
        support_size: support.len(),
        coupling: coupling_entries
            .into_iter()
            .map(|(index, mass)| CouplingEntry {
                index,
                mass: NumberPair::of(&mass),
            })
            .collect(),
        potentials: potentials
            .iter()
            .map(|f| f.iter().map(NumberPair::of).collect())
            .collect(),
    }
}

pub fn verdict_label<S: Scalar>(verdict: &GapVerdict<S>) -> &'static str {
    match verdict {
        GapVerdict::Optimal => "optimal",
        GapVerdict::Suboptimal => "suboptimal",
        GapVerdict::InfeasibleDual { .. } => "infeasible-dual",
    }
}

pub fn splitting_violation_doc<S: Scalar>(v: &SplittingViolation<S>) -> SplittingViolationDoc {
    SplittingViolationDoc {
        index: v.index.clone(),
        side: match v.side {
            crate::certify::ViolationSide::Inequality => "inequality".to_string(),
            crate::certify::ViolationSide::Equality => "equality".to_string(),
        },
        family_sum: NumberPair::of(&v.family_sum),
        cost_value: NumberPair::of(&v.cost_value),
    }
}

pub fn monotonicity_witness_doc<S: Scalar>(w: &MonotonicityWitness<S>) -> MonotonicityWitnessDoc {
    MonotonicityWitnessDoc {
        tuples: w.tuples.clone(),
        permutations: w.permutations.clone(),
        lhs: NumberPair::of(&w.lhs),
        rhs: NumberPair::of(&w.rhs),
    }
}

pub fn truncation_row<S: Scalar>(r: &TruncationReport<S>) -> TruncationRow {
    TruncationRow {
        eps: NumberPair::of(&r.eps),
        core_sizes: r.core_sizes.clone(),
        complement_mass: NumberPair::of(&r.complement_mass),
        i_full: NumberPair::of(&r.i_full),
        i_trunc: NumberPair::of(&r.i_trunc),
        i_glued: NumberPair::of(&r.i_glued),
        j_full: NumberPair::of(&r.j_full),
        j_trunc: NumberPair::of(&r.j_trunc),
        c_bound: NumberPair::of(&r.c_bound),
        check_mass: r.checks.mass,
        check_value: r.checks.value,
        check_potentials: r.checks.potentials,
        check_dual_value: r.checks.dual_value,
        check_recovery: r.checks.recovery,
    }
}
