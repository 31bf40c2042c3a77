use thiserror::Error;

/// Everything that can go wrong across the toolkit.
///
/// Scalar payloads are carried as display strings so the same error type
/// serves both the rational and the floating-point pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotError {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("need at least {min} marginals, got {got}")]
    ArityTooSmall { got: usize, min: usize },

    #[error("marginal {marginal}: negative weight at atom {atom}")]
    NegativeWeight { marginal: usize, atom: usize },

    #[error("weights must sum to 1, got {sum}")]
    WeightSum { sum: String },

    #[error("marginal {marginal}: duplicate atom label {label:?}")]
    DuplicateAtom { marginal: usize, label: String },

    #[error("{what} contains a non-finite value")]
    NonFinite { what: &'static str },

    #[error("instance has {entries} tensor entries, exceeding the guard of {guard}")]
    SizeGuard { entries: usize, guard: usize },

    #[error("{what} exceeds the enumeration guard ({got} > {guard})")]
    GuardExceeded {
        what: &'static str,
        got: usize,
        guard: usize,
    },

    #[error("potential family is not admissible: slack {slack} at index {witness:?}")]
    NotAdmissible { witness: Vec<usize>, slack: String },

    #[error("eps {eps} out of range: need 0 < eps <= 1 and {arity} * eps < 1")]
    EpsOutOfRange { eps: String, arity: usize },

    #[error("coupling carries no mass on the selected core sets")]
    EmptyCore,

    #[error("marginal {marginal} of the coupling deviates from the target at atom {atom} by {deviation}")]
    MarginalMismatch {
        marginal: usize,
        atom: usize,
        deviation: String,
    },

    #[error("linear program reported unbounded, which cannot happen on a transportation polytope; input is inconsistent")]
    Unbounded,

    #[error("no feasible point: phase-1 optimum {residual} > 0")]
    Infeasible { residual: String },

    #[error("simplex exceeded {pivots} pivots without reaching optimality")]
    PivotLimit { pivots: usize },

    #[error("entropic parameter must be positive, got {epsilon}")]
    NonPositiveEpsilon { epsilon: f64 },

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("could not parse number {text:?}: {message}")]
    NumberParse { text: String, message: String },
}
