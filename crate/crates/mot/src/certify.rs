//! Optimality certificates: duality gaps, splitting sets, and cyclical
//! monotonicity.
//!
//! A coupling `pi` and an admissible family `f` certify each other when the
//! gap `<c, pi> - sum_k <f_k, mu_k>` vanishes. The support of an optimal
//! plan is a splitting set: some admissible family attains
//!
//! ```text
//! sum_k f_k(x_k) = c(x)   on the set,
//! sum_k f_k(x_k) <= c(x)  everywhere,
//! ```
//!
//! and every splitting set is cyclically monotone: for tuples drawn from
//! the set, no family of permutations applied coordinatewise can lower the
//! total cost. The checks here are exhaustive over their (guarded) search
//! spaces, so a pass is a proof for the instance at hand.

use crate::potential::{admissibility_slack, PotentialFamily};
use crate::scalar::Scalar;
use crate::tensor::{CostTensor, Coupling};
use crate::MotError;

/// Largest tuple-family size accepted by the monotonicity search.
pub const DEFAULT_TUPLE_GUARD: usize = 3;
/// Largest support set accepted by the monotonicity search.
pub const DEFAULT_SET_GUARD: usize = 12;

/// Verdict of a duality-gap evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum GapVerdict<S: Scalar> {
    /// Family admissible and gap within tolerance of zero.
    Optimal,
    /// Family admissible but the gap is strictly positive.
    Suboptimal,
    /// Family breaks the admissibility constraint at `witness`.
    InfeasibleDual { witness: Vec<usize>, slack: S },
}

#[derive(Debug, Clone)]
pub struct GapReport<S: Scalar> {
    pub primal_value: S,
    pub dual_value: S,
    /// `primal_value - dual_value`; nonnegative whenever the family is
    /// admissible and the coupling feasible.
    pub gap: S,
    pub verdict: GapVerdict<S>,
}

/// Evaluates both functionals against the coupling's own marginals and
/// classifies the pair at the default tolerance for the cost's scale.
pub fn duality_gap<S: Scalar>(
    coupling: &Coupling<S>,
    family: &PotentialFamily<S>,
    cost: &CostTensor<S>,
) -> Result<GapReport<S>, MotError> {
    duality_gap_with_tol(coupling, family, cost, &S::default_tol(cost.sup_norm()))
}

pub fn duality_gap_with_tol<S: Scalar>(
    coupling: &Coupling<S>,
    family: &PotentialFamily<S>,
    cost: &CostTensor<S>,
    tol: &S,
) -> Result<GapReport<S>, MotError> {
    if !family.matches_shape(coupling.shape()) {
        return Err(MotError::ShapeMismatch {
            expected: coupling.shape().dims().to_vec(),
            got: family.dims(),
        });
    }
    let primal_value = crate::tensor::eval_primal_cost(coupling, cost)?;
    // The dual functional against the coupling's own marginals.
    let dual_value: S = coupling
        .marginals()
        .iter()
        .enumerate()
        .map(|(k, weights)| {
            weights
                .iter()
                .zip(family.vector(k))
                .map(|(w, f)| w.clone() * f)
                .sum::<S>()
        })
        .sum();
    let gap = primal_value.clone() - &dual_value;
    let (min_slack, witness) = admissibility_slack(family, cost);
    let verdict = if min_slack < -tol.clone() {
        GapVerdict::InfeasibleDual {
            witness,
            slack: min_slack,
        }
    } else if gap <= *tol {
        GapVerdict::Optimal
    } else {
        GapVerdict::Suboptimal
    };
    Ok(GapReport {
        primal_value,
        dual_value,
        gap,
        verdict,
    })
}

/// Multi-indices carrying mass strictly above `threshold`, in
/// lexicographic order.
pub fn extract_support<S: Scalar>(coupling: &Coupling<S>, threshold: &S) -> Vec<Vec<usize>> {
    assert!(*threshold >= S::zero(), "threshold must be nonnegative");
    coupling
        .shape()
        .indices()
        .zip(coupling.entries())
        .filter(|(_, mass)| *mass > threshold)
        .map(|(index, _)| index)
        .collect()
}

/// Which side of the splitting definition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationSide {
    /// `sum_k f_k > c + tol` somewhere.
    Inequality,
    /// `|sum_k f_k - c| > tol` on a set member.
    Equality,
}

#[derive(Debug, Clone)]
pub struct SplittingViolation<S: Scalar> {
    pub index: Vec<usize>,
    pub side: ViolationSide,
    /// `sum_k f_k` at the index.
    pub family_sum: S,
    /// Cost at the index.
    pub cost_value: S,
}

#[derive(Debug, Clone)]
pub struct SplittingCertificate<S: Scalar> {
    pub set_size: usize,
    /// Smallest slack `c - sum_k f_k` over the whole tensor (>= -tol).
    pub min_slack: S,
    /// Largest |slack| over the certified set (<= tol).
    pub max_equality_gap: S,
}

/// Checks that `f` splits the cost over `gamma`: admissible everywhere and
/// tight on every member. Returns the lexicographically first violating
/// multi-index otherwise, labelled with the side that failed (the
/// inequality side takes precedence when both fail at the same index).
pub fn check_splitting<S: Scalar>(
    gamma: &[Vec<usize>],
    family: &PotentialFamily<S>,
    cost: &CostTensor<S>,
    tol: &S,
) -> Result<SplittingCertificate<S>, SplittingViolation<S>> {
    assert!(family.matches_shape(cost.shape()), "family/cost shape mismatch");
    let mut members: Vec<&Vec<usize>> = gamma.iter().collect();
    members.sort();
    members.dedup();
    let mut min_slack: Option<S> = None;
    let mut max_gap = S::zero();
    for (flat, index) in cost.shape().indices().enumerate() {
        let sum = family.sum_at(&index);
        let cost_value = cost.entries()[flat].clone();
        let slack = cost_value.clone() - &sum;
        if slack < -tol.clone() {
            return Err(SplittingViolation {
                index,
                side: ViolationSide::Inequality,
                family_sum: sum,
                cost_value,
            });
        }
        if members.binary_search(&&index).is_ok() {
            if slack.abs() > *tol {
                return Err(SplittingViolation {
                    index,
                    side: ViolationSide::Equality,
                    family_sum: sum,
                    cost_value,
                });
            }
            max_gap = crate::scalar::max_of(max_gap, slack.abs());
        }
        min_slack = Some(match min_slack {
            None => slack,
            Some(m) => crate::scalar::min_of(m, slack),
        });
    }
    Ok(SplittingCertificate {
        set_size: members.len(),
        min_slack: min_slack.expect("nonempty shape"),
        max_equality_gap: max_gap,
    })
}

/// A tuple family and permutation choice that lowers the total cost.
#[derive(Debug, Clone)]
pub struct MonotonicityWitness<S: Scalar> {
    /// Tuples drawn (with repetition) from the checked set.
    pub tuples: Vec<Vec<usize>>,
    /// One permutation per coordinate after the first, as images of 0..n.
    pub permutations: Vec<Vec<usize>>,
    /// Total cost of the tuples as given.
    pub lhs: S,
    /// Total cost after permuting coordinates 2..K across the tuples.
    pub rhs: S,
}

/// Exhaustively checks cyclical monotonicity of `gamma` for tuple families
/// of every size up to `n_max`, under the default combinatorial guards.
/// `Ok(None)` is a pass; a witness carries the first violation in
/// enumeration order (family size, then tuple choice, then permutations,
/// all lexicographic).
pub fn check_cyclical_monotonicity<S: Scalar>(
    gamma: &[Vec<usize>],
    cost: &CostTensor<S>,
    n_max: usize,
) -> Result<Option<MonotonicityWitness<S>>, MotError> {
    check_cyclical_monotonicity_guarded(gamma, cost, n_max, DEFAULT_TUPLE_GUARD, DEFAULT_SET_GUARD)
}

pub fn check_cyclical_monotonicity_guarded<S: Scalar>(
    gamma: &[Vec<usize>],
    cost: &CostTensor<S>,
    n_max: usize,
    tuple_guard: usize,
    set_guard: usize,
) -> Result<Option<MonotonicityWitness<S>>, MotError> {
    if n_max > tuple_guard {
        return Err(MotError::GuardExceeded {
            what: "tuple family size",
            got: n_max,
            guard: tuple_guard,
        });
    }
    if gamma.len() > set_guard {
        return Err(MotError::GuardExceeded {
            what: "support set size",
            got: gamma.len(),
            guard: set_guard,
        });
    }
    let tol = S::default_tol(cost.sup_norm());
    let mut members: Vec<Vec<usize>> = gamma.to_vec();
    members.sort();
    members.dedup();
    let arity = cost.shape().arity();
    for n in 1..=n_max.min(members.len().max(1)) {
        if members.is_empty() {
            break;
        }
        let perms = permutations(n);
        for choice in multiset_choices(members.len(), n) {
            let tuples: Vec<&Vec<usize>> = choice.iter().map(|&i| &members[i]).collect();
            let lhs: S = tuples.iter().map(|t| cost.at(t).clone()).sum();
            let mut odometer = vec![0usize; arity - 1];
            loop {
                let mut rhs = S::zero();
                let mut scratch = vec![0usize; arity];
                for i in 0..n {
                    scratch[0] = tuples[i][0];
                    for k in 1..arity {
                        scratch[k] = tuples[perms[odometer[k - 1]][i]][k];
                    }
                    rhs = rhs + cost.at(&scratch);
                }
                if lhs > rhs.clone() + &tol {
                    return Ok(Some(MonotonicityWitness {
                        tuples: tuples.into_iter().cloned().collect(),
                        permutations: odometer
                            .iter()
                            .map(|&p| perms[p].clone())
                            .collect(),
                        lhs,
                        rhs,
                    }));
                }
                // Advance the permutation odometer, last coordinate fastest.
                let mut pos = arity - 1;
                loop {
                    if pos == 0 {
                        break;
                    }
                    odometer[pos - 1] += 1;
                    if odometer[pos - 1] < perms.len() {
                        break;
                    }
                    odometer[pos - 1] = 0;
                    pos -= 1;
                }
                if pos == 0 {
                    break;
                }
            }
        }
    }
    Ok(None)
}

/// All permutations of `0..n` as image vectors, lexicographic.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    let mut used = vec![false; n];
    fn recurse(
        n: usize,
        depth: usize,
        current: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if depth == n {
            out.push(current.clone());
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                current[depth] = v;
                recurse(n, depth + 1, current, used, out);
                used[v] = false;
            }
        }
    }
    recurse(n, 0, &mut current, &mut used, &mut out);
    out
}

/// Non-decreasing index tuples of length `n` over `0..m` (multisets),
/// lexicographic.
fn multiset_choices(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    loop {
        out.push(current.clone());
        let mut pos = n;
        while pos > 0 && current[pos - 1] == m - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        let next = current[pos - 1] + 1;
        for slot in current.iter_mut().skip(pos - 1) {
            *slot = next;
        }
    }
    out
}
