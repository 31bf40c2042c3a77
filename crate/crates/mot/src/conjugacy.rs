//! Conjugate improvement and gauge normalization of dual potentials.
//!
//! The conjugate of a family in coordinate `k` is
//!
//! ```text
//! f_k^c(x_k) = min over (x_l)_{l != k} of  c(x) - sum_{l != k} f_l(x_l)
//! ```
//!
//! the largest value coordinate `k` can take without breaking admissibility.
//! Replacing `f_k` by its conjugate for `k = 1, ..., K` in order never lowers
//! any entry, keeps the family admissible, and cannot decrease the dual
//! value. After one full sweep the family is a fixed point of every
//! coordinate conjugation: later updates only raised the other coordinates,
//! which pushes each conjugate down to the value just written, while
//! admissibility bounds it from below.
//!
//! Two gauge moves are provided; both leave the dual value and the slack
//! tensor untouched. `normalize_zero_sum` equalizes the family at an anchor
//! tuple with shifts summing to zero. `normalize_min_zero` pins
//! `min f_1 = 0` and spreads the compensating constant over the rest.

use crate::measure::DiscreteMeasure;
use crate::potential::{admissibility_slack, eval_dual_value, PotentialFamily};
use crate::scalar::Scalar;
use crate::tensor::CostTensor;
use crate::MotError;

/// Conjugate of the family in coordinate `k`; values only.
pub fn c_conjugate<S: Scalar>(
    family: &PotentialFamily<S>,
    k: usize,
    cost: &CostTensor<S>,
) -> Vec<S> {
    c_conjugate_with_witness(family, k, cost).0
}

/// Conjugate values together with, per atom of coordinate `k`, the
/// lexicographically first multi-index attaining the minimum (its k-th entry
/// is the atom itself). The witnesses feed equality checks in certificates.
pub fn c_conjugate_with_witness<S: Scalar>(
    family: &PotentialFamily<S>,
    k: usize,
    cost: &CostTensor<S>,
) -> (Vec<S>, Vec<Vec<usize>>) {
    assert!(family.matches_shape(cost.shape()), "family/cost shape mismatch");
    let nk = cost.shape().dims()[k];
    let mut values: Vec<Option<S>> = vec![None; nk];
    let mut witnesses: Vec<Vec<usize>> = vec![Vec::new(); nk];
    for (flat, index) in cost.shape().indices().enumerate() {
        let mut others = S::zero();
        for (l, &i) in index.iter().enumerate() {
            if l != k {
                others = others + family.value(l, i);
            }
        }
        let candidate = cost.entries()[flat].clone() - &others;
        let slot = index[k];
        match &values[slot] {
            Some(best) if &candidate >= best => {}
            _ => {
                values[slot] = Some(candidate);
                witnesses[slot] = index;
            }
        }
    }
    (
        values.into_iter().map(|v| v.expect("nonempty shape")).collect(),
        witnesses,
    )
}

/// Per-coordinate fixed-point test: `true` at `k` when `f_k` equals its
/// conjugate within `tol` everywhere.
pub fn is_conjugate_fixed_point<S: Scalar>(
    family: &PotentialFamily<S>,
    cost: &CostTensor<S>,
    tol: &S,
) -> Vec<bool> {
    (0..family.arity())
        .map(|k| {
            c_conjugate(family, k, cost)
                .iter()
                .zip(family.vector(k))
                .all(|(conj, f)| (conj.clone() - f).abs() <= *tol)
        })
        .collect()
}

/// Outcome of a conjugate improvement pass.
#[derive(Debug, Clone)]
pub struct ConjugacyReport<S: Scalar> {
    pub family: PotentialFamily<S>,
    pub dual_value_before: S,
    pub dual_value_after: S,
    /// Fixed-point flags per coordinate, at the default tolerance.
    pub fixed_point: Vec<bool>,
    /// Whether every entry lies within [`potential_bounds`] for this cost.
    pub bounds_ok: bool,
}

/// One in-order conjugation sweep over all coordinates. The input family
/// must be admissible; each coordinate can only move up, and the dual value
/// cannot decrease.
pub fn improve_sweep<S: Scalar>(
    family: &PotentialFamily<S>,
    cost: &CostTensor<S>,
    measures: &[DiscreteMeasure<S>],
) -> Result<ConjugacyReport<S>, MotError> {
    let tol = S::default_tol(cost.sup_norm());
    let (min_slack, witness) = admissibility_slack(family, cost);
    if min_slack < -tol.clone() {
        return Err(MotError::NotAdmissible {
            witness,
            slack: min_slack.format_exact(),
        });
    }
    let dual_value_before = eval_dual_value(family, measures)?;
    let mut improved = family.clone();
    for k in 0..improved.arity() {
        let conj = c_conjugate(&improved, k, cost);
        improved.set_vector(k, conj);
    }
    let dual_value_after = eval_dual_value(&improved, measures)?;
    let fixed_point = is_conjugate_fixed_point(&improved, cost, &tol);
    let bounds_ok = within_potential_bounds(&improved, cost, &tol);
    Ok(ConjugacyReport {
        family: improved,
        dual_value_before,
        dual_value_after,
        fixed_point,
        bounds_ok,
    })
}

/// Sweeps until every coordinate is a conjugation fixed point or the sweep
/// budget runs out; returns the last report and the sweeps used. One sweep
/// suffices for admissible input, so this mostly documents that fact and
/// guards the float pipeline.
pub fn sweep_to_fixed_point<S: Scalar>(
    family: &PotentialFamily<S>,
    cost: &CostTensor<S>,
    measures: &[DiscreteMeasure<S>],
    max_sweeps: usize,
) -> Result<(ConjugacyReport<S>, usize), MotError> {
    let mut report = improve_sweep(family, cost, measures)?;
    let mut sweeps = 1;
    while sweeps < max_sweeps && !report.fixed_point.iter().all(|&b| b) {
        report = improve_sweep(&report.family, cost, measures)?;
        sweeps += 1;
    }
    Ok((report, sweeps))
}

/// Equalizes the family at `anchor`: coordinate `k` is shifted by
/// `m - f_k(anchor_k)` where `m` is the mean of the anchor values, so the
/// shifts sum to zero and all anchor values become `m`.
pub fn normalize_zero_sum<S: Scalar>(
    family: &PotentialFamily<S>,
    anchor: &[usize],
) -> PotentialFamily<S> {
    assert_eq!(anchor.len(), family.arity(), "anchor arity mismatch");
    let arity = family.arity();
    let anchor_values: Vec<S> = anchor
        .iter()
        .enumerate()
        .map(|(k, &i)| family.value(k, i).clone())
        .collect();
    let mean = anchor_values.iter().cloned().sum::<S>() / S::from_int(arity as i64);
    let shifts: Vec<S> = anchor_values.iter().map(|a| mean.clone() - a).collect();
    family.shifted(&shifts)
}

/// Pins `min f_1 = 0` by shifting the first coordinate, and spreads the
/// opposite constant evenly over the remaining `K - 1` coordinates.
pub fn normalize_min_zero<S: Scalar>(family: &PotentialFamily<S>) -> PotentialFamily<S> {
    let arity = family.arity();
    assert!(arity >= 2, "need at least two coordinates");
    let min = family
        .vector(0)
        .iter()
        .cloned()
        .reduce(crate::scalar::min_of)
        .expect("nonempty potential vector");
    let lift = -min;
    let spread = -(lift.clone() / S::from_int((arity - 1) as i64));
    let mut shifts = vec![spread; arity];
    shifts[0] = lift;
    family.shifted(&shifts)
}

/// Universal enclosure for improved, anchor-normalized optimal potentials:
/// `(-(2K-1) s - (K-1), 2 s + 1)` where `s` is the cost sup norm.
pub fn potential_bounds<S: Scalar>(arity: usize, sup_norm: &S) -> (S, S) {
    assert!(arity >= 3, "multimarginal bounds need K >= 3");
    assert!(*sup_norm >= S::zero(), "sup norm is nonnegative");
    let k = arity as i64;
    let lower = -(S::from_int(2 * k - 1) * sup_norm) - &S::from_int(k - 1);
    let upper = S::from_int(2) * sup_norm + &S::one();
    (lower, upper)
}

/// True when every entry of the family lies in [`potential_bounds`],
/// loosened by `tol` on both sides.
pub fn within_potential_bounds<S: Scalar>(
    family: &PotentialFamily<S>,
    cost: &CostTensor<S>,
    tol: &S,
) -> bool {
    let (lower, upper) = potential_bounds(family.arity(), cost.sup_norm());
    let lo = lower - tol;
    let hi = upper + tol;
    family
        .vectors()
        .iter()
        .all(|f| f.iter().all(|v| *v >= lo && *v <= hi))
}
