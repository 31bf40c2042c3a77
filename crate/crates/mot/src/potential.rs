//! Dual potentials: one real vector per marginal.
//!
//! A family `f = (f1, ..., fK)` is *admissible* for a cost `c` when
//! `f1(x1) + ... + fK(xK) <= c(x1, ..., xK)` at every multi-index. Its dual
//! value is `J(f) = sum_k <f_k, mu_k>`; weak duality says `J(f) <= <c, pi>`
//! for every admissible family and feasible plan.

use crate::measure::DiscreteMeasure;
use crate::scalar::Scalar;
use crate::tensor::{CostTensor, Shape};
use crate::MotError;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFamily<S: Scalar> {
    values: Vec<Vec<S>>,
}

impl<S: Scalar> PotentialFamily<S> {
    pub fn new(values: Vec<Vec<S>>) -> Result<Self, MotError> {
        if !S::EXACT {
            for vector in &values {
                if vector.iter().any(|v| !v.to_f64().is_finite()) {
                    return Err(MotError::NonFinite { what: "potentials" });
                }
            }
        }
        Ok(PotentialFamily { values })
    }

    pub fn zeros(shape: &Shape) -> Self {
        PotentialFamily {
            values: shape.dims().iter().map(|&n| vec![S::zero(); n]).collect(),
        }
    }

    /// Number of marginals K.
    pub fn arity(&self) -> usize {
        self.values.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.values.iter().map(|v| v.len()).collect()
    }

    pub fn vector(&self, k: usize) -> &[S] {
        &self.values[k]
    }

    pub fn vectors(&self) -> &[Vec<S>] {
        &self.values
    }

    pub fn value(&self, k: usize, atom: usize) -> &S {
        &self.values[k][atom]
    }

    pub fn set_vector(&mut self, k: usize, vector: Vec<S>) {
        assert_eq!(vector.len(), self.values[k].len());
        self.values[k] = vector;
    }

    /// Sum of the coordinate potentials at a multi-index.
    pub fn sum_at(&self, index: &[usize]) -> S {
        let mut total = S::zero();
        for (&i, f) in index.iter().zip(&self.values) {
            total = total + &f[i];
        }
        total
    }

    /// The family with `shift[k]` added to every entry of coordinate `k`.
    pub fn shifted(&self, shifts: &[S]) -> Self {
        assert_eq!(shifts.len(), self.values.len());
        PotentialFamily {
            values: self
                .values
                .iter()
                .zip(shifts)
                .map(|(f, s)| f.iter().map(|v| v.clone() + s).collect())
                .collect(),
        }
    }

    pub fn matches_shape(&self, shape: &Shape) -> bool {
        self.dims() == shape.dims()
    }
}

/// Dual value `J(f) = sum_k <f_k, mu_k>`.
pub fn eval_dual_value<S: Scalar>(
    family: &PotentialFamily<S>,
    measures: &[DiscreteMeasure<S>],
) -> Result<S, MotError> {
    if family.arity() != measures.len() {
        return Err(MotError::LengthMismatch {
            what: "potential family",
            expected: measures.len(),
            got: family.arity(),
        });
    }
    let mut total = S::zero();
    for (f, m) in family.vectors().iter().zip(measures) {
        if f.len() != m.len() {
            return Err(MotError::LengthMismatch {
                what: "potential vector",
                expected: m.len(),
                got: f.len(),
            });
        }
        for (v, w) in f.iter().zip(m.weights()) {
            total = total + v.clone() * w;
        }
    }
    Ok(total)
}

/// The slack tensor `c - sum_k f_k`, flattened in cost order.
pub fn slack_tensor<S: Scalar>(family: &PotentialFamily<S>, cost: &CostTensor<S>) -> Vec<S> {
    assert!(
        family.matches_shape(cost.shape()),
        "family dims {:?} vs cost shape {:?}",
        family.dims(),
        cost.shape().dims()
    );
    let mut out = Vec::with_capacity(cost.shape().entry_count());
    for (flat, index) in cost.shape().indices().enumerate() {
        out.push(cost.entries()[flat].clone() - &family.sum_at(&index));
    }
    out
}

/// Minimum of the slack tensor together with the lexicographically first
/// multi-index attaining it. The family is admissible iff the minimum is
/// nonnegative.
pub fn admissibility_slack<S: Scalar>(
    family: &PotentialFamily<S>,
    cost: &CostTensor<S>,
) -> (S, Vec<usize>) {
    let mut best: Option<(S, Vec<usize>)> = None;
    for (flat, index) in cost.shape().indices().enumerate() {
        let slack = cost.entries()[flat].clone() - &family.sum_at(&index);
        match &best {
            Some((current, _)) if &slack >= current => {}
            _ => best = Some((slack, index)),
        }
    }
    best.expect("cost tensors are nonempty")
}

/// True when the family is admissible up to `tol` (zero in exact mode).
pub fn is_admissible<S: Scalar>(family: &PotentialFamily<S>, cost: &CostTensor<S>, tol: &S) -> bool {
    let (min_slack, _) = admissibility_slack(family, cost);
    min_slack >= -tol.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num::{One, Zero};
    use crate::tensor::separable_cost;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn dual_value_is_the_weighted_sum() {
        let m1: DiscreteMeasure<Rational> =
            DiscreteMeasure::from_weights(vec![r(1, 2), r(1, 2)]).unwrap();
        let m2 = DiscreteMeasure::from_weights(vec![r(1, 4), r(3, 4)]).unwrap();
        let m3 = DiscreteMeasure::from_weights(vec![Rational::one()]).unwrap();
        let family = PotentialFamily::new(vec![
            vec![r(1, 1), r(3, 1)],
            vec![r(-2, 1), r(2, 1)],
            vec![r(1, 2)],
        ])
        .unwrap();
        // By hand: (1/2 + 3/2) + (-1/2 + 3/2) + 1/2 = 7/2.
        assert_eq!(
            eval_dual_value(&family, &[m1, m2, m3]).unwrap(),
            r(7, 2)
        );
    }

    #[test]
    fn dual_value_rejects_mismatched_lengths() {
        let m1: DiscreteMeasure<Rational> =
            DiscreteMeasure::from_weights(vec![r(1, 2), r(1, 2)]).unwrap();
        let family = PotentialFamily::new(vec![vec![Rational::zero()]]).unwrap();
        assert!(matches!(
            eval_dual_value(&family, &[m1]),
            Err(MotError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn slack_minimum_found_by_exhaustive_oracle() {
        let cost = separable_cost(&[
            vec![r(0, 1), r(2, 1)],
            vec![r(1, 1), r(-1, 1)],
            vec![r(0, 1), r(1, 2)],
        ])
        .unwrap();
        let family = PotentialFamily::new(vec![
            vec![r(-1, 2), r(1, 1)],
            vec![r(0, 1), r(-3, 2)],
            vec![r(0, 1), r(0, 1)],
        ])
        .unwrap();
        let (min_slack, witness) = admissibility_slack(&family, &cost);

        let mut oracle: Option<Rational> = None;
        let mut oracle_witness = Vec::new();
        for index in cost.shape().indices() {
            let slack = cost.at(&index).clone() - family.sum_at(&index);
            if oracle.as_ref().map_or(true, |b| &slack < b) {
                oracle = Some(slack);
                oracle_witness = index;
            }
        }
        assert_eq!(min_slack, oracle.unwrap());
        assert_eq!(witness, oracle_witness);
        assert!(is_admissible(&family, &cost, &Rational::zero()));
    }

    #[test]
    fn slack_witness_prefers_lexicographically_first_tie() {
        // Constant cost and zero potentials: every index ties at slack 1.
        let cost = separable_cost(&[
            vec![Rational::one(), Rational::one()],
            vec![Rational::zero(), Rational::zero()],
            vec![Rational::zero(), Rational::zero()],
        ])
        .unwrap();
        let family = PotentialFamily::zeros(cost.shape());
        let (min_slack, witness) = admissibility_slack(&family, &cost);
        assert_eq!(min_slack, Rational::one());
        assert_eq!(witness, vec![0, 0, 0]);
    }

    #[test]
    fn zero_sum_shifts_preserve_dual_value_and_slack() {
        let cost = separable_cost(&[
            vec![r(1, 1), r(2, 1)],
            vec![r(0, 1), r(1, 1)],
            vec![r(-1, 1), r(0, 1)],
        ])
        .unwrap();
        let m: Vec<DiscreteMeasure<Rational>> = vec![
            DiscreteMeasure::from_weights(vec![r(1, 3), r(2, 3)]).unwrap(),
            DiscreteMeasure::from_weights(vec![r(1, 2), r(1, 2)]).unwrap(),
            DiscreteMeasure::from_weights(vec![r(1, 5), r(4, 5)]).unwrap(),
        ];
        let family = PotentialFamily::new(vec![
            vec![r(1, 2), r(1, 3)],
            vec![r(-1, 1), r(0, 1)],
            vec![r(1, 4), r(-1, 4)],
        ])
        .unwrap();
        let shifts = vec![r(5, 3), r(-7, 2), r(11, 6)];
        assert_eq!(
            shifts.iter().cloned().sum::<Rational>(),
            Rational::zero()
        );
        let shifted = family.shifted(&shifts);
        assert_eq!(
            eval_dual_value(&family, &m).unwrap(),
            eval_dual_value(&shifted, &m).unwrap()
        );
        assert_eq!(slack_tensor(&family, &cost), slack_tensor(&shifted, &cost));
    }
}
