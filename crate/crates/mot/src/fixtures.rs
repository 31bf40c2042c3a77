//! Deterministic random instances for tests, examples, and the CLI's
//! `--seed` mode.
//!
//! Everything is driven by a seeded ChaCha8 stream, so a seed pins the
//! instance bit-for-bit across runs and platforms. Weights are small
//! integer ratios and costs are fractions with denominator at most 8 and
//! absolute value at most 5, which keeps rational arithmetic cheap and
//! floating-point values exactly representable per component.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::measure::DiscreteMeasure;
use crate::potential::{admissibility_slack, PotentialFamily};
use crate::scalar::Scalar;
use crate::tensor::{CostTensor, Coupling, Shape};

/// A random instance with the given dimensions.
pub fn random_instance_with_dims<S: Scalar>(
    seed: u64,
    dims: &[usize],
) -> (Vec<DiscreteMeasure<S>>, CostTensor<S>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measures = dims.iter().map(|&n| random_measure(&mut rng, n)).collect();
    let shape = Shape::new(dims.to_vec()).expect("positive dims");
    let entries = (0..shape.entry_count())
        .map(|_| {
            let q = rng.gen_range(1..=8i64);
            let p = rng.gen_range(-5 * q..=5 * q);
            S::ratio(p, q)
        })
        .collect();
    let cost = CostTensor::new(shape, entries).expect("bounded random cost");
    (measures, cost)
}

/// A random instance with `arity` marginals of 2 to `max_atoms` atoms.
pub fn random_instance<S: Scalar>(
    seed: u64,
    arity: usize,
    max_atoms: usize,
) -> (Vec<DiscreteMeasure<S>>, CostTensor<S>) {
    assert!(max_atoms >= 2, "need room for at least two atoms");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let dims: Vec<usize> = (0..arity).map(|_| rng.gen_range(2..=max_atoms)).collect();
    random_instance_with_dims(seed, &dims)
}

fn random_measure<S: Scalar>(rng: &mut ChaCha8Rng, atoms: usize) -> DiscreteMeasure<S> {
    let raw: Vec<i64> = (0..atoms).map(|_| rng.gen_range(1..=9i64)).collect();
    let total: i64 = raw.iter().sum();
    DiscreteMeasure::from_weights(raw.into_iter().map(|w| S::ratio(w, total)).collect())
        .expect("positive weights summing to one")
}

/// A random feasible pair: the coupling is drawn first and the measures
/// are its marginals, so feasibility is exact by construction.
pub fn random_coupled<S: Scalar>(
    seed: u64,
    dims: &[usize],
) -> (Coupling<S>, Vec<DiscreteMeasure<S>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0071ed);
    let shape = Shape::new(dims.to_vec()).expect("positive dims");
    let mut raw: Vec<i64> = (0..shape.entry_count())
        .map(|_| rng.gen_range(0..=9i64))
        .collect();
    if raw.iter().all(|&w| w == 0) {
        raw[0] = 1;
    }
    let total: i64 = raw.iter().sum();
    let entries: Vec<S> = raw.into_iter().map(|w| S::ratio(w, total)).collect();
    let coupling = Coupling::new(shape, entries).expect("normalized mass");
    let measures = coupling
        .marginals()
        .into_iter()
        .map(|weights| {
            DiscreteMeasure::from_weights(weights).expect("marginals of a coupling")
        })
        .collect();
    (coupling, measures)
}

/// A random admissible family that touches the cost: after drawing small
/// fractional values, the first coordinate is shifted so the minimum slack
/// is exactly zero.
pub fn random_admissible_family<S: Scalar>(seed: u64, cost: &CostTensor<S>) -> PotentialFamily<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfa317);
    let values: Vec<Vec<S>> = cost
        .shape()
        .dims()
        .iter()
        .map(|&n| {
            (0..n)
                .map(|_| {
                    let q = rng.gen_range(1..=4i64);
                    let p = rng.gen_range(-3 * q..=3 * q);
                    S::ratio(p, q)
                })
                .collect()
        })
        .collect();
    let family = PotentialFamily::new(values).expect("bounded random potentials");
    let (min_slack, _) = admissibility_slack(&family, cost);
    let mut shifts = vec![S::zero(); cost.shape().arity()];
    shifts[0] = min_slack;
    family.shifted(&shifts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::is_admissible;
    use crate::scalar::Rational;
    use num::Zero;

    #[test]
    fn seeds_pin_instances_exactly() {
        let (m1, c1) = random_instance::<Rational>(7, 3, 4);
        let (m2, c2) = random_instance::<Rational>(7, 3, 4);
        assert_eq!(c1.entries(), c2.entries());
        for (a, b) in m1.iter().zip(&m2) {
            assert_eq!(a.weights(), b.weights());
        }
        let (m3, c3) = random_instance::<Rational>(8, 3, 4);
        assert!(
            c1.shape() != c3.shape()
                || c1.entries() != c3.entries()
                || m1.iter().zip(&m3).any(|(a, b)| a.weights() != b.weights())
        );
    }

    #[test]
    fn rational_and_float_draws_agree_componentwise() {
        let (mr, cr) = random_instance_with_dims::<Rational>(21, &[3, 2, 2]);
        let (mf, cf) = random_instance_with_dims::<f64>(21, &[3, 2, 2]);
        for (a, b) in cr.entries().iter().zip(cf.entries()) {
            assert_eq!(a.to_f64(), *b);
        }
        for (a, b) in mr.iter().zip(&mf) {
            for (x, y) in a.weights().iter().zip(b.weights()) {
                assert!((x.to_f64() - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn instances_respect_the_documented_ranges() {
        for seed in 0..20 {
            let (measures, cost) = random_instance::<Rational>(seed, 3, 5);
            for m in &measures {
                assert!((2..=5).contains(&m.len()));
            }
            assert!(*cost.sup_norm() <= Rational::from_int(5));
        }
    }

    #[test]
    fn coupled_draws_are_feasible_by_construction() {
        for seed in 0..10 {
            let (coupling, measures) = random_coupled::<Rational>(seed, &[2, 3, 2]);
            coupling
                .check_marginals(&measures, &Rational::zero())
                .unwrap();
        }
    }

    #[test]
    fn admissible_families_touch_the_cost() {
        for seed in 0..10 {
            let (_, cost) = random_instance::<Rational>(seed, 3, 4);
            let family = random_admissible_family(seed, &cost);
            assert!(is_admissible(&family, &cost, &Rational::zero()));
            let (min_slack, _) = admissibility_slack(&family, &cost);
            assert_eq!(min_slack, Rational::zero());
        }
    }
}
