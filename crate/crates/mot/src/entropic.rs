//! Entropic smoothing: softmin conjugation, Gibbs plans, and multimarginal
//! Sinkhorn iteration. Floating point only.
//!
//! The softmin conjugate replaces the hard minimum of the conjugation
//! formula by a weighted log-sum-exp at temperature `epsilon`:
//!
//! ```text
//! f_k(x_k) = -eps log sum over (x_l)_{l != k} of
//!            prod_{l != k} w_l(x_l) exp((sum_{l != k} f_l(x_l) - c(x)) / eps)
//! ```
//!
//! Cycling this update over the coordinates is coordinate ascent on the
//! smoothed dual; after updating coordinate `k`, the Gibbs plan
//! `pi proportional to prod_k w_k exp((sum_k f_k - c)/eps)` has `k`-th
//! marginal exactly equal to `mu_k`, so the marginal residual measures the
//! distance to a feasible plan. As `eps` shrinks, the transport cost of
//! the Gibbs plan approaches the exact optimum from above, with excess at
//! most `eps sum_k log n_k`; that rate comes from the standard entropic
//! optimal transport analysis, not from anything proved here.

use crate::measure::DiscreteMeasure;
use crate::potential::PotentialFamily;
use crate::tensor::{CostTensor, Coupling};
use crate::MotError;

/// Default residual tolerance for declaring convergence.
pub const DEFAULT_SINKHORN_TOL: f64 = 1e-9;

/// Snapshot of a Sinkhorn run.
#[derive(Debug, Clone)]
pub struct EntropicState {
    pub family: PotentialFamily<f64>,
    pub epsilon: f64,
    /// Completed full sweeps over the coordinates.
    pub iterations: usize,
    /// Max over k of the L1 gap between the Gibbs plan's k-th marginal
    /// and the target.
    pub marginal_residual: f64,
    pub converged: bool,
}

fn validate_inputs(
    measures: &[DiscreteMeasure<f64>],
    cost: &CostTensor<f64>,
    epsilon: f64,
) -> Result<(), MotError> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(MotError::NonPositiveEpsilon { epsilon });
    }
    let dims: Vec<usize> = measures.iter().map(|m| m.len()).collect();
    if dims != cost.shape().dims() {
        return Err(MotError::ShapeMismatch {
            expected: cost.shape().dims().to_vec(),
            got: dims,
        });
    }
    Ok(())
}

fn log_weights(measures: &[DiscreteMeasure<f64>]) -> Vec<Vec<f64>> {
    measures
        .iter()
        .map(|m| {
            m.weights()
                .iter()
                .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
                .collect()
        })
        .collect()
}

/// Softmin conjugate of the family in coordinate `k`: a log-sum-exp over
/// the other coordinates, weighted by their marginals, with per-atom max
/// subtraction. Zero-weight atoms contribute nothing.
pub fn softmin_conjugate(
    family: &PotentialFamily<f64>,
    k: usize,
    cost: &CostTensor<f64>,
    measures: &[DiscreteMeasure<f64>],
    epsilon: f64,
) -> Result<Vec<f64>, MotError> {
    validate_inputs(measures, cost, epsilon)?;
    let lw = log_weights(measures);
    let nk = cost.shape().dims()[k];
    let mut peak = vec![f64::NEG_INFINITY; nk];
    let exponents: Vec<f64> = cost
        .shape()
        .indices()
        .zip(cost.entries())
        .map(|(index, &c)| {
            let mut t = -c / epsilon;
            for (l, &i) in index.iter().enumerate() {
                if l != k {
                    t += family.value(l, i) / epsilon + lw[l][i];
                }
            }
            let slot = index[k];
            if t > peak[slot] {
                peak[slot] = t;
            }
            t
        })
        .collect();
    let mut sums = vec![0.0f64; nk];
    for (index, &t) in cost.shape().indices().zip(&exponents) {
        let slot = index[k];
        if t.is_finite() {
            sums[slot] += (t - peak[slot]).exp();
        }
    }
    Ok(peak
        .iter()
        .zip(&sums)
        .map(|(&m, &s)| {
            debug_assert!(m.is_finite(), "every marginal carries positive mass");
            -epsilon * (m + s.ln())
        })
        .collect())
}

/// The normalized Gibbs plan of the family at temperature `epsilon`,
/// together with the per-coordinate L1 deviations of its marginals from
/// the targets.
pub fn gibbs_plan(
    family: &PotentialFamily<f64>,
    cost: &CostTensor<f64>,
    measures: &[DiscreteMeasure<f64>],
    epsilon: f64,
) -> Result<(Coupling<f64>, Vec<f64>), MotError> {
    validate_inputs(measures, cost, epsilon)?;
    let lw = log_weights(measures);
    let mut peak = f64::NEG_INFINITY;
    let logits: Vec<f64> = cost
        .shape()
        .indices()
        .zip(cost.entries())
        .map(|(index, &c)| {
            let mut t = -c / epsilon;
            for (l, &i) in index.iter().enumerate() {
                t += family.value(l, i) / epsilon + lw[l][i];
            }
            if t > peak {
                peak = t;
            }
            t
        })
        .collect();
    let mut entries: Vec<f64> = logits.iter().map(|&t| (t - peak).exp()).collect();
    let total: f64 = entries.iter().sum();
    for e in entries.iter_mut() {
        *e /= total;
    }
    let plan = Coupling::new(cost.shape().clone(), entries)?;
    let residuals = (0..cost.shape().arity())
        .map(|k| {
            plan.marginal(k)
                .iter()
                .zip(measures[k].weights())
                .map(|(got, want)| (got - want).abs())
                .sum()
        })
        .collect();
    Ok((plan, residuals))
}

/// Cyclic softmin iteration from the zero family.
pub fn sinkhorn_mmot(
    measures: &[DiscreteMeasure<f64>],
    cost: &CostTensor<f64>,
    epsilon: f64,
    max_iters: usize,
    tol: f64,
) -> Result<(EntropicState, Coupling<f64>), MotError> {
    let init = PotentialFamily::zeros(cost.shape());
    sinkhorn_mmot_from(measures, cost, epsilon, max_iters, tol, init)
}

/// Cyclic softmin iteration from a caller-supplied family, e.g. the
/// previous rung of an epsilon ladder.
pub fn sinkhorn_mmot_from(
    measures: &[DiscreteMeasure<f64>],
    cost: &CostTensor<f64>,
    epsilon: f64,
    max_iters: usize,
    tol: f64,
    init: PotentialFamily<f64>,
) -> Result<(EntropicState, Coupling<f64>), MotError> {
    validate_inputs(measures, cost, epsilon)?;
    let mut family = init;
    let mut iterations = 0;
    let mut converged = false;
    let (mut plan, mut residuals) = gibbs_plan(&family, cost, measures, epsilon)?;
    let mut residual = residuals.iter().cloned().fold(0.0, f64::max);
    if residual <= tol {
        converged = true;
    }
    while !converged && iterations < max_iters {
        for k in 0..cost.shape().arity() {
            let updated = softmin_conjugate(&family, k, cost, measures, epsilon)?;
            family.set_vector(k, updated);
        }
        iterations += 1;
        (plan, residuals) = gibbs_plan(&family, cost, measures, epsilon)?;
        residual = residuals.iter().cloned().fold(0.0, f64::max);
        if residual <= tol {
            converged = true;
        }
    }
    Ok((
        EntropicState {
            family,
            epsilon,
            iterations,
            marginal_residual: residual,
            converged,
        },
        plan,
    ))
}

/// Runs the rungs in order, warm-starting each from the previous family.
pub fn entropic_ladder(
    measures: &[DiscreteMeasure<f64>],
    cost: &CostTensor<f64>,
    rungs: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<Vec<(EntropicState, Coupling<f64>)>, MotError> {
    let mut out = Vec::with_capacity(rungs.len());
    let mut warm = PotentialFamily::zeros(cost.shape());
    for &eps in rungs {
        let (state, plan) =
            sinkhorn_mmot_from(measures, cost, eps, max_iters, tol, warm.clone())?;
        warm = state.family.clone();
        out.push((state, plan));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugacy::c_conjugate;
    use crate::lp::solve_instance;
    use crate::scalar::{Rational, Scalar};
    use crate::tensor::{eval_primal_cost, separable_cost, Shape};

    fn shape(dims: &[usize]) -> Shape {
        Shape::new(dims.to_vec()).unwrap()
    }

    fn test_instance() -> (Vec<DiscreteMeasure<f64>>, CostTensor<f64>) {
        let measures = vec![
            DiscreteMeasure::from_weights(vec![0.2, 0.5, 0.3]).unwrap(),
            DiscreteMeasure::from_weights(vec![0.4, 0.6]).unwrap(),
            DiscreteMeasure::from_weights(vec![0.25, 0.25, 0.5]).unwrap(),
        ];
        let s = shape(&[3, 2, 3]);
        let entries: Vec<f64> = s
            .indices()
            .map(|i| {
                let (a, b, c) = (i[0] as f64, i[1] as f64, i[2] as f64);
                (a - 2.0 * b).powi(2) * 0.25 + (b - c).abs() - 0.5 * a * c
            })
            .collect();
        (measures, CostTensor::new(s, entries).unwrap())
    }

    #[test]
    fn rejects_nonpositive_epsilon_and_shape_mismatch() {
        let (measures, cost) = test_instance();
        assert!(matches!(
            sinkhorn_mmot(&measures, &cost, 0.0, 10, 1e-9),
            Err(MotError::NonPositiveEpsilon { .. })
        ));
        assert!(matches!(
            sinkhorn_mmot(&measures[..2].to_vec(), &cost, 0.5, 10, 1e-9),
            Err(MotError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn zero_cost_zero_family_softmin_vanishes() {
        let (measures, _) = test_instance();
        let s = shape(&[3, 2, 3]);
        let zero_cost = CostTensor::new(s.clone(), vec![0.0; 18]).unwrap();
        let family = PotentialFamily::zeros(&s);
        for k in 0..3 {
            let v = softmin_conjugate(&family, k, &zero_cost, &measures, 0.7).unwrap();
            for x in v {
                assert!(x.abs() < 1e-12, "softmin {x} not 0");
            }
        }
    }

    #[test]
    fn uniform_weights_bracket_softmin_by_the_hard_conjugate() {
        let measures: Vec<DiscreteMeasure<f64>> = vec![
            DiscreteMeasure::uniform(3),
            DiscreteMeasure::uniform(2),
            DiscreteMeasure::uniform(3),
        ];
        let (_, cost) = test_instance();
        let family = PotentialFamily::new(vec![
            vec![0.1, -0.4, 0.2],
            vec![0.0, 0.3],
            vec![-0.2, 0.0, 0.1],
        ])
        .unwrap();
        for eps in [1.0, 0.25, 0.05] {
            for k in 0..3 {
                let soft = softmin_conjugate(&family, k, &cost, &measures, eps).unwrap();
                let hard = c_conjugate(&family, k, &cost);
                let others: f64 = (0..3)
                    .filter(|&l| l != k)
                    .map(|l| (cost.shape().dims()[l] as f64).ln())
                    .sum();
                for (s, h) in soft.iter().zip(&hard) {
                    assert!(*s >= h - 1e-10, "softmin below hard min: {s} < {h}");
                    assert!(
                        *s <= h + eps * others + 1e-10,
                        "eps {eps}: softmin {s} exceeds {h} + {}",
                        eps * others
                    );
                }
            }
        }
    }

    #[test]
    fn single_atom_others_give_the_hard_conjugate_for_any_eps() {
        let measures = vec![
            DiscreteMeasure::from_weights(vec![0.3, 0.7]).unwrap(),
            DiscreteMeasure::uniform(1),
            DiscreteMeasure::uniform(1),
        ];
        let s = shape(&[2, 1, 1]);
        let cost = CostTensor::new(s.clone(), vec![1.5, -0.25]).unwrap();
        let family = PotentialFamily::new(vec![vec![0.0, 0.0], vec![0.4], vec![-1.0]]).unwrap();
        for eps in [2.0, 0.1, 1e-3] {
            let soft = softmin_conjugate(&family, 0, &cost, &measures, eps).unwrap();
            assert!((soft[0] - (1.5 - 0.4 + 1.0)).abs() < 1e-12);
            assert!((soft[1] - (-0.25 - 0.4 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn updated_coordinate_has_exact_marginal() {
        let (measures, cost) = test_instance();
        let mut family = PotentialFamily::zeros(cost.shape());
        let eps = 0.3;
        for k in 0..3 {
            let updated = softmin_conjugate(&family, k, &cost, &measures, eps).unwrap();
            family.set_vector(k, updated);
            let (plan, residuals) = gibbs_plan(&family, &cost, &measures, eps).unwrap();
            assert!(
                residuals[k] < 1e-12,
                "coordinate {k}: residual {} after its own update",
                residuals[k]
            );
            for (got, want) in plan.marginal(k).iter().zip(measures[k].weights()) {
                assert!((got - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn dirac_marginals_converge_in_one_sweep() {
        let measures: Vec<DiscreteMeasure<f64>> =
            (0..3).map(|_| DiscreteMeasure::uniform(1)).collect();
        let cost = CostTensor::new(shape(&[1, 1, 1]), vec![4.25]).unwrap();
        let (state, plan) = sinkhorn_mmot(&measures, &cost, 0.5, 50, 1e-12).unwrap();
        assert!(state.converged);
        assert!(state.iterations <= 1);
        assert_eq!(plan.entries(), &[1.0]);
        assert!((eval_primal_cost(&plan, &cost).unwrap() - 4.25).abs() < 1e-15);
    }

    #[test]
    fn constant_cost_yields_the_product_plan() {
        let (measures, _) = test_instance();
        let s = shape(&[3, 2, 3]);
        let cost = CostTensor::new(s, vec![7.0; 18]).unwrap();
        let (state, plan) = sinkhorn_mmot(&measures, &cost, 0.4, 50, 1e-12).unwrap();
        assert!(state.converged);
        let product = Coupling::product(&measures).unwrap();
        for (got, want) in plan.entries().iter().zip(product.entries()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_cost_recovers_the_sum_of_means_at_any_eps() {
        let measures = vec![
            DiscreteMeasure::from_weights(vec![0.2, 0.5, 0.3]).unwrap(),
            DiscreteMeasure::from_weights(vec![0.4, 0.6]).unwrap(),
            DiscreteMeasure::from_weights(vec![0.25, 0.25, 0.5]).unwrap(),
        ];
        let parts = vec![
            vec![1.0, -0.5, 2.0],
            vec![0.25, 1.5],
            vec![-1.0, 0.0, 0.75],
        ];
        let cost = separable_cost(&parts).unwrap();
        let expected: f64 = parts
            .iter()
            .zip(&measures)
            .map(|(p, m)| {
                p.iter()
                    .zip(m.weights())
                    .map(|(c, w)| c * w)
                    .sum::<f64>()
            })
            .sum();
        for eps in [1.0, 0.2, 0.05] {
            let (state, plan) = sinkhorn_mmot(&measures, &cost, eps, 500, 1e-12).unwrap();
            assert!(state.converged, "eps {eps} did not converge");
            let value = eval_primal_cost(&plan, &cost).unwrap();
            assert!(
                (value - expected).abs() < 1e-9,
                "eps {eps}: value {value} vs expected {expected}"
            );
        }
    }

    #[test]
    fn residual_shrinks_across_sweeps() {
        let (measures, cost) = test_instance();
        let eps = 0.5;
        let mut family = PotentialFamily::zeros(cost.shape());
        let mut last = f64::INFINITY;
        for sweep in 0..12 {
            for k in 0..3 {
                let updated = softmin_conjugate(&family, k, &cost, &measures, eps).unwrap();
                family.set_vector(k, updated);
            }
            let (_, residuals) = gibbs_plan(&family, &cost, &measures, eps).unwrap();
            let residual = residuals.iter().cloned().fold(0.0, f64::max);
            assert!(
                residual <= last + 1e-12,
                "sweep {sweep}: residual {residual} above previous {last}"
            );
            last = residual;
        }
        assert!(last < 1e-3, "twelve sweeps left residual {last}");
    }

    /// Independent two-marginal oracle: textbook matrix scaling in the
    /// probability domain, no logarithms, no shared code.
    fn matrix_sinkhorn_oracle(
        r: &[f64],
        c: &[f64],
        cost: &[Vec<f64>],
        eps: f64,
        iters: usize,
    ) -> Vec<Vec<f64>> {
        let (n, m) = (r.len(), c.len());
        let kernel: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| r[i] * c[j] * (-cost[i][j] / eps).exp())
                    .collect()
            })
            .collect();
        let mut u = vec![1.0; n];
        let mut v = vec![1.0; m];
        for _ in 0..iters {
            for i in 0..n {
                let s: f64 = (0..m).map(|j| kernel[i][j] * v[j]).sum();
                u[i] = r[i] / s;
            }
            for j in 0..m {
                let s: f64 = (0..n).map(|i| kernel[i][j] * u[i]).sum();
                v[j] = c[j] / s;
            }
        }
        (0..n)
            .map(|i| (0..m).map(|j| u[i] * kernel[i][j] * v[j]).collect())
            .collect()
    }

    #[test]
    fn two_marginal_runs_match_the_matrix_scaling_oracle() {
        let r = [0.3, 0.45, 0.25];
        let c = [0.1, 0.2, 0.3, 0.4];
        let cost_matrix = vec![
            vec![0.0, 1.2, -0.7, 0.4],
            vec![0.9, -0.3, 0.5, 1.1],
            vec![-0.2, 0.6, 0.8, -0.5],
        ];
        let eps = 0.5;
        let measures = vec![
            DiscreteMeasure::from_weights(r.to_vec()).unwrap(),
            DiscreteMeasure::from_weights(c.to_vec()).unwrap(),
        ];
        let s = shape(&[3, 4]);
        let entries: Vec<f64> = s.indices().map(|i| cost_matrix[i[0]][i[1]]).collect();
        let cost = CostTensor::new_any_arity(s, entries).unwrap();
        let (state, plan) = sinkhorn_mmot(&measures, &cost, eps, 5_000, 1e-13).unwrap();
        assert!(state.converged);
        let oracle = matrix_sinkhorn_oracle(&r, &c, &cost_matrix, eps, 5_000);
        for (index, got) in cost.shape().indices().zip(plan.entries()) {
            let want = oracle[index[0]][index[1]];
            assert!(
                (got - want).abs() < 1e-8,
                "entry {index:?}: {got} vs oracle {want}"
            );
        }
    }

    #[test]
    fn ladder_values_approach_the_exact_optimum_from_above() {
        // Exact optimum by rational LP, then a shrinking epsilon ladder.
        let weights = [
            vec![(1i64, 4i64), (1, 2), (1, 4)],
            vec![(1, 3), (1, 3), (1, 3)],
            vec![(1, 5), (2, 5), (2, 5)],
        ];
        let s = shape(&[3, 3, 3]);
        let cost_values: Vec<(i64, i64)> = s
            .indices()
            .map(|i| {
                let v = 2 * (i[0] as i64) * (i[2] as i64) - (i[1] as i64 - i[2] as i64).abs()
                    + (i[0] as i64 - 1);
                (v, 2)
            })
            .collect();

        let exact_measures: Vec<DiscreteMeasure<Rational>> = weights
            .iter()
            .map(|w| {
                DiscreteMeasure::from_weights(
                    w.iter().map(|&(n, d)| Rational::ratio(n, d)).collect(),
                )
                .unwrap()
            })
            .collect();
        let exact_cost = CostTensor::new(
            s.clone(),
            cost_values
                .iter()
                .map(|&(n, d)| Rational::ratio(n, d))
                .collect(),
        )
        .unwrap();
        let lp = solve_instance(&exact_measures, &exact_cost, &Default::default()).unwrap();
        let lp_value = lp.value.to_f64();

        let measures: Vec<DiscreteMeasure<f64>> = weights
            .iter()
            .map(|w| {
                DiscreteMeasure::from_weights(
                    w.iter().map(|&(n, d)| n as f64 / d as f64).collect(),
                )
                .unwrap()
            })
            .collect();
        let cost = CostTensor::new(
            s,
            cost_values
                .iter()
                .map(|&(n, d)| n as f64 / d as f64)
                .collect(),
        )
        .unwrap();

        let entropy_cap: f64 = 3.0 * 3.0f64.ln();
        let rungs = [0.5, 0.1, 0.02];
        let runs = entropic_ladder(&measures, &cost, &rungs, 20_000, 1e-12).unwrap();
        let mut previous_gap = f64::INFINITY;
        for ((state, plan), &eps) in runs.iter().zip(&rungs) {
            assert!(state.converged, "eps {eps} did not converge");
            let gap = eval_primal_cost(plan, &cost).unwrap() - lp_value;
            assert!(gap >= -1e-9, "eps {eps}: plan beat the optimum by {}", -gap);
            assert!(
                gap <= eps * entropy_cap + 1e-9,
                "eps {eps}: gap {gap} above the entropy bound {}",
                eps * entropy_cap
            );
            assert!(gap <= previous_gap + 1e-9, "gap grew along the ladder");
            previous_gap = gap;
        }
    }
}
