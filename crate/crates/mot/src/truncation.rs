//! Truncation lab: quantitative stability of the transport value and its
//! dual potentials under restriction to high-mass core sets.
//!
//! For a tail budget `eps` with `K eps < 1`, each marginal keeps its
//! largest atoms until the kept mass reaches `1 - eps`. Restricting and
//! renormalizing an optimal plan, re-solving on the cores, gluing the
//! truncated optimum back over the discarded region, and extending the
//! truncated dual potentials by their defining infimum formula yields the
//! chain of bounds verified by [`run_truncation_experiment`]:
//!
//! ```text
//! (a) pi((X0)^c) <= K eps
//! (b) |I(glued) - I0(truncated optimum)| <= 2 K ||c|| eps
//! (c) |extended potentials| <= C,  C = (2K - 1) ||c|| + (K - 1)
//! (d) |J(extended) - J0(extended)| <= 2 K^2 C eps
//! (e) J(extended) >= inf I - (2 K ||c|| + 1 + 2 K^2 C) eps
//! ```
//!
//! Every check is an inequality between computed quantities, so a report
//! with all flags set is a mechanical confirmation of the bounds on the
//! instance at hand.

use crate::conjugacy::improve_sweep;
use crate::lp::{solve_instance, PrimalSolution, SolveOptions};
use crate::measure::{measure_unchecked, DiscreteMeasure};
use crate::potential::{eval_dual_value, PotentialFamily};
use crate::scalar::Scalar;
use crate::tensor::{eval_primal_cost, CostTensor, Coupling, Shape};
use crate::MotError;

/// Per-marginal core sets for a tail budget.
#[derive(Debug, Clone)]
pub struct CoreSets<S: Scalar> {
    /// Kept atom indices per marginal, ascending.
    keep: Vec<Vec<usize>>,
    epsilon: S,
    /// Kept mass per marginal; always >= 1 - epsilon.
    captured_mass: Vec<S>,
}

impl<S: Scalar> CoreSets<S> {
    pub fn keep(&self) -> &[Vec<usize>] {
        &self.keep
    }

    pub fn epsilon(&self) -> &S {
        &self.epsilon
    }

    pub fn captured_mass(&self) -> &[S] {
        &self.captured_mass
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.keep.iter().map(|k| k.len()).collect()
    }

    /// Whether the cores keep every atom of every marginal.
    pub fn is_full(&self, dims: &[usize]) -> bool {
        self.keep.iter().zip(dims).all(|(k, &n)| k.len() == n)
    }
}

/// Checks `0 < eps <= 1` and `arity * eps < 1`.
pub fn validate_eps<S: Scalar>(eps: &S, arity: usize) -> Result<(), MotError> {
    let ok = *eps > S::zero()
        && *eps <= S::one()
        && S::from_int(arity as i64) * eps < S::one();
    if ok {
        Ok(())
    } else {
        Err(MotError::EpsOutOfRange {
            eps: eps.format_exact(),
            arity,
        })
    }
}

/// Greedily keeps the largest-weight atoms of each marginal (ties by atom
/// index) until the kept mass reaches `1 - eps`, so every complement has
/// mass at most `eps`.
pub fn select_core_sets<S: Scalar>(
    measures: &[DiscreteMeasure<S>],
    eps: &S,
) -> Result<CoreSets<S>, MotError> {
    validate_eps(eps, measures.len())?;
    let target = S::one() - eps;
    let mut keep = Vec::with_capacity(measures.len());
    let mut captured = Vec::with_capacity(measures.len());
    for m in measures {
        let mut order: Vec<usize> = (0..m.len()).collect();
        order.sort_by(|&a, &b| {
            m.weight(b)
                .partial_cmp(m.weight(a))
                .expect("weights are finite")
                .then(a.cmp(&b))
        });
        let mut kept = Vec::new();
        let mut mass = S::zero();
        for i in order {
            kept.push(i);
            mass = mass + m.weight(i);
            if mass >= target {
                break;
            }
        }
        kept.sort_unstable();
        keep.push(kept);
        captured.push(mass);
    }
    Ok(CoreSets {
        keep,
        epsilon: eps.clone(),
        captured_mass: captured,
    })
}

/// Entries of `pi` on the core grid (in core-local order) and the total
/// mass they carry.
fn core_slice<S: Scalar>(pi: &Coupling<S>, core: &CoreSets<S>) -> (Shape, Vec<S>, S) {
    let sub_shape = Shape::new(core.keep.iter().map(|k| k.len()).collect())
        .expect("cores are nonempty");
    let mut entries = Vec::with_capacity(sub_shape.entry_count());
    let mut full_index = vec![0usize; core.keep.len()];
    let mut mass = S::zero();
    for sub_index in sub_shape.indices() {
        for (k, &pos) in sub_index.iter().enumerate() {
            full_index[k] = core.keep[k][pos];
        }
        let e = pi.at(&full_index).clone();
        mass = mass + &e;
        entries.push(e);
    }
    (sub_shape, entries, mass)
}

/// Restricts `pi` to the core grid and renormalizes to a probability
/// coupling; also returns its marginals as measures, with atom data taken
/// from `like`.
pub fn restrict_renormalize<S: Scalar>(
    pi: &Coupling<S>,
    core: &CoreSets<S>,
    like: &[DiscreteMeasure<S>],
) -> Result<(Coupling<S>, Vec<DiscreteMeasure<S>>), MotError> {
    let (sub_shape, mut entries, mass) = core_slice(pi, core);
    if mass <= S::zero() {
        return Err(MotError::EmptyCore);
    }
    for e in entries.iter_mut() {
        *e = e.clone() / &mass;
    }
    let restricted = Coupling::new(sub_shape, entries)?;
    let marginals = restricted
        .marginals()
        .into_iter()
        .enumerate()
        .map(|(k, weights)| {
            let (atoms, _) = like[k].restrict_raw(&core.keep[k]);
            measure_unchecked(atoms, weights)
        })
        .collect();
    Ok((restricted, marginals))
}

/// Glues a coupling on the core grid back over the original plan: the
/// result carries `pi(X0)` times the core coupling on the core grid and
/// agrees with `pi` off it, so all full marginals are restored exactly.
/// The core coupling must have the marginals of the renormalized
/// restriction of `pi`.
pub fn glue<S: Scalar>(
    core_plan: &Coupling<S>,
    pi: &Coupling<S>,
    core: &CoreSets<S>,
) -> Result<Coupling<S>, MotError> {
    let (sub_shape, restricted, mass) = core_slice(pi, core);
    if mass <= S::zero() {
        return Err(MotError::EmptyCore);
    }
    if core_plan.shape() != &sub_shape {
        return Err(MotError::ShapeMismatch {
            expected: sub_shape.dims().to_vec(),
            got: core_plan.shape().dims().to_vec(),
        });
    }
    let tol = if S::EXACT {
        S::zero()
    } else {
        S::ratio(1, 10_000_000_000)
    };
    for k in 0..sub_shape.arity() {
        let inner: usize = sub_shape.dims()[k + 1..].iter().product();
        let nk = sub_shape.dims()[k];
        let mut expected = vec![S::zero(); nk];
        for (flat, e) in restricted.iter().enumerate() {
            let i = (flat / inner) % nk;
            expected[i] = expected[i].clone() + e;
        }
        for (i, (got, want)) in core_plan.marginal(k).iter().zip(&expected).enumerate() {
            let deviation = (got.clone() * &mass - want).abs();
            if deviation > tol {
                return Err(MotError::MarginalMismatch {
                    marginal: k,
                    atom: i,
                    deviation: deviation.format_exact(),
                });
            }
        }
    }
    let mut entries = pi.entries().to_vec();
    let mut full_index = vec![0usize; core.keep.len()];
    for (local_flat, sub_index) in sub_shape.indices().enumerate() {
        for (k, &pos) in sub_index.iter().enumerate() {
            full_index[k] = core.keep[k][pos];
        }
        entries[pi.shape().offset(&full_index)] =
            mass.clone() * &core_plan.entries()[local_flat];
    }
    Coupling::new(pi.shape().clone(), entries)
}

/// Extends a potential family living on the core atoms to the full spaces
/// by the conjugate infimum over the other coordinates' cores:
///
/// ```text
/// f_k(x_k) = min over (x_l in X_l^0, l != k) of c(x) - sum_{l != k} f_l(x_l)
/// ```
///
/// evaluated at every full atom `x_k`. On core atoms this reproduces the
/// input family whenever it is a conjugation fixed point of the truncated
/// instance.
pub fn extend_conjugate_over_core<S: Scalar>(
    core_family: &PotentialFamily<S>,
    core: &CoreSets<S>,
    cost: &CostTensor<S>,
) -> PotentialFamily<S> {
    let arity = cost.shape().arity();
    assert_eq!(core_family.arity(), arity, "family/cost arity mismatch");
    let mut extended = Vec::with_capacity(arity);
    for k in 0..arity {
        let nk = cost.shape().dims()[k];
        let mut values: Vec<Option<S>> = vec![None; nk];
        // Odometer over the other coordinates' core positions.
        let other: Vec<usize> = (0..arity).filter(|&l| l != k).collect();
        let mut positions = vec![0usize; other.len()];
        let mut full_index = vec![0usize; arity];
        loop {
            let mut others_sum = S::zero();
            for (slot, &l) in other.iter().enumerate() {
                let pos = positions[slot];
                full_index[l] = core.keep[l][pos];
                others_sum = others_sum + core_family.value(l, pos);
            }
            for (xk, value) in values.iter_mut().enumerate() {
                full_index[k] = xk;
                let candidate = cost.at(&full_index).clone() - &others_sum;
                match value {
                    Some(best) if &candidate >= best => {}
                    _ => *value = Some(candidate),
                }
            }
            let mut slot = other.len();
            loop {
                if slot == 0 {
                    break;
                }
                positions[slot - 1] += 1;
                if positions[slot - 1] < core.keep[other[slot - 1]].len() {
                    break;
                }
                positions[slot - 1] = 0;
                slot -= 1;
            }
            if slot == 0 {
                break;
            }
        }
        extended.push(
            values
                .into_iter()
                .map(|v| v.expect("cores are nonempty"))
                .collect(),
        );
    }
    PotentialFamily::new(extended).expect("finite extension values")
}

/// The five verified inequalities, in the order they are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundChecks {
    /// (a) complement mass of the optimal plan is at most `K eps`.
    pub mass: bool,
    /// (b) glued and truncated optimal costs differ by at most
    /// `2 K ||c|| eps`.
    pub value: bool,
    /// (c) extended potentials are bounded by `C` in absolute value.
    pub potentials: bool,
    /// (d) full and truncated dual values of the extension differ by at
    /// most `2 K^2 C eps`.
    pub dual_value: bool,
    /// (e) the extension recovers the full optimum up to
    /// `(2 K ||c|| + 1 + 2 K^2 C) eps`.
    pub recovery: bool,
}

impl BoundChecks {
    pub fn all(&self) -> bool {
        self.mass && self.value && self.potentials && self.dual_value && self.recovery
    }
}

#[derive(Debug, Clone)]
pub struct TruncationReport<S: Scalar> {
    pub eps: S,
    pub core_sizes: Vec<usize>,
    /// Mass of the full optimal plan outside the core grid.
    pub complement_mass: S,
    /// Optimal value of the full instance.
    pub i_full: S,
    /// Optimal value of the truncated instance.
    pub i_trunc: S,
    /// Full-space cost of the glued plan.
    pub i_glued: S,
    /// Dual value of the extended family against the full marginals.
    pub j_full: S,
    /// Dual value of the extended family against the truncated marginals.
    pub j_trunc: S,
    /// The potential bound `C = (2K - 1) ||c|| + (K - 1)`.
    pub c_bound: S,
    pub checks: BoundChecks,
}

/// Shares one full solve across an eps ladder.
pub struct TruncationLab<S: Scalar> {
    measures: Vec<DiscreteMeasure<S>>,
    cost: CostTensor<S>,
    full: PrimalSolution<S>,
    options: SolveOptions,
}

impl<S: Scalar> TruncationLab<S> {
    pub fn new(
        measures: Vec<DiscreteMeasure<S>>,
        cost: CostTensor<S>,
        options: SolveOptions,
    ) -> Result<Self, MotError> {
        let full = solve_instance(&measures, &cost, &options)?;
        Ok(TruncationLab {
            measures,
            cost,
            full,
            options,
        })
    }

    pub fn full_solution(&self) -> &PrimalSolution<S> {
        &self.full
    }

    pub fn run(&self, eps: &S) -> Result<TruncationReport<S>, MotError> {
        let arity = self.cost.shape().arity();
        let k_int = arity as i64;
        let sup = self.cost.sup_norm().clone();
        let tol = S::default_tol(&sup);

        let core = select_core_sets(&self.measures, eps)?;
        let (pi0, mu0) = restrict_renormalize(&self.full.coupling, &core, &self.measures)?;
        let complement_mass =
            S::one() - self.full.coupling.mass_on(core.keep());

        let trunc_cost = self.cost.restrict(core.keep())?;
        let trunc = solve_instance(&mu0, &trunc_cost, &self.options)?;

        // Anchor the truncated duals at the lexicographically first tuple
        // of the restricted plan's support where their sum is largest;
        // strong duality puts that sum at least at -||c||.
        let mut anchor: Option<(Vec<usize>, S)> = None;
        for (index, mass) in trunc_cost.shape().indices().zip(pi0.entries()) {
            if *mass > S::zero() {
                let sum = trunc.duals.sum_at(&index);
                match &anchor {
                    Some((_, best)) if sum <= *best => {}
                    _ => anchor = Some((index, sum)),
                }
            }
        }
        let (anchor, _) = anchor.expect("restricted plan carries mass");
        let normalized = crate::conjugacy::normalize_zero_sum(&trunc.duals, &anchor);
        let improved = improve_sweep(&normalized, &trunc_cost, &mu0)?.family;
        let extended = extend_conjugate_over_core(&improved, &core, &self.cost);

        let glued = glue(&trunc.coupling, &self.full.coupling, &core)?;
        let i_glued = eval_primal_cost(&glued, &self.cost)?;
        let j_full = eval_dual_value(&extended, &self.measures)?;
        let j_trunc = eval_dual_value(&improved, &mu0)?;

        let c_bound = S::from_int(2 * k_int - 1) * &sup + &S::from_int(k_int - 1);
        let k_eps = S::from_int(k_int) * eps;
        let value_budget = S::from_int(2 * k_int) * &sup * eps;
        let dual_budget = S::from_int(2 * k_int * k_int) * &c_bound * eps;
        let recovery_budget = (S::from_int(2 * k_int) * &sup
            + &S::one()
            + &(S::from_int(2 * k_int * k_int) * &c_bound))
            * eps;

        let checks = BoundChecks {
            mass: complement_mass <= k_eps.clone() + &tol,
            value: (i_glued.clone() - &trunc.value).abs() <= value_budget + &tol,
            potentials: extended
                .vectors()
                .iter()
                .all(|f| f.iter().all(|v| v.abs() <= c_bound.clone() + &tol)),
            dual_value: (j_full.clone() - &j_trunc).abs() <= dual_budget + &tol,
            recovery: j_full
                >= self.full.value.clone() - &recovery_budget - &tol,
        };

        Ok(TruncationReport {
            eps: eps.clone(),
            core_sizes: core.sizes(),
            complement_mass,
            i_full: self.full.value.clone(),
            i_trunc: trunc.value,
            i_glued,
            j_full,
            j_trunc,
            c_bound,
            checks,
        })
    }

    pub fn ladder(&self, rungs: &[S]) -> Result<Vec<TruncationReport<S>>, MotError> {
        rungs.iter().map(|eps| self.run(eps)).collect()
    }
}

/// One-shot experiment: solve, truncate at `eps`, and verify every bound.
pub fn run_truncation_experiment<S: Scalar>(
    measures: &[DiscreteMeasure<S>],
    cost: &CostTensor<S>,
    eps: &S,
    options: &SolveOptions,
) -> Result<TruncationReport<S>, MotError> {
    TruncationLab::new(measures.to_vec(), cost.clone(), options.clone())?.run(eps)
}
