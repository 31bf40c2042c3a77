//! The transport linear program and its exact solver.
//!
//! Minimizing `<c, pi>` over plans with fixed marginals is a standard-form LP
//! whose constraint matrix stacks one 0/1 incidence row per atom per marginal:
//! row `(k, i)` sums the entries of `pi` whose k-th index equals `i`. Within
//! each marginal block the rows add up to the all-ones row, so one row per
//! block beyond the first is redundant; the matrix has rank
//! `sum_k (n_k - 1) + 1`. The solver works on the kept rows with a revised
//! two-phase simplex, Bland's rule, and a dense basis inverse. Columns are
//! never materialized: each variable touches exactly one row per marginal, so
//! a reduced cost needs K lookups.
//!
//! In rational mode every comparison is exact and termination follows from
//! Bland's rule; in float mode the same code runs with small tolerances.

use crate::measure::DiscreteMeasure;
use crate::potential::PotentialFamily;
use crate::scalar::Scalar;
use crate::tensor::{CostTensor, Coupling, Shape};
use crate::MotError;

/// Default ceiling on `n_1 * ... * n_K` enforced by [`build_lp`].
pub const DEFAULT_ENTRY_GUARD: usize = 1_000_000;

/// Default ceiling on the variable count in [`enumerate_vertices`].
pub const DEFAULT_VERTEX_GUARD: usize = 16;

/// The transport LP with every incidence row retained. Redundant rows (one
/// per marginal beyond the first, the last atom's row) are flagged rather
/// than dropped, so oracles can inspect the full matrix; the solver skips
/// them and reports their dual multipliers as zero.
#[derive(Debug, Clone)]
pub struct MotLinearProgram<S: Scalar> {
    shape: Shape,
    objective: Vec<S>,
    rhs: Vec<S>,
    redundant: Vec<bool>,
}

impl<S: Scalar> MotLinearProgram<S> {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Flattened cost vector, one entry per plan entry.
    pub fn objective(&self) -> &[S] {
        &self.objective
    }

    /// Concatenated marginal weights, one entry per row.
    pub fn rhs(&self) -> &[S] {
        &self.rhs
    }

    pub fn redundant(&self) -> &[bool] {
        &self.redundant
    }

    pub fn variable_count(&self) -> usize {
        self.objective.len()
    }

    pub fn row_count(&self) -> usize {
        self.rhs.len()
    }

    /// Row `(marginal, atom)` in full numbering.
    pub fn row_id(&self, marginal: usize, atom: usize) -> usize {
        self.shape.dims()[..marginal].iter().sum::<usize>() + atom
    }

    /// Inverse of [`MotLinearProgram::row_id`].
    pub fn row_coords(&self, row: usize) -> (usize, usize) {
        let mut rest = row;
        for (k, &n) in self.shape.dims().iter().enumerate() {
            if rest < n {
                return (k, rest);
            }
            rest -= n;
        }
        panic!("row {row} out of range");
    }

    /// Materializes one incidence row as a 0/1 vector, for oracles.
    pub fn incidence_row(&self, row: usize) -> Vec<u8> {
        let (k, atom) = self.row_coords(row);
        self.shape
            .indices()
            .map(|index| u8::from(index[k] == atom))
            .collect()
    }

    fn kept_rows(&self) -> Vec<usize> {
        (0..self.row_count()).filter(|&r| !self.redundant[r]).collect()
    }
}

/// Assembles the LP. Fails when measures and cost disagree on the shape or
/// when the instance exceeds `guard_entries` tensor entries.
pub fn build_lp<S: Scalar>(
    measures: &[DiscreteMeasure<S>],
    cost: &CostTensor<S>,
    guard_entries: usize,
) -> Result<MotLinearProgram<S>, MotError> {
    let shape = Shape::of_measures(measures)?;
    if &shape != cost.shape() {
        return Err(MotError::ShapeMismatch {
            expected: cost.shape().dims().to_vec(),
            got: shape.dims().to_vec(),
        });
    }
    if shape.entry_count() > guard_entries {
        return Err(MotError::SizeGuard {
            entries: shape.entry_count(),
            guard: guard_entries,
        });
    }
    let mut rhs = Vec::with_capacity(shape.dims().iter().sum());
    let mut redundant = Vec::with_capacity(rhs.capacity());
    for (k, m) in measures.iter().enumerate() {
        for (i, w) in m.weights().iter().enumerate() {
            rhs.push(w.clone());
            redundant.push(k > 0 && i == m.len() - 1);
        }
    }
    Ok(MotLinearProgram {
        shape,
        objective: cost.entries().to_vec(),
        rhs,
        redundant,
    })
}

/// Entering-column selection.
///
/// `Bland` (smallest eligible index, the default) terminates on every input
/// in exact arithmetic. `DantzigBland` prices by most-negative reduced cost
/// and falls back to Bland after a stretch of degenerate pivots, which keeps
/// the termination argument while converging in far fewer pivots on large
/// instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    Bland,
    DantzigBland,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub pivot_rule: PivotRule,
    pub max_pivots: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            pivot_rule: PivotRule::Bland,
            max_pivots: 50_000,
        }
    }
}

/// An optimal basic solution with its dual multipliers.
#[derive(Debug, Clone)]
pub struct PrimalSolution<S: Scalar> {
    pub coupling: Coupling<S>,
    /// Optimal value `<c, pi>`.
    pub value: S,
    /// Dual potentials grouped by marginal; multipliers of the redundant
    /// rows are zero. Admissible, with `J(duals) = value` (strong duality).
    pub duals: PotentialFamily<S>,
    /// Multi-indices of the basic variables, sorted; degenerate basic
    /// variables may carry zero mass.
    pub basis: Vec<Vec<usize>>,
    pub pivots: usize,
}

/// Solves the LP to optimality. See [`PivotRule`] for determinism: with a
/// fixed rule the pivot sequence, the returned vertex, and the duals are
/// reproducible across runs and platforms.
pub fn solve_primal<S: Scalar>(
    lp: &MotLinearProgram<S>,
    options: &SolveOptions,
) -> Result<PrimalSolution<S>, MotError> {
    Simplex::new(lp, options).solve()
}

/// Convenience: [`build_lp`] followed by [`solve_primal`].
pub fn solve_instance<S: Scalar>(
    measures: &[DiscreteMeasure<S>],
    cost: &CostTensor<S>,
    options: &SolveOptions,
) -> Result<PrimalSolution<S>, MotError> {
    let lp = build_lp(measures, cost, DEFAULT_ENTRY_GUARD)?;
    solve_primal(&lp, options)
}

const NO_ROW: u32 = u32::MAX;

struct Simplex<'a, S: Scalar> {
    lp: &'a MotLinearProgram<S>,
    n: usize,
    m: usize,
    arity: usize,
    /// Kept-row position of each (variable, marginal) incidence, `NO_ROW`
    /// for incidences that fall on a redundant row.
    col_support: Vec<u32>,
    /// Basic column per row position; values `>= n` are artificials.
    basis: Vec<usize>,
    /// Dense basis inverse, row-major `m x m`.
    binv: Vec<S>,
    x_b: Vec<S>,
    in_basis: Vec<bool>,
    tol_price: S,
    tol_pivot: S,
    rule: PivotRule,
    max_pivots: usize,
    pivots: usize,
}

impl<'a, S: Scalar> Simplex<'a, S> {
    fn new(lp: &'a MotLinearProgram<S>, options: &SolveOptions) -> Self {
        let dims = lp.shape().dims().to_vec();
        let arity = dims.len();
        let n = lp.variable_count();
        // Kept-row positions: block 0 whole, later blocks minus their last atom.
        let mut kept_pos = vec![NO_ROW; lp.row_count()];
        let mut next = 0u32;
        for (r, &flag) in lp.redundant.iter().enumerate() {
            if !flag {
                kept_pos[r] = next;
                next += 1;
            }
        }
        let m = next as usize;
        let mut col_support = vec![NO_ROW; n * arity];
        for (j, index) in lp.shape().indices().enumerate() {
            for (k, &i) in index.iter().enumerate() {
                col_support[j * arity + k] = kept_pos[lp.row_id(k, i)];
            }
        }
        let rhs: Vec<S> = lp
            .kept_rows()
            .iter()
            .map(|&r| lp.rhs[r].clone())
            .collect();
        let scale = crate::scalar::sup_norm(&lp.objective);
        let tol_price = S::default_tol(&scale);
        let tol_pivot = if S::EXACT {
            S::zero()
        } else {
            S::ratio(1, 100_000_000_000)
        };
        // Identity basis of artificials puts x_b = rhs >= 0.
        let basis: Vec<usize> = (0..m).map(|i| n + i).collect();
        let mut binv = vec![S::zero(); m * m];
        for i in 0..m {
            binv[i * m + i] = S::one();
        }
        Simplex {
            lp,
            n,
            m,
            arity,
            col_support,
            basis,
            binv,
            x_b: rhs,
            in_basis: vec![false; n],
            tol_price,
            tol_pivot,
            rule: options.pivot_rule,
            max_pivots: options.max_pivots,
            pivots: 0,
        }
    }

    fn support(&self, j: usize) -> &[u32] {
        &self.col_support[j * self.arity..(j + 1) * self.arity]
    }

    /// Multipliers `y = c_B B^{-1}` for the given basic costs.
    fn multipliers(&self, basic_cost: &dyn Fn(usize) -> S) -> Vec<S> {
        let mut y = vec![S::zero(); self.m];
        for i in 0..self.m {
            let ci = basic_cost(self.basis[i]);
            if ci.is_zero() {
                continue;
            }
            for s in 0..self.m {
                let term = ci.clone() * &self.binv[i * self.m + s];
                y[s] = y[s].clone() + &term;
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[S], cost_j: S) -> S {
        let mut r = cost_j;
        for &s in self.support(j) {
            if s != NO_ROW {
                r = r - &y[s as usize];
            }
        }
        r
    }

    /// Entering column under the active rule, or `None` at optimality.
    fn price(&self, y: &[S], phase_cost: &dyn Fn(usize) -> S, bland: bool) -> Option<usize> {
        let threshold = -self.tol_price.clone();
        let mut best: Option<(S, usize)> = None;
        for j in 0..self.n {
            if self.in_basis[j] {
                continue;
            }
            let r = self.reduced_cost(j, y, phase_cost(j));
            if r < threshold {
                if bland {
                    return Some(j);
                }
                match &best {
                    Some((b, _)) if &r >= b => {}
                    _ => best = Some((r, j)),
                }
            }
        }
        best.map(|(_, j)| j)
    }

    /// `d = B^{-1} A_j` for an original column.
    fn direction(&self, j: usize) -> Vec<S> {
        let mut d = vec![S::zero(); self.m];
        for &s in self.support(j) {
            if s == NO_ROW {
                continue;
            }
            for i in 0..self.m {
                d[i] = d[i].clone() + &self.binv[i * self.m + s as usize];
            }
        }
        d
    }

    /// Leaving row: minimum ratio, ties broken by smallest basic column id
    /// (Bland). `None` means unbounded.
    fn ratio_test(&self, d: &[S]) -> Option<usize> {
        let mut best: Option<(S, usize)> = None;
        for i in 0..self.m {
            if d[i] <= self.tol_pivot {
                continue;
            }
            let ratio = self.x_b[i].clone() / &d[i];
            match &best {
                None => best = Some((ratio, i)),
                Some((r, leader)) => {
                    if ratio < *r {
                        best = Some((ratio, i));
                    } else if ratio == *r && self.basis[i] < self.basis[*leader] {
                        best = Some((ratio, i));
                    }
                }
            }
        }
        best.map(|(_, i)| i)
    }

    fn pivot(&mut self, j: usize, row: usize, d: &[S]) {
        let leaving = self.basis[row];
        if leaving < self.n {
            self.in_basis[leaving] = false;
        }
        self.basis[row] = j;
        self.in_basis[j] = true;
        // Row-reduce so that column j becomes the unit vector e_row.
        let pivot = d[row].clone();
        for s in 0..self.m {
            self.binv[row * self.m + s] = self.binv[row * self.m + s].clone() / &pivot;
        }
        let theta = self.x_b[row].clone() / &pivot;
        self.x_b[row] = theta.clone();
        for i in 0..self.m {
            if i == row || d[i].is_zero() {
                continue;
            }
            for s in 0..self.m {
                let term = d[i].clone() * &self.binv[row * self.m + s];
                self.binv[i * self.m + s] = self.binv[i * self.m + s].clone() - &term;
            }
            let term = d[i].clone() * &theta;
            self.x_b[i] = self.x_b[i].clone() - &term;
            if !S::EXACT && self.x_b[i] < S::zero() && self.x_b[i].abs() <= self.tol_pivot {
                self.x_b[i] = S::zero();
            }
        }
        self.pivots += 1;
    }

    /// Runs one phase to optimality under the hybrid rule contract.
    fn run_phase(&mut self, phase_cost: &dyn Fn(usize) -> S) -> Result<(), MotError> {
        let mut bland = self.rule == PivotRule::Bland;
        let mut degenerate_run = 0usize;
        let stall_budget = self.m + 16;
        loop {
            if self.pivots > self.max_pivots {
                return Err(MotError::PivotLimit {
                    pivots: self.max_pivots,
                });
            }
            let y = self.multipliers(phase_cost);
            let Some(entering) = self.price(&y, phase_cost, bland) else {
                return Ok(());
            };
            let d = self.direction(entering);
            let Some(row) = self.ratio_test(&d) else {
                return Err(MotError::Unbounded);
            };
            let degenerate = self.x_b[row] <= self.tol_pivot;
            self.pivot(entering, row, &d);
            if self.rule == PivotRule::DantzigBland {
                if degenerate {
                    degenerate_run += 1;
                    if degenerate_run > stall_budget {
                        bland = true;
                    }
                } else {
                    degenerate_run = 0;
                    bland = false;
                }
            }
        }
    }

    /// Pivots any artificial still basic after phase 1 out of the basis at
    /// zero level. The kept rows have full rank, so a replacement column
    /// always exists.
    fn expel_artificials(&mut self) -> Result<(), MotError> {
        for row in 0..self.m {
            if self.basis[row] < self.n {
                continue;
            }
            let mut replacement = None;
            for j in 0..self.n {
                if self.in_basis[j] {
                    continue;
                }
                let mut entry = S::zero();
                for &s in self.support(j) {
                    if s != NO_ROW {
                        entry = entry + &self.binv[row * self.m + s as usize];
                    }
                }
                if entry.abs() > self.tol_pivot {
                    replacement = Some(j);
                    break;
                }
            }
            let Some(j) = replacement else {
                return Err(MotError::Infeasible {
                    residual: "dependent row".into(),
                });
            };
            let d = self.direction(j);
            self.pivot(j, row, &d);
        }
        Ok(())
    }

    fn solve(mut self) -> Result<PrimalSolution<S>, MotError> {
        // Phase 1: minimize the total artificial mass from the identity basis.
        let n = self.n;
        let phase1 = move |col: usize| if col >= n { S::one() } else { S::zero() };
        self.run_phase(&phase1)?;
        let infeasibility: S = self
            .basis
            .iter()
            .zip(&self.x_b)
            .filter(|(&b, _)| b >= self.n)
            .map(|(_, x)| x.clone())
            .sum();
        let feasibility_tol = S::default_tol(&S::one());
        if infeasibility > feasibility_tol {
            return Err(MotError::Infeasible {
                residual: infeasibility.format_exact(),
            });
        }
        self.expel_artificials()?;

        // Phase 2: the real objective over a pure original basis.
        let objective = self.lp.objective.clone();
        let phase2 = move |col: usize| objective[col].clone();
        self.run_phase(&phase2)?;

        // Read the solution off the final basis.
        let mut entries = vec![S::zero(); self.n];
        for (i, &j) in self.basis.iter().enumerate() {
            debug_assert!(j < self.n, "artificial survived phase 1");
            let mut x = self.x_b[i].clone();
            if !S::EXACT && x < S::zero() && x.abs() <= S::ratio(1, 1_000_000_000) {
                x = S::zero();
            }
            entries[j] = x;
        }
        let mut value = S::zero();
        for (x, c) in entries.iter().zip(&self.lp.objective) {
            if !x.is_zero() {
                value = value + &(x.clone() * c);
            }
        }
        let y = self.multipliers(&|col| self.lp.objective[col].clone());
        let mut duals = Vec::with_capacity(self.arity);
        let mut kept_pos_iter = 0usize;
        let mut kept_pos = vec![NO_ROW; self.lp.row_count()];
        for (r, &flag) in self.lp.redundant.iter().enumerate() {
            if !flag {
                kept_pos[r] = kept_pos_iter as u32;
                kept_pos_iter += 1;
            }
        }
        for (k, &nk) in self.lp.shape().dims().iter().enumerate() {
            let mut f = Vec::with_capacity(nk);
            for i in 0..nk {
                let pos = kept_pos[self.lp.row_id(k, i)];
                f.push(if pos == NO_ROW {
                    S::zero()
                } else {
                    y[pos as usize].clone()
                });
            }
            duals.push(f);
        }
        let mut basis_indices: Vec<Vec<usize>> = self
            .basis
            .iter()
            .map(|&j| self.lp.shape().multi_index(j))
            .collect();
        basis_indices.sort();
        let coupling = Coupling::new(self.lp.shape().clone(), entries)?;
        Ok(PrimalSolution {
            coupling,
            value,
            duals: PotentialFamily::new(duals)?,
            basis: basis_indices,
            pivots: self.pivots,
        })
    }
}

/// Solves a dense square system by Gaussian elimination; `None` when the
/// matrix is singular (within tolerance in float mode).
fn gaussian_solve<S: Scalar>(matrix: &mut [S], rhs: &mut [S], n: usize, tol: &S) -> Option<Vec<S>> {
    for col in 0..n {
        let mut pivot_row = None;
        let mut best = tol.clone();
        for row in col..n {
            let a = matrix[row * n + col].abs();
            if a > best {
                best = a;
                pivot_row = Some(row);
                if S::EXACT {
                    break;
                }
            }
        }
        let pivot_row = pivot_row?;
        if pivot_row != col {
            for s in 0..n {
                matrix.swap(pivot_row * n + s, col * n + s);
            }
            rhs.swap(pivot_row, col);
        }
        let pivot = matrix[col * n + col].clone();
        for row in col + 1..n {
            let factor = matrix[row * n + col].clone() / &pivot;
            if factor.is_zero() {
                continue;
            }
            for s in col..n {
                let term = factor.clone() * &matrix[col * n + s];
                matrix[row * n + s] = matrix[row * n + s].clone() - &term;
            }
            let term = factor * &rhs[col];
            rhs[row] = rhs[row].clone() - &term;
        }
    }
    let mut x = vec![S::zero(); n];
    for col in (0..n).rev() {
        let mut acc = rhs[col].clone();
        for s in col + 1..n {
            let term = matrix[col * n + s].clone() * &x[s];
            acc = acc - &term;
        }
        x[col] = acc / &matrix[col * n + col];
    }
    Some(x)
}

/// Every vertex of the transportation polytope, deduplicated and sorted by
/// entry vector. Exhaustive over basis candidates, so it is gated on the
/// variable count; meant as a desk-scale oracle for [`solve_primal`].
pub fn enumerate_vertices<S: Scalar>(
    lp: &MotLinearProgram<S>,
    guard_variables: usize,
) -> Result<Vec<Coupling<S>>, MotError> {
    let n = lp.variable_count();
    if n > guard_variables {
        return Err(MotError::GuardExceeded {
            what: "vertex enumeration variables",
            got: n,
            guard: guard_variables,
        });
    }
    let kept = lp.kept_rows();
    let m = kept.len();
    let kept_rhs: Vec<S> = kept.iter().map(|&r| lp.rhs[r].clone()).collect();
    // Column incidence restricted to kept rows.
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pos, &r) in kept.iter().enumerate() {
        let (k, atom) = lp.row_coords(r);
        for (j, index) in lp.shape().indices().enumerate() {
            if index[k] == atom {
                columns[j].push(pos);
            }
        }
    }
    let tol = if S::EXACT {
        S::zero()
    } else {
        S::ratio(1, 1_000_000_000)
    };
    let mut found: Vec<Vec<S>> = Vec::new();
    let mut combo: Vec<usize> = (0..m).collect();
    if m > n {
        return Ok(Vec::new());
    }
    loop {
        let mut matrix = vec![S::zero(); m * m];
        for (slot, &j) in combo.iter().enumerate() {
            for &pos in &columns[j] {
                matrix[pos * m + slot] = S::one();
            }
        }
        let mut rhs = kept_rhs.clone();
        if let Some(x) = gaussian_solve(&mut matrix, &mut rhs, m, &tol) {
            if x.iter().all(|v| *v >= -tol.clone()) {
                let mut entries = vec![S::zero(); n];
                for (slot, &j) in combo.iter().enumerate() {
                    let mut v = x[slot].clone();
                    if !S::EXACT && v < S::zero() {
                        v = S::zero();
                    }
                    entries[j] = v;
                }
                found.push(entries);
            }
        }
        // Next m-combination of {0, ..., n-1} in lexicographic order.
        let mut slot = m;
        loop {
            if slot == 0 {
                let mut vertices = Vec::with_capacity(found.len());
                found.sort_by(|a, b| a.partial_cmp(b).expect("finite entries"));
                found.dedup();
                for entries in found {
                    vertices.push(Coupling::new(lp.shape().clone(), entries)?);
                }
                return Ok(vertices);
            }
            slot -= 1;
            if combo[slot] != slot + n - m {
                combo[slot] += 1;
                for next in slot + 1..m {
                    combo[next] = combo[next - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{admissibility_slack, eval_dual_value, is_admissible};
    use crate::scalar::Rational;
    use crate::tensor::{eval_primal_cost, separable_cost};
    use num::{One, Zero};

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn measures_222() -> Vec<DiscreteMeasure<Rational>> {
        vec![
            DiscreteMeasure::from_weights(vec![r(1, 4), r(3, 4)]).unwrap(),
            DiscreteMeasure::from_weights(vec![r(1, 2), r(1, 2)]).unwrap(),
            DiscreteMeasure::from_weights(vec![r(2, 5), r(3, 5)]).unwrap(),
        ]
    }

    fn cost_222() -> CostTensor<Rational> {
        // Entries picked to give a unique, non-obvious optimum.
        let entries = vec![
            r(3, 1),
            r(-1, 2),
            r(2, 1),
            r(5, 2),
            r(-2, 1),
            r(4, 1),
            r(1, 3),
            r(0, 1),
        ];
        CostTensor::new(Shape::new(vec![2, 2, 2]).unwrap(), entries).unwrap()
    }

    /// Independent rank computation by rational row reduction.
    fn rank_oracle(rows: &[Vec<u8>]) -> usize {
        let mut mat: Vec<Vec<Rational>> = rows
            .iter()
            .map(|row| row.iter().map(|&v| Rational::from_int(v as i64)).collect())
            .collect();
        let cols = mat.first().map_or(0, Vec::len);
        let mut rank = 0;
        for col in 0..cols {
            let Some(pivot) = (rank..mat.len()).find(|&i| !mat[i][col].is_zero()) else {
                continue;
            };
            mat.swap(rank, pivot);
            let lead = mat[rank][col].clone();
            for i in 0..mat.len() {
                if i != rank && !mat[i][col].is_zero() {
                    let factor = mat[i][col].clone() / &lead;
                    for s in col..cols {
                        let term = factor.clone() * &mat[rank][s];
                        mat[i][s] = mat[i][s].clone() - &term;
                    }
                }
            }
            rank += 1;
            if rank == mat.len() {
                break;
            }
        }
        rank
    }

    #[test]
    fn lp_assembly_flags_one_redundant_row_per_extra_marginal() {
        let m = measures_222();
        let lp = build_lp(&m, &cost_222(), DEFAULT_ENTRY_GUARD).unwrap();
        assert_eq!(lp.variable_count(), 8);
        assert_eq!(lp.row_count(), 6);
        let flagged: Vec<usize> = (0..6).filter(|&r| lp.redundant()[r]).collect();
        assert_eq!(flagged, vec![3, 5]);
        // Rows of each block sum to the all-ones row.
        for k in 0..3 {
            let mut sums = vec![0u32; 8];
            for atom in 0..2 {
                for (j, v) in lp.incidence_row(lp.row_id(k, atom)).iter().enumerate() {
                    sums[j] += u32::from(*v);
                }
            }
            assert!(sums.iter().all(|&s| s == 1));
        }
    }

    #[test]
    fn incidence_rank_matches_row_reduction_oracle() {
        for dims in [vec![2, 2, 2], vec![1, 1, 1], vec![2, 3, 2], vec![3, 4, 5]] {
            let measures: Vec<DiscreteMeasure<Rational>> =
                dims.iter().map(|&n| DiscreteMeasure::uniform(n)).collect();
            let shape = Shape::new(dims.clone()).unwrap();
            let cost =
                CostTensor::new(shape.clone(), vec![Rational::zero(); shape.entry_count()])
                    .unwrap();
            let lp = build_lp(&measures, &cost, DEFAULT_ENTRY_GUARD).unwrap();
            let rows: Vec<Vec<u8>> = (0..lp.row_count()).map(|r| lp.incidence_row(r)).collect();
            let expected: usize = dims.iter().map(|&n| n - 1).sum::<usize>() + 1;
            assert_eq!(rank_oracle(&rows), expected, "dims {dims:?}");
            // The kept rows alone already span: their count equals the rank.
            let kept: Vec<Vec<u8>> = (0..lp.row_count())
                .filter(|&r| !lp.redundant()[r])
                .map(|r| lp.incidence_row(r))
                .collect();
            assert_eq!(kept.len(), expected);
            assert_eq!(rank_oracle(&kept), expected);
        }
    }

    #[test]
    fn guard_rejects_oversized_instances() {
        let m = measures_222();
        assert!(matches!(
            build_lp(&m, &cost_222(), 7),
            Err(MotError::SizeGuard { entries: 8, guard: 7 })
        ));
    }

    #[test]
    fn dirac_marginals_single_point() {
        let measures: Vec<DiscreteMeasure<Rational>> =
            (0..3).map(|_| DiscreteMeasure::uniform(1)).collect();
        let cost = CostTensor::new(Shape::new(vec![1, 1, 1]).unwrap(), vec![r(7, 3)]).unwrap();
        let lp = build_lp(&measures, &cost, DEFAULT_ENTRY_GUARD).unwrap();
        let sol = solve_primal(&lp, &SolveOptions::default()).unwrap();
        assert_eq!(sol.value, r(7, 3));
        assert_eq!(sol.coupling.at(&[0, 0, 0]), &Rational::one());
        assert_eq!(sol.duals.vectors()[0], vec![r(7, 3)]);
        assert_eq!(sol.duals.vectors()[1], vec![Rational::zero()]);
        assert_eq!(sol.duals.vectors()[2], vec![Rational::zero()]);
    }

    #[test]
    fn separable_cost_value_is_the_sum_of_means() {
        let m = measures_222();
        let parts = vec![
            vec![r(1, 2), r(3, 2)],
            vec![r(-1, 1), r(2, 1)],
            vec![r(0, 1), r(5, 3)],
        ];
        let cost = separable_cost(&parts).unwrap();
        // Every feasible plan has the same cost, the sum of the part means.
        let mut expected = Rational::zero();
        for (part, measure) in parts.iter().zip(&m) {
            for (v, w) in part.iter().zip(measure.weights()) {
                expected = expected + v.clone() * w;
            }
        }
        let sol = solve_instance(&m, &cost, &SolveOptions::default()).unwrap();
        assert_eq!(sol.value, expected);
        // The parts themselves form an admissible family attaining the value.
        let family = PotentialFamily::new(parts).unwrap();
        assert!(is_admissible(&family, &cost, &Rational::zero()));
        assert_eq!(eval_dual_value(&family, &m).unwrap(), expected);
    }

    #[test]
    fn solver_agrees_with_vertex_enumeration_and_certifies_itself() {
        let m = measures_222();
        let cost = cost_222();
        let lp = build_lp(&m, &cost, DEFAULT_ENTRY_GUARD).unwrap();
        let sol = solve_primal(&lp, &SolveOptions::default()).unwrap();

        sol.coupling.check_marginals(&m, &Rational::zero()).unwrap();
        assert_eq!(eval_primal_cost(&sol.coupling, &cost).unwrap(), sol.value);

        // Strong duality, exactly.
        assert_eq!(eval_dual_value(&sol.duals, &m).unwrap(), sol.value);
        let (min_slack, _) = admissibility_slack(&sol.duals, &cost);
        assert!(min_slack >= Rational::zero());

        // Complementary slackness on the support.
        for index in cost.shape().indices() {
            if !sol.coupling.at(&index).is_zero() {
                assert_eq!(sol.duals.sum_at(&index), cost.at(&index).clone());
            }
        }

        // Vertex oracle: the solver's value is the minimum over all vertices.
        let vertices = enumerate_vertices(&lp, DEFAULT_VERTEX_GUARD).unwrap();
        assert!(!vertices.is_empty());
        let best = vertices
            .iter()
            .map(|v| eval_primal_cost(v, &cost).unwrap())
            .min()
            .unwrap();
        assert_eq!(sol.value, best);
        for v in &vertices {
            v.check_marginals(&m, &Rational::zero()).unwrap();
        }
        // Basis size never exceeds the matrix rank.
        assert_eq!(sol.basis.len(), 4);
    }

    #[test]
    fn zero_weight_atoms_yield_degenerate_but_solvable_programs() {
        let measures = vec![
            DiscreteMeasure::new(
                vec![
                    crate::measure::Atom::new("a"),
                    crate::measure::Atom::new("b"),
                ],
                vec![Rational::one(), Rational::zero()],
            )
            .unwrap(),
            DiscreteMeasure::from_weights(vec![r(1, 2), r(1, 2)]).unwrap(),
            DiscreteMeasure::from_weights(vec![r(1, 2), r(1, 2)]).unwrap(),
        ];
        let sol = solve_instance(&measures, &cost_222(), &SolveOptions::default()).unwrap();
        assert_eq!(sol.coupling.marginal(0), vec![Rational::one(), Rational::zero()]);
        sol.coupling
            .check_marginals(&measures, &Rational::zero())
            .unwrap();
    }

    #[test]
    fn both_pivot_rules_reach_the_same_value() {
        let m = measures_222();
        let cost = cost_222();
        let bland = solve_instance(&m, &cost, &SolveOptions::default()).unwrap();
        let hybrid = solve_instance(
            &m,
            &cost,
            &SolveOptions {
                pivot_rule: PivotRule::DantzigBland,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert_eq!(bland.value, hybrid.value);
    }

    #[test]
    fn float_solve_tracks_the_exact_value() {
        let m = measures_222();
        let cost = cost_222();
        let exact = solve_instance(&m, &cost, &SolveOptions::default()).unwrap();
        let mf: Vec<DiscreteMeasure<f64>> = m
            .iter()
            .map(|mm| {
                DiscreteMeasure::from_weights(mm.weights().iter().map(|w| w.to_f64()).collect())
                    .unwrap()
            })
            .collect();
        let cf = CostTensor::new(
            cost.shape().clone(),
            cost.entries().iter().map(|c| c.to_f64()).collect(),
        )
        .unwrap();
        let float = solve_instance(&mf, &cf, &SolveOptions::default()).unwrap();
        assert!((float.value - exact.value.to_f64()).abs() < 1e-9);
    }

    #[test]
    fn shifted_cost_shifts_value_and_keeps_the_basis() {
        let m = measures_222();
        let cost = cost_222();
        let shift = cost.sup_norm().clone();
        let base = solve_instance(&m, &cost, &SolveOptions::default()).unwrap();
        let moved = solve_instance(&m, &cost.shift(&shift), &SolveOptions::default()).unwrap();
        assert_eq!(moved.value, base.value.clone() + &shift);
        assert_eq!(moved.basis, base.basis);
        assert_eq!(moved.coupling, base.coupling);
        // Remark-style dual shift: first coordinate absorbs the constant.
        let mut lifted = base.duals.vectors().to_vec();
        for v in &mut lifted[0] {
            *v = v.clone() + &shift;
        }
        assert_eq!(moved.duals.vectors(), &lifted[..]);
    }

    #[test]
    fn vertex_enumeration_respects_its_guard() {
        let m = measures_222();
        let lp = build_lp(&m, &cost_222(), DEFAULT_ENTRY_GUARD).unwrap();
        assert!(matches!(
            enumerate_vertices(&lp, 7),
            Err(MotError::GuardExceeded { .. })
        ));
    }
}
