//! Dense tensors over products of finite spaces: costs and couplings.
//!
//! Entries are stored flat in row-major order with the last index fastest,
//! so `(i1, ..., iK)` lives at `((i1 * n2 + i2) * n3 + ...) + iK`.

use crate::measure::{measure_unchecked, DiscreteMeasure};
use crate::scalar::{sup_norm, Scalar};
use crate::MotError;

/// Dimensions `(n1, ..., nK)` of a product of finite spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self, MotError> {
        if dims.iter().any(|&n| n == 0) {
            return Err(MotError::Schema {
                path: "shape".into(),
                message: "every factor needs at least one atom".into(),
            });
        }
        let mut count: usize = 1;
        for &n in &dims {
            count = count.checked_mul(n).ok_or(MotError::SizeGuard {
                entries: usize::MAX,
                guard: usize::MAX,
            })?;
        }
        Ok(Shape { dims })
    }

    pub fn of_measures<S: Scalar>(measures: &[DiscreteMeasure<S>]) -> Result<Self, MotError> {
        Shape::new(measures.iter().map(|m| m.len()).collect())
    }

    /// Number of marginals K.
    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total number of entries, the product of the dimensions.
    pub fn entry_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        let mut flat = 0;
        for (i, n) in index.iter().zip(&self.dims) {
            debug_assert!(i < n);
            flat = flat * n + i;
        }
        flat
    }

    /// Multi-index of a flat offset.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            index[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        index
    }

    /// All multi-indices in lexicographic order.
    pub fn indices(&self) -> IndexIter<'_> {
        IndexIter {
            shape: self,
            next: Some(vec![0; self.dims.len()]),
        }
    }
}

/// Lexicographic iterator over the multi-indices of a [`Shape`].
pub struct IndexIter<'a> {
    shape: &'a Shape,
    next: Option<Vec<usize>>,
}

impl Iterator for IndexIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for k in (0..succ.len()).rev() {
            succ[k] += 1;
            if succ[k] < self.shape.dims[k] {
                self.next = Some(succ);
                break;
            }
            succ[k] = 0;
        }
        Some(current)
    }
}

/// A cost function on a product of at least three finite spaces, stored dense
/// with its sup norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTensor<S: Scalar> {
    shape: Shape,
    entries: Vec<S>,
    sup_norm: S,
}

/// Minimum number of marginals for the multimarginal problem.
pub const MIN_ARITY: usize = 3;

impl<S: Scalar> CostTensor<S> {
    pub fn new(shape: Shape, entries: Vec<S>) -> Result<Self, MotError> {
        if shape.arity() < MIN_ARITY {
            return Err(MotError::ArityTooSmall {
                got: shape.arity(),
                min: MIN_ARITY,
            });
        }
        Self::new_any_arity(shape, entries)
    }

    /// Skips the arity check; lets tests compare against two-marginal
    /// solvers. Everything else is validated as in [`CostTensor::new`].
    pub(crate) fn new_any_arity(shape: Shape, entries: Vec<S>) -> Result<Self, MotError> {
        if entries.len() != shape.entry_count() {
            return Err(MotError::LengthMismatch {
                what: "cost entries",
                expected: shape.entry_count(),
                got: entries.len(),
            });
        }
        if !S::EXACT && entries.iter().any(|e| !e.to_f64().is_finite()) {
            return Err(MotError::NonFinite { what: "cost entries" });
        }
        let sup_norm = sup_norm(&entries);
        Ok(CostTensor {
            shape,
            entries,
            sup_norm,
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn sup_norm(&self) -> &S {
        &self.sup_norm
    }

    pub fn at(&self, index: &[usize]) -> &S {
        &self.entries[self.shape.offset(index)]
    }

    /// The cost with `m` added to every entry; the sup norm is recomputed
    /// from scratch rather than adjusted.
    pub fn shift(&self, m: &S) -> Self {
        let entries: Vec<S> = self.entries.iter().map(|e| e.clone() + m).collect();
        let sup_norm = sup_norm(&entries);
        CostTensor {
            shape: self.shape.clone(),
            entries,
            sup_norm,
        }
    }

    /// Restriction to a sub-grid: `keep[k]` lists the atom indices retained
    /// in coordinate `k`, in increasing order.
    pub fn restrict(&self, keep: &[Vec<usize>]) -> Result<Self, MotError> {
        if keep.len() != self.shape.arity() {
            return Err(MotError::LengthMismatch {
                what: "restriction index lists",
                expected: self.shape.arity(),
                got: keep.len(),
            });
        }
        let sub_shape = Shape::new(keep.iter().map(|k| k.len()).collect())?;
        let mut entries = Vec::with_capacity(sub_shape.entry_count());
        let mut full_index = vec![0; keep.len()];
        for sub_index in sub_shape.indices() {
            for (k, &pos) in sub_index.iter().enumerate() {
                full_index[k] = keep[k][pos];
            }
            entries.push(self.at(&full_index).clone());
        }
        Self::new_any_arity(sub_shape, entries)
    }
}

/// Cost of the form `c(x) = sum_k parts[k][x_k]`.
pub fn separable_cost<S: Scalar>(parts: &[Vec<S>]) -> Result<CostTensor<S>, MotError> {
    let shape = Shape::new(parts.iter().map(|p| p.len()).collect())?;
    let mut entries = Vec::with_capacity(shape.entry_count());
    for index in shape.indices() {
        entries.push(
            index
                .iter()
                .zip(parts)
                .map(|(&i, p)| p[i].clone())
                .sum(),
        );
    }
    CostTensor::new(shape, entries)
}

/// Cost of the form `c(x) = sum of matrices[(i,j)][x_i][x_j]` over the listed
/// unordered pairs `i < j`. Pairs not listed contribute nothing.
pub fn pairwise_sum_cost<S: Scalar>(
    shape: Shape,
    pairs: &[(usize, usize, Vec<Vec<S>>)],
) -> Result<CostTensor<S>, MotError> {
    let k = shape.arity();
    let mut seen = vec![vec![false; k]; k];
    for (i, j, matrix) in pairs {
        if *i >= *j || *j >= k {
            return Err(MotError::Schema {
                path: format!("cost.matrices[{i},{j}]"),
                message: format!("pair must satisfy i < j < {k}"),
            });
        }
        if seen[*i][*j] {
            return Err(MotError::Schema {
                path: format!("cost.matrices[{i},{j}]"),
                message: "duplicate pair".into(),
            });
        }
        seen[*i][*j] = true;
        if matrix.len() != shape.dims()[*i]
            || matrix.iter().any(|row| row.len() != shape.dims()[*j])
        {
            return Err(MotError::Schema {
                path: format!("cost.matrices[{i},{j}]"),
                message: format!(
                    "expected a {} x {} matrix",
                    shape.dims()[*i],
                    shape.dims()[*j]
                ),
            });
        }
    }
    let mut entries = vec![S::zero(); shape.entry_count()];
    for (flat, index) in shape.indices().enumerate() {
        let mut total = S::zero();
        for (i, j, matrix) in pairs {
            total = total + &matrix[index[*i]][index[*j]];
        }
        entries[flat] = total;
    }
    CostTensor::new(shape, entries)
}

/// A transport plan: a nonnegative tensor of total mass one. Whether its
/// marginals match given measures is checked separately with
/// [`Coupling::check_marginals`], since the plan does not carry the measures.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling<S: Scalar> {
    shape: Shape,
    entries: Vec<S>,
}

/// Mass and per-atom marginal slack allowed for float couplings.
pub const COUPLING_TOL: f64 = 1e-10;

impl<S: Scalar> Coupling<S> {
    pub fn new(shape: Shape, entries: Vec<S>) -> Result<Self, MotError> {
        if entries.len() != shape.entry_count() {
            return Err(MotError::LengthMismatch {
                what: "coupling entries",
                expected: shape.entry_count(),
                got: entries.len(),
            });
        }
        if let Some(pos) = entries.iter().position(|e| e < &S::zero()) {
            return Err(MotError::Schema {
                path: format!("coupling[{pos}]"),
                message: "negative mass".into(),
            });
        }
        let mass: S = entries.iter().cloned().sum();
        let deviation = (mass.clone() - &S::one()).abs();
        let allowed = if S::EXACT {
            S::zero()
        } else {
            S::ratio(1, 10_000_000_000)
        };
        if deviation > allowed {
            return Err(MotError::Schema {
                path: "coupling".into(),
                message: format!("total mass {} is not 1", mass.format_exact()),
            });
        }
        Ok(Coupling { shape, entries })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn at(&self, index: &[usize]) -> &S {
        &self.entries[self.shape.offset(index)]
    }

    /// Push-forward onto coordinate `k`.
    pub fn marginal(&self, k: usize) -> Vec<S> {
        let mut sums = vec![S::zero(); self.shape.dims()[k]];
        // Stride walk: index k advances every `inner` entries.
        let inner: usize = self.shape.dims()[k + 1..].iter().product();
        let nk = self.shape.dims()[k];
        for (flat, e) in self.entries.iter().enumerate() {
            let i = (flat / inner) % nk;
            sums[i] = sums[i].clone() + e;
        }
        sums
    }

    pub fn marginals(&self) -> Vec<Vec<S>> {
        (0..self.shape.arity()).map(|k| self.marginal(k)).collect()
    }

    /// Marginals as measures, labeled from the given targets.
    pub fn marginal_measures(&self, like: &[DiscreteMeasure<S>]) -> Vec<DiscreteMeasure<S>> {
        self.marginals()
            .into_iter()
            .zip(like)
            .map(|(w, m)| measure_unchecked(m.atoms().to_vec(), w))
            .collect()
    }

    /// Verifies that every marginal matches the target measure, exactly in
    /// rational mode and within `tol` per atom otherwise.
    pub fn check_marginals(
        &self,
        targets: &[DiscreteMeasure<S>],
        tol: &S,
    ) -> Result<(), MotError> {
        let expected: Vec<usize> = targets.iter().map(|m| m.len()).collect();
        if expected != self.shape.dims() {
            return Err(MotError::ShapeMismatch {
                expected,
                got: self.shape.dims().to_vec(),
            });
        }
        for (k, target) in targets.iter().enumerate() {
            for (i, (got, want)) in self.marginal(k).iter().zip(target.weights()).enumerate() {
                let deviation = (got.clone() - want).abs();
                if deviation > *tol {
                    return Err(MotError::MarginalMismatch {
                        marginal: k,
                        atom: i,
                        deviation: deviation.format_exact(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Mass carried by the sub-grid spanned by `keep` (see
    /// [`CostTensor::restrict`] for the index convention).
    pub fn mass_on(&self, keep: &[Vec<usize>]) -> S {
        let member: Vec<Vec<bool>> = self
            .shape
            .dims()
            .iter()
            .zip(keep)
            .map(|(&n, list)| {
                let mut m = vec![false; n];
                for &i in list {
                    m[i] = true;
                }
                m
            })
            .collect();
        let mut total = S::zero();
        for (flat, e) in self.entries.iter().enumerate() {
            let index = self.shape.multi_index(flat);
            if index.iter().zip(&member).all(|(&i, m)| m[i]) {
                total = total + e;
            }
        }
        total
    }

    /// The product coupling of the given measures; always feasible.
    pub fn product(measures: &[DiscreteMeasure<S>]) -> Result<Self, MotError> {
        let shape = Shape::of_measures(measures)?;
        let mut entries = Vec::with_capacity(shape.entry_count());
        for index in shape.indices() {
            let mut w = S::one();
            for (k, &i) in index.iter().enumerate() {
                w = w * measures[k].weight(i);
            }
            entries.push(w);
        }
        Coupling::new(shape, entries)
    }
}

/// Transport cost `sum_x c(x) pi(x)` of a plan against a cost tensor.
pub fn eval_primal_cost<S: Scalar>(
    plan: &Coupling<S>,
    cost: &CostTensor<S>,
) -> Result<S, MotError> {
    if plan.shape() != cost.shape() {
        return Err(MotError::ShapeMismatch {
            expected: cost.shape().dims().to_vec(),
            got: plan.shape().dims().to_vec(),
        });
    }
    Ok(plan
        .entries()
        .iter()
        .zip(cost.entries())
        .map(|(p, c)| p.clone() * c)
        .sum())
}
