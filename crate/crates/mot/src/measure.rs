//! Finite probability measures with labeled atoms.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::MotError;

/// A point of a finite space. Coordinates are optional metadata carried for
/// users who derive costs from geometry; nothing in the solvers reads them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
}

impl Atom {
    pub fn new(label: impl Into<String>) -> Self {
        Atom {
            label: label.into(),
            coords: None,
        }
    }
}

/// A probability measure on finitely many atoms.
///
/// Weights are nonnegative and sum to one (exactly in rational mode, within
/// 1e-12 in float mode). Zero weights are legal; document ingestion prunes
/// them, but internally produced measures (for example truncated marginals)
/// may carry them.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<S: Scalar> {
    atoms: Vec<Atom>,
    weights: Vec<S>,
}

/// Absolute slack allowed on the weight sum in float mode.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl<S: Scalar> DiscreteMeasure<S> {
    pub fn new(atoms: Vec<Atom>, weights: Vec<S>) -> Result<Self, MotError> {
        if atoms.len() != weights.len() {
            return Err(MotError::LengthMismatch {
                what: "measure weights",
                expected: atoms.len(),
                got: weights.len(),
            });
        }
        for (i, w) in weights.iter().enumerate() {
            if w < &S::zero() {
                return Err(MotError::NegativeWeight {
                    marginal: 0,
                    atom: i,
                });
            }
            if !S::EXACT && !w.to_f64().is_finite() {
                return Err(MotError::NonFinite { what: "weights" });
            }
        }
        let sum: S = weights.iter().cloned().sum();
        let deviation = (sum.clone() - &S::one()).abs();
        let allowed = if S::EXACT {
            S::zero()
        } else {
            S::ratio(1, 1_000_000_000_000)
        };
        if deviation > allowed {
            return Err(MotError::WeightSum {
                sum: sum.format_exact(),
            });
        }
        for (i, a) in atoms.iter().enumerate() {
            for b in &atoms[..i] {
                if a.label == b.label {
                    return Err(MotError::DuplicateAtom {
                        marginal: 0,
                        label: a.label.clone(),
                    });
                }
            }
        }
        Ok(DiscreteMeasure { atoms, weights })
    }

    /// Measure with weights as given and atoms labeled `x0, x1, ...`.
    pub fn from_weights(weights: Vec<S>) -> Result<Self, MotError> {
        let atoms = (0..weights.len()).map(|i| Atom::new(format!("x{i}"))).collect();
        Self::new(atoms, weights)
    }

    /// Uniform measure on `n` atoms.
    pub fn uniform(n: usize) -> Self {
        let w = S::ratio(1, n as i64);
        Self::from_weights(vec![w; n]).expect("uniform weights are valid")
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn weight(&self, atom: usize) -> &S {
        &self.weights[atom]
    }

    /// Drop zero-weight atoms. Returns the pruned measure, the kept original
    /// indices, and the labels that were removed.
    pub fn prune_zeros(&self) -> (Self, Vec<usize>, Vec<String>) {
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        let mut kept = Vec::new();
        let mut removed = Vec::new();
        for (i, (a, w)) in self.atoms.iter().zip(&self.weights).enumerate() {
            if w.is_zero() {
                removed.push(a.label.clone());
            } else {
                atoms.push(a.clone());
                weights.push(w.clone());
                kept.push(i);
            }
        }
        let pruned = DiscreteMeasure { atoms, weights };
        (pruned, kept, removed)
    }

    /// Sub-measure on the given atom indices, without renormalizing. The
    /// result is generally not a probability measure; callers renormalize.
    pub(crate) fn restrict_raw(&self, keep: &[usize]) -> (Vec<Atom>, Vec<S>) {
        let atoms = keep.iter().map(|&i| self.atoms[i].clone()).collect();
        let weights = keep.iter().map(|&i| self.weights[i].clone()).collect();
        (atoms, weights)
    }
}

/// Builds a measure from weights that already satisfy the invariants, for
/// internal constructions (marginals of a validated coupling). Debug builds
/// still check.
pub(crate) fn measure_unchecked<S: Scalar>(atoms: Vec<Atom>, weights: Vec<S>) -> DiscreteMeasure<S> {
    debug_assert!(atoms.len() == weights.len());
    DiscreteMeasure { atoms, weights }
}
