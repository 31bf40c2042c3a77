//! Problem documents: the JSON interchange format for instances.
//!
//! A document carries the marginals (labels, optional coordinates, weights
//! as number strings) and the cost, either as a flat tensor in row-major
//! order with the last index fastest, or as a sum of pairwise matrices.
//! Numbers are strings ("1/3", "0.25", "-2") so that rational mode can
//! parse them exactly; pairs absent from a pairwise-sum cost contribute
//! zero. Zero-weight atoms are pruned on ingestion, slicing the cost
//! tensor to match, and each dropped atom is reported as a warning.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::measure::{Atom, DiscreteMeasure};
use crate::scalar::Scalar;
use crate::tensor::{pairwise_sum_cost, CostTensor, Shape};
use crate::MotError;

/// Accepted `version` value.
pub const DOCUMENT_VERSION: &str = "1";
/// The only supported tensor layout.
pub const TENSOR_ORDER: &str = "row-major-last-fastest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDocument {
    pub version: String,
    pub k: usize,
    pub marginals: Vec<MarginalDocument>,
    pub cost: CostDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
    pub weights: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum CostDocument {
    #[serde(rename = "tensor")]
    Tensor {
        #[serde(default = "default_order")]
        order: String,
        entries: Vec<String>,
    },
    #[serde(rename = "pairwise-sum")]
    PairwiseSum { matrices: Vec<PairMatrixDocument> },
}

fn default_order() -> String {
    TENSOR_ORDER.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMatrixDocument {
    pub first: usize,
    pub second: usize,
    pub entries: Vec<Vec<String>>,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> MotError {
    MotError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses and structurally validates a document.
pub fn parse_problem(text: &str) -> Result<ProblemDocument, MotError> {
    let doc: ProblemDocument = serde_json::from_str(text)
        .map_err(|e| schema("document", e.to_string()))?;
    doc.validate()?;
    Ok(doc)
}

impl ProblemDocument {
    /// Structural checks with path-addressed messages; number parsing and
    /// mass checks happen when a scalar mode is chosen.
    pub fn validate(&self) -> Result<(), MotError> {
        if self.version != DOCUMENT_VERSION {
            return Err(schema(
                "version",
                format!("unsupported version {:?}, expected {DOCUMENT_VERSION:?}", self.version),
            ));
        }
        if self.k != self.marginals.len() {
            return Err(schema(
                "k",
                format!("k = {} but {} marginals are given", self.k, self.marginals.len()),
            ));
        }
        if self.k < 3 {
            return Err(schema("k", "need at least 3 marginals"));
        }
        for (m, marginal) in self.marginals.iter().enumerate() {
            let n = marginal.weights.len();
            if n == 0 {
                return Err(schema(format!("marginals[{m}].weights"), "no atoms"));
            }
            if let Some(labels) = &marginal.labels {
                if labels.len() != n {
                    return Err(schema(
                        format!("marginals[{m}].labels"),
                        format!("{} labels for {n} weights", labels.len()),
                    ));
                }
            }
            if let Some(coords) = &marginal.coords {
                if coords.len() != n {
                    return Err(schema(
                        format!("marginals[{m}].coords"),
                        format!("{} coordinate vectors for {n} weights", coords.len()),
                    ));
                }
                if let Some(first) = coords.first() {
                    for (i, c) in coords.iter().enumerate() {
                        if c.len() != first.len() {
                            return Err(schema(
                                format!("marginals[{m}].coords[{i}]"),
                                format!("dimension {} differs from {}", c.len(), first.len()),
                            ));
                        }
                        if c.iter().any(|v| !v.is_finite()) {
                            return Err(schema(
                                format!("marginals[{m}].coords[{i}]"),
                                "non-finite coordinate",
                            ));
                        }
                    }
                }
            }
        }
        let dims = self.dims();
        match &self.cost {
            CostDocument::Tensor { order, entries } => {
                if order != TENSOR_ORDER {
                    return Err(schema(
                        "cost.order",
                        format!("unsupported order {order:?}, expected {TENSOR_ORDER:?}"),
                    ));
                }
                let expected: usize = dims.iter().product();
                if entries.len() != expected {
                    return Err(schema(
                        "cost.entries",
                        format!(
                            "expected {expected} entries for dims {dims:?}, got {}",
                            entries.len()
                        ),
                    ));
                }
            }
            CostDocument::PairwiseSum { matrices } => {
                for (t, m) in matrices.iter().enumerate() {
                    if m.first >= m.second || m.second >= self.k {
                        return Err(schema(
                            format!("cost.matrices[{t}]"),
                            format!(
                                "pair ({}, {}) must satisfy first < second < {}",
                                m.first, m.second, self.k
                            ),
                        ));
                    }
                    if m.entries.len() != dims[m.first]
                        || m.entries.iter().any(|row| row.len() != dims[m.second])
                    {
                        return Err(schema(
                            format!("cost.matrices[{t}].entries"),
                            format!("expected a {} x {} matrix", dims[m.first], dims[m.second]),
                        ));
                    }
                    for later in &matrices[t + 1..] {
                        if later.first == m.first && later.second == m.second {
                            return Err(schema(
                                format!("cost.matrices[{t}]"),
                                format!("duplicate pair ({}, {})", m.first, m.second),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Atom counts per marginal, straight from the weight lists.
    pub fn dims(&self) -> Vec<usize> {
        self.marginals.iter().map(|m| m.weights.len()).collect()
    }

    /// Parses the marginals in the chosen scalar mode.
    pub fn measures<S: Scalar>(&self) -> Result<Vec<DiscreteMeasure<S>>, MotError> {
        self.marginals
            .iter()
            .enumerate()
            .map(|(m, marginal)| {
                let atoms: Vec<Atom> = (0..marginal.weights.len())
                    .map(|i| Atom {
                        label: marginal
                            .labels
                            .as_ref()
                            .map(|l| l[i].clone())
                            .unwrap_or_else(|| format!("x{i}")),
                        coords: marginal.coords.as_ref().map(|c| c[i].clone()),
                    })
                    .collect();
                let weights = marginal
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        S::parse_number(w).map_err(|e| {
                            schema(format!("marginals[{m}].weights[{i}]"), e.to_string())
                        })
                    })
                    .collect::<Result<Vec<S>, MotError>>()?;
                DiscreteMeasure::new(atoms, weights).map_err(|e| match e {
                    MotError::NegativeWeight { atom, .. } => {
                        MotError::NegativeWeight { marginal: m, atom }
                    }
                    MotError::DuplicateAtom { label, .. } => {
                        MotError::DuplicateAtom { marginal: m, label }
                    }
                    other => other,
                })
            })
            .collect()
    }

    /// Materializes the cost tensor in the chosen scalar mode, expanding a
    /// pairwise-sum cost, after checking the entry count against `guard`.
    pub fn cost_tensor<S: Scalar>(&self, guard: usize) -> Result<CostTensor<S>, MotError> {
        let dims = self.dims();
        let shape = Shape::new(dims)?;
        if shape.entry_count() > guard {
            return Err(MotError::SizeGuard {
                entries: shape.entry_count(),
                guard,
            });
        }
        match &self.cost {
            CostDocument::Tensor { entries, .. } => {
                let parsed = entries
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        S::parse_number(e)
                            .map_err(|err| schema(format!("cost.entries[{i}]"), err.to_string()))
                    })
                    .collect::<Result<Vec<S>, MotError>>()?;
                CostTensor::new(shape, parsed)
            }
            CostDocument::PairwiseSum { matrices } => {
                let pairs = matrices
                    .iter()
                    .enumerate()
                    .map(|(t, m)| {
                        let rows = m
                            .entries
                            .iter()
                            .enumerate()
                            .map(|(r, row)| {
                                row.iter()
                                    .enumerate()
                                    .map(|(c, e)| {
                                        S::parse_number(e).map_err(|err| {
                                            schema(
                                                format!("cost.matrices[{t}].entries[{r}][{c}]"),
                                                err.to_string(),
                                            )
                                        })
                                    })
                                    .collect::<Result<Vec<S>, MotError>>()
                            })
                            .collect::<Result<Vec<Vec<S>>, MotError>>()?;
                        Ok((m.first, m.second, rows))
                    })
                    .collect::<Result<Vec<_>, MotError>>()?;
                pairwise_sum_cost(shape, &pairs)
            }
        }
    }

    /// Measures and cost together, with zero-weight atoms pruned and the
    /// cost sliced accordingly. Returns one warning line per drop.
    pub fn instance<S: Scalar>(
        &self,
        guard: usize,
    ) -> Result<(Vec<DiscreteMeasure<S>>, CostTensor<S>, Vec<String>), MotError> {
        let raw = self.measures::<S>()?;
        let cost = self.cost_tensor::<S>(guard)?;
        let mut warnings = Vec::new();
        let mut keep = Vec::with_capacity(raw.len());
        let mut pruned = Vec::with_capacity(raw.len());
        let mut any = false;
        for (m, measure) in raw.into_iter().enumerate() {
            let (kept_measure, kept, removed) = measure.prune_zeros();
            if !removed.is_empty() {
                any = true;
                warnings.push(format!(
                    "marginal {m}: dropped zero-weight atoms {removed:?}"
                ));
            }
            keep.push(kept);
            pruned.push(kept_measure);
        }
        let cost = if any { cost.restrict(&keep)? } else { cost };
        Ok((pruned, cost, warnings))
    }

    /// A document reproducing the given instance, with exact number strings.
    pub fn from_instance<S: Scalar>(
        measures: &[DiscreteMeasure<S>],
        cost: &CostTensor<S>,
    ) -> Self {
        let marginals = measures
            .iter()
            .map(|m| MarginalDocument {
                labels: Some(m.atoms().iter().map(|a| a.label.clone()).collect()),
                coords: if m.atoms().iter().all(|a| a.coords.is_some()) {
                    Some(
                        m.atoms()
                            .iter()
                            .map(|a| a.coords.clone().expect("checked above"))
                            .collect(),
                    )
                } else {
                    None
                },
                weights: m.weights().iter().map(|w| w.format_exact()).collect(),
            })
            .collect();
        ProblemDocument {
            version: DOCUMENT_VERSION.to_string(),
            k: measures.len(),
            marginals,
            cost: CostDocument::Tensor {
                order: TENSOR_ORDER.to_string(),
                entries: cost.entries().iter().map(|e| e.format_exact()).collect(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// SHA-256 of the compact canonical serialization, as lowercase hex.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("document serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}
