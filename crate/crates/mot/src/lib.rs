//! Discrete multimarginal optimal transport with exact certificates.
//!
//! Couple K >= 3 finite probability measures against a cost tensor: solve the
//! transport linear program exactly in rational arithmetic, recover dual
//! potentials in conjugate form, certify optimality through splitting sets and
//! cyclical monotonicity, replay quantitative truncation bounds on large
//! instances, and approximate with an entropic softmin solver when exactness
//! is not required.
//!
//! The crate is organized around runnable examples, one per capability:
//!
//! ```text
//! examples/
//!   solve_exact.rs         exact rational solve, duals, zero duality gap
//!   certify_optimality.rs  splitting + cyclical monotonicity certificates
//!   vertex_oracle.rs       brute-force vertex enumeration cross-check
//!   truncation_bounds.rs   eps-ladder truncation experiment with bound table
//!   entropic_ladder.rs     softmin/Sinkhorn approximation against exact values
//!   problem_documents.rs   problem/report document round trip
//! ```
//!
//! Run one with `cargo run --release -p mot --example solve_exact`. The thin
//! `mot` binary exposes the same pipelines over problem documents as
//! subcommands (`solve`, `certify`, `truncate`, `entropic`, `oracle`).

pub mod certify;
pub mod cli;
pub mod conjugacy;
pub mod document;
pub mod entropic;
mod error;
pub mod fixtures;
pub mod lp;
pub mod measure;
pub mod potential;
pub mod report;
pub mod scalar;
pub mod tensor;
pub mod truncation;

pub use error::MotError;
pub use measure::DiscreteMeasure;
pub use potential::PotentialFamily;
pub use scalar::{Rational, Scalar};
pub use tensor::{CostTensor, Coupling, Shape};
