//! Entropy-aligned inference over finite discrete probability models.
//!
//! This crate turns a family of information-theoretic claims about
//! context (what is observed) and content (what explains it) into
//! executable, exactly-checkable numerics:
//!
//! - [`prob`] — entropies, mutual information, KL divergence, and
//!   executable law checks over explicit probability tables;
//! - [`sample`] — seeded Dirichlet generators for reproducible sweeps;
//! - [`variational`] — a structured-prior free-energy objective, its
//!   exact discrete minimizer, two-stage structure-then-binding
//!   inference, staged learning dynamics, and an entropy bound;
//! - [`bootstrap`] — the closed perception loop (predict context,
//!   re-infer content) with contraction diagnostics;
//! - [`temporal`] — proximal content updates along a context stream and
//!   fixed-point (schema) detection;
//! - [`hierarchy`] — the same dynamics stacked across timescales, plus
//!   composition checks for part–whole consistency;
//! - [`control`] — entropy-derived resource allocations (attention,
//!   learning rate, memory);
//! - [`harness`] — seeded experiment runs, trace files, and reports.
//!
//! Everything operates on explicit finite tables, so optimizers have
//! closed forms and tests compare against independently computed
//! oracles instead of tolerances on iterative solvers.
//!
//! ```
//! use ccup::prob::{Alphabet, Joint, mutual_information, compression_gain};
//!
//! let a = Alphabet::new(2)?;
//! let j = Joint::new(a.clone(), a, vec![vec![0.4, 0.1], vec![0.1, 0.4]])?;
//! // Conditioning on the row variable shortens ideal codes for the
//! // column variable by exactly the mutual information.
//! assert!((compression_gain(&j) - mutual_information(&j)).abs() < 1e-12);
//! # Ok::<(), ccup::Error>(())
//! ```

// Parameter guards spell `!(x > 0.0)` so NaN fails them too; rewriting
// with `<=` or `partial_cmp` would lose that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Oracle computations walk several parallel tables by one index;
// zipped iterators would obscure which entries line up.
#![allow(clippy::needless_range_loop)]

pub mod bootstrap;
pub mod control;
pub mod error;
pub mod harness;
pub mod hierarchy;
pub mod prob;
pub mod sample;
pub mod temporal;
pub mod variational;

pub use error::{Error, Result};
