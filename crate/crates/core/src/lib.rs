//! Generalized belief propagation, Bethe free energies, and landscape
//! diagnostics for ferromagnetic Ising models with triangle-motif
//! interactions on hypergraphs.
//!
//! The crate is organized around:
//!
//! - [`model`]: validated instances (fields, triangle couplings, beta).
//! - [`bp`]: the hyper-edge message update, sweep schedules, convergence
//!   control, and belief extraction.
//! - [`bethe`]: primal Bethe free energy, both dual forms, and the analytic
//!   gradient of the message-space dual.
//! - [`exact`]: brute-force enumeration oracle (log Z, exact marginals,
//!   Gibbs free energy).
//! - [`landscape`]: the monotone-region diagnostic x*, pre/post-fixpoint
//!   classification, gradient sign audits, and the fixed-point census.
//! - [`generate`]: seeded construction of tree-like, random-motif, and
//!   shared-edge-chain instances.

pub mod bethe;
pub mod bp;
pub mod exact;
pub mod generate;
pub mod landscape;
pub mod model;
pub mod rng;
