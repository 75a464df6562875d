//! Exact modular-symbol engine for `Γ₀(N) ⊂ SL₃(Z)`.
//!
//! The crate builds the finite relation model of `H₃(Γ₀(N), C)` on `P²(Z/N)`,
//! computes Hecke operators through unimodular symbol reduction and verified
//! double-coset decompositions, and audits the finite 2-adic identities that
//! pin down the local type at 2.

pub mod cache;
pub mod cyclolinalg;
pub mod dyadic;
pub mod error;
pub mod heckeops;
pub mod matrix;
pub mod projspace;
pub mod relspace;
pub mod repaudit;
pub mod symreduce;

pub use cyclolinalg::{GaussRat, Rat};
pub use error::{Error, Result};
pub use projspace::{Level, PointTable, ProjPoint};

/// Version string stamped into every serialized artifact.
pub const FORMAT_VERSION: u32 = 1;
