//! Equilibrium (KMS) state structure of Toeplitz–Nica–Pimsner algebras built from
//! finite-rank product systems over `Z_+^N`.
//!
//! Concrete instances are higher-rank graphs, multivariable factorial languages and
//! `Z_+^N`-dynamics on finitely many points. For each of them the crate computes
//! entropies and critical inverse temperatures, the trace simplices indexed by colour
//! subsets, closed-form state values, the Wold decomposition of a gauge-invariant
//! equilibrium state, and ground states. The [`fock`] module rebuilds the truncated
//! Fock representation explicitly and is used as a brute-force oracle for the rest.
//!
//! Conventions used throughout:
//! - colours are `0..N` internally and `1..=N` in every serialized form;
//! - `B_i[v][w]` counts colour-`i` edges with source `w` and range `v`;
//! - the transfer map on functions is `M_i = B_iᵀ`, on trace vectors it is `τ ↦ B_i τ`.

pub mod beta;
pub mod colors;
pub mod entropy;
pub mod equilibrium;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod model;
pub mod par;
pub mod polytope;
pub mod simplex;

pub use beta::Beta;
pub use colors::{ColorSet, MultiIndex};
pub use error::{Error, ErrorKind, Result};
pub use model::{validate, Instance, InstanceSpec};
