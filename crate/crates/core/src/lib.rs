//! Ground states and critical points of the discrete logarithmic
//! Schrödinger equation on finite graphs.
//!
//! The central object is the equation
//!
//! ```text
//!     −Δu(x) + V(x)·u(x) = u(x)·log u(x)²
//! ```
//!
//! on a finite graph — a torus or dirichlet truncation of the lattice ℤᴺ,
//! or an arbitrary finite connected graph — together with its p-Laplacian
//! generalization
//!
//! ```text
//!     −Δ_p u(x) + V(x)·|u|^{p−2}u = |u|^{p−2}u·log|u|^p,    p > 1.
//! ```
//!
//! Solutions are critical points of the energy
//!
//! ```text
//!     J(u) = (1/p)·Σ_x (|∇u|_p^p + (V+1)|u|^p) − (1/p)·Σ_x |u|^p log|u|^p,
//! ```
//!
//! with the convention 0·log 0 := 0. The crate provides:
//!
//! * graph topologies and discrete operators ([`graph`], [`ops`]),
//! * admissible potential classes ([`potential`]),
//! * the energy, its gradient, the superposition splitting F = F₁ − F₂ of
//!   the logarithmic nonlinearity, and the natural-constraint algebra
//!   ([`functional`]),
//! * ground-state and multi-solution solvers ([`solver`]),
//! * identity and inequality checks plus the slowly-decaying series
//!   example ([`analysis`]).

#![forbid(unsafe_code)]

pub mod analysis;
pub mod field;
pub mod functional;
pub mod graph;
pub mod linalg;
pub mod ops;
pub mod potential;
pub mod solver;

pub use field::{Field, FieldError};
pub use functional::Scheme;
pub use graph::{
    build_general_graph, build_lattice, BoundaryKind, GraphError, GraphKind, GraphTopology,
    LatticeSpec,
};
pub use ops::NormKind;
pub use potential::{Potential, PotentialClass, PotentialSpec};

/// Version of the numeric core, embedded into run records.
pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
