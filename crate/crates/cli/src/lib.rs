//! Batch driver for the lattice logarithmic Schrödinger toolkit.
//!
//! The binary takes one TOML configuration describing a problem (graph +
//! potential), an action (solve / multi / verify / appendix / compare),
//! and an output location; it writes a JSON run record plus plot-ready
//! CSV tables and exits 0/2/3/4 for success / invalid config / solver
//! non-convergence / failed verification. See [`config`] for the schema
//! and [`runner::execute`] for the contract.

pub mod config;
pub mod io;
pub mod record;
pub mod runner;
