//! Distributed constraint satisfaction with DPOP and its privacy-preserving
//! variants, run on a deterministic message-passing simulator.
//!
//! Each variable is simulated as its own task; tasks only exchange messages
//! along constraint-graph edges. See [`solver::solve`] for the entry point.

pub mod audit;
pub mod crypto;
pub mod dpop;
pub mod kernel;
pub mod model;
pub mod p2;
pub mod p32;
pub mod pdpop;
pub mod sim;
pub mod solver;
pub mod table;
pub mod wire;
