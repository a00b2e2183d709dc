//! Sparse triple bases for the space of linear dependencies of n-qubit
//! stabiliser states, and stabiliser extent computed over those bases.
//!
//! The pipeline is: enumerate canonical Lagrangian subspaces
//! ([`enumeration`]), order the phase-normalised stabiliser states by
//! `(Lagrangian, eigenvalue bits)`, split every noncomputational state into
//! two half-support states ([`basis::split`]) and collect the resulting
//! three-term dependencies into a sparse matrix ([`basis::TripleBasis`]).
//! [`extent`] then minimises `||c + Bx||_1` to obtain the stabiliser extent.
//!
//! Bitstring convention everywhere: the leftmost character is qubit 1 and the
//! most significant bit of the computational basis index.

pub mod error;
pub mod gf2;
pub mod pauli;
pub mod stabiliser;
pub mod enumeration;
pub mod exact;
pub mod basis;
pub mod certificate;
pub mod extent;
pub mod states;
pub mod verify;

pub use error::{Error, Result};

/// Largest supported qubit count (one 64-bit word per symplectic row).
pub const MAX_QUBITS: usize = 32;
