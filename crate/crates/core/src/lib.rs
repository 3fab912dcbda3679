//! Coherent-state parametric representation of a qubit coupled to a
//! frustrated spin-1/2 Heisenberg ring (the "spin star").
//!
//! The crate is organised bottom-up:
//!
//! - [`ring_spectrum`]: exact diagonalization of the ring, resolved by total
//!   spin, and the ground-state phase diagram in the frustration ratio `k/g`.
//! - [`star_model`]: analytic star eigenstates, qubit-ring entanglement and a
//!   dense brute-force oracle over the full `2^(N+1)` Hilbert space.
//! - [`coherent_states`]: Bloch coherent states for the ring's total spin,
//!   sphere quadrature and the Husimi Q-function.
//! - [`parametric_rep`]: the parametric weight `chi`, the qubit states
//!   `|phi(Omega)>`, the theta distributions and effective Zeeman fields.
//! - [`classical_geometric`]: the large-S collapse, the classical qubit
//!   ensemble and discretized Pancharatnam phases.
//! - [`cli`]: command-line front end and data export.

pub mod classical_geometric;
pub mod cli;
pub mod coherent_states;
mod error;
pub mod parametric_rep;
pub mod ring_spectrum;
mod spin;
pub mod star_model;

pub use error::{Error, Result};
pub use spin::HalfInt;
pub use star_model::{binary_entropy, Branch};
