//! Simulator for the Mølmer-Sørensen entangling gate acting on two trapped-ion
//! qubits that share one vibrational (COM) mode.
//!
//! The crate evolves the full bichromatic-drive Hamiltonian numerically on the
//! two-qubit ⊗ truncated-Fock space, evaluates the closed-form propagators and
//! thermal-state population formulas, and drives the virtual experiments built
//! on top of them: population evolution, parity scans, AC-Stark calibration,
//! multi-gate decay, and mean-phonon-number fitting.
//!
//! Basis conventions used throughout (fixed once, here):
//! * qubit ordering (↑↑, ↑↓, ↓↑, ↓↓) with |↓⟩ = (0, 1)ᵀ,
//! * Pauli matrices in that basis, so σ_y|↓⟩ = −i|↑⟩,
//! * composite states live on qubits ⊗ Fock(N) with the Fock index
//!   fastest-varying,
//! * all frequencies are angular (rad/s), all times are seconds.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod gate_model;
pub mod hilbert;
pub mod integrator;
pub mod propagator;
pub mod thermal;

pub use error::{Error, Result};

/// Complex scalar used everywhere.
pub type C64 = num_complex::Complex64;
/// Dense complex operator.
pub type COp = nalgebra::DMatrix<C64>;
/// Dense complex state vector.
pub type CVec = nalgebra::DVector<C64>;
