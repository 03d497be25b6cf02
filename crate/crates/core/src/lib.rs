//! Simulation and design toolkit for flying-qubit control systems.
//!
//! A driven emitter coupled to a chiral waveguide is reduced to a
//! low-dimensional non-unitary propagator `V(t)` generated by the effective
//! Hamiltonian `H − (i/2)L†L`. Multi-photon output amplitudes are chains of
//! quantum jumps `L(τ)` between propagator segments, projected onto the
//! ground state once the emitter has decayed.
//!
//! Module map:
//!
//! - [`operators`]: dense complex matrices, states, control schedules and
//!   standing systems.
//! - [`propagator`]: integration of the propagator, Green functions and
//!   dressed couplings.
//! - [`wavepacket`]: output amplitudes on time-ordered grids and photon-number
//!   probabilities.
//! - [`network`]: series product and auxiliary-source design.
//! - [`analytic`]: closed-form oracles.
//! - [`optimize`]: genetic-algorithm pulse shaping.
//!
//! Basis convention everywhere: index 0 is the ground state `|0⟩`, index 1
//! the excited state `|1⟩`; composite systems order the upstream factor
//! first (slow index).

pub mod analytic;
pub mod error;
pub mod network;
pub mod operators;
pub mod optimize;
pub mod propagator;
pub mod quad;
pub mod wavepacket;

pub use error::{FlyqError, Result};
pub use num_complex::Complex64 as C64;
pub use operators::{
    pauli_ops, qubit_system, ControlSchedule, Impulse, OperatorMatrix, QuantumState, Segment,
    SLHSystem, Waveform,
};
pub use propagator::{propagate, Integrator, PropagatorTable};
pub use wavepacket::{
    output_amplitudes, photon_probabilities, simulate, ProbabilityLadder, SimulationSettings,
    WavepacketTensor,
};
