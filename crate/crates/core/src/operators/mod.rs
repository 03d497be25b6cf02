//! Dense complex linear algebra and the domain types shared by all modules.

mod matrix;
mod schedule;
mod state;
mod system;

use std::sync::Arc;

use num_complex::Complex64 as C64;

pub use matrix::{OperatorMatrix, DEFAULT_CONDITION_BOUND};
pub use schedule::{
    default_t_final, ControlSchedule, Impulse, Segment, WaveValue, Waveform, DEFAULT_DECAY_LIFETIMES,
};
pub use state::{Normalization, QuantumState};
pub use system::{OperatorFn, SLHSystem, HERMITIAN_TOL};

use crate::error::{FlyqError, Result};

/// Qubit ladder operators in the `{|0⟩, |1⟩}` basis (index 0 = ground):
/// `σ₊ = |1⟩⟨0|`, `σ₋ = σ₊†`, `σ_x = σ₊ + σ₋`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliOps {
    pub sigma_plus: OperatorMatrix,
    pub sigma_minus: OperatorMatrix,
    pub sigma_x: OperatorMatrix,
}

pub fn pauli_ops(dim: usize) -> Result<PauliOps> {
    if dim != 2 {
        return Err(FlyqError::UnsupportedDimension(dim));
    }
    let sigma_plus = OperatorMatrix::ket_bra(2, 1, 0);
    let sigma_minus = sigma_plus.adjoint();
    let sigma_x = &sigma_plus + &sigma_minus;
    Ok(PauliOps { sigma_plus, sigma_minus, sigma_x })
}

/// Driven two-level emitter in the ground state:
///
/// `H(t) = ε(t) σ₊σ₋ + u(t)/2 σ₊ + u*(t)/2 σ₋`, `L(t) = √(2γ(t)) σ₋`.
///
/// With this coupling the excited amplitude decays at rate `γ` (population
/// at `2γ`); the effective Hamiltonian carries `−iγ σ₊σ₋`.
pub fn qubit_system(schedule: &ControlSchedule) -> Result<SLHSystem> {
    let schedule = Arc::new(schedule.clone());
    let h_sched = Arc::clone(&schedule);
    let hamiltonian = Arc::new(move |t: f64| {
        let eps = h_sched.detuning().eval(t);
        let u = h_sched.drive().eval(t);
        let mut h = OperatorMatrix::zeros(2);
        h[(1, 1)] = C64::new(eps, 0.0);
        h[(1, 0)] = u * 0.5;
        h[(0, 1)] = u.conj() * 0.5;
        h
    });
    let l_sched = Arc::clone(&schedule);
    let coupling = Arc::new(move |t: f64| {
        let gamma = l_sched.coupling().eval(t).max(0.0);
        let mut l = OperatorMatrix::zeros(2);
        l[(0, 1)] = C64::new((2.0 * gamma).sqrt(), 0.0);
        l
    });
    let system = SLHSystem::new(2, hamiltonian, coupling, QuantumState::ground(2), schedule.t_final())?
        .with_breakpoints(schedule.breakpoints())
        .with_rate_bound(schedule.rate_bound());
    system.with_impulses(schedule.impulses().to_vec())
}

/// [`qubit_system`] prepared in the excited state `|1⟩`.
pub fn excited_qubit(schedule: &ControlSchedule) -> Result<SLHSystem> {
    qubit_system(schedule)?.with_initial_state(QuantumState::basis(2, 1))
}
