use std::fmt;
use std::sync::Arc;

use super::matrix::OperatorMatrix;
use super::schedule::{normalize_breakpoints, Impulse};
use super::state::QuantumState;
use crate::error::{FlyqError, Result};

pub type OperatorFn = Arc<dyn Fn(f64) -> OperatorMatrix + Send + Sync>;

/// Entrywise tolerance for the Hermiticity of `H(t)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

const HORIZON_TOL: f64 = 1e-9;

/// A standing system `(L, H)` with unit scattering matrix, driven over
/// `[0, t_final]` and initially in `initial_state`.
///
/// `breakpoints` lists the times where the controls are non-smooth; the
/// propagator grid always contains them.
#[derive(Clone)]
pub struct SLHSystem {
    dim: usize,
    hamiltonian: OperatorFn,
    coupling: OperatorFn,
    initial_state: QuantumState,
    ground_index: usize,
    t_final: f64,
    breakpoints: Vec<f64>,
    impulses: Vec<Impulse>,
    rate_bound: f64,
}

impl SLHSystem {
    pub fn new(
        dim: usize,
        hamiltonian: OperatorFn,
        coupling: OperatorFn,
        initial_state: QuantumState,
        t_final: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(FlyqError::UnsupportedDimension(0));
        }
        if initial_state.dim() != dim {
            return Err(FlyqError::DimensionMismatch { expected: dim, found: initial_state.dim() });
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(FlyqError::InvalidSchedule(format!("horizon {t_final} must be positive")));
        }
        for (name, op) in [("hamiltonian", &hamiltonian), ("coupling", &coupling)] {
            let m = op(0.0);
            if m.dim() != dim {
                return Err(FlyqError::InvalidArgument(format!(
                    "{name} has dimension {}, system has {dim}",
                    m.dim()
                )));
            }
        }
        Ok(Self {
            dim,
            hamiltonian,
            coupling,
            initial_state,
            ground_index: 0,
            t_final,
            breakpoints: vec![0.0, t_final],
            impulses: Vec::new(),
            rate_bound: 0.0,
        })
    }

    pub fn with_breakpoints(mut self, pts: impl IntoIterator<Item = f64>) -> Self {
        let mut all = std::mem::take(&mut self.breakpoints);
        all.extend(pts);
        self.breakpoints = normalize_breakpoints(all, self.t_final);
        self
    }

    pub fn with_impulses(mut self, impulses: Vec<Impulse>) -> Result<Self> {
        for imp in &impulses {
            if imp.unitary.dim() != self.dim {
                return Err(FlyqError::DimensionMismatch { expected: self.dim, found: imp.unitary.dim() });
            }
            if imp.time > self.t_final + HORIZON_TOL {
                return Err(FlyqError::OutOfHorizon { time: imp.time, horizon: self.t_final });
            }
        }
        for w in impulses.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(FlyqError::InvalidSchedule("impulse times must be strictly increasing".into()));
            }
        }
        let times: Vec<f64> = impulses.iter().map(|i| i.time).collect();
        self.impulses = impulses;
        Ok(self.with_breakpoints(times))
    }

    pub fn with_rate_bound(mut self, rate: f64) -> Self {
        self.rate_bound = rate;
        self
    }

    pub fn with_ground_index(mut self, index: usize) -> Result<Self> {
        if index >= self.dim {
            return Err(FlyqError::InvalidArgument(format!("ground index {index} ≥ dimension {}", self.dim)));
        }
        self.ground_index = index;
        Ok(self)
    }

    pub fn with_initial_state(mut self, state: QuantumState) -> Result<Self> {
        if state.dim() != self.dim {
            return Err(FlyqError::DimensionMismatch { expected: self.dim, found: state.dim() });
        }
        self.initial_state = state;
        Ok(self)
    }

    /// Moves the horizon, keeping interior breakpoints.
    pub fn with_t_final(mut self, t_final: f64) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(FlyqError::InvalidSchedule(format!("horizon {t_final} must be positive")));
        }
        if let Some(imp) = self.impulses.last() {
            if imp.time > t_final {
                return Err(FlyqError::OutOfHorizon { time: imp.time, horizon: t_final });
            }
        }
        let old = self.t_final;
        let pts: Vec<f64> = self.breakpoints.iter().copied().filter(|&t| t != old).collect();
        self.t_final = t_final;
        self.breakpoints = normalize_breakpoints(pts.into_iter().chain([t_final]).collect(), t_final);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn initial_state(&self) -> &QuantumState {
        &self.initial_state
    }
    pub fn ground_index(&self) -> usize {
        self.ground_index
    }
    pub fn t_final(&self) -> f64 {
        self.t_final
    }
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
    pub fn impulses(&self) -> &[Impulse] {
        &self.impulses
    }
    /// Largest control rate, used to pick default step sizes.
    pub fn rate_bound(&self) -> f64 {
        self.rate_bound
    }

    pub(crate) fn hamiltonian_fn(&self) -> &OperatorFn {
        &self.hamiltonian
    }
    pub(crate) fn coupling_fn(&self) -> &OperatorFn {
        &self.coupling
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= -HORIZON_TOL && t <= self.t_final + HORIZON_TOL) {
            return Err(FlyqError::OutOfHorizon { time: t, horizon: self.t_final });
        }
        Ok(())
    }

    pub fn hamiltonian(&self, t: f64) -> Result<OperatorMatrix> {
        self.check_time(t)?;
        Ok((self.hamiltonian)(t))
    }

    pub fn coupling(&self, t: f64) -> Result<OperatorMatrix> {
        self.check_time(t)?;
        Ok((self.coupling)(t))
    }

    /// Checks `H(t)` for Hermiticity at every breakpoint, every midpoint
    /// between breakpoints and `extra` further points per interval.
    pub fn check_hermitian(&self, extra: usize) -> Result<()> {
        let mut times = self.breakpoints.clone();
        for w in self.breakpoints.windows(2) {
            for k in 1..=extra + 1 {
                times.push(w[0] + (w[1] - w[0]) * k as f64 / (extra + 2) as f64);
            }
        }
        for t in times {
            let h = (self.hamiltonian)(t);
            let defect = h.hermiticity_defect();
            if !(defect < HERMITIAN_TOL) {
                return Err(FlyqError::InvalidSchedule(format!(
                    "H(t) is not Hermitian at t = {t} (defect {defect:.2e})"
                )));
            }
            if !h.is_finite() || !(self.coupling)(t).is_finite() {
                return Err(FlyqError::InvalidSchedule(format!("non-finite operator at t = {t}")));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SLHSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SLHSystem")
            .field("dim", &self.dim)
            .field("t_final", &self.t_final)
            .field("breakpoints", &self.breakpoints.len())
            .field("impulses", &self.impulses.len())
            .field("initial_state", &self.initial_state)
            .finish_non_exhaustive()
    }
}
