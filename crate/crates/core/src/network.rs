//! Cascades of systems on one chiral waveguide and the auxiliary-source
//! construction for non-vacuum inputs.
//!
//! The series product `A ▷ B` feeds the output of `A` into `B`:
//!
//! `H = H_A⊗I + I⊗H_B + (1/2i)(L_A⊗L_B† − L_A†⊗L_B)`, `L = L_A⊗I + I⊗L_B`.
//!
//! The upstream system is always the left (slow) tensor factor. A flying
//! qubit arriving at `B` is modelled by an excited source `A` whose coupling
//! is designed to emit exactly that packet, so `A ▷ B` sees vacuum input.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{FlyqError, Result};
use crate::operators::{
    qubit_system, ControlSchedule, Impulse, OperatorMatrix, QuantumState, SLHSystem, Segment, Waveform,
};
use crate::quad;
use crate::wavepacket::{simulate, SimulationSettings};

const HORIZON_TOL: f64 = 1e-9;

/// Default cap on designed coupling rates.
pub const DEFAULT_GAMMA_MAX: f64 = 1e3;
/// Remaining tail mass below which a designed rate is clipped to the cap.
pub const DEFAULT_TAIL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CascadedSystem {
    parts: Vec<SLHSystem>,
    composed: SLHSystem,
}

impl CascadedSystem {
    /// Parts in cascade order, upstream first.
    pub fn parts(&self) -> &[SLHSystem] {
        &self.parts
    }

    pub fn composed(&self) -> &SLHSystem {
        &self.composed
    }

    pub fn into_composed(self) -> SLHSystem {
        self.composed
    }
}

/// `A ▷ B` on `C^{d_A} ⊗ C^{d_B}` with initial state `ψ_A ⊗ ψ_B`.
pub fn series_product(a: &SLHSystem, b: &SLHSystem) -> Result<CascadedSystem> {
    let composed = compose(a, b)?;
    Ok(CascadedSystem { parts: vec![a.clone(), b.clone()], composed })
}

/// Left fold of the series product over `parts` (upstream first).
pub fn cascade(parts: &[SLHSystem]) -> Result<CascadedSystem> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| FlyqError::InvalidArgument("cascade needs at least one system".into()))?;
    let mut composed = first.clone();
    for p in rest {
        composed = compose(&composed, p)?;
    }
    Ok(CascadedSystem { parts: parts.to_vec(), composed })
}

fn compose(a: &SLHSystem, b: &SLHSystem) -> Result<SLHSystem> {
    let t_final = a.t_final();
    if (t_final - b.t_final()).abs() > HORIZON_TOL * (1.0 + t_final) {
        return Err(FlyqError::InvalidSchedule(format!(
            "horizons differ: upstream {} vs downstream {}",
            t_final,
            b.t_final()
        )));
    }
    let (da, db) = (a.dim(), b.dim());
    let (ia, ib) = (OperatorMatrix::identity(da), OperatorMatrix::identity(db));

    let (ha, hb) = (Arc::clone(a.hamiltonian_fn()), Arc::clone(b.hamiltonian_fn()));
    let (la, lb) = (Arc::clone(a.coupling_fn()), Arc::clone(b.coupling_fn()));
    let (ia_h, ib_h) = (ia.clone(), ib.clone());
    let (la_h, lb_h) = (Arc::clone(&la), Arc::clone(&lb));
    let hamiltonian = Arc::new(move |t: f64| {
        let (la, lb) = (la_h(t), lb_h(t));
        let exchange = &la.kron(&lb.adjoint()) - &la.adjoint().kron(&lb);
        let local = &ha(t).kron(&ib_h) + &ia_h.kron(&hb(t));
        // 1/(2i) = −i/2
        &local + &exchange.scale(C64::new(0.0, -0.5))
    });
    let (ia_l, ib_l) = (ia.clone(), ib.clone());
    let coupling = Arc::new(move |t: f64| &la(t).kron(&ib_l) + &ia_l.kron(&lb(t)));

    let initial = a.initial_state().tensor(b.initial_state());
    let mut impulses: Vec<Impulse> = Vec::new();
    let mut times: Vec<f64> = a.impulses().iter().chain(b.impulses()).map(|i| i.time).collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|x, y| (*x - *y).abs() <= HORIZON_TOL);
    for t in times {
        let ua = a.impulses().iter().find(|i| (i.time - t).abs() <= HORIZON_TOL).map(|i| &i.unitary);
        let ub = b.impulses().iter().find(|i| (i.time - t).abs() <= HORIZON_TOL).map(|i| &i.unitary);
        let u = ua.unwrap_or(&ia).kron(ub.unwrap_or(&ib));
        impulses.push(Impulse::new(t, u)?);
    }

    SLHSystem::new(da * db, hamiltonian, coupling, initial, t_final)?
        .with_breakpoints(a.breakpoints().iter().chain(b.breakpoints()).copied())
        .with_rate_bound(a.rate_bound() + b.rate_bound())
        .with_ground_index(a.ground_index() * db + b.ground_index())?
        .with_impulses(impulses)
}

/// Real samples `values[k]` at strictly increasing `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(FlyqError::DimensionMismatch { expected: times.len(), found: values.len() });
        }
        if times.len() < 2 {
            return Err(FlyqError::InvalidArgument("need at least two samples".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FlyqError::Ordering("sample times must be strictly increasing".into()));
        }
        if times.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(FlyqError::InvalidArgument("non-finite sample".into()));
        }
        Ok(Self { times, values })
    }

    /// Samples `f` at `n` uniformly spaced points of `[a, b]`.
    pub fn from_fn(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || !(b > a) {
            return Err(FlyqError::InvalidArgument(format!("cannot sample [{a}, {b}] with {n} points")));
        }
        let times: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    /// Linear interpolation; zero outside the sampled range.
    pub fn eval(&self, t: f64) -> f64 {
        let (first, last) = (self.times[0], *self.times.last().unwrap());
        if t < first || t > last {
            return 0.0;
        }
        let k = self.times.partition_point(|&x| x <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        self.values[k - 1] * (1.0 - s) + self.values[k] * s
    }

    fn is_uniform(&self) -> bool {
        let n = self.times.len() - 1;
        let h = (self.times[n] - self.times[0]) / n as f64;
        self.times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignOptions {
    pub gamma_max: f64,
    pub tail_floor: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self { gamma_max: DEFAULT_GAMMA_MAX, tail_floor: DEFAULT_TAIL_FLOOR }
    }
}

/// Controls of an undriven qubit that emits `ν(τ) e^{iφ(τ)}`:
/// `γ(τ) = ν²(τ) / (2 ∫_τ^∞ ν²)`, `ε(τ) = −φ'(τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDesign {
    pub times: Vec<f64>,
    /// `ν` after rescaling to unit norm.
    pub nu: Vec<f64>,
    pub phi: Vec<f64>,
    pub gamma: Vec<f64>,
    pub epsilon: Vec<f64>,
    /// `∫_τ^∞ ν²` at each sample.
    pub tail_mass: Vec<f64>,
    /// `∫ ν²` of the samples as given.
    pub input_norm: f64,
    /// Target mass on intervals where `γ` was clipped to the cap.
    pub clipped_mass: f64,
    pub options: DesignOptions,
}

pub fn design_source(nu: &SampledFunction, phi: &SampledFunction) -> Result<SourceDesign> {
    design_source_with(nu, phi, DesignOptions::default())
}

pub fn design_source_with(nu: &SampledFunction, phi: &SampledFunction, options: DesignOptions) -> Result<SourceDesign> {
    if nu.times != phi.times {
        return Err(FlyqError::InvalidArgument("ν and φ must share sample times".into()));
    }
    if !nu.is_uniform() {
        return Err(FlyqError::InvalidArgument("ν must be sampled on a uniform grid".into()));
    }
    if nu.times[0] != 0.0 {
        return Err(FlyqError::InvalidArgument("samples must start at τ = 0".into()));
    }
    if nu.values.iter().any(|&v| v < 0.0) {
        return Err(FlyqError::InvalidArgument("ν must be nonnegative".into()));
    }
    if !(options.gamma_max > 0.0 && options.tail_floor >= 0.0) {
        return Err(FlyqError::InvalidArgument("design cap and floor must be positive".into()));
    }
    let t = &nu.times;
    let n = t.len();
    let sq: Vec<f64> = nu.values.iter().map(|v| v * v).collect();
    let input_norm = quad::trapezoid(t, &sq);
    if !(input_norm.is_finite() && input_norm > 0.0) {
        return Err(FlyqError::Normalization(format!("target has norm {input_norm}; nothing to emit")));
    }
    if (input_norm - 1.0).abs() > 1e-4 {
        log::warn!("target norm {input_norm:.6} rescaled to 1");
    }
    let scale = input_norm.sqrt().recip();
    let nu_n: Vec<f64> = nu.values.iter().map(|v| v * scale).collect();
    let sq: Vec<f64> = sq.iter().map(|v| v / input_norm).collect();

    let mut tail = vec![0.0; n];
    for k in (0..n - 1).rev() {
        tail[k] = tail[k + 1] + 0.5 * (t[k + 1] - t[k]) * (sq[k] + sq[k + 1]);
    }
    let mut clipped = vec![false; n];
    let gamma: Vec<f64> = (0..n)
        .map(|k| {
            let g = if tail[k] < options.tail_floor { f64::INFINITY } else { sq[k] / (2.0 * tail[k]) };
            if g > options.gamma_max {
                clipped[k] = true;
                options.gamma_max
            } else {
                g
            }
        })
        .collect();
    let mut clipped_mass = 0.0;
    for k in 0..n - 1 {
        if clipped[k] || clipped[k + 1] {
            clipped_mass += 0.5 * (t[k + 1] - t[k]) * (sq[k] + sq[k + 1]);
        }
    }
    if clipped_mass > 1e-6 {
        log::warn!("designed coupling clipped at {}; {clipped_mass:.3e} of the target is lost", options.gamma_max);
    }

    let p = &phi.values;
    let epsilon: Vec<f64> = (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            -(p[b] - p[a]) / (t[b] - t[a])
        })
        .collect();

    Ok(SourceDesign {
        times: t.clone(),
        nu: nu_n,
        phi: p.clone(),
        gamma,
        epsilon,
        tail_mass: tail,
        input_norm,
        clipped_mass,
        options,
    })
}

/// Errors of a designed source simulated forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTrip {
    /// `‖ |ξ^τ| − ν ‖_{L²}` over the whole horizon.
    pub l2_error: f64,
    pub max_abs_error: f64,
    /// Largest `|arg ξ^τ − φ(τ)|` where `ν > 0.05`.
    pub max_phase_error: f64,
}

impl SourceDesign {
    pub fn support_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn gamma_waveform(&self) -> Waveform<f64> {
        self.samples_waveform(&self.gamma)
    }

    pub fn epsilon_waveform(&self) -> Waveform<f64> {
        self.samples_waveform(&self.epsilon)
    }

    fn samples_waveform(&self, values: &[f64]) -> Waveform<f64> {
        let seg = Segment::Samples { start: 0.0, end: self.support_end(), values: values.to_vec() };
        Waveform::new(vec![seg], Some(*values.last().unwrap())).expect("design samples form a valid waveform")
    }

    /// Target amplitude `ν(τ) e^{iφ(τ)}`, linearly interpolated.
    pub fn target(&self, tau: f64) -> C64 {
        if tau > self.support_end() {
            return C64::new(0.0, 0.0);
        }
        let nu = SampledFunction { times: self.times.clone(), values: self.nu.clone() };
        let phi = SampledFunction { times: self.times.clone(), values: self.phi.clone() };
        C64::from_polar(nu.eval(tau), phi.eval(tau))
    }

    pub fn schedule(&self, t_final: Option<f64>) -> Result<ControlSchedule> {
        let t_final = t_final.unwrap_or(self.support_end());
        ControlSchedule::new(Waveform::zero(), self.epsilon_waveform(), self.gamma_waveform(), vec![], Some(t_final))
    }

    /// Source qubit prepared in `e^{iφ(0)}|1⟩`, so the emitted phase starts
    /// at `φ(0)`.
    pub fn system(&self, t_final: Option<f64>) -> Result<SLHSystem> {
        let sys = qubit_system(&self.schedule(t_final)?)?;
        let state = QuantumState::normalized(vec![C64::new(0.0, 0.0), C64::from_polar(1.0, self.phi[0])])?;
        sys.with_initial_state(state)
    }

    /// Simulates the source on `[0, support_end]` with the given step and
    /// compares the emitted packet with the target.
    pub fn round_trip(&self, step: f64) -> Result<RoundTrip> {
        let sys = self.system(None)?;
        let settings = SimulationSettings { step: Some(step), ell_max: 1, ..Default::default() };
        let sim = simulate(&sys, &settings)?;
        let level = sim.tensor.level(1)?;
        let grid = level.grid();
        let mut sq = Vec::with_capacity(grid.len());
        let (mut max_abs, mut max_phase) = (0.0f64, 0.0f64);
        for (&t, &xi) in grid.iter().zip(level.values()) {
            let target = self.target(t);
            let d = xi.norm() - target.norm();
            sq.push(d * d);
            max_abs = max_abs.max(d.abs());
            if target.norm() > 0.05 {
                max_phase = max_phase.max((xi * target.conj()).arg().abs());
            }
        }
        Ok(RoundTrip { l2_error: quad::trapezoid(grid, &sq).sqrt(), max_abs_error: max_abs, max_phase_error: max_phase })
    }
}

/// Incoming packet from `incoming` scattered by `b`: the designed source,
/// run on `b`'s horizon, is cascaded into `b`.
pub fn transformation_scenario(incoming: &SourceDesign, b: &SLHSystem) -> Result<CascadedSystem> {
    if b.t_final() + HORIZON_TOL < incoming.support_end() {
        return Err(FlyqError::OutOfHorizon { time: incoming.support_end(), horizon: b.t_final() });
    }
    series_product(&incoming.system(Some(b.t_final()))?, b)
}

/// Excited undriven qubit with constant rate `gamma0`; emits
/// `√(2γ_0) e^{−γ_0 τ}`.
pub fn exponential_source(gamma0: f64, t_final: f64) -> Result<SLHSystem> {
    let sys = qubit_system(&ControlSchedule::idle(gamma0, Some(t_final))?)?;
    sys.with_initial_state(QuantumState::basis(2, 1))
}

/// Catching template: a ground-state qubit with coupling `absorber_gamma`
/// downstream of the designed source. The catch succeeded with probability
/// `|⟨0,1| V(T) |ψ_0⟩|²`, see [`absorbed_probability`].
pub fn catching_scenario(incoming: &SourceDesign, absorber_gamma: Waveform<f64>, t_final: f64) -> Result<CascadedSystem> {
    let schedule = ControlSchedule::new(Waveform::zero(), Waveform::zero(), absorber_gamma, vec![], Some(t_final))?;
    transformation_scenario(incoming, &qubit_system(&schedule)?)
}

/// Probability that a qubit pair ends with the photon stored downstream and
/// nothing emitted: `|⟨0,1| V(T) |ψ_0⟩|²`.
pub fn absorbed_probability(table: &crate::propagator::PropagatorTable, system: &SLHSystem) -> f64 {
    let out = table.v_final().apply(system.initial_state().amplitudes());
    out.get(1).map_or(0.0, |z| z.norm_sqr())
}
