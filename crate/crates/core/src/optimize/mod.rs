//! Derivative-free pulse shaping against photon-statistics objectives.
//!
//! A [`PulseParametrization`] maps a flat parameter vector to control
//! waveforms on a window; a [`PulseScenario`] turns those controls into a
//! (possibly cascaded) system; an [`Objective`] scores the simulated output.
//! [`run_ga`] searches the parameter box with a seeded genetic algorithm.

mod ga;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use ga::{run_ga_with, Crossover, GAConfig, GAResult, GenerationStats};

use crate::error::{FlyqError, Result};
use crate::network::{exponential_source, series_product, SampledFunction, SourceDesign};
use crate::operators::{qubit_system, ControlSchedule, Impulse, QuantumState, SLHSystem, Segment, Waveform};
use crate::quad;
use crate::wavepacket::{simulate, Simulation, SimulationSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Real part of the drive `u`.
    UX,
    /// Imaginary part of the drive `u`.
    UY,
    Epsilon,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Basis {
    /// Equal-width bins, one value each.
    PiecewiseConstant { n_bins: usize },
    /// Equally spaced knots joined linearly.
    PiecewiseLinear { n_knots: usize },
}

impl Basis {
    fn len(&self) -> usize {
        match *self {
            Basis::PiecewiseConstant { n_bins } => n_bins,
            Basis::PiecewiseLinear { n_knots } => n_knots,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub channel: Channel,
    pub lo: f64,
    pub hi: f64,
}

/// Parameters are laid out channel by channel, each channel holding
/// `basis.len()` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseParametrization {
    pub basis: Basis,
    pub window: [f64; 2],
    pub channels: Vec<ChannelSpec>,
}

impl PulseParametrization {
    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.window;
        if !(a.is_finite() && b.is_finite() && a >= 0.0 && b > a) {
            return Err(FlyqError::InvalidArgument(format!("window [{a}, {b}] is not a valid interval")));
        }
        let min_len = match self.basis {
            Basis::PiecewiseConstant { .. } => 1,
            Basis::PiecewiseLinear { .. } => 2,
        };
        if self.basis.len() < min_len {
            return Err(FlyqError::InvalidArgument(format!("basis needs at least {min_len} values per channel")));
        }
        if self.channels.is_empty() {
            return Err(FlyqError::InvalidArgument("no channels to optimize".into()));
        }
        for (i, c) in self.channels.iter().enumerate() {
            if !(c.lo.is_finite() && c.hi.is_finite() && c.lo <= c.hi) {
                return Err(FlyqError::InvalidArgument(format!("bounds [{}, {}] of {:?} are invalid", c.lo, c.hi, c.channel)));
            }
            if c.channel == Channel::Gamma && c.lo < 0.0 {
                return Err(FlyqError::InvalidArgument("gamma channel must be bounded below by 0".into()));
            }
            if self.channels[..i].iter().any(|d| d.channel == c.channel) {
                return Err(FlyqError::InvalidArgument(format!("channel {:?} listed twice", c.channel)));
            }
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        self.basis.len() * self.channels.len()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.channels
            .iter()
            .flat_map(|c| std::iter::repeat((c.lo, c.hi)).take(self.basis.len()))
            .collect()
    }

    fn channel_values<'a>(&self, params: &'a [f64], channel: Channel) -> Option<&'a [f64]> {
        let n = self.basis.len();
        self.channels.iter().position(|c| c.channel == channel).map(|i| &params[i * n..(i + 1) * n])
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(FlyqError::DimensionMismatch { expected: self.n_params(), found: params.len() });
        }
        for (x, (lo, hi)) in params.iter().zip(self.bounds()) {
            if !(*x >= lo && *x <= hi) {
                return Err(FlyqError::InvalidArgument(format!("parameter {x} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Waveform of one channel: `outside` before the window and after it,
    /// the parametrized shape inside.
    fn waveform<V: crate::operators::WaveValue>(&self, values: &[V], outside: V) -> Result<Waveform<V>> {
        let [a, b] = self.window;
        let mut segments = Vec::new();
        if a > 0.0 {
            segments.push(Segment::Const { start: 0.0, end: a, value: outside });
        }
        match self.basis {
            Basis::PiecewiseConstant { n_bins } => {
                let h = (b - a) / n_bins as f64;
                for (k, &v) in values.iter().enumerate() {
                    let end = if k + 1 == n_bins { b } else { a + h * (k + 1) as f64 };
                    segments.push(Segment::Const { start: a + h * k as f64, end, value: v });
                }
            }
            Basis::PiecewiseLinear { .. } => {
                segments.push(Segment::Samples { start: a, end: b, values: values.to_vec() });
            }
        }
        Waveform::new(segments, Some(outside))
    }
}

/// Incoming single photon for a transformation scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum IncomingPhoton {
    /// `√(2γ_0) e^{−γ_0 τ}` from an excited source with constant rate.
    Exponential { gamma0: f64 },
    Designed(SourceDesign),
}

/// The controlled qubit `B`, optionally fed by an incoming photon. Channels
/// not optimized keep the base values; optimized channels take the base
/// value outside the window (zero for the drive).
#[derive(Debug, Clone, PartialEq)]
pub struct PulseScenario {
    pub gamma: f64,
    pub detuning: f64,
    pub excited: bool,
    pub incoming: Option<IncomingPhoton>,
    pub impulses: Vec<Impulse>,
    pub t_final: f64,
}

impl PulseScenario {
    /// Controls of `B` for a parameter vector.
    pub fn schedule(&self, params: &[f64], param: &PulseParametrization) -> Result<ControlSchedule> {
        param.check_params(params)?;
        let ux = param.channel_values(params, Channel::UX);
        let uy = param.channel_values(params, Channel::UY);
        let zero = C64::new(0.0, 0.0);
        let drive = if ux.is_some() || uy.is_some() {
            let n = param.basis.len();
            let values: Vec<C64> = (0..n)
                .map(|k| C64::new(ux.map_or(0.0, |v| v[k]), uy.map_or(0.0, |v| v[k])))
                .collect();
            param.waveform(&values, zero)?
        } else {
            Waveform::zero()
        };
        let detuning = match param.channel_values(params, Channel::Epsilon) {
            Some(v) => param.waveform(v, self.detuning)?,
            None => Waveform::constant(self.detuning),
        };
        let coupling = match param.channel_values(params, Channel::Gamma) {
            Some(v) => param.waveform(v, self.gamma)?,
            None => Waveform::constant(self.gamma),
        };
        ControlSchedule::new(drive, detuning, coupling, self.impulses.clone(), Some(self.t_final))
    }

    /// The full system to simulate: `B` alone, or source `▷ B`.
    pub fn system(&self, params: &[f64], param: &PulseParametrization) -> Result<SLHSystem> {
        let mut b = qubit_system(&self.schedule(params, param)?)?;
        if self.excited {
            b = b.with_initial_state(QuantumState::basis(2, 1))?;
        }
        match &self.incoming {
            None => Ok(b),
            Some(IncomingPhoton::Exponential { gamma0 }) => {
                Ok(series_product(&exponential_source(*gamma0, self.t_final)?, &b)?.into_composed())
            }
            Some(IncomingPhoton::Designed(d)) => Ok(crate::network::transformation_scenario(d, &b)?.into_composed()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    MaximizeP(usize),
    /// `−weight · ∫ |ξ^τ − ν(τ) e^{iφ(τ)}|² dτ` on the one-photon component.
    MatchShape { nu: SampledFunction, phi: SampledFunction, weight: f64 },
    WeightedSum(Vec<(f64, ObjectiveKind)>),
}

impl ObjectiveKind {
    fn ell_needed(&self) -> usize {
        match self {
            ObjectiveKind::MaximizeP(l) => *l,
            ObjectiveKind::MatchShape { .. } => 1,
            ObjectiveKind::WeightedSum(terms) => terms.iter().map(|(_, k)| k.ell_needed()).max().unwrap_or(0),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ObjectiveKind::MaximizeP(_) => Ok(()),
            ObjectiveKind::MatchShape { nu, weight, .. } => {
                if !(*weight >= 0.0) {
                    return Err(FlyqError::InvalidArgument("shape weight must be ≥ 0".into()));
                }
                let sq: Vec<f64> = nu.values.iter().map(|v| v * v).collect();
                let norm = quad::trapezoid(&nu.times, &sq);
                if (norm - 1.0).abs() > 1e-4 {
                    return Err(FlyqError::Normalization(format!("target shape has norm {norm}")));
                }
                Ok(())
            }
            ObjectiveKind::WeightedSum(terms) => {
                for (w, k) in terms {
                    if !(*w >= 0.0) {
                        return Err(FlyqError::InvalidArgument("objective weights must be ≥ 0".into()));
                    }
                    k.validate()?;
                }
                Ok(())
            }
        }
    }

    fn score(&self, sim: &Simulation) -> Result<f64> {
        match self {
            ObjectiveKind::MaximizeP(l) => Ok(sim.ladder.probs[*l]),
            ObjectiveKind::MatchShape { nu, phi, weight } => {
                let level = sim.tensor.level(1)?;
                let sq: Vec<f64> = level
                    .grid()
                    .iter()
                    .zip(level.values())
                    .map(|(&t, &xi)| (xi - C64::from_polar(nu.eval(t), phi.eval(t))).norm_sqr())
                    .collect();
                Ok(-weight * quad::trapezoid(level.grid(), &sq))
            }
            ObjectiveKind::WeightedSum(terms) => {
                let mut acc = 0.0;
                for (w, k) in terms {
                    acc += w * k.score(sim)?;
                }
                Ok(acc)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub settings: SimulationSettings,
}

impl Objective {
    pub fn new(kind: ObjectiveKind, settings: SimulationSettings) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind, settings })
    }

    /// Settings with `ell_max` reduced to what the objective reads.
    pub fn effective_settings(&self) -> SimulationSettings {
        SimulationSettings { ell_max: self.kind.ell_needed(), integrator_check: false, ..self.settings.clone() }
    }
}

/// Simulates the scenario for `params` with the objective's settings.
pub fn simulate_candidate(
    params: &[f64],
    param: &PulseParametrization,
    scenario: &PulseScenario,
    objective: &Objective,
) -> Result<Simulation> {
    let sys = scenario.system(params, param)?;
    simulate(&sys, &objective.effective_settings())
}

/// Score of one parameter vector; higher is better. Numerical failures score
/// `−∞`; malformed parameters are an error.
pub fn evaluate_objective(
    params: &[f64],
    param: &PulseParametrization,
    scenario: &PulseScenario,
    objective: &Objective,
) -> Result<f64> {
    param.check_params(params)?;
    let outcome = simulate_candidate(params, param, scenario, objective).and_then(|sim| objective.kind.score(&sim));
    match outcome {
        Ok(s) if s.is_finite() => Ok(s),
        Ok(s) => {
            log::debug!("non-finite score {s}");
            Ok(f64::NEG_INFINITY)
        }
        Err(e) if e.is_numeric() => {
            log::debug!("candidate failed: {e}");
            Ok(f64::NEG_INFINITY)
        }
        Err(e) => Err(e),
    }
}

/// Genetic search over the parametrization's box.
pub fn run_ga(
    config: &GAConfig,
    param: &PulseParametrization,
    scenario: &PulseScenario,
    objective: &Objective,
) -> Result<GAResult> {
    param.validate()?;
    // surface configuration errors once instead of scoring every candidate −∞
    let probe: Vec<f64> = param.bounds().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    evaluate_objective(&probe, param, scenario, objective)?;
    run_ga_with(config, &param.bounds(), |x| {
        evaluate_objective(x, param, scenario, objective).unwrap_or(f64::NEG_INFINITY)
    })
}
