//! Scenario configuration: JSON schema, parsing and validation.
//!
//! Complex numbers are `[re, im]` pairs; waveforms are either a bare
//! constant or `{"segments": [...], "tail": v}` with typed segments
//! (`const`, `linear`, `exp`, `gaussian`, `samples`).

use std::path::Path;

use flyq_core::network::{design_source_with, exponential_source, series_product, DesignOptions, SampledFunction, SourceDesign};
use flyq_core::optimize::{
    GAConfig, IncomingPhoton, Objective, ObjectiveKind, PulseParametrization, PulseScenario,
};
use flyq_core::{qubit_system, ControlSchedule, FlyqError, Impulse, QuantumState, SLHSystem, SimulationSettings, Waveform, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Extra Hermiticity probes per segment used by `validate`.
const HERMITIAN_PROBES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Emission from a driven qubit in vacuum.
    Generate,
    /// A photon from an auxiliary source scattered by the qubit.
    Transform,
    /// Couplings and detunings of a source emitting a target packet.
    DesignSource,
    /// Genetic search for the qubit's drive.
    Optimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub mode: Mode,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub incoming: Option<IncomingConfig>,
    #[serde(default)]
    pub target: Option<TargetConfig>,
    #[serde(default)]
    pub simulation: SimulationSettings,
    #[serde(default)]
    pub optimization: Option<OptimizationConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Ground,
    Excited,
    /// Normalized amplitudes `[c_0, c_1]`.
    Amplitudes(Vec<C64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpulseConfig {
    pub time: f64,
    /// Pulse area `θ e^{iα}` of `u(t) = area · δ(t − time)`; `[π, 0]` is a π
    /// flip about x.
    pub area: C64,
}

/// The driven qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "two")]
    pub dimension: usize,
    pub initial_state: InitialState,
    #[serde(default = "Waveform::zero")]
    pub drive: Waveform<C64>,
    #[serde(default = "Waveform::zero")]
    pub detuning: Waveform<f64>,
    pub coupling: Waveform<f64>,
    #[serde(default)]
    pub impulses: Vec<ImpulseConfig>,
    #[serde(default)]
    pub t_final: Option<f64>,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IncomingConfig {
    /// `√(2γ_0) e^{−γ_0 τ}`.
    Exponential { gamma0: f64 },
    Designed { target: TargetConfig },
}

/// Real function of `τ` on the target support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeConfig {
    Gaussian { center: f64, width: f64 },
    Exponential { rate: f64 },
    /// `offset + slope · τ`.
    Linear { offset: f64, slope: f64 },
    /// Uniform samples over the support, end points included.
    Samples { values: Vec<f64> },
}

impl ShapeConfig {
    fn sample(&self, support: [f64; 2], n: usize) -> Result<SampledFunction, CliError> {
        let [a, b] = support;
        let f = match self {
            ShapeConfig::Samples { values } => {
                if values.len() != n {
                    return Err(CliError::config(format!(
                        "shape has {} samples, target asks for {n}",
                        values.len()
                    )));
                }
                let times = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
                return Ok(SampledFunction::new(times, values.clone())?);
            }
            ShapeConfig::Gaussian { center, width } => {
                if !(*width > 0.0) {
                    return Err(CliError::config("gaussian width must be positive"));
                }
                let (c, w) = (*center, *width);
                Box::new(move |t: f64| (-0.5 * ((t - c) / w).powi(2)).exp()) as Box<dyn Fn(f64) -> f64>
            }
            ShapeConfig::Exponential { rate } => {
                let r = *rate;
                Box::new(move |t: f64| (-r * t).exp())
            }
            ShapeConfig::Linear { offset, slope } => {
                let (o, s) = (*offset, *slope);
                Box::new(move |t: f64| o + s * t)
            }
        };
        Ok(SampledFunction::from_fn(f, a, b, n)?)
    }
}

fn zero_phase() -> ShapeConfig {
    ShapeConfig::Linear { offset: 0.0, slope: 0.0 }
}

/// Target packet `ν(τ) e^{iφ(τ)}` sampled on `support`; `ν` is rescaled to
/// unit norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub nu: ShapeConfig,
    #[serde(default = "zero_phase")]
    pub phi: ShapeConfig,
    pub support: [f64; 2],
    pub samples: usize,
    #[serde(default = "default_gamma_max")]
    pub gamma_max: f64,
}

fn default_gamma_max() -> f64 {
    DesignOptions::default().gamma_max
}

impl TargetConfig {
    /// `(ν, φ)` with `ν` normalized.
    pub fn sampled(&self) -> Result<(SampledFunction, SampledFunction), CliError> {
        let [a, b] = self.support;
        if a != 0.0 || !(b > a && b.is_finite()) {
            return Err(CliError::config(format!("target support [{a}, {b}] must start at 0 and be nonempty")));
        }
        if self.samples < 2 {
            return Err(CliError::config("target needs at least 2 samples"));
        }
        let nu = self.nu.sample(self.support, self.samples)?;
        let phi = self.phi.sample(self.support, self.samples)?;
        if nu.values.iter().any(|&v| v < 0.0) {
            return Err(CliError::config("target amplitude ν must be nonnegative"));
        }
        let sq: Vec<f64> = nu.values.iter().map(|v| v * v).collect();
        let norm = flyq_core::quad::trapezoid(&nu.times, &sq);
        if !(norm.is_finite() && norm > 1e-300) {
            return Err(FlyqError::Normalization(format!("target has norm {norm}; it cannot be normalized")).into());
        }
        let scale = norm.sqrt().recip();
        let nu = SampledFunction::new(nu.times, nu.values.iter().map(|v| v * scale).collect())?;
        Ok((nu, phi))
    }

    pub fn design(&self) -> Result<SourceDesign, CliError> {
        let (nu, phi) = self.sampled()?;
        let options = DesignOptions { gamma_max: self.gamma_max, ..Default::default() };
        Ok(design_source_with(&nu, &phi, options)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    MaximizeP { ell: usize },
    MatchShape { target: TargetConfig, weight: f64 },
    WeightedSum { terms: Vec<WeightedTerm> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedTerm {
    pub weight: f64,
    pub objective: ObjectiveConfig,
}

impl ObjectiveConfig {
    fn kind(&self) -> Result<ObjectiveKind, CliError> {
        Ok(match self {
            ObjectiveConfig::MaximizeP { ell } => ObjectiveKind::MaximizeP(*ell),
            ObjectiveConfig::MatchShape { target, weight } => {
                let (nu, phi) = target.sampled()?;
                ObjectiveKind::MatchShape { nu, phi, weight: *weight }
            }
            ObjectiveConfig::WeightedSum { terms } => ObjectiveKind::WeightedSum(
                terms.iter().map(|t| Ok((t.weight, t.objective.kind()?))).collect::<Result<_, CliError>>()?,
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationConfig {
    pub parametrization: PulseParametrization,
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub ga: GAConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Write `wavepacket_<ℓ>.csv` for ℓ = 1, 2.
    pub wavepackets: bool,
    /// Write the realized controls on the propagation grid.
    pub controls: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { wavepackets: true, controls: true }
    }
}

/// Everything a run needs, built and checked from a config.
#[derive(Debug, Clone)]
pub enum Prepared {
    Simulate { system: SLHSystem, schedule: ControlSchedule },
    Design { design: SourceDesign },
    Optimize { param: PulseParametrization, scenario: PulseScenario, objective: Objective, ga: GAConfig },
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::config(format!("malformed config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    fn require<'a, T>(&self, field: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        field.as_ref().ok_or_else(|| CliError::config(format!("mode {:?} needs a `{name}` block", self.mode)))
    }

    fn forbid<T>(&self, field: &Option<T>, name: &str) -> Result<(), CliError> {
        match field {
            Some(_) => Err(CliError::config(format!("mode {:?} does not use a `{name}` block", self.mode))),
            None => Ok(()),
        }
    }

    fn check_settings(&self) -> Result<(), CliError> {
        let s = &self.simulation;
        if let Some(step) = s.step {
            if !(step.is_finite() && step > 0.0) {
                return Err(CliError::config(format!("simulation.step = {step} must be positive")));
            }
        }
        if let Some(t) = s.t_final {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::config(format!("simulation.t_final = {t} must be positive")));
            }
        }
        if s.higher_order_points < 2 || s.min_pieces < 1 {
            return Err(CliError::config("higher_order_points must be ≥ 2 and min_pieces ≥ 1"));
        }
        if !(s.residual_warn >= 0.0) {
            return Err(CliError::config("residual_warn must be ≥ 0"));
        }
        Ok(())
    }

    /// Full validation: schema, then construction of every physical object
    /// (contiguous segments, γ ≥ 0, horizons, Hermiticity on samples).
    pub fn prepare(&self) -> Result<Prepared, CliError> {
        self.check_settings()?;
        let prepared = match self.mode {
            Mode::Generate => {
                self.forbid(&self.incoming, "incoming")?;
                self.forbid(&self.target, "target")?;
                self.forbid(&self.optimization, "optimization")?;
                let (system, schedule) = self.qubit()?;
                Prepared::Simulate { system, schedule }
            }
            Mode::Transform => {
                self.forbid(&self.target, "target")?;
                self.forbid(&self.optimization, "optimization")?;
                let (b, schedule) = self.qubit()?;
                let incoming = self.require(&self.incoming, "incoming")?;
                let system = match incoming {
                    IncomingConfig::Exponential { gamma0 } => {
                        series_product(&exponential_source(*gamma0, b.t_final())?, &b)?.into_composed()
                    }
                    IncomingConfig::Designed { target } => {
                        flyq_core::network::transformation_scenario(&target.design()?, &b)?.into_composed()
                    }
                };
                Prepared::Simulate { system, schedule }
            }
            Mode::DesignSource => {
                self.forbid(&self.system, "system")?;
                self.forbid(&self.incoming, "incoming")?;
                self.forbid(&self.optimization, "optimization")?;
                let design = self.require(&self.target, "target")?.design()?;
                Prepared::Design { design }
            }
            Mode::Optimize => {
                self.forbid(&self.target, "target")?;
                let opt = self.require(&self.optimization, "optimization")?;
                let (param, scenario) = self.pulse_scenario(opt)?;
                let objective = Objective::new(opt.objective.kind()?, self.simulation.clone())?;
                opt.ga.validate()?;
                // one candidate end to end: catches horizon and coupling errors
                let mid: Vec<f64> = param.bounds().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
                scenario.system(&mid, &param)?.check_hermitian(HERMITIAN_PROBES)?;
                Prepared::Optimize { param, scenario, objective, ga: opt.ga.clone() }
            }
        };
        if let Prepared::Simulate { system, .. } = &prepared {
            system.check_hermitian(HERMITIAN_PROBES)?;
        }
        Ok(prepared)
    }

    fn impulses(sys: &SystemConfig) -> Result<Vec<Impulse>, CliError> {
        sys.impulses.iter().map(|i| Ok(Impulse::hard_pulse(i.time, i.area)?)).collect()
    }

    fn initial_state(sys: &SystemConfig) -> Result<QuantumState, CliError> {
        Ok(match &sys.initial_state {
            InitialState::Ground => QuantumState::basis(2, 0),
            InitialState::Excited => QuantumState::basis(2, 1),
            InitialState::Amplitudes(a) => QuantumState::normalized(a.clone())?,
        })
    }

    fn qubit(&self) -> Result<(SLHSystem, ControlSchedule), CliError> {
        let sys = self.require(&self.system, "system")?;
        if sys.dimension != 2 {
            return Err(CliError::config(format!("only qubits (dimension 2) are configurable, got {}", sys.dimension)));
        }
        let t_final = self.simulation.t_final.or(sys.t_final);
        let schedule = ControlSchedule::new(
            sys.drive.clone(),
            sys.detuning.clone(),
            sys.coupling.clone(),
            Self::impulses(sys)?,
            t_final,
        )?;
        let system = qubit_system(&schedule)?.with_initial_state(Self::initial_state(sys)?)?;
        Ok((system, schedule))
    }

    fn pulse_scenario(&self, opt: &OptimizationConfig) -> Result<(PulseParametrization, PulseScenario), CliError> {
        let sys = self.require(&self.system, "system")?;
        let param = opt.parametrization.clone();
        param.validate()?;
        let excited = match sys.initial_state {
            InitialState::Ground => false,
            InitialState::Excited => true,
            InitialState::Amplitudes(_) => {
                return Err(CliError::config("optimize mode takes a ground or excited initial state"))
            }
        };
        if !sys.drive.segments().is_empty() || sys.drive.tail() != C64::new(0.0, 0.0) {
            return Err(CliError::config("optimize mode builds the drive itself; leave system.drive unset"));
        }
        if !sys.coupling.segments().is_empty() || !sys.detuning.segments().is_empty() {
            return Err(CliError::config("optimize mode takes constant base coupling and detuning"));
        }
        let t_final = self
            .simulation
            .t_final
            .or(sys.t_final)
            .ok_or_else(|| CliError::config("optimize mode needs an explicit t_final"))?;
        if t_final < param.window[1] {
            return Err(FlyqError::OutOfHorizon { time: param.window[1], horizon: t_final }.into());
        }
        let incoming = match &self.incoming {
            None => None,
            Some(IncomingConfig::Exponential { gamma0 }) => Some(IncomingPhoton::Exponential { gamma0: *gamma0 }),
            Some(IncomingConfig::Designed { target }) => Some(IncomingPhoton::Designed(target.design()?)),
        };
        let scenario = PulseScenario {
            gamma: sys.coupling.tail(),
            detuning: sys.detuning.tail(),
            excited,
            incoming,
            impulses: Self::impulses(sys)?,
            t_final,
        };
        Ok((param, scenario))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generate(extra: &str) -> String {
        format!(
            r#"{{"schema_version": 1, "mode": "generate",
                "system": {{"initial_state": "excited", "coupling": 0.5, "t_final": 20.0 {extra}}}}}"#
        )
    }

    #[test]
    fn minimal_generate_config() {
        let cfg = ScenarioConfig::from_json(&generate("")).unwrap();
        assert!(matches!(cfg.prepare().unwrap(), Prepared::Simulate { .. }));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::from_json(&generate(r#", "colour": 1"#)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn negative_coupling_segment_is_rejected() {
        let c = generate("").replace(
            r#""coupling": 0.5"#,
            r#""coupling": {"segments": [{"type": "const", "start": 0, "end": 1, "value": -0.5}]}"#,
        );
        let cfg = ScenarioConfig::from_json(&c).unwrap();
        assert_eq!(cfg.prepare().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn overlapping_segments_are_rejected() {
        let c = generate(
            r#", "drive": {"segments": [
                {"type": "const", "start": 0, "end": 2, "value": [1, 0]},
                {"type": "const", "start": 1, "end": 3, "value": [1, 0]}]}"#,
        );
        assert_eq!(ScenarioConfig::from_json(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn mode_blocks_are_checked() {
        let c = generate("").replace(r#""mode": "generate""#, r#""mode": "design_source""#);
        assert!(ScenarioConfig::from_json(&c).unwrap().prepare().is_err());
        let c = generate("").replace(r#""mode": "generate""#, r#""mode": "transform""#);
        assert!(ScenarioConfig::from_json(&c).unwrap().prepare().is_err());
    }

    #[test]
    fn wrong_schema_version() {
        let c = generate("").replace(r#""schema_version": 1"#, r#""schema_version": 7"#);
        assert!(ScenarioConfig::from_json(&c).is_err());
    }

    #[test]
    fn zero_target_cannot_be_normalized() {
        let t = TargetConfig {
            nu: ShapeConfig::Samples { values: vec![0.0; 5] },
            phi: zero_phase(),
            support: [0.0, 1.0],
            samples: 5,
            gamma_max: 1e3,
        };
        let err = t.design().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("norm"));
    }

    #[test]
    fn sampled_target_is_normalized() {
        let t = TargetConfig {
            nu: ShapeConfig::Gaussian { center: 3.0, width: 0.8 },
            phi: ShapeConfig::Linear { offset: 0.0, slope: 0.5 },
            support: [0.0, 8.0],
            samples: 801,
            gamma_max: 1e3,
        };
        let (nu, phi) = t.sampled().unwrap();
        let sq: Vec<f64> = nu.values.iter().map(|v| v * v).collect();
        assert!((flyq_core::quad::trapezoid(&nu.times, &sq) - 1.0).abs() < 1e-12);
        assert!((phi.eval(2.0) - 1.0).abs() < 1e-12);
    }
}
