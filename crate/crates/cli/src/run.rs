use std::time::{Instant, SystemTime, UNIX_EPOCH};

use flyq_core::optimize::{evaluate_objective, run_ga, GAConfig, PulseParametrization};
use flyq_core::propagator::default_step;
use flyq_core::wavepacket::{simulate, Simulation};
use flyq_core::{ControlSchedule, SLHSystem, SimulationSettings};
use serde_json::{json, Map, Value};

use crate::config::{Prepared, ScenarioConfig};
use crate::output::{self, Bundle};
use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Takes precedence over the config's seeds.
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Validates and runs a scenario; nothing touches the file system.
pub fn execute(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<Bundle, CliError> {
    let prepared = cfg.prepare()?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = opts.threads {
            if n == 0 {
                return Err(CliError::config("--threads must be ≥ 1"));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Io(format!("thread pool: {e}")))?
    };
    let start = Instant::now();
    let mut bundle = pool.install(|| run_prepared(cfg, prepared, opts))?;

    let d = &mut bundle.diagnostics;
    d.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    d.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    d.insert("runtime_seconds".into(), json!(start.elapsed().as_secs_f64()));
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    d.insert("timestamp_unix".into(), json!(now));
    Ok(bundle)
}

fn run_prepared(cfg: &ScenarioConfig, prepared: Prepared, opts: &RunOptions) -> Result<Bundle, CliError> {
    let mut bundle = Bundle::default();
    bundle.diagnostics.insert("mode".into(), serde_json::to_value(cfg.mode).expect("mode serializes"));
    match prepared {
        Prepared::Simulate { system, schedule } => {
            let sim = simulate(&system, &cfg.simulation)?;
            emit_simulation(&mut bundle, cfg, &sim, Some(&schedule))?;
        }
        Prepared::Design { design } => {
            let system = design.system(cfg.simulation.t_final)?;
            let step = cfg.simulation.step.unwrap_or_else(|| default_step(&system));
            let sim = simulate(&system, &cfg.simulation)?;
            let rt = design.round_trip(step)?;
            bundle.push("design.csv", output::design_csv(&design));
            emit_simulation(&mut bundle, cfg, &sim, None)?;
            bundle.diagnostics.insert(
                "design".into(),
                json!({
                    "input_norm": design.input_norm,
                    "clipped_mass": design.clipped_mass,
                    "gamma_max": design.options.gamma_max,
                    "round_trip": {
                        "step": step,
                        "l2_error": rt.l2_error,
                        "max_abs_error": rt.max_abs_error,
                        "max_phase_error": rt.max_phase_error,
                    },
                }),
            );
        }
        Prepared::Optimize { param, scenario, objective, ga } => {
            let seed = opts.seed.or(cfg.seed).unwrap_or(ga.seed);
            let ga = GAConfig { seed, ..ga };
            let res = run_ga(&ga, &param, &scenario, &objective)?;
            let recheck = evaluate_objective(&res.best_params, &param, &scenario, &objective)?;
            let schedule = scenario.schedule(&res.best_params, &param)?;
            let system = scenario.system(&res.best_params, &param)?;
            let sim = simulate(&system, &cfg.simulation)?;
            bundle.push("history.csv", output::history_csv(&res.history));
            bundle.push("best_params.csv", output::params_csv(&labels(&param), &res.best_params));
            emit_simulation(&mut bundle, cfg, &sim, Some(&schedule))?;
            bundle.diagnostics.insert(
                "optimization".into(),
                json!({
                    "seed": seed,
                    "best_score": res.best_score,
                    "best_score_recomputed": recheck,
                    "converged": res.converged,
                    "generations": res.history.len() - 1,
                    "evaluations": res.evaluations,
                }),
            );
        }
    }
    Ok(bundle)
}

fn labels(param: &PulseParametrization) -> Vec<String> {
    let n = param.n_params() / param.channels.len();
    param
        .channels
        .iter()
        .flat_map(|c| {
            let name = serde_json::to_value(c.channel).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            (0..n).map(move |k| format!("{name}[{k}]"))
        })
        .collect()
}

fn emit_simulation(
    bundle: &mut Bundle,
    cfg: &ScenarioConfig,
    sim: &Simulation,
    schedule: Option<&ControlSchedule>,
) -> Result<(), CliError> {
    let ladder = &sim.ladder;
    if !ladder.total().is_finite() {
        return Err(CliError::Numeric("photon-number probabilities are not finite".into()));
    }
    bundle.push("ladder.csv", output::ladder_csv(ladder));
    if cfg.output.wavepackets {
        for (ell, name) in [(1, "wavepacket_1.csv"), (2, "wavepacket_2.csv")] {
            if let Ok(level) = sim.tensor.level(ell) {
                let bytes = if ell == 1 { output::one_photon_csv(level) } else { output::two_photon_csv(level) };
                bundle.push(name, bytes);
            }
        }
    }
    if let (Some(s), true) = (schedule, cfg.output.controls) {
        bundle.push("controls.csv", output::controls_csv(s, sim.table.grid()));
    }
    let mut d = Map::new();
    d.insert("probabilities".into(), json!(ladder.probs));
    d.insert("total_probability".into(), json!(ladder.total()));
    d.insert("residual_excitation".into(), json!(sim.residual_excitation()));
    d.insert("quadrature_error_estimate".into(), json!(ladder.quadrature_error_estimate));
    d.insert("level_error_estimates".into(), json!(ladder.level_error_estimates));
    d.insert("integrator_error_estimate".into(), json!(sim.integrator_error_estimate));
    d.insert("error_estimate".into(), json!(sim.error_estimate()));
    d.insert("max_contraction_violation".into(), json!(sim.table.max_contraction_violation()));
    d.insert("grid_points".into(), json!(sim.table.len()));
    d.insert("step".into(), json!(sim.table.step()));
    d.insert("t_final".into(), json!(sim.table.t_final()));
    bundle.diagnostics.insert("simulation".into(), Value::Object(d));
    Ok(())
}

/// The system a simulate-mode config describes, for callers that want the
/// library objects rather than files.
pub fn build_system(cfg: &ScenarioConfig) -> Result<(SLHSystem, SimulationSettings), CliError> {
    match cfg.prepare()? {
        Prepared::Simulate { system, .. } => Ok((system, cfg.simulation.clone())),
        Prepared::Design { design } => Ok((design.system(cfg.simulation.t_final)?, cfg.simulation.clone())),
        Prepared::Optimize { .. } => Err(CliError::config("optimize scenarios have no fixed system")),
    }
}
