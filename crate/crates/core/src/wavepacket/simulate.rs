use serde::{Deserialize, Serialize};

use super::{amplitude_levels, photon_probabilities, ProbabilityLadder, WavepacketTensor, DEFAULT_AMPLITUDE_BUDGET};
use crate::error::Result;
use crate::operators::SLHSystem;
use crate::propagator::{default_step, propagate_with, Integrator, PropagationOptions, PropagatorTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    /// Propagator step; `None` picks [`default_step`].
    pub step: Option<f64>,
    /// Overrides the system's horizon.
    pub t_final: Option<f64>,
    pub ell_max: usize,
    /// Maximum grid size for photon numbers ≥ 2.
    pub higher_order_points: usize,
    /// Per-level grid sizes for `ℓ = 2, 3, …`; levels beyond the list use
    /// `higher_order_points`.
    pub level_points: Vec<usize>,
    pub integrator: Integrator,
    pub min_pieces: usize,
    /// Amplitude storage cap, in entries.
    pub budget: usize,
    /// Residual excitation above which a warning is logged.
    pub residual_warn: f64,
    /// Repeat levels 0 and 1 at twice the step to estimate the integrator
    /// error. Costs about half a propagation.
    pub integrator_check: bool,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            step: None,
            t_final: None,
            ell_max: 3,
            higher_order_points: 400,
            level_points: Vec::new(),
            integrator: Integrator::ExpmMidpoint,
            min_pieces: 1,
            budget: DEFAULT_AMPLITUDE_BUDGET,
            residual_warn: 1e-3,
            integrator_check: true,
        }
    }
}

/// Output of [`simulate`].
#[derive(Debug, Clone)]
pub struct Simulation {
    /// Fine-grid propagator; levels 0 and 1 live on its grid.
    pub table: PropagatorTable,
    pub tensor: WavepacketTensor,
    pub ladder: ProbabilityLadder,
    /// `|P_0 + P_1|` at step `h` minus the same at `2h`; zero when the check
    /// is off.
    pub integrator_error_estimate: f64,
}

impl Simulation {
    pub fn residual_excitation(&self) -> f64 {
        self.table.residual_excitation()
    }

    /// Quadrature plus integrator estimate, a bound on `|1 − Σ P_ℓ|` up to
    /// truncation and residual excitation.
    pub fn error_estimate(&self) -> f64 {
        self.ladder.quadrature_error_estimate + self.integrator_error_estimate
    }
}

/// Propagates `system`, evaluates amplitudes up to `settings.ell_max` and
/// integrates the photon-number ladder.
///
/// Levels 0 and 1 use the full propagator grid. Higher levels use a sub-grid
/// of at most `higher_order_points` nodes that keeps every breakpoint; its
/// transfers are composed from the fine ones.
pub fn simulate(system: &SLHSystem, settings: &SimulationSettings) -> Result<Simulation> {
    let owned;
    let system = match settings.t_final {
        Some(t) if t != system.t_final() => {
            owned = system.clone().with_t_final(t)?;
            &owned
        }
        _ => system,
    };
    let step = settings.step.unwrap_or_else(|| default_step(system));
    let table = propagate_with(
        system,
        &PropagationOptions { step, integrator: settings.integrator, min_pieces: settings.min_pieces },
    )?;
    if table.residual_excitation() > settings.residual_warn {
        log::warn!(
            "residual excitation {:.3e} exceeds {:.1e}; extend t_final",
            table.residual_excitation(),
            settings.residual_warn
        );
    }

    let mut levels = amplitude_levels(&table, system, 0..=settings.ell_max.min(1), settings.budget)?;
    levels.truncate(settings.ell_max + 1);
    let points = |ell: usize| settings.level_points.get(ell - 2).copied().unwrap_or(settings.higher_order_points);
    let mut remaining = settings.budget.saturating_sub(table.len() + 1);
    let mut ell = 2;
    while ell <= settings.ell_max {
        // consecutive levels on the same grid share one coarse table
        let n = points(ell);
        let mut last = ell;
        while last < settings.ell_max && points(last + 1) == n {
            last += 1;
        }
        let coarse = coarse_table(&table, system, n)?;
        let new = amplitude_levels(&coarse, system, ell..=last, remaining)?;
        remaining = remaining.saturating_sub(new.iter().map(|l| l.values().len()).sum());
        levels.extend(new);
        ell = last + 1;
    }
    let tensor = WavepacketTensor::from_levels(levels)?;
    let ladder = photon_probabilities(&tensor);
    let integrator_error_estimate = if settings.integrator_check {
        let low = settings.ell_max.min(1);
        let fine: f64 = ladder.probs[..=low].iter().sum();
        let coarse = propagate_with(
            system,
            &PropagationOptions { step: 2.0 * step, integrator: settings.integrator, min_pieces: settings.min_pieces },
        )?;
        let check = WavepacketTensor::from_levels(amplitude_levels(&coarse, system, 0..=low, settings.budget)?)?;
        (fine - photon_probabilities(&check).total()).abs()
    } else {
        0.0
    };
    Ok(Simulation { table, tensor, ladder, integrator_error_estimate })
}

fn coarse_table(table: &PropagatorTable, system: &SLHSystem, max_points: usize) -> Result<PropagatorTable> {
    let n = table.len();
    if n <= max_points {
        return Ok(table.clone());
    }
    let mut anchors: Vec<usize> = system
        .breakpoints()
        .iter()
        .filter_map(|&t| table.index_of(t).ok())
        .collect();
    anchors.push(0);
    anchors.push(n - 1);
    anchors.sort_unstable();
    anchors.dedup();
    // split max_points − 1 intervals over the anchor spans by largest remainder
    let spans: Vec<usize> = anchors.windows(2).map(|w| w[1] - w[0]).collect();
    let target = (max_points.max(anchors.len()) - 1) as f64;
    let share: Vec<f64> = spans.iter().map(|&s| s as f64 * target / (n - 1) as f64).collect();
    let mut pieces: Vec<usize> = spans.iter().zip(&share).map(|(&s, &x)| (x.floor() as usize).clamp(1, s)).collect();
    let mut order: Vec<usize> = (0..spans.len()).collect();
    order.sort_by(|&a, &b| (share[b] - share[b].floor()).total_cmp(&(share[a] - share[a].floor())).then(a.cmp(&b)));
    let mut spare = (max_points - 1).saturating_sub(pieces.iter().sum());
    for &k in order.iter().cycle().take(order.len() * 2) {
        if spare == 0 {
            break;
        }
        if pieces[k] < spans[k] {
            pieces[k] += 1;
            spare -= 1;
        }
    }
    let mut indices = vec![0];
    for (w, &pieces) in anchors.windows(2).zip(&pieces) {
        let span = w[1] - w[0];
        for p in 1..pieces {
            indices.push(w[0] + (span * p) / pieces);
        }
        indices.push(w[1]);
    }
    table.restrict(&indices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{excited_qubit, ControlSchedule};

    #[test]
    fn spontaneous_ladder() {
        let gamma = 0.5;
        let sys = excited_qubit(&ControlSchedule::idle(gamma, Some(20.0)).unwrap()).unwrap();
        let sim = simulate(&sys, &SimulationSettings { step: Some(0.01), ..Default::default() }).unwrap();
        let p = &sim.ladder.probs;
        assert_eq!(p.len(), 4);
        assert!(p[0] < 1e-20 && p[2] < 1e-20 && p[3] < 1e-20);
        assert!((p[1] - (1.0 - (-2.0 * gamma * 20.0f64).exp())).abs() < 1e-4);
        let coarse = sim.tensor.level(2).unwrap().grid().len();
        assert!(coarse <= 400 && coarse > 300, "{coarse}");
    }

    #[test]
    fn per_level_grids() {
        let sys = excited_qubit(&ControlSchedule::idle(1.0, Some(6.0)).unwrap()).unwrap();
        let settings =
            SimulationSettings { step: Some(0.01), ell_max: 4, level_points: vec![200, 200, 50], ..Default::default() };
        let sim = simulate(&sys, &settings).unwrap();
        let sizes: Vec<usize> = (2..=4).map(|l| sim.tensor.level(l).unwrap().grid().len()).collect();
        assert!(sizes[0] == sizes[1] && sizes[0] <= 200 && sizes[0] > 150, "{sizes:?}");
        assert!(sizes[2] <= 50, "{sizes:?}");
    }

    #[test]
    fn horizon_override() {
        let sys = excited_qubit(&ControlSchedule::idle(1.0, Some(2.0)).unwrap()).unwrap();
        let sim = simulate(&sys, &SimulationSettings { t_final: Some(12.0), ell_max: 1, ..Default::default() })
            .unwrap();
        assert_eq!(sim.table.t_final(), 12.0);
        assert!(sim.residual_excitation() < 1e-5);
        assert_eq!(sim.tensor.ell_max(), 1);
    }

    #[test]
    fn coarse_grid_keeps_breakpoints() {
        let drive = crate::operators::Waveform::new(
            vec![
                crate::operators::Segment::Const { start: 0.0, end: 0.37, value: crate::C64::new(2.0, 0.0) },
                crate::operators::Segment::Const { start: 0.37, end: 1.0, value: crate::C64::new(-1.0, 0.5) },
            ],
            None,
        )
        .unwrap();
        let s = ControlSchedule::new(
            drive,
            crate::operators::Waveform::zero(),
            crate::operators::Waveform::constant(1.0),
            vec![],
            Some(8.0),
        )
        .unwrap();
        let sys = crate::operators::qubit_system(&s).unwrap();
        let table = crate::propagator::propagate(&sys, 0.001, Integrator::ExpmMidpoint).unwrap();
        let coarse = coarse_table(&table, &sys, 100).unwrap();
        assert_eq!(coarse.len(), 100);
        for t in [0.0, 0.37, 1.0, 8.0] {
            let k = coarse.index_of(t).unwrap();
            let j = table.index_of(t).unwrap();
            assert!(coarse.v(k).max_abs_diff(table.v(j)) < 1e-12);
        }
    }

    #[test]
    fn integrator_estimate_covers_time_dependent_coupling() {
        let gamma = crate::operators::Waveform::new(
            vec![crate::operators::Segment::Linear { start: 0.0, end: 6.0, from: 0.1, to: 3.0 }],
            Some(3.0),
        )
        .unwrap();
        let s = ControlSchedule::new(
            crate::operators::Waveform::zero(),
            crate::operators::Waveform::constant(0.7),
            gamma,
            vec![],
            Some(10.0),
        )
        .unwrap();
        let sys = excited_qubit(&s).unwrap();
        let settings = SimulationSettings { step: Some(0.05), ell_max: 1, ..Default::default() };
        let sim = simulate(&sys, &settings).unwrap();
        let defect = (1.0 - sim.ladder.total() - sim.residual_excitation()).abs();
        assert!(sim.integrator_error_estimate > 0.0);
        assert!(defect < sim.error_estimate(), "{defect} vs {}", sim.error_estimate());
        let off = simulate(&sys, &SimulationSettings { integrator_check: false, ..settings }).unwrap();
        assert_eq!(off.integrator_error_estimate, 0.0);
        assert_eq!(off.ladder.probs, sim.ladder.probs);
    }
}
