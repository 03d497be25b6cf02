use flyq_core::optimize::{
    evaluate_objective, run_ga, Basis, Crossover, Channel, ChannelSpec, GAConfig, IncomingPhoton, Objective, ObjectiveKind,
    PulseParametrization, PulseScenario,
};
use flyq_core::SimulationSettings;

fn fig4() -> (PulseParametrization, PulseScenario, Objective) {
    let param = PulseParametrization {
        basis: Basis::PiecewiseConstant { n_bins: 16 },
        window: [0.0, 4.0],
        channels: vec![
            ChannelSpec { channel: Channel::UX, lo: -8.0, hi: 8.0 },
            ChannelSpec { channel: Channel::UY, lo: -8.0, hi: 8.0 },
        ],
    };
    let scenario = PulseScenario {
        gamma: 1.0,
        detuning: 0.0,
        excited: false,
        incoming: Some(IncomingPhoton::Exponential { gamma0: 1.0 }),
        impulses: vec![],
        t_final: 12.0,
    };
    let obj = Objective::new(ObjectiveKind::MaximizeP(1), SimulationSettings { step: Some(0.01), ..Default::default() })
        .unwrap();
    (param, scenario, obj)
}

#[test]
fn reduced_search_on_transformation_scenario() {
    let (param, scenario, obj) = fig4();
    let cfg = GAConfig {
        population: 16,
        generations: 40,
        crossover: Crossover::Blend { alpha: 0.0 },
        crossover_rate: 1.0,
        seed: 1,
        ..Default::default()
    };
    let res = run_ga(&cfg, &param, &scenario, &obj).unwrap();
    assert!(res.best_score >= 0.75, "{}", res.best_score);
    let again = evaluate_objective(&res.best_params, &param, &scenario, &obj).unwrap();
    assert!((again - res.best_score).abs() < 1e-12);
    for w in res.history.windows(2) {
        assert!(w[1].best_so_far >= w[0].best_so_far);
    }
}

#[test]
fn zero_drive_passes_the_photon() {
    let (param, scenario, obj) = fig4();
    let s = evaluate_objective(&vec![0.0; param.n_params()], &param, &scenario, &obj).unwrap();
    assert!((s - 1.0).abs() < 1e-4, "{s}");
}
