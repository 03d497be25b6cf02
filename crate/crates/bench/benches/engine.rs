use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use flyq_core::optimize::{
    evaluate_objective, Basis, Channel, ChannelSpec, IncomingPhoton, Objective, ObjectiveKind, PulseParametrization,
    PulseScenario,
};
use flyq_core::wavepacket::simulate;
use flyq_core::{propagate, qubit_system, ControlSchedule, Integrator, SLHSystem, SimulationSettings, Waveform, C64};

fn pi_pulse(omega: f64) -> SLHSystem {
    let t = PI / omega;
    let drive = Waveform::rectangular(C64::new(omega, 0.0), t, C64::new(0.0, 0.0)).unwrap();
    let s = ControlSchedule::new(drive, Waveform::zero(), Waveform::constant(1.0), vec![], Some(t + 10.0)).unwrap();
    qubit_system(&s).unwrap()
}

fn propagator(c: &mut Criterion) {
    let sys = pi_pulse(4.0);
    c.bench_function("propagate 10k steps", |b| {
        b.iter(|| propagate(black_box(&sys), 0.001, Integrator::ExpmMidpoint).unwrap())
    });
}

fn two_photon(c: &mut Criterion) {
    let sys = pi_pulse(1.0);
    let settings = SimulationSettings { step: Some(0.005), ell_max: 2, higher_order_points: 300, ..Default::default() };
    c.bench_function("ladder up to two photons", |b| b.iter(|| simulate(black_box(&sys), &settings).unwrap()));
}

fn objective(c: &mut Criterion) {
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
    let params: Vec<f64> = (0..param.n_params()).map(|k| ((k as f64) * 0.7).sin()).collect();
    c.bench_function("transformation objective", |b| {
        b.iter(|| evaluate_objective(black_box(&params), &param, &scenario, &obj).unwrap())
    });
}

criterion_group!(benches, propagator, two_photon, objective);
criterion_main!(benches);
