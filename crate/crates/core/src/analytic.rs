//! Closed-form amplitudes used as test oracles and fast paths.
//!
//! Rates follow the coupling `L = √(2γ)σ₋`: excited amplitudes decay as
//! `e^{−γt}`, populations as `e^{−2γt}`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{FlyqError, Result};
use crate::operators::Waveform;
use crate::quad;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Single-photon packet of an initially excited, undriven qubit:
/// `ξ^τ = √(2γ(τ)) exp(−∫_0^τ γ) exp(−i ∫_0^τ ε)`.
pub fn spontaneous_packet(gamma: &Waveform<f64>, epsilon: &Waveform<f64>, tau: f64) -> C64 {
    let g = gamma.eval(tau).max(0.0);
    let decay = (-gamma.integral(0.0, tau)).exp();
    let phase = -epsilon.integral(0.0, tau);
    C64::from_polar((2.0 * g).sqrt() * decay, phase)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivingRegime {
    /// `Ω > γ`
    Strong,
    /// `Ω = γ`
    Balanced,
    /// `Ω < γ`
    Weak,
}

/// Rectangular drive of amplitude `Ω` on `[0, T]` applied to a ground-state
/// qubit with constant rate `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangularPulseParams {
    pub omega_drive: f64,
    pub duration: f64,
    pub gamma: f64,
}

impl RectangularPulseParams {
    pub fn new(omega_drive: f64, duration: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("drive", omega_drive), ("duration", duration), ("gamma", gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(FlyqError::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { omega_drive, duration, gamma })
    }

    /// Pulse with area `ΩT = π`.
    pub fn pi_pulse(omega_drive: f64, gamma: f64) -> Result<Self> {
        Self::new(omega_drive, std::f64::consts::PI / omega_drive, gamma)
    }

    pub fn regime(&self) -> DrivingRegime {
        let rel = (self.omega_drive - self.gamma) / self.gamma;
        if rel.abs() <= 1e-12 {
            DrivingRegime::Balanced
        } else if rel > 0.0 {
            DrivingRegime::Strong
        } else {
            DrivingRegime::Weak
        }
    }

    /// `ω = √(Ω² − γ²)` (strong regime).
    pub fn omega(&self) -> f64 {
        (self.omega_drive.powi(2) - self.gamma.powi(2)).sqrt()
    }

    /// `φ = arcsin(γ/Ω)` (strong regime).
    pub fn varphi(&self) -> f64 {
        (self.gamma / self.omega_drive).asin()
    }
}

/// Closed-form outputs of a strong rectangular pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectPulseAmplitudes {
    pub params: RectangularPulseParams,
    /// Vacuum amplitude `ξ`.
    pub xi0: C64,
}

impl RectPulseAmplitudes {
    /// Single-photon amplitude `ξ^τ`, two branches joined at `τ = T`.
    pub fn xi1(&self, tau: f64) -> C64 {
        let p = &self.params;
        let (g, t) = (p.gamma, p.duration);
        let (w, phi) = (p.omega(), p.varphi());
        let pre = (2.0 * g).sqrt() * (-g * t / 2.0).exp();
        let c = phi.cos();
        if tau <= t {
            -I * pre * (w * tau / 2.0).sin() * (w * (t - tau) / 2.0 - phi).cos() / (c * c)
        } else {
            -I * pre * (w * t / 2.0).sin() * (-g * (tau - t)).exp() / c
        }
    }
}

/// Vacuum and single-photon amplitudes of a strong rectangular pulse:
///
/// `ξ = e^{−γT/2} cos(ωT/2 − φ) / cos φ`,
/// `ξ^τ = −i√(2γ) e^{−γT/2} sin(ωτ/2) cos(ω(T−τ)/2 − φ) / cos²φ` for `τ ≤ T`,
/// `ξ^τ = −i√(2γ) e^{−γT/2} sin(ωT/2) e^{−γ(τ−T)} / cos φ` for `τ > T`.
///
/// Balanced and weak pulses have no closed form here; use the numeric engine.
pub fn rect_pulse_amplitudes(params: &RectangularPulseParams) -> Result<RectPulseAmplitudes> {
    match params.regime() {
        DrivingRegime::Strong => {}
        other => {
            return Err(FlyqError::UnsupportedRegime(format!(
                "{other:?} driving (Ω = {}, γ = {}) has no closed form; simulate it instead",
                params.omega_drive, params.gamma
            )))
        }
    }
    let (g, t) = (params.gamma, params.duration);
    let (w, phi) = (params.omega(), params.varphi());
    let xi0 = (-g * t / 2.0).exp() * (w * t / 2.0 - phi).cos() / phi.cos();
    Ok(RectPulseAmplitudes { params: *params, xi0: C64::new(xi0, 0.0) })
}

/// Rates of an excited source `A` (`γ_0`) feeding a qubit `B` (`γ`) that was
/// flipped to `|1⟩` at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulatedEmissionParams {
    pub gamma0: Waveform<f64>,
    pub gamma: Waveform<f64>,
    max_panel: f64,
}

impl StimulatedEmissionParams {
    pub fn new(gamma0: Waveform<f64>, gamma: Waveform<f64>) -> Result<Self> {
        if gamma0.inf() < 0.0 || gamma.inf() < 0.0 {
            return Err(FlyqError::InvalidSchedule("coupling rates must be nonnegative".into()));
        }
        Ok(Self { gamma0, gamma, max_panel: 0.05 })
    }

    /// `Γ_A(t) = ∫_0^t γ_0`.
    pub fn gamma_a(&self, t: f64) -> f64 {
        self.gamma0.integral(0.0, t)
    }

    /// `Γ_B(t) = ∫_0^t γ`.
    pub fn gamma_b(&self, t: f64) -> f64 {
        self.gamma.integral(0.0, t)
    }

    /// `Ξ(t) = 2 ∫_0^t √(γ_0 γ) e^{Γ_B − Γ_A}`.
    pub fn xi_integral(&self, t: f64) -> f64 {
        self.xi_between(0.0, t)
    }

    fn xi_between(&self, a: f64, b: f64) -> f64 {
        let f = |s: f64| {
            2.0 * (self.gamma0.eval(s).max(0.0) * self.gamma.eval(s).max(0.0)).sqrt()
                * (self.gamma_b(s) - self.gamma_a(s)).exp()
        };
        quad::integrate_split(f, a, b, &self.breaks(), self.max_panel)
    }

    fn breaks(&self) -> Vec<f64> {
        let mut b = self.gamma0.breakpoints();
        b.extend(self.gamma.breakpoints());
        b
    }

    /// Incoming packet `ξ_0^τ = √(2γ_0) e^{−Γ_A}`.
    pub fn xi0(&self, tau: f64) -> f64 {
        (2.0 * self.gamma0.eval(tau).max(0.0)).sqrt() * (-self.gamma_a(tau)).exp()
    }

    /// Spontaneous packet of `B`, `ξ_1^τ = √(2γ) e^{−Γ_B}`.
    pub fn xi1(&self, tau: f64) -> f64 {
        (2.0 * self.gamma.eval(tau).max(0.0)).sqrt() * (-self.gamma_b(tau)).exp()
    }
}

fn check_ordered(tau1: f64, tau2: f64) -> Result<()> {
    if !(0.0 <= tau1 && tau1 <= tau2) {
        return Err(FlyqError::Ordering(format!("need 0 ≤ τ1 ≤ τ2, got ({tau1}, {tau2})")));
    }
    Ok(())
}

/// Two-photon output after a hard flip of `B`:
///
/// `2√(γ_0(τ_2)γ(τ_1)) e^{−Γ_A(τ_2)−Γ_B(τ_1)} + 2√(γ_0(τ_1)γ(τ_2)) e^{−Γ_A(τ_1)−Γ_B(τ_2)}
///  + 2√(γ(τ_1)γ(τ_2)) e^{−Γ_B(τ_1)−Γ_B(τ_2)} [Ξ(τ_1) − Ξ(τ_2)]`.
///
/// The flip `exp(−iπσ_x/2)` contributes a further global factor `−i`, not
/// included here.
pub fn stimulated_two_photon(p: &StimulatedEmissionParams, tau1: f64, tau2: f64) -> Result<f64> {
    check_ordered(tau1, tau2)?;
    let g0 = |t: f64| p.gamma0.eval(t).max(0.0);
    let g = |t: f64| p.gamma.eval(t).max(0.0);
    let (a1, a2) = (p.gamma_a(tau1), p.gamma_a(tau2));
    let (b1, b2) = (p.gamma_b(tau1), p.gamma_b(tau2));
    let first = 2.0 * (g0(tau2) * g(tau1)).sqrt() * (-a2 - b1).exp();
    let second = 2.0 * (g0(tau1) * g(tau2)).sqrt() * (-a1 - b2).exp();
    let third = -2.0 * (g(tau1) * g(tau2)).sqrt() * (-b1 - b2).exp() * p.xi_between(tau1, tau2);
    Ok(first + second + third)
}

/// The same amplitude written through the packets `ξ_0`, `ξ_1`:
///
/// `ξ_0^{τ1}ξ_1^{τ2} + ξ_0^{τ2}ξ_1^{τ1} − ξ_1^{τ1}ξ_1^{τ2} ∫_{τ1}^{τ2} ξ_0^s ξ_1^s [1 − ∫_0^s |ξ_1|²]^{−1} ds`.
///
/// The norm left in `B`, `1 − ∫_0^s |ξ_1|²`, is integrated backwards as
/// `∫_s^S |ξ_1|² + e^{−2Γ_B(S)}` with `S` past the last change of `γ`, so it
/// keeps full relative precision when it is tiny.
pub fn stimulated_two_photon_compact(p: &StimulatedEmissionParams, tau1: f64, tau2: f64) -> Result<f64> {
    check_ordered(tau1, tau2)?;
    let kernel = compact_kernel(p, tau1, tau2, |left| 1.0 / left);
    Ok(p.xi0(tau1) * p.xi1(tau2) + p.xi0(tau2) * p.xi1(tau1) - p.xi1(tau1) * p.xi1(tau2) * kernel)
}

/// The compact form with a plus sign and the kernel `[∫_0^s |ξ_1|²]^{−1}`.
/// It does not agree with [`stimulated_two_photon`]; kept for comparison.
pub fn stimulated_two_photon_compact_uncorrected(p: &StimulatedEmissionParams, tau1: f64, tau2: f64) -> Result<f64> {
    check_ordered(tau1, tau2)?;
    let kernel = compact_kernel(p, tau1, tau2, |left| 1.0 / (1.0 - left));
    Ok(p.xi0(tau1) * p.xi1(tau2) + p.xi0(tau2) * p.xi1(tau1) + p.xi1(tau1) * p.xi1(tau2) * kernel)
}

// ∫_{τ1}^{τ2} ξ_0^s ξ_1^s w(R(s)) ds with R(s) = 1 − ∫_0^s |ξ_1|², accumulated
// panel by panel from the right.
fn compact_kernel(p: &StimulatedEmissionParams, tau1: f64, tau2: f64, w: impl Fn(f64) -> f64) -> f64 {
    if tau2 <= tau1 {
        return 0.0;
    }
    let density = |s: f64| p.xi1(s).powi(2);
    let breaks = p.breaks();
    let far = tau2.max(p.gamma.support_end());
    let mut left = (-2.0 * p.gamma_b(far)).exp() + quad::integrate_split(density, tau2, far, &breaks, p.max_panel);

    let mut edges = vec![tau1];
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > tau1 && b < tau2).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.push(tau2);
    for c in cuts {
        let a = *edges.last().unwrap();
        let pieces = ((c - a) / p.max_panel).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            edges.push(a + (c - a) * k as f64 / pieces as f64);
        }
    }
    let mut acc = 0.0;
    for e in edges.windows(2).rev() {
        let (a, b) = (e[0], e[1]);
        let base = left;
        acc += quad::integrate(|s| p.xi0(s) * p.xi1(s) * w(base + quad::integrate(density, s, b, b - a)), a, b, b - a);
        left += quad::integrate(density, a, b, b - a);
    }
    acc
}
