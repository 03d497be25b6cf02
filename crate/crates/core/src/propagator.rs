//! The non-unitary propagator `V̇ = −i H_eff V`, `V(0) = I`.
//!
//! The table stores, for each grid point `t_k`, the right limit `V(t_k⁺)`
//! (after any impulse at `t_k`) together with the one-step transfer matrices
//! `T_k` with `V(t_{k+1}⁺) = T_k V(t_k⁺)`. Green functions are products of
//! transfers; `V⁻¹` is never formed, since it grows like `e^{+γt}`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{FlyqError, Result};
use crate::operators::{OperatorMatrix, SLHSystem};

/// Default bound on `cond(V(τ))` for [`dressed_coupling`].
pub const DEFAULT_DRESSED_CONDITION_BOUND: f64 = 1e8;

/// Cap on the number of steps produced by [`default_step`].
pub const MAX_DEFAULT_STEPS: f64 = 200_000.0;

const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Exact exponential of `H_eff` at each step midpoint; exact for
    /// piecewise-constant controls.
    #[default]
    ExpmMidpoint,
    /// Classical fourth-order Runge–Kutta for smooth controls.
    Rk4,
}

/// `min(0.01 / max(|u|, γ, |ε|), T / 200 000)`.
pub fn default_step(system: &SLHSystem) -> f64 {
    let floor = system.t_final() / MAX_DEFAULT_STEPS;
    let rate = system.rate_bound();
    if rate > 0.0 {
        (0.01 / rate).max(floor)
    } else {
        0.01f64.max(floor)
    }
}

/// Every breakpoint interval is split into `max(min_points, ⌈len/step⌉)`
/// equal pieces.
pub fn build_grid(breakpoints: &[f64], step: f64, min_pieces: usize) -> Vec<f64> {
    let mut grid = vec![breakpoints[0]];
    for w in breakpoints.windows(2) {
        let len = w[1] - w[0];
        let pieces = ((len / step).ceil() as usize).max(min_pieces).max(1);
        for k in 1..pieces {
            grid.push(w[0] + len * k as f64 / pieces as f64);
        }
        grid.push(w[1]);
    }
    grid
}

#[derive(Debug, Clone)]
pub struct PropagatorTable {
    grid: Vec<f64>,
    v: Vec<OperatorMatrix>,
    transfers: Vec<OperatorMatrix>,
    step: f64,
    residual_excitation: f64,
    ground_index: usize,
}

impl PropagatorTable {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.v[0].dim()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn t_final(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// `V(t_k⁺)`.
    pub fn v(&self, k: usize) -> &OperatorMatrix {
        &self.v[k]
    }

    pub fn v_final(&self) -> &OperatorMatrix {
        self.v.last().unwrap()
    }

    /// `T_k` with `V(t_{k+1}⁺) = T_k V(t_k⁺)`.
    pub fn transfer(&self, k: usize) -> &OperatorMatrix {
        &self.transfers[k]
    }

    pub fn ground_index(&self) -> usize {
        self.ground_index
    }

    /// Frobenius norm of the non-ground rows of `V(T_final)`: how much
    /// excitation is left when the horizon ends.
    pub fn residual_excitation(&self) -> f64 {
        self.residual_excitation
    }

    /// Grid index of `t`, tolerating rounding.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = self.grid.partition_point(|&g| g < t);
        let tol = GRID_TOL * (1.0 + t.abs());
        for cand in [k.wrapping_sub(1), k] {
            if let Some(&g) = self.grid.get(cand) {
                if (g - t).abs() <= tol {
                    return Ok(cand);
                }
            }
        }
        Err(FlyqError::OffGrid(t))
    }

    /// `G(t_k, t_j)`, `k ≥ j`.
    pub fn green_index(&self, k: usize, j: usize) -> OperatorMatrix {
        assert!(k >= j && k < self.len());
        let mut g = OperatorMatrix::identity(self.dim());
        for m in j..k {
            g = &self.transfers[m] * &g;
        }
        g
    }

    /// Largest eigenvalue of `V_{k+1}†V_{k+1} − V_k†V_k` over all steps;
    /// nonpositive (up to rounding) for a contraction.
    pub fn max_contraction_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for w in self.v.windows(2) {
            let a = &w[1].adjoint() * &w[1];
            let b = &w[0].adjoint() * &w[0];
            let d = (&a - &b).to_nalgebra();
            let eig = d.symmetric_eigenvalues();
            worst = worst.max(eig.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        worst
    }

    /// The table on the sub-grid `indices` (strictly increasing, first 0 and
    /// last `len − 1`); transfers are products of the fine transfers, so no
    /// accuracy is lost at the retained nodes.
    pub fn restrict(&self, indices: &[usize]) -> Result<PropagatorTable> {
        let n = self.len();
        if indices.len() < 2 || indices[0] != 0 || *indices.last().unwrap() != n - 1 {
            return Err(FlyqError::InvalidArgument("sub-grid must keep both end points".into()));
        }
        if indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FlyqError::Ordering("sub-grid indices must be strictly increasing".into()));
        }
        let transfers = indices.windows(2).map(|w| self.green_index(w[1], w[0])).collect();
        Ok(PropagatorTable {
            grid: indices.iter().map(|&k| self.grid[k]).collect(),
            v: indices.iter().map(|&k| self.v[k].clone()).collect(),
            transfers,
            step: self.step,
            residual_excitation: self.residual_excitation,
            ground_index: self.ground_index,
        })
    }
}

/// `H_eff(t) = H(t) − (i/2) L†(t) L(t)`.
pub fn effective_hamiltonian(system: &SLHSystem, t: f64) -> Result<OperatorMatrix> {
    system.check_time(t)?;
    Ok(heff_unchecked(system, t))
}

fn heff_unchecked(system: &SLHSystem, t: f64) -> OperatorMatrix {
    let h = (system.hamiltonian_fn())(t);
    let l = (system.coupling_fn())(t);
    let ltl = &l.adjoint() * &l;
    &h - &ltl.scale(C64::new(0.0, 0.5))
}

/// Options for [`propagate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    pub step: f64,
    pub integrator: Integrator,
    /// Minimum number of steps in each breakpoint interval.
    pub min_pieces: usize,
}

pub fn propagate(system: &SLHSystem, step: f64, integrator: Integrator) -> Result<PropagatorTable> {
    propagate_with(system, &PropagationOptions { step, integrator, min_pieces: 1 })
}

pub fn propagate_with(system: &SLHSystem, opts: &PropagationOptions) -> Result<PropagatorTable> {
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(FlyqError::InvalidArgument(format!("step {} must be positive", opts.step)));
    }
    let grid = build_grid(system.breakpoints(), opts.step, opts.min_pieces);
    propagate_on_grid(system, grid, opts.integrator, opts.step)
}

/// Integrates on a caller-supplied grid, which must contain every impulse time.
pub fn propagate_on_grid(
    system: &SLHSystem,
    grid: Vec<f64>,
    integrator: Integrator,
    nominal_step: f64,
) -> Result<PropagatorTable> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FlyqError::Ordering("propagator grid must be strictly increasing".into()));
    }
    let dim = system.dim();
    let n = grid.len();

    let mut kicks: Vec<Option<&OperatorMatrix>> = vec![None; n];
    for imp in system.impulses() {
        let k = grid
            .iter()
            .position(|&g| (g - imp.time).abs() <= GRID_TOL * (1.0 + g.abs()))
            .ok_or(FlyqError::OffGrid(imp.time))?;
        kicks[k] = Some(&imp.unitary);
    }

    let mut v = Vec::with_capacity(n);
    let mut transfers = Vec::with_capacity(n - 1);
    v.push(kicks[0].cloned().unwrap_or_else(|| OperatorMatrix::identity(dim)));

    let mut cache: Option<(f64, OperatorMatrix, OperatorMatrix)> = None;
    for k in 0..n - 1 {
        let (t0, t1) = (grid[k], grid[k + 1]);
        let h = t1 - t0;
        let mut step = match integrator {
            Integrator::ExpmMidpoint => {
                let heff = heff_unchecked(system, 0.5 * (t0 + t1));
                match &cache {
                    Some((ch, cheff, cexp)) if *ch == h && *cheff == heff => cexp.clone(),
                    _ => {
                        let e = heff.scale(C64::new(0.0, -h)).expm();
                        cache = Some((h, heff, e.clone()));
                        e
                    }
                }
            }
            Integrator::Rk4 => rk4_step(system, t0.next_up(), t1, dim),
        };
        if let Some(kick) = kicks[k + 1] {
            step = kick * &step;
        }
        let next = &step * &v[k];
        if !next.is_finite() || !step.is_finite() {
            return Err(FlyqError::Divergence(t1));
        }
        transfers.push(step);
        v.push(next);
    }

    let ground = system.ground_index();
    let vt = v.last().unwrap();
    let mut residual = 0.0;
    for i in (0..dim).filter(|&i| i != ground) {
        for j in 0..dim {
            residual += vt[(i, j)].norm_sqr();
        }
    }
    Ok(PropagatorTable {
        grid,
        v,
        transfers,
        step: nominal_step,
        residual_excitation: residual.sqrt(),
        ground_index: ground,
    })
}

// One RK4 step of V̇ = −i H_eff V from V = I; `t0` is already nudged past a
// breakpoint so the right limit of the controls is used.
fn rk4_step(system: &SLHSystem, t0: f64, t1: f64, dim: usize) -> OperatorMatrix {
    let h = t1 - t0;
    let gen = |t: f64| heff_unchecked(system, t).scale(C64::new(0.0, -1.0));
    let id = OperatorMatrix::identity(dim);
    let a0 = gen(t0);
    let am = gen(t0 + 0.5 * h);
    let a1 = gen(t1);
    let k1 = a0;
    let k2 = &am * &(&id + &k1.scale_real(0.5 * h));
    let k3 = &am * &(&id + &k2.scale_real(0.5 * h));
    let k4 = &a1 * &(&id + &k3.scale_real(h));
    let sum = &(&k1 + &k2.scale_real(2.0)) + &(&k3.scale_real(2.0) + &k4);
    &id + &sum.scale_real(h / 6.0)
}

/// Transition operator `G(s, s') = V(s)V⁻¹(s')` as a product of transfers.
pub fn green(table: &PropagatorTable, s: f64, s_prime: f64) -> Result<OperatorMatrix> {
    if s < s_prime {
        return Err(FlyqError::Ordering(format!("green({s}, {s_prime}) needs s ≥ s'")));
    }
    let k = table.index_of(s)?;
    let j = table.index_of(s_prime)?;
    Ok(table.green_index(k, j))
}

/// `L̃(τ) = V⁻¹(τ) L(τ) V(τ)` via the linear solve `V(τ) X = L(τ) V(τ)`.
pub fn dressed_coupling(table: &PropagatorTable, system: &SLHSystem, tau: f64) -> Result<OperatorMatrix> {
    dressed_coupling_with_bound(table, system, tau, DEFAULT_DRESSED_CONDITION_BOUND)
}

pub fn dressed_coupling_with_bound(
    table: &PropagatorTable,
    system: &SLHSystem,
    tau: f64,
    condition_bound: f64,
) -> Result<OperatorMatrix> {
    let k = table.index_of(tau)?;
    let v = table.v(k);
    let l = system.coupling(table.grid()[k])?;
    let lv = &l * v;
    v.solve_with_bound(&lv, condition_bound).map_err(|e| match e {
        FlyqError::Singular { condition } => FlyqError::IllConditioned { time: tau, condition },
        other => other,
    })
}
