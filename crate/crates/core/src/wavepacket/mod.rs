//! Output multi-photon amplitudes and photon-number probabilities.
//!
//! The ℓ-photon amplitude at ordered emission times `τ_1 ≤ … ≤ τ_ℓ` is
//!
//! `ξ^{τ_1…τ_ℓ} = ⟨0| G(T, τ_ℓ) L(τ_ℓ) G(τ_ℓ, τ_{ℓ−1}) ⋯ L(τ_1) V(τ_1) |ψ_0⟩`,
//!
//! evaluated on the propagator grid by depth-first propagation so each
//! shared prefix is propagated once.

mod simplex;
mod simulate;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

pub use simplex::{multichoose, SimplexIndex};
pub use simulate::{simulate, Simulation, SimulationSettings};

use crate::error::{FlyqError, Result};
use crate::operators::{OperatorMatrix, SLHSystem};
use crate::propagator::PropagatorTable;
use crate::quad::trapezoid_weight;

/// Default cap on the total number of stored amplitudes (16 Mi entries,
/// 256 MiB). An ℓ = 3 tensor on a 400-point grid fits; ℓ = 4 does not.
pub const DEFAULT_AMPLITUDE_BUDGET: usize = 1 << 24;

/// Amplitudes of one photon number on the ordered simplex of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeLevel {
    order: usize,
    grid: Vec<f64>,
    values: Vec<C64>,
}

impl AmplitudeLevel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Values in lexicographic order of the index tuples.
    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn index(&self) -> SimplexIndex {
        SimplexIndex::new(self.grid.len(), self.order)
    }

    /// Amplitude at grid indices given in any order.
    pub fn at_indices(&self, indices: &[usize]) -> C64 {
        assert_eq!(indices.len(), self.order);
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        self.values[self.index().rank(&sorted)]
    }

    /// Calls `f(tuple, value)` for every stored entry in storage order.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], C64)) {
        if self.order == 0 {
            f(&[], self.values[0]);
            return;
        }
        let idx = self.index();
        let mut tuple = vec![0; self.order];
        for &v in &self.values {
            f(&tuple, v);
            idx.advance(&mut tuple);
        }
    }
}

/// `ξ, ξ^{τ_1}, ξ^{τ_1,τ_2}, …` up to `ell_max`. Each level carries its own
/// grid so higher orders can live on coarser grids.
#[derive(Debug, Clone, PartialEq)]
pub struct WavepacketTensor {
    levels: Vec<AmplitudeLevel>,
}

impl WavepacketTensor {
    pub fn from_levels(levels: Vec<AmplitudeLevel>) -> Result<Self> {
        for (l, level) in levels.iter().enumerate() {
            if level.order != l {
                return Err(FlyqError::InvalidArgument(format!("level {l} has order {}", level.order)));
            }
            if level.values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(FlyqError::Divergence(f64::NAN));
            }
        }
        if levels.is_empty() {
            return Err(FlyqError::InvalidArgument("tensor needs at least the vacuum level".into()));
        }
        Ok(Self { levels })
    }

    pub fn ell_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, ell: usize) -> Result<&AmplitudeLevel> {
        self.levels.get(ell).ok_or_else(|| {
            FlyqError::InvalidArgument(format!("photon number {ell} exceeds ell_max {}", self.ell_max()))
        })
    }

    pub fn levels(&self) -> &[AmplitudeLevel] {
        &self.levels
    }

    /// The vacuum amplitude `ξ`.
    pub fn vacuum(&self) -> C64 {
        self.levels[0].values[0]
    }

    /// Amplitude at emission times given in any order; every time must be a
    /// grid point of that level.
    pub fn amplitude(&self, times: &[f64]) -> Result<C64> {
        let level = self.level(times.len())?;
        let indices = times
            .iter()
            .map(|&t| grid_index(&level.grid, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(level.at_indices(&indices))
    }
}

fn grid_index(grid: &[f64], t: f64) -> Result<usize> {
    let tol = 1e-9 * (1.0 + t.abs());
    let k = grid.partition_point(|&g| g < t - tol);
    match grid.get(k) {
        Some(&g) if (g - t).abs() <= tol => Ok(k),
        _ => Err(FlyqError::OffGrid(t)),
    }
}

/// Photon-number distribution `P_0 … P_{ℓmax}` with the unassigned
/// remainder and a quadrature error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityLadder {
    pub probs: Vec<f64>,
    /// `1 − Σ P_ℓ`.
    pub residual: f64,
    /// `Σ_ℓ |P_ℓ(h) − P_ℓ(2h)|` from the full grid and its even-index subgrid.
    pub quadrature_error_estimate: f64,
    /// Per-level estimates; entry 0 is always 0.
    pub level_error_estimates: Vec<f64>,
}

impl ProbabilityLadder {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Σ_{ℓ ≥ from} P_ℓ`.
    pub fn tail_from(&self, from: usize) -> f64 {
        self.probs.iter().skip(from).sum()
    }
}

pub fn output_amplitudes(table: &PropagatorTable, system: &SLHSystem, ell_max: usize) -> Result<WavepacketTensor> {
    output_amplitudes_with_budget(table, system, ell_max, DEFAULT_AMPLITUDE_BUDGET)
}

/// Required storage in entries for levels `0..=ell_max` on `n` points.
pub fn required_entries(n: usize, ell_max: usize) -> u128 {
    (0..=ell_max).map(|l| multichoose(n, l)).sum()
}

pub fn output_amplitudes_with_budget(
    table: &PropagatorTable,
    system: &SLHSystem,
    ell_max: usize,
    budget: usize,
) -> Result<WavepacketTensor> {
    let levels = amplitude_levels(table, system, 0..=ell_max, budget)?;
    WavepacketTensor::from_levels(levels)
}

/// Evaluates the requested photon-number levels on `table`'s grid.
pub(crate) fn amplitude_levels(
    table: &PropagatorTable,
    system: &SLHSystem,
    orders: std::ops::RangeInclusive<usize>,
    budget: usize,
) -> Result<Vec<AmplitudeLevel>> {
    let n = table.len();
    let needed: u128 = orders.clone().map(|l| multichoose(n, l)).sum();
    if needed > budget as u128 {
        return Err(FlyqError::Capacity { needed, budget });
    }
    if system.dim() != table.dim() {
        return Err(FlyqError::DimensionMismatch { expected: table.dim(), found: system.dim() });
    }
    if table.residual_excitation() > 1e-3 {
        log::warn!(
            "residual excitation {:.2e} at the horizon; the emitter has not decayed, extend t_final",
            table.residual_excitation()
        );
    }
    let ctx = ChainContext::new(table, system)?;
    Ok(orders
        .map(|order| AmplitudeLevel { order, grid: table.grid().to_vec(), values: ctx.level(order) })
        .collect())
}

struct ChainContext<'a> {
    table: &'a PropagatorTable,
    couplings: Vec<OperatorMatrix>,
    // ⟨0| G(T, t_k)
    readout: Vec<Vec<C64>>,
    // V(t_k⁺)|ψ_0⟩
    forward: Vec<Vec<C64>>,
}

impl<'a> ChainContext<'a> {
    fn new(table: &'a PropagatorTable, system: &SLHSystem) -> Result<Self> {
        let n = table.len();
        let dim = table.dim();
        let couplings = table.grid().iter().map(|&t| system.coupling(t)).collect::<Result<Vec<_>>>()?;
        let mut readout = vec![Vec::new(); n];
        let mut e = vec![C64::new(0.0, 0.0); dim];
        e[table.ground_index()] = C64::new(1.0, 0.0);
        readout[n - 1] = e;
        for k in (0..n - 1).rev() {
            readout[k] = table.transfer(k).apply_left(&readout[k + 1]);
        }
        let psi0 = system.initial_state().amplitudes();
        let forward = (0..n).map(|k| table.v(k).apply(psi0)).collect();
        Ok(Self { table, couplings, readout, forward })
    }

    fn level(&self, order: usize) -> Vec<C64> {
        if order == 0 {
            return vec![dot(&self.readout[0], &self.forward[0])];
        }
        let n = self.table.len();
        let slices: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|lead| {
                let idx = SimplexIndex::new(n, order);
                let mut out = Vec::with_capacity(idx.slice_len(lead));
                let chi = self.couplings[lead].apply(&self.forward[lead]);
                self.descend(order, 1, lead, chi, &mut out);
                out
            })
            .collect();
        let mut values = Vec::with_capacity(SimplexIndex::new(n, order).len());
        for s in slices {
            values.extend(s);
        }
        values
    }

    // `chi` is the state right after the `depth`-th jump at node `at`.
    fn descend(&self, order: usize, depth: usize, at: usize, chi: Vec<C64>, out: &mut Vec<C64>) {
        if depth == order {
            out.push(dot(&self.readout[at], &chi));
            return;
        }
        let n = self.table.len();
        let mut eta = chi;
        let mut scratch = vec![C64::new(0.0, 0.0); eta.len()];
        for j in at..n {
            let next = self.couplings[j].apply(&eta);
            self.descend(order, depth + 1, j, next, out);
            if j + 1 < n {
                self.table.transfer(j).apply_into(&eta, &mut scratch);
                std::mem::swap(&mut eta, &mut scratch);
            }
        }
    }
}

fn dot(row: &[C64], col: &[C64]) -> C64 {
    row.iter().zip(col).map(|(&a, &b)| a * b).sum()
}

/// `P_ℓ = ∫_{τ_1 ≤ … ≤ τ_ℓ} |ξ^{τ_1…τ_ℓ}|²` by iterated trapezoid rules on
/// the ordered simplex (diagonal faces get half weight).
pub fn photon_probabilities(tensor: &WavepacketTensor) -> ProbabilityLadder {
    let mut probs = Vec::with_capacity(tensor.levels.len());
    let mut estimates = Vec::with_capacity(tensor.levels.len());
    for level in &tensor.levels {
        if level.order == 0 {
            probs.push(level.values[0].norm_sqr());
            estimates.push(0.0);
            continue;
        }
        let (full, half) = simplex_quadrature(level);
        probs.push(full);
        estimates.push((full - half).abs());
    }
    let total: f64 = probs.iter().sum();
    ProbabilityLadder {
        residual: 1.0 - total,
        quadrature_error_estimate: estimates.iter().sum(),
        probs,
        level_error_estimates: estimates,
    }
}

/// Iterated trapezoid integral of `|values|²` on the full grid and on the
/// subgrid of even indices (plus the last point).
fn simplex_quadrature(level: &AmplitudeLevel) -> (f64, f64) {
    let n = level.grid.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let sub: Vec<usize> = (0..n).filter(|&i| i % 2 == 0 || i == n - 1).collect();
    let mut sub_pos = vec![usize::MAX; n];
    for (p, &i) in sub.iter().enumerate() {
        sub_pos[i] = p;
    }
    let sub_grid: Vec<f64> = sub.iter().map(|&i| level.grid[i]).collect();
    let idx = level.index();
    let order = level.order;

    let partial: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|lead| {
            let start = idx.slice_start(lead);
            let len = idx.slice_len(lead);
            let mut tuple = vec![lead; order];
            let (mut full, mut half) = (0.0, 0.0);
            for &v in &level.values[start..start + len] {
                let w2 = v.norm_sqr();
                let mut wf = trapezoid_weight(&level.grid, n - 1, tuple[order - 1]);
                for m in 0..order - 1 {
                    wf *= trapezoid_weight(&level.grid, tuple[m + 1], tuple[m]);
                }
                full += wf * w2;
                if tuple.iter().all(|&i| sub_pos[i] != usize::MAX) {
                    let last = sub.len() - 1;
                    let mut wh = trapezoid_weight(&sub_grid, last, sub_pos[tuple[order - 1]]);
                    for m in 0..order - 1 {
                        wh *= trapezoid_weight(&sub_grid, sub_pos[tuple[m + 1]], sub_pos[tuple[m]]);
                    }
                    half += wh * w2;
                }
                idx.advance(&mut tuple);
            }
            (full, half)
        })
        .collect();
    partial.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y))
}

/// Emission-time intensity profile for plotting.
///
/// For `ell = 1` returns `|ξ^τ|²`; for `ell = 2` the one-photon marginal
/// `∫ |ξ^{τ,s}|² ds` over the unordered second time.
pub fn marginal_shape(tensor: &WavepacketTensor, ell: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let level = tensor.level(ell)?;
    match ell {
        1 => Ok((level.grid.clone(), level.values.iter().map(|z| z.norm_sqr()).collect())),
        2 => {
            let n = level.grid.len();
            let profile = (0..n)
                .map(|k| {
                    (0..n)
                        .map(|s| trapezoid_weight(&level.grid, n - 1, s) * level.at_indices(&[k, s]).norm_sqr())
                        .sum()
                })
                .collect();
            Ok((level.grid.clone(), profile))
        }
        _ => Err(FlyqError::InvalidArgument(format!("marginal shape supports ell = 1 or 2, got {ell}"))),
    }
}
