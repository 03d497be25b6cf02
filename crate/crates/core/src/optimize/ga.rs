use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FlyqError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Crossover {
    /// Each gene copied from either parent with probability 1/2.
    #[default]
    Uniform,
    /// Each gene drawn uniformly from the parents' interval widened by
    /// `alpha` times its length on both sides (BLX-α).
    Blend { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GAConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover: Crossover,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of each bound's width.
    pub mutation_scale: f64,
    /// Factor applied to the mutation scale after every generation.
    pub mutation_decay: f64,
    pub elitism: usize,
    pub tournament_size: usize,
    pub seed: u64,
    /// Stop as soon as the best score reaches this value.
    pub target_score: Option<f64>,
    /// Without a target, the run counts as converged when the best score
    /// has not improved for this many generations.
    pub stall_generations: usize,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 200,
            crossover: Crossover::Uniform,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_scale: 0.1,
            mutation_decay: 0.97,
            elitism: 2,
            tournament_size: 3,
            seed: 0,
            target_score: None,
            stall_generations: 20,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(FlyqError::InvalidArgument("population must be at least 2".into()));
        }
        for (name, r) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(FlyqError::InvalidArgument(format!("{name} = {r} outside [0, 1]")));
            }
        }
        if !(self.mutation_scale >= 0.0 && self.mutation_scale.is_finite()) {
            return Err(FlyqError::InvalidArgument("mutation_scale must be ≥ 0".into()));
        }
        if !(self.mutation_decay > 0.0 && self.mutation_decay <= 1.0) {
            return Err(FlyqError::InvalidArgument("mutation_decay must lie in (0, 1]".into()));
        }
        if self.elitism < 1 || self.elitism >= self.population {
            return Err(FlyqError::InvalidArgument(format!(
                "elitism {} must lie in [1, population)",
                self.elitism
            )));
        }
        if let Crossover::Blend { alpha } = self.crossover {
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(FlyqError::InvalidArgument("blend alpha must be ≥ 0".into()));
            }
        }
        if self.tournament_size < 1 {
            return Err(FlyqError::InvalidArgument("tournament_size must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_so_far: f64,
    pub generation_best: f64,
    /// Mean over finite scores.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GAResult {
    pub best_params: Vec<f64>,
    pub best_score: f64,
    /// Entry 0 describes the initial population.
    pub history: Vec<GenerationStats>,
    pub converged: bool,
    pub evaluations: usize,
}

// Independent stream per (generation, slot) so results do not depend on
// evaluation order or thread count.
fn stream(seed: u64, generation: usize, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | slot as u64);
    rng
}

fn score_all<F: Fn(&[f64]) -> f64 + Sync>(pop: &[Vec<f64>], f: &F) -> Vec<f64> {
    pop.par_iter()
        .map(|x| {
            let s = f(x);
            if s.is_nan() {
                f64::NEG_INFINITY
            } else {
                s
            }
        })
        .collect()
}

fn stats(generation: usize, scores: &[f64], best_so_far: f64) -> GenerationStats {
    let finite: Vec<f64> = scores.iter().copied().filter(|s| s.is_finite()).collect();
    let mean = if finite.is_empty() { f64::NEG_INFINITY } else { finite.iter().sum::<f64>() / finite.len() as f64 };
    GenerationStats {
        generation,
        best_so_far,
        generation_best: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
    }
}

// Best first; ties keep the lower index.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Maximizes `f` over the box `bounds`.
///
/// Tournament selection, uniform crossover, Gaussian mutation clipped to the
/// bounds and elitism. Fitness evaluations run in parallel; every random
/// draw comes from a stream keyed by `(seed, generation, slot)`.
pub fn run_ga_with<F>(config: &GAConfig, bounds: &[(f64, f64)], f: F) -> Result<GAResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    if bounds.is_empty() {
        return Err(FlyqError::InvalidArgument("nothing to optimize".into()));
    }
    if bounds.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(FlyqError::InvalidArgument("bounds must be finite with lo ≤ hi".into()));
    }
    let n = config.population;

    let mut pop: Vec<Vec<f64>> = (0..n)
        .map(|slot| {
            let mut rng = stream(config.seed, 0, slot);
            bounds.iter().map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo }).collect()
        })
        .collect();
    let mut scores = score_all(&pop, &f);
    let mut evaluations = n;

    let order = ranking(&scores);
    let mut best_params = pop[order[0]].clone();
    let mut best_score = scores[order[0]];
    let mut history = vec![stats(0, &scores, best_score)];
    let mut last_improvement = 0;
    let reached = |s: f64| config.target_score.is_some_and(|t| s >= t);

    for generation in 1..=config.generations {
        if reached(best_score) {
            break;
        }
        let scale = config.mutation_scale * config.mutation_decay.powi(generation as i32 - 1);
        let order = ranking(&scores);
        let mut next: Vec<Vec<f64>> = order[..config.elitism].iter().map(|&i| pop[i].clone()).collect();
        let mut next_scores: Vec<f64> = order[..config.elitism].iter().map(|&i| scores[i]).collect();

        let children: Vec<Vec<f64>> = (config.elitism..n)
            .map(|slot| {
                let mut rng = stream(config.seed, generation, slot);
                let a = tournament(&scores, config.tournament_size, &mut rng);
                let b = tournament(&scores, config.tournament_size, &mut rng);
                let crossover = rng.gen_bool(config.crossover_rate);
                let mut child: Vec<f64> = pop[a]
                    .iter()
                    .zip(&pop[b])
                    .zip(bounds)
                    .map(|((&x, &y), &(lo, hi))| match config.crossover {
                        _ if !crossover => x,
                        Crossover::Uniform => {
                            if rng.gen_bool(0.5) {
                                y
                            } else {
                                x
                            }
                        }
                        Crossover::Blend { alpha } => {
                            let w = rng.gen_range(-alpha..=1.0 + alpha);
                            (x + w * (y - x)).clamp(lo, hi)
                        }
                    })
                    .collect();
                for (x, &(lo, hi)) in child.iter_mut().zip(bounds) {
                    if rng.gen_bool(config.mutation_rate) && hi > lo {
                        let sigma = scale * (hi - lo);
                        if sigma > 0.0 {
                            let noise: f64 = Normal::new(0.0, sigma).expect("positive sigma").sample(&mut rng);
                            *x = (*x + noise).clamp(lo, hi);
                        }
                    }
                }
                child
            })
            .collect();
        let child_scores = score_all(&children, &f);
        evaluations += children.len();
        next.extend(children);
        next_scores.extend(child_scores);
        pop = next;
        scores = next_scores;

        let gen_best = ranking(&scores)[0];
        if scores[gen_best] > best_score {
            best_score = scores[gen_best];
            best_params = pop[gen_best].clone();
            last_improvement = generation;
        }
        history.push(stats(generation, &scores, best_score));
    }

    let last = history.last().map_or(0, |h| h.generation);
    let converged = match config.target_score {
        Some(t) => best_score >= t,
        None => last > 0 && last - last_improvement >= config.stall_generations,
    };
    if !converged {
        log::info!("genetic search stopped after {last} generations without converging (best {best_score})");
    }
    Ok(GAResult { best_params, best_score, history, converged, evaluations })
}

fn tournament(scores: &[f64], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.gen_range(0..scores.len());
    for _ in 1..size {
        let c = rng.gen_range(0..scores.len());
        if scores[c] > scores[best] || (scores[c] == scores[best] && c < best) {
            best = c;
        }
    }
    best
}
