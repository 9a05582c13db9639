//! Discrete phase-shift search: genetic algorithm plus an exhaustive oracle.
//!
//! Genomes are vectors of quantization levels in `0..2^bits`. Every random
//! decision for individual `i` of generation `g` is drawn from substream
//! `g·population + i`, and fitness values are collected in population order,
//! so results do not depend on how rayon schedules the evaluations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{f_scalar, side_length, Link, PhaseConfig, MAX_BITS};
use crate::channel::TrialStreams;
use crate::closed_form::{self, Mode};
use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Largest `N·bits` accepted by [`exhaustive_search`].
pub const MAX_EXHAUSTIVE_BITS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability; `None` means `1/N`.
    pub mutation_prob: Option<f64>,
    pub elite_fraction: f64,
    pub tournament_size: usize,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 100,
            generations: 200,
            crossover_prob: 0.8,
            mutation_prob: None,
            elite_fraction: 0.05,
            tournament_size: 2,
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn elite_count(&self) -> usize {
        (self.elite_fraction * self.population as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must lie in [0, 1], got {p}")))
            }
        };
        if self.population < 4 {
            return Err(Error::InvalidParams(format!("population must be at least 4, got {}", self.population)));
        }
        prob("crossover_prob", self.crossover_prob)?;
        if let Some(p) = self.mutation_prob {
            prob("mutation_prob", p)?;
        }
        prob("elite_fraction", self.elite_fraction)?;
        if self.elite_count() < 1 {
            return Err(Error::InvalidParams("elite_fraction × population must be at least 1".into()));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population {
            return Err(Error::InvalidParams(format!(
                "tournament_size must lie in 1..={}, got {}",
                self.population, self.tournament_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best: PhaseConfig,
    pub best_objective: f64,
    /// Best objective seen up to and including each generation.
    pub history: Vec<f64>,
    pub evaluations: u64,
}

fn check_alphabet(n: usize, bits: u32) -> Result<()> {
    side_length(n)?;
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::InvalidParams(format!("bits must lie in 1..={MAX_BITS}, got {bits}")));
    }
    Ok(())
}

fn fitness(objective: f64) -> f64 {
    if objective.is_nan() {
        f64::NEG_INFINITY
    } else {
        objective
    }
}

fn tournament(rng: &mut ChaCha8Rng, scores: &[f64], size: usize) -> usize {
    let mut best = rng.gen_range(0..scores.len());
    for _ in 1..size {
        let c = rng.gen_range(0..scores.len());
        if scores[c] > scores[best] || (scores[c] == scores[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Maximizes `objective` over `bits`-bit phase vectors of length `n`.
///
/// Generation 0 holds the all-zero configuration, then each of `seeds`, then
/// uniformly random genomes. The best-ever individual is returned.
pub fn ga_optimize<F>(
    objective: F,
    n: usize,
    bits: u32,
    params: &GaParams,
    seeds: &[PhaseConfig],
) -> Result<OptimizationResult>
where
    F: Fn(&PhaseConfig) -> f64 + Sync,
{
    check_alphabet(n, bits)?;
    params.validate()?;
    let levels = 1u32 << bits;
    let pop = params.population;
    let pm = params.mutation_prob.unwrap_or(1.0 / n as f64);
    let streams = TrialStreams::new(params.seed);

    let mut population: Vec<Vec<u32>> = Vec::with_capacity(pop);
    population.push(vec![0; n]);
    for s in seeds {
        if s.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: s.len() });
        }
        let genome = s
            .levels()
            .filter(|_| s.bits() == bits)
            .ok_or_else(|| Error::InvalidParams(format!("seed configuration is not on the {bits}-bit grid")))?;
        if population.len() < pop {
            population.push(genome);
        }
    }
    for i in population.len()..pop {
        let mut rng = streams.stream(i as u64);
        population.push((0..n).map(|_| rng.gen_range(0..levels)).collect());
    }

    let decode = |g: &[u32]| PhaseConfig::from_levels(g, bits).expect("genome levels are in range");
    let evaluate = |population: &[Vec<u32>]| -> Vec<f64> {
        population.par_iter().map(|g| fitness(objective(&decode(g)))).collect()
    };

    let mut scores = evaluate(&population);
    let mut evaluations = pop as u64;
    let mut best = (population[0].clone(), f64::NEG_INFINITY);
    let mut history = Vec::with_capacity(params.generations + 1);
    let elites = params.elite_count();

    for generation in 0..=params.generations {
        for (g, &s) in population.iter().zip(&scores) {
            if s > best.1 {
                best = (g.clone(), s);
            }
        }
        history.push(best.1);
        if generation == params.generations {
            break;
        }

        let mut order: Vec<usize> = (0..pop).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut next: Vec<Vec<u32>> = order[..elites].iter().map(|&i| population[i].clone()).collect();
        for i in elites..pop {
            let mut rng = streams.stream(((generation + 1) * pop + i) as u64);
            let a = &population[tournament(&mut rng, &scores, params.tournament_size)];
            let b = &population[tournament(&mut rng, &scores, params.tournament_size)];
            let mut child = if rng.gen::<f64>() < params.crossover_prob {
                a.iter().zip(b).map(|(&x, &y)| if rng.gen::<bool>() { x } else { y }).collect()
            } else {
                a.clone()
            };
            for gene in child.iter_mut() {
                if rng.gen::<f64>() < pm {
                    *gene = (*gene + 1 + rng.gen_range(0..levels - 1)) % levels;
                }
            }
            next.push(child);
        }
        population = next;
        scores = evaluate(&population);
        evaluations += pop as u64;
    }

    Ok(OptimizationResult { best: decode(&best.0), best_objective: best.1, history, evaluations })
}

/// Exact maximizer over all `2^(n·bits)` configurations; ties go to the
/// lexicographically smallest level vector.
pub fn exhaustive_search<F>(objective: F, n: usize, bits: u32) -> Result<OptimizationResult>
where
    F: Fn(&PhaseConfig) -> f64 + Sync,
{
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::InvalidParams(format!("bits must lie in 1..={MAX_BITS}, got {bits}")));
    }
    let total_bits = n * bits as usize;
    if total_bits > MAX_EXHAUSTIVE_BITS {
        return Err(Error::SearchTooLarge(total_bits));
    }
    let levels = 1u64 << bits;
    // gene 0 is the most significant digit, so index order is lexicographic
    let decode = |mut idx: u64| {
        let mut genome = vec![0u32; n];
        for gene in genome.iter_mut().rev() {
            *gene = (idx % levels) as u32;
            idx /= levels;
        }
        PhaseConfig::from_levels(&genome, bits).expect("genome levels are in range")
    };
    let count = 1u64 << total_bits;
    let scores: Vec<f64> = (0..count).into_par_iter().map(|i| fitness(objective(&decode(i)))).collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(OptimizationResult {
        best: decode(best as u64),
        best_objective: scores[best],
        history: vec![scores[best]],
        evaluations: count,
    })
}

/// I.i.d. uniform levels over the `bits`-bit alphabet.
pub fn random_phases(n: usize, bits: u32, seed: u64) -> Result<PhaseConfig> {
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::InvalidParams(format!("bits must lie in 1..={MAX_BITS}, got {bits}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels: Vec<u32> = (0..n).map(|_| rng.gen_range(0..1u32 << bits)).collect();
    PhaseConfig::from_levels(&levels, bits)
}

/// `|f(k, q)|²` as an objective.
pub fn f_abs2_objective(k: f64, q: f64) -> impl Fn(&PhaseConfig) -> f64 + Sync {
    move |p| f_scalar(p, k, q).map(|f| f.norm_sqr()).unwrap_or(f64::NEG_INFINITY)
}

/// Closed-form ergodic rate as an objective. Fails early if the configuration
/// cannot produce a rate at all.
pub fn rate_objective(cfg: &SystemConfig, link: Link, mode: Mode) -> Result<impl Fn(&PhaseConfig) -> f64 + Sync> {
    closed_form::rate(cfg, link, mode, 0.0)?;
    let cfg = cfg.clone();
    Ok(move |p: &PhaseConfig| closed_form::rate_for_phases(&cfg, link, mode, p).unwrap_or(f64::NEG_INFINITY))
}
