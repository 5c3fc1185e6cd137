//! Real-coded genetic algorithm on a box, maximising a fitness function.
//!
//! Tournament selection, uniform crossover, Gaussian mutation with a
//! geometrically shrinking step, and a small elite carried over unchanged.
//! Every child draws from its own RNG stream keyed by
//! `(seed, generation, child index)`, so a run is reproducible no matter
//! how fitness evaluations are scheduled across threads.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::seeds;

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub max_generations: usize,
    pub stall_generations: usize,
    pub function_tolerance: f64,
    pub lower: f64,
    pub upper: f64,
    pub elitism: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    /// Initial mutation step as a fraction of `upper - lower`.
    pub mutation_scale: f64,
    /// Per-generation shrink factor of the mutation step.
    pub mutation_decay: f64,
}

impl GaConfig {
    pub fn new(population: usize, max_generations: usize, lower: f64, upper: f64) -> Self {
        GaConfig {
            population,
            max_generations,
            stall_generations: 60,
            function_tolerance: 1e-9,
            lower,
            upper,
            elitism: 2,
            tournament: 3,
            crossover_rate: 0.8,
            mutation_scale: 0.05,
            mutation_decay: 0.98,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    pub generations: usize,
    pub evaluations: u64,
    /// The best fitness stalled within `function_tolerance` for
    /// `stall_generations` generations.
    pub converged: bool,
}

/// Runs the GA in `dim` dimensions. `seeds_in` are injected into the
/// initial population after clamping to the box.
pub fn run<F>(config: &GaConfig, dim: usize, fitness: F, seeds_in: &[Vec<f64>], seed: u64) -> GaOutcome
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let range = config.upper - config.lower;
    let clamp = |x: f64| x.clamp(config.lower, config.upper);
    let pop_size = config.population.max(config.elitism + 2);

    let mut population: Vec<Vec<f64>> = Vec::with_capacity(pop_size);
    for s in seeds_in.iter().take(pop_size) {
        debug_assert_eq!(s.len(), dim);
        population.push(s.iter().copied().map(clamp).collect());
    }
    while population.len() < pop_size {
        let idx = population.len();
        let mut rng = seeds::rng(seed, &[0, idx as u64, 0xA11]);
        // half flat profiles, half fully random ones
        let individual = if idx.is_multiple_of(2) {
            let hi = config.lower + range.min(2.0);
            let level = rng.gen_range(config.lower..=hi);
            vec![level; dim]
        } else {
            (0..dim).map(|_| rng.gen_range(config.lower..=config.upper)).collect()
        };
        population.push(individual);
    }

    let mut scores: Vec<f64> = population.par_iter().map(|x| fitness(x)).collect();
    let mut evaluations = pop_size as u64;
    let mut history = Vec::with_capacity(config.max_generations + 1);
    let mut converged = false;
    let mut generation = 0;
    let gene_rate = (1.0 / dim as f64).max(0.1);

    loop {
        let mut order: Vec<usize> = (0..pop_size).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        history.push(scores[order[0]]);

        if history.len() > config.stall_generations {
            let past = history[history.len() - 1 - config.stall_generations];
            if scores[order[0]] - past <= config.function_tolerance {
                converged = true;
                break;
            }
        }
        if generation >= config.max_generations {
            break;
        }
        generation += 1;

        let sigma = (config.mutation_scale * range * config.mutation_decay.powi(generation as i32)).max(1e-4 * range);
        let parents = &population;
        let parent_scores = &scores;
        let tournament = |rng: &mut rand_chacha::ChaCha8Rng| -> usize {
            let mut best = rng.gen_range(0..pop_size);
            for _ in 1..config.tournament {
                let other = rng.gen_range(0..pop_size);
                if parent_scores[other] > parent_scores[best] {
                    best = other;
                }
            }
            best
        };

        let elite = config.elitism.min(pop_size);
        let mut next: Vec<Vec<f64>> = order[..elite].iter().map(|&i| parents[i].clone()).collect();
        let children: Vec<Vec<f64>> = (elite..pop_size)
            .map(|child| {
                let mut rng = seeds::rng(seed, &[generation as u64, child as u64, 0xC41]);
                let a = tournament(&mut rng);
                let b = tournament(&mut rng);
                let mut genes = parents[a].clone();
                if rng.gen::<f64>() < config.crossover_rate {
                    for (g, &other) in genes.iter_mut().zip(&parents[b]) {
                        if rng.gen::<bool>() {
                            *g = other;
                        }
                    }
                }
                for g in genes.iter_mut() {
                    if rng.gen::<f64>() < gene_rate {
                        let z: f64 = rng.sample(StandardNormal);
                        *g = clamp(*g + sigma * z);
                    }
                }
                genes
            })
            .collect();
        let child_scores: Vec<f64> = children.par_iter().map(|x| fitness(x)).collect();
        evaluations += children.len() as u64;

        let mut next_scores: Vec<f64> = order[..elite].iter().map(|&i| scores[i]).collect();
        next.extend(children);
        next_scores.extend(child_scores);
        population = next;
        scores = next_scores;
    }

    let best_idx = (0..pop_size)
        .max_by(|&a, &b| scores[a].total_cmp(&scores[b]))
        .expect("nonempty population");
    GaOutcome {
        best: population[best_idx].clone(),
        best_fitness: scores[best_idx],
        generations: generation,
        evaluations,
        converged,
    }
}
