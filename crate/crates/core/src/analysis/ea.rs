//! Generational evolutionary algorithm over integer lattices: tournament
//! selection, two-point crossover, uniform integer mutation and a hall of
//! fame. Fitness is maximized.

use serde::{Deserialize, Serialize};

use super::{invalid, Result};
use crate::engine::Prng;

/// Genes take the values `min, min + step, ..., <= max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub min: i64,
    pub step: i64,
    pub max: i64,
}

impl Lattice {
    pub fn new(min: i64, step: i64, max: i64) -> Self {
        Lattice { min, step, max }
    }

    pub fn points(&self) -> u64 {
        ((self.max - self.min) / self.step) as u64 + 1
    }

    pub fn contains(&self, v: i64) -> bool {
        v >= self.min && v <= self.max && (v - self.min) % self.step == 0
    }

    fn draw(&self, rng: &mut Prng) -> i64 {
        self.min + rng.below(self.points()) as i64 * self.step
    }

    /// Draws from the lattice points not below `floor`.
    fn draw_from(&self, floor: i64, rng: &mut Prng) -> i64 {
        let skipped = if floor > self.min {
            (floor - self.min + self.step - 1) / self.step
        } else {
            0
        };
        let first = self.min + skipped * self.step;
        if first > self.max {
            return self.min + (self.points() as i64 - 1) * self.step;
        }
        first + rng.below(((self.max - first) / self.step) as u64 + 1) as i64 * self.step
    }
}

/// Lower bound used by the mutation operator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationBounds {
    /// Each gene's own `[min, max]`.
    #[default]
    MinMax,
    /// `[step, max]`, as the widely circulated calibration script does by
    /// indexing the wrong element of each range triple.
    ListingCompat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub cxpb: f64,
    pub mutpb: f64,
    pub indpb: f64,
    pub tournament_size: usize,
    pub hall_of_fame_size: usize,
    pub lattices: Vec<Lattice>,
    pub seed: i64,
    pub mutation_bounds: MutationBounds,
}

impl Default for EaConfig {
    fn default() -> Self {
        EaConfig {
            population_size: 200,
            generations: 100,
            cxpb: 0.8,
            mutpb: 0.2,
            indpb: 0.1,
            tournament_size: 3,
            hall_of_fame_size: 1,
            lattices: Vec::new(),
            seed: 0,
            mutation_bounds: MutationBounds::MinMax,
        }
    }
}

impl EaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(invalid("population_size must be at least 2"));
        }
        if self.lattices.is_empty() {
            return Err(invalid("at least one gene lattice is required"));
        }
        if self.tournament_size == 0 || self.hall_of_fame_size == 0 {
            return Err(invalid("tournament_size and hall_of_fame_size must be positive"));
        }
        for (name, p) in [("cxpb", self.cxpb), ("mutpb", self.mutpb), ("indpb", self.indpb)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("{name} must be within [0, 1]")));
            }
        }
        for (i, l) in self.lattices.iter().enumerate() {
            if l.step <= 0 || l.min > l.max {
                return Err(invalid(format!("gene {i} lattice {l:?} is not valid")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<i64>,
    pub fitness: Option<f64>,
}

impl Individual {
    fn fit(&self) -> f64 {
        self.fitness.expect("evaluated individual")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub gen: usize,
    pub evals: usize,
    pub max: f64,
    pub mean: f64,
    /// Best fitness in the hall of fame after this generation.
    pub best: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EaOutcome {
    /// Best first.
    pub hall_of_fame: Vec<Individual>,
    /// Statistics of the evaluated random population.
    pub initial: GenerationStats,
    /// One entry per generation, `1..=generations`.
    pub log: Vec<GenerationStats>,
    pub population: Vec<Individual>,
}

/// Runs the generational loop. `evaluate` receives the genes of every
/// individual whose fitness is unknown plus a seed drawn from the
/// algorithm's own stream, and returns one fitness per gene vector.
pub fn ea_simple<E, F>(config: &EaConfig, mut evaluate: F) -> std::result::Result<EaOutcome, E>
where
    F: FnMut(&[Vec<i64>], i64) -> std::result::Result<Vec<f64>, E>,
    E: From<super::AnalysisError>,
{
    config.validate()?;
    let mut rng = Prng::seed_from(config.seed);
    let mut population: Vec<Individual> = (0..config.population_size)
        .map(|_| Individual {
            genes: config.lattices.iter().map(|l| l.draw(&mut rng)).collect(),
            fitness: None,
        })
        .collect();
    let mut hof: Vec<Individual> = Vec::new();

    let evals = evaluate_invalid(&mut population, &mut rng, &mut evaluate)?;
    update_hof(&mut hof, &population, config.hall_of_fame_size);
    let initial = stats(0, evals, &population, &hof);

    let mut log = Vec::with_capacity(config.generations);
    for gen in 1..=config.generations {
        let mut offspring = select_tournament(
            &population,
            config.population_size,
            config.tournament_size,
            &mut rng,
        );
        vary(&mut offspring, config, &mut rng);
        let evals = evaluate_invalid(&mut offspring, &mut rng, &mut evaluate)?;
        update_hof(&mut hof, &offspring, config.hall_of_fame_size);
        population = offspring;
        log.push(stats(gen, evals, &population, &hof));
    }
    Ok(EaOutcome {
        hall_of_fame: hof,
        initial,
        log,
        population,
    })
}

fn evaluate_invalid<E, F>(
    pop: &mut [Individual],
    rng: &mut Prng,
    evaluate: &mut F,
) -> std::result::Result<usize, E>
where
    F: FnMut(&[Vec<i64>], i64) -> std::result::Result<Vec<f64>, E>,
    E: From<super::AnalysisError>,
{
    let idx: Vec<usize> = (0..pop.len()).filter(|&i| pop[i].fitness.is_none()).collect();
    let genes: Vec<Vec<i64>> = idx.iter().map(|&i| pop[i].genes.clone()).collect();
    let seed = (rng.next_u64() >> 33) as i64;
    let fitness = evaluate(&genes, seed)?;
    if fitness.len() != genes.len() {
        return Err(invalid(format!(
            "evaluator returned {} fitness values for {} individuals",
            fitness.len(),
            genes.len()
        ))
        .into());
    }
    for (&i, f) in idx.iter().zip(fitness) {
        pop[i].fitness = Some(f);
    }
    Ok(idx.len())
}

fn stats(gen: usize, evals: usize, pop: &[Individual], hof: &[Individual]) -> GenerationStats {
    let fits: Vec<f64> = pop.iter().map(Individual::fit).collect();
    GenerationStats {
        gen,
        evals,
        max: fits.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: fits.iter().sum::<f64>() / fits.len() as f64,
        best: hof[0].fit(),
    }
}

fn select_tournament(pop: &[Individual], k: usize, size: usize, rng: &mut Prng) -> Vec<Individual> {
    (0..k)
        .map(|_| {
            let mut best = &pop[rng.below(pop.len() as u64) as usize];
            for _ in 1..size {
                let c = &pop[rng.below(pop.len() as u64) as usize];
                if c.fit() > best.fit() {
                    best = c;
                }
            }
            best.clone()
        })
        .collect()
}

fn vary(offspring: &mut [Individual], config: &EaConfig, rng: &mut Prng) {
    for i in (1..offspring.len()).step_by(2) {
        if rng.next_f64() < config.cxpb {
            let (left, right) = offspring.split_at_mut(i);
            cx_two_point(&mut left[i - 1], &mut right[0], rng);
        }
    }
    for ind in offspring.iter_mut() {
        if rng.next_f64() < config.mutpb {
            mutate(ind, config, rng);
        }
    }
}

/// Swaps the genes between two cut points chosen in `1..=len`.
fn cx_two_point(a: &mut Individual, b: &mut Individual, rng: &mut Prng) {
    let size = a.genes.len().min(b.genes.len());
    if size < 2 {
        return;
    }
    let mut p1 = 1 + rng.below(size as u64) as usize;
    let mut p2 = 1 + rng.below(size as u64 - 1) as usize;
    if p2 >= p1 {
        p2 += 1;
    } else {
        std::mem::swap(&mut p1, &mut p2);
    }
    a.genes[p1..p2].swap_with_slice(&mut b.genes[p1..p2]);
    a.fitness = None;
    b.fitness = None;
}

fn mutate(ind: &mut Individual, config: &EaConfig, rng: &mut Prng) {
    for (g, l) in ind.genes.iter_mut().zip(&config.lattices) {
        if rng.next_f64() < config.indpb {
            *g = match config.mutation_bounds {
                MutationBounds::MinMax => l.draw(rng),
                MutationBounds::ListingCompat => l.draw_from(l.step, rng),
            };
        }
    }
    ind.fitness = None;
}

fn update_hof(hof: &mut Vec<Individual>, pop: &[Individual], size: usize) {
    for ind in pop {
        if hof.iter().any(|h| h.genes == ind.genes) {
            continue;
        }
        if hof.len() < size || ind.fit() > hof[hof.len() - 1].fit() {
            let pos = hof.partition_point(|h| h.fit() >= ind.fit());
            hof.insert(pos, ind.clone());
            hof.truncate(size);
        }
    }
}
