//! Genetic-algorithm strategy.
//!
//! Each chromosome is a schedule of `G` risk propensities, one per step of
//! the cycle. During a generation every chromosome is scored against the
//! shared return stream, `f_j += r(t) * g_j[t mod G]`, independently of what
//! the agent actually invested. At the end of the generation the population
//! is rebuilt by elitism plus size-two tournaments, single-point crossover
//! and per-gene mutation, and the agent follows the best schedule of the
//! generation that just finished.

use crate::error::{Error, Result};
use crate::policy::QBounds;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    population: usize,
    genes: usize,
    p_crossover: f64,
    p_mutation: f64,
    elitism: f64,
}

impl GaConfig {
    /// `elitism` is the fraction of the population copied unchanged; values
    /// above one half are accepted but fall outside the tuning ranges.
    pub fn new(population: usize, genes: usize, p_crossover: f64, p_mutation: f64, elitism: f64) -> Result<Self> {
        if population == 0 {
            return Err(Error::invalid("population", "must be positive"));
        }
        if genes == 0 {
            return Err(Error::invalid("genes", "must be positive"));
        }
        Error::check_range("p_crossover", p_crossover, 0.0, 1.0)?;
        Error::check_range("p_mutation", p_mutation, 0.0, 1.0)?;
        Error::check_range("elitism", elitism, 0.0, 1.0)?;
        Ok(Self {
            population,
            genes,
            p_crossover,
            p_mutation,
            elitism,
        })
    }

    /// C = 1000, p_c = 0.7, p_m = 0.01, s = 0.3.
    pub fn tuned(genes: usize) -> Result<Self> {
        Self::new(1000, genes, 0.7, 0.01, 0.3)
    }

    pub fn population(&self) -> usize {
        self.population
    }

    pub fn genes(&self) -> usize {
        self.genes
    }

    pub fn p_crossover(&self) -> f64 {
        self.p_crossover
    }

    pub fn p_mutation(&self) -> f64 {
        self.p_mutation
    }

    pub fn elitism(&self) -> f64 {
        self.elitism
    }

    /// `floor(s * C)`, tolerant of representation error in `s`.
    pub fn elite_count(&self) -> usize {
        let n = (self.elitism * self.population as f64 + 1e-9).floor() as usize;
        n.min(self.population)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub genes: Vec<f64>,
    pub fitness: f64,
}

impl Chromosome {
    fn random(genes: usize, bounds: &QBounds, rng: &mut RngStream) -> Self {
        Self {
            genes: (0..genes).map(|_| rng.open_uniform(bounds.min(), bounds.max())).collect(),
            fitness: 0.0,
        }
    }
}

/// Exchange tails after `cut`: `(a[..cut] ++ b[cut..], b[..cut] ++ a[cut..])`.
pub fn single_point_crossover(a: &[f64], b: &[f64], cut: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), b.len(), "parents differ in length");
    assert!(cut <= a.len(), "cut point past the end");
    let mut left = a[..cut].to_vec();
    left.extend_from_slice(&b[cut..]);
    let mut right = b[..cut].to_vec();
    right.extend_from_slice(&a[cut..]);
    (left, right)
}

/// Indices sorted by descending fitness; ties keep the lower index first.
fn ranking(chromosomes: &[Chromosome]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..chromosomes.len()).collect();
    order.sort_by(|&a, &b| chromosomes[b].fitness.total_cmp(&chromosomes[a].fitness));
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    chromosomes: Vec<Chromosome>,
    generation: u64,
    best_previous: Option<Chromosome>,
    accumulated: usize,
}

impl Population {
    /// `C` chromosomes of `G` genes drawn uniformly from `(q_min, q_max)`.
    pub fn init(cfg: &GaConfig, bounds: &QBounds, rng: &mut RngStream) -> Self {
        let chromosomes = (0..cfg.population)
            .map(|_| Chromosome::random(cfg.genes, bounds, rng))
            .collect();
        Self {
            chromosomes,
            generation: 0,
            best_previous: None,
            accumulated: 0,
        }
    }

    /// Population with given genes and zero fitness.
    pub fn from_genes(genes: Vec<Vec<f64>>) -> Result<Self> {
        let g = genes.first().map(Vec::len).unwrap_or(0);
        if g == 0 || genes.iter().any(|c| c.len() != g) {
            return Err(Error::invalid("genes", "need a non-empty rectangular gene matrix"));
        }
        Ok(Self {
            chromosomes: genes.into_iter().map(|genes| Chromosome { genes, fitness: 0.0 }).collect(),
            generation: 0,
            best_previous: None,
            accumulated: 0,
        })
    }

    pub fn chromosomes(&self) -> &[Chromosome] {
        &self.chromosomes
    }

    pub fn len(&self) -> usize {
        self.chromosomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chromosomes.is_empty()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Steps scored so far in the current generation.
    pub fn accumulated(&self) -> usize {
        self.accumulated
    }

    pub fn genes(&self) -> usize {
        self.chromosomes[0].genes.len()
    }

    /// Fittest chromosome of the previous generation.
    pub fn best_previous(&self) -> Option<&Chromosome> {
        self.best_previous.as_ref()
    }

    /// Currently fittest chromosome (lowest index on ties).
    pub fn leader(&self) -> &Chromosome {
        &self.chromosomes[ranking(&self.chromosomes)[0]]
    }

    /// Score every chromosome against the return revealed at time `t`.
    pub fn accumulate_fitness(&mut self, r: f64, t: u64) {
        let k = (t % self.genes() as u64) as usize;
        for c in &mut self.chromosomes {
            c.fitness += r * c.genes[k];
        }
        self.accumulated += 1;
    }

    pub fn generation_complete(&self) -> bool {
        self.accumulated >= self.genes()
    }

    pub fn evolve(&mut self, cfg: &GaConfig, bounds: &QBounds, rng: &mut RngStream) -> Result<()> {
        if !self.generation_complete() {
            return Err(Error::IncompleteGeneration {
                accumulated: self.accumulated,
                genes: self.genes(),
            });
        }
        if cfg.genes != self.genes() || cfg.population != self.len() {
            return Err(Error::invalid("ga config", "does not match the population shape"));
        }
        let old = &self.chromosomes;
        let order = ranking(old);
        let size = old.len();
        let genes = self.genes();

        let mut next: Vec<Chromosome> = order[..cfg.elite_count()]
            .iter()
            .map(|&i| Chromosome {
                genes: old[i].genes.clone(),
                fitness: 0.0,
            })
            .collect();

        let tournament = |rng: &mut RngStream| {
            let (a, b) = (rng.index(size), rng.index(size));
            match old[a].fitness.total_cmp(&old[b].fitness) {
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Equal => a.min(b),
            }
        };

        while next.len() < size {
            let p1 = tournament(rng);
            let p2 = tournament(rng);
            let (c1, c2) = if genes > 1 && rng.chance(cfg.p_crossover) {
                let cut = 1 + rng.index(genes - 1);
                single_point_crossover(&old[p1].genes, &old[p2].genes, cut)
            } else {
                (old[p1].genes.clone(), old[p2].genes.clone())
            };
            for mut child in [c1, c2] {
                if next.len() == size {
                    break;
                }
                for g in &mut child {
                    if rng.chance(cfg.p_mutation) {
                        *g = rng.open_uniform(bounds.min(), bounds.max());
                    }
                }
                next.push(Chromosome {
                    genes: child,
                    fitness: 0.0,
                });
            }
        }

        self.best_previous = Some(old[order[0]].clone());
        self.chromosomes = next;
        self.generation += 1;
        self.accumulated = 0;
        Ok(())
    }

    /// Invested fraction at time `t`: the previous generation's best gene for
    /// `t mod G`, or `q_min` before the first evolution.
    pub fn action(&self, t: u64, bounds: &QBounds) -> f64 {
        match &self.best_previous {
            Some(best) => best.genes[(t % best.genes.len() as u64) as usize],
            None => bounds.min(),
        }
    }
}
