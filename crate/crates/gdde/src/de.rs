//! Differential evolution: variation operators and a budgeted generational
//! optimizer.
//!
//! The optimizer serves three roles: the plain baseline algorithm, the
//! offspring generator of the prescreening stage, and the inner search over
//! cheap surrogate predictors. Selection is generational with greedy
//! one-to-one replacement: all `NP` trials of a generation are built from the
//! frozen parent population, then evaluated and applied in index order, the
//! trial winning ties.

use crate::error::{Error, Result};
use crate::problem::{Solution, Stage};
use crate::space::DecisionSpace;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Mutation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeStrategy {
    /// `v = best + Mu·(x_{i1} − x_{i2})`
    Best1,
    /// `v = x_i + Mu·(best − x_i) + Mu·(x_{i1} − x_{i2})`
    CurrentToBest1,
}

/// Differential-evolution control parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeParams {
    /// Population size `NP` (at least 4: best, two distinct donors, current).
    pub population_size: usize,
    /// Mutation weight `Mu` in `(0, 2]`.
    pub mutation: f64,
    /// Crossover rate `CR` in `[0, 1]`.
    pub crossover: f64,
    pub strategy: DeStrategy,
    pub rng_seed: u64,
}

impl Default for DeParams {
    fn default() -> Self {
        Self {
            population_size: 50,
            mutation: 0.5,
            crossover: 0.9,
            strategy: DeStrategy::Best1,
            rng_seed: 0,
        }
    }
}

impl DeParams {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::InvalidArgument(format!(
                "population size must be at least 4, got {}",
                self.population_size
            )));
        }
        if !(self.mutation > 0.0 && self.mutation <= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "mutation weight must lie in (0, 2], got {}",
                self.mutation
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::InvalidArgument(format!(
                "crossover rate must lie in [0, 1], got {}",
                self.crossover
            )));
        }
        Ok(())
    }
}

/// The donor arithmetic shared by both strategies, with explicit operands.
pub fn donor_vector(
    strategy: DeStrategy,
    mutation: f64,
    best: &[f64],
    current: &[f64],
    x1: &[f64],
    x2: &[f64],
) -> Vec<f64> {
    match strategy {
        DeStrategy::Best1 => best
            .iter()
            .zip(x1.iter().zip(x2))
            .map(|(b, (a1, a2))| b + mutation * (a1 - a2))
            .collect(),
        DeStrategy::CurrentToBest1 => current
            .iter()
            .zip(best.iter().zip(x1.iter().zip(x2)))
            .map(|(c, (b, (a1, a2)))| c + mutation * (b - c) + mutation * (a1 - a2))
            .collect(),
    }
}

/// Builds a donor for member `i`: two distinct population members other than
/// `i` are drawn uniformly and combined per the strategy. The donor is NOT
/// bound-repaired.
pub fn mutate<R: Rng>(
    pop: &[Vec<f64>],
    best: &[f64],
    i: usize,
    params: &DeParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let np = pop.len();
    if np < 4 {
        return Err(Error::InvalidArgument(format!(
            "mutation needs a population of at least 4, got {np}"
        )));
    }
    if i >= np {
        return Err(Error::InvalidArgument(format!(
            "member index {i} out of range for population of {np}"
        )));
    }
    let mut i1 = rng.random_range(0..np);
    while i1 == i {
        i1 = rng.random_range(0..np);
    }
    let mut i2 = rng.random_range(0..np);
    while i2 == i || i2 == i1 {
        i2 = rng.random_range(0..np);
    }
    Ok(donor_vector(
        params.strategy,
        params.mutation,
        best,
        &pop[i],
        &pop[i1],
        &pop[i2],
    ))
}

/// Binomial crossover: coordinate `j` comes from the donor iff a fresh
/// uniform draw is ≤ `CR` or `j` equals a pre-drawn forced index, so every
/// trial inherits at least one donor coordinate.
pub fn crossover<R: Rng>(
    target: &[f64],
    donor: &[f64],
    params: &DeParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if target.len() != donor.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            got: donor.len(),
        });
    }
    let d = target.len();
    let j_rand = rng.random_range(0..d);
    let trial = (0..d)
        .map(|j| {
            let draw: f64 = rng.random();
            if draw <= params.crossover || j == j_rand {
                donor[j]
            } else {
                target[j]
            }
        })
        .collect();
    Ok(trial)
}

/// Index of the largest fitness, earliest index on ties.
fn argmax(fitness: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in fitness.iter().enumerate().skip(1) {
        if f > fitness[best] {
            best = i;
        }
    }
    best
}

/// Runs budgeted generational DE, maximizing `objective` over `space`.
///
/// The initial population is uniform random, every candidate passes
/// `clamp_and_round` before evaluation, and a trial replaces its target iff
/// its fitness is ≥ the target's. A partial final generation evaluates only
/// as many trials as the remaining budget allows. Returns the best-ever
/// solution (earliest evaluation on ties); bit-reproducible for a fixed seed.
pub fn run_de<F>(
    objective: &mut F,
    space: &DecisionSpace,
    params: &DeParams,
    budget: usize,
) -> Result<Solution>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    params.validate()?;
    let np = params.population_size;
    if budget < np {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} is smaller than the population size {np}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);

    let mut pop: Vec<Vec<f64>> = Vec::with_capacity(np);
    for _ in 0..np {
        let raw = space.sample_uniform(&mut rng);
        pop.push(space.clamp_and_round(&raw)?);
    }
    let mut fitness = Vec::with_capacity(np);
    for member in &pop {
        fitness.push(objective(member)?);
    }
    let mut used = np;
    let mut best_ever_idx = argmax(&fitness);
    let mut best_ever = Solution::evaluated(
        pop[best_ever_idx].clone(),
        fitness[best_ever_idx],
        Stage::Baseline,
    );

    while used < budget {
        let gen_best = pop[argmax(&fitness)].clone();
        let parents = pop.clone();
        let mut trials = Vec::with_capacity(np);
        for i in 0..np {
            let donor = mutate(&parents, &gen_best, i, params, &mut rng)?;
            let donor = space.clamp_and_round(&donor)?;
            let trial = crossover(&parents[i], &donor, params, &mut rng)?;
            trials.push(space.clamp_and_round(&trial)?);
        }
        for (i, trial) in trials.into_iter().enumerate() {
            if used == budget {
                break;
            }
            let f = objective(&trial)?;
            used += 1;
            if f > best_ever.fitness_value() {
                best_ever = Solution::evaluated(trial.clone(), f, Stage::Baseline);
            }
            if f >= fitness[i] {
                pop[i] = trial;
                fitness[i] = f;
            }
        }
        best_ever_idx = argmax(&fitness);
        debug_assert!(fitness[best_ever_idx] <= best_ever.fitness_value());
    }
    Ok(best_ever)
}
