//! The surrogate-assisted optimization loop: space-filling initialization,
//! then alternating classification-based prescreening and local surrogate
//! search, two real evaluations per iteration, until a fixed evaluation
//! budget is spent.
//!
//! Ablation modes run a single stage per iteration: `ClassifierOnly` repeats
//! the prescreening stage, `LocalOnly` repeats the local search stage.

use crate::de::{crossover, mutate, run_de, DeParams};
use crate::error::{Error, Result};
use crate::pnn::{ClassLabel, PnnModel};
use crate::problem::{select_best, EvaluationDatabase, ObjectiveHandle, Solution, Stage};
use crate::rbf::fit_rbf;
use crate::sampling::lhs;
use crate::space::DecisionSpace;
use crate::trace::RunTrace;
use crate::tuner::{mean_pairwise_distance, optimal_sigma, ModelKind, TunerSettings};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which stages the loop runs each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GddeMode {
    /// Prescreening followed by local search (2 evaluations per iteration).
    Full,
    /// Prescreening only (1 evaluation per iteration).
    ClassifierOnly,
    /// Local search only (1 evaluation per iteration).
    LocalOnly,
}

/// Parameters of the full loop.
///
/// `de.population_size` doubles as the prescreening population size; the
/// `rng_seed` fields inside `de`/`inner_de` are ignored here — all
/// randomness derives from this struct's own `rng_seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GddeParams {
    /// Top-ranked count labeled class 1 in the prescreening stage (λ).
    pub first_class_size: usize,
    /// Initial design size; also the local training-set size unless
    /// overridden (τ).
    pub initial_design: usize,
    /// Overrides the local training-set size when set.
    pub local_train_count: Option<usize>,
    /// Offspring-generation parameters; `population_size` is the stage
    /// population size (NP).
    pub de: DeParams,
    /// Inner optimizer over the local surrogate.
    pub inner_de: DeParams,
    /// Surrogate-search budget per problem dimension.
    pub inner_budget_per_dim: usize,
    pub tuner: TunerSettings,
    /// Total real-evaluation budget, including the initial design.
    pub budget: usize,
    pub rng_seed: u64,
    pub mode: GddeMode,
}

impl Default for GddeParams {
    fn default() -> Self {
        let de = DeParams::default();
        Self {
            first_class_size: default_first_class_size(de.population_size),
            initial_design: 100,
            local_train_count: None,
            de,
            inner_de: DeParams::default(),
            inner_budget_per_dim: 100,
            tuner: TunerSettings::default(),
            budget: 500,
            rng_seed: 0,
            mode: GddeMode::Full,
        }
    }
}

/// Default class-1 size: the top third of the population, rounded up.
pub fn default_first_class_size(population_size: usize) -> usize {
    population_size.div_ceil(3)
}

impl GddeParams {
    /// The local training-set size actually used (τ unless overridden).
    pub fn local_train_size(&self) -> usize {
        self.local_train_count.unwrap_or(self.initial_design)
    }

    fn uses_prescreen(&self) -> bool {
        matches!(self.mode, GddeMode::Full | GddeMode::ClassifierOnly)
    }

    fn uses_local(&self) -> bool {
        matches!(self.mode, GddeMode::Full | GddeMode::LocalOnly)
    }

    pub fn validate(&self) -> Result<()> {
        self.de.validate()?;
        self.inner_de.validate()?;
        let np = self.de.population_size;
        if self.first_class_size == 0 || self.first_class_size >= np {
            return Err(Error::InvalidArgument(format!(
                "first-class size must satisfy 1 ≤ λ < population size, got λ={} NP={np}",
                self.first_class_size
            )));
        }
        if self.initial_design == 0 {
            return Err(Error::InvalidArgument(
                "initial design size must be at least 1".into(),
            ));
        }
        if self.budget < self.initial_design {
            return Err(Error::InvalidArgument(format!(
                "budget {} cannot cover the initial design of {} evaluations",
                self.budget, self.initial_design
            )));
        }
        if self.uses_prescreen() && self.initial_design < np {
            return Err(Error::InvalidArgument(format!(
                "prescreening selects NP={np} database points, so the initial design {} must be at least NP",
                self.initial_design
            )));
        }
        if self.uses_local() && self.local_train_size() < 2 {
            return Err(Error::InvalidArgument(
                "local search needs a training set of at least 2 points".into(),
            ));
        }
        if self.uses_local() && self.local_train_size() > self.initial_design {
            return Err(Error::InvalidArgument(format!(
                "local training count {} exceeds the initial design size {}",
                self.local_train_size(),
                self.initial_design
            )));
        }
        if self.inner_budget_per_dim == 0 {
            return Err(Error::InvalidArgument(
                "inner surrogate budget must be positive".into(),
            ));
        }
        if self.tuner.m < 3 {
            return Err(Error::InvalidArgument(format!(
                "tuner needs at least 3 trial shape factors, got {}",
                self.tuner.m
            )));
        }
        if !(self.tuner.sigma_min_factor > 0.0
            && self.tuner.sigma_min_factor < self.tuner.sigma_max_factor
            && self.tuner.sigma_max_factor.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "tuner bound factors must satisfy 0 < min < max, got [{}, {}]",
                self.tuner.sigma_min_factor, self.tuner.sigma_max_factor
            )));
        }
        Ok(())
    }
}

/// Which emergency path produced the evaluated point, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackKind {
    /// No class-1 trial existed; the most uncertain of ALL trials was used.
    AllTrials,
    /// The chosen point duplicated the database; a tiny perturbation fixed it.
    PerturbedDuplicate,
    /// Perturbation still collided; a fresh uniform draw was used.
    RandomDuplicate,
}

/// Per-dimension local-box width statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxWidthsSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// One stage call's diagnostics record (one JSON line in run outputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    pub stage: Stage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class1_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_pnn: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_rbf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_widths_summary: Option<BoxWidthsSummary>,
    /// Always present so fallback activity is visible in every record.
    pub fallback: Option<FallbackKind>,
}

/// Result of one stage call: the newly evaluated solution plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub evaluated: Solution,
    pub diagnostics: IterationDiagnostics,
}

/// Result of a whole run.
#[derive(Debug, Clone)]
pub struct GddeOutcome {
    pub best: Solution,
    pub trace: RunTrace,
    pub diagnostics: Vec<IterationDiagnostics>,
}

/// The candidate with the largest minimum distance to the database (the
/// "most uncertain"), with that distance; ties keep the earliest candidate.
/// `None` on an empty candidate list.
pub fn select_uncertain<'a>(
    candidates: &'a [Vec<f64>],
    db: &EvaluationDatabase,
) -> Option<(&'a Vec<f64>, f64)> {
    let mut best: Option<(&Vec<f64>, f64)> = None;
    for c in candidates {
        let dist = db.min_distance_to(c);
        match best {
            None => best = Some((c, dist)),
            Some((_, d)) if dist > d => best = Some((c, dist)),
            _ => {}
        }
    }
    best
}

/// Resolves a prospective evaluation point against the database: an exact
/// duplicate is first nudged by ±1e−6 of each dimension's range inside
/// `draw_space`, then replaced by fresh uniform draws from `draw_space`.
/// Returns the final point and the fallback tag, if any fired.
fn resolve_duplicate<R: Rng>(
    x: Vec<f64>,
    db: &EvaluationDatabase,
    global: &DecisionSpace,
    draw_space: &DecisionSpace,
    rng: &mut R,
) -> Result<(Vec<f64>, Option<FallbackKind>)> {
    if !db.contains(&x) {
        return Ok((x, None));
    }
    let mut nudged: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let amp = 1e-6 * global.range(j);
            v + rng.random_range(-1.0..=1.0) * amp
        })
        .collect();
    nudged = draw_space.clamp_and_round(&nudged)?;
    nudged = global.clamp_and_round(&nudged)?;
    if !db.contains(&nudged) {
        return Ok((nudged, Some(FallbackKind::PerturbedDuplicate)));
    }
    const MAX_DRAWS: usize = 100;
    for _ in 0..MAX_DRAWS {
        let raw = draw_space.sample_uniform(rng);
        let candidate = global.clamp_and_round(&draw_space.clamp_and_round(&raw)?)?;
        if !db.contains(&candidate) {
            return Ok((candidate, Some(FallbackKind::RandomDuplicate)));
        }
    }
    Err(Error::DuplicatesExhausted)
}

/// One classification-based prescreening step: rank the database, train the
/// classifier on the top-λ / rest split, breed one DE trial per population
/// member, keep the trials predicted promising, and spend one real
/// evaluation on the one farthest from all known data.
pub fn prescreen_stage<R: Rng>(
    db: &mut EvaluationDatabase,
    objective: &mut ObjectiveHandle,
    params: &GddeParams,
    iteration: usize,
    rng: &mut R,
) -> Result<StageOutcome> {
    let np = params.de.population_size;
    let lambda = params.first_class_size;
    let population = select_best(db, np)?;
    let space = db.space().clone();

    let class1: Vec<Vec<f64>> = population[..lambda].iter().map(|s| s.x.clone()).collect();
    let class2: Vec<Vec<f64>> = population[lambda..].iter().map(|s| s.x.clone()).collect();
    let labeled: Vec<(Vec<f64>, f64)> = class1
        .iter()
        .map(|x| (x.clone(), 1.0))
        .chain(class2.iter().map(|x| (x.clone(), 0.0)))
        .collect();
    let pop_x: Vec<Vec<f64>> = labeled.iter().map(|(x, _)| x.clone()).collect();
    let dbar = mean_pairwise_distance(&pop_x)?;
    let cfg = params.tuner.config_for(dbar)?;
    let sigma = optimal_sigma(&labeled, ModelKind::Pnn, &cfg)?;
    let model = PnnModel::train(class1, class2, sigma.sigma)?;

    let best_x = population[0].x.clone();
    let mut trials = Vec::with_capacity(np);
    for i in 0..np {
        let donor = mutate(&pop_x, &best_x, i, &params.de, rng)?;
        let donor = space.clamp_and_round(&donor)?;
        let trial = crossover(&pop_x[i], &donor, &params.de, rng)?;
        trials.push(space.clamp_and_round(&trial)?);
    }

    let promising: Vec<Vec<f64>> = trials
        .iter()
        .filter(|t| {
            model
                .classify(t)
                .map(|c| c == ClassLabel::One)
                .unwrap_or(false)
        })
        .cloned()
        .collect();
    let class1_count = promising.len();
    let mut fallback = None;
    let candidates = if promising.is_empty() {
        fallback = Some(FallbackKind::AllTrials);
        &trials
    } else {
        &promising
    };
    let (chosen, _) =
        select_uncertain(candidates, db).expect("candidate list is nonempty by construction");
    let (point, dup_fallback) = resolve_duplicate(chosen.clone(), db, &space, &space, rng)?;
    if dup_fallback.is_some() {
        fallback = dup_fallback;
    }
    let min_distance = db.min_distance_to(&point);

    objective.set_stage(Stage::Prescreen);
    let fitness = objective.evaluate(&point)?;
    let solution = Solution::evaluated(point, fitness, Stage::Prescreen);
    db.push(solution.clone())?;

    Ok(StageOutcome {
        evaluated: solution,
        diagnostics: IterationDiagnostics {
            iteration,
            stage: Stage::Prescreen,
            class1_count: Some(class1_count),
            min_distance: Some(min_distance),
            sigma_pnn: Some(sigma.sigma),
            sigma_rbf: None,
            box_widths_summary: None,
            fallback,
        },
    })
}

/// One local-search step: fit an RBF surrogate to the best τ points, run the
/// inner DE over the surrogate inside the points' bounding box, and spend
/// one real evaluation on the surrogate optimum.
pub fn local_stage<R: Rng>(
    db: &mut EvaluationDatabase,
    objective: &mut ObjectiveHandle,
    params: &GddeParams,
    iteration: usize,
    rng: &mut R,
) -> Result<StageOutcome> {
    let count = params.local_train_size();
    let train = select_best(db, count)?;
    let space = db.space().clone();
    let d = space.dims();

    // Bounding box of the training points, with near-zero widths widened to
    // a small fraction of the global range (clipped to the global bounds).
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for s in &train {
        for j in 0..d {
            lo[j] = lo[j].min(s.x[j]);
            hi[j] = hi[j].max(s.x[j]);
        }
    }
    for j in 0..d {
        let range = space.range(j);
        if hi[j] - lo[j] < 1e-12 * range {
            let center = 0.5 * (lo[j] + hi[j]);
            let half = 0.5e-3 * range;
            lo[j] = (center - half).max(space.lower()[j]);
            hi[j] = (center + half).min(space.upper()[j]);
        }
    }
    let widths: Vec<f64> = (0..d).map(|j| hi[j] - lo[j]).collect();
    let box_summary = BoxWidthsSummary {
        min: widths.iter().copied().fold(f64::INFINITY, f64::min),
        max: widths.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: widths.iter().sum::<f64>() / d as f64,
    };
    let local_space = DecisionSpace::new(lo, hi, space.kinds().to_vec())?;

    let points: Vec<(Vec<f64>, f64)> = train
        .iter()
        .map(|s| (s.x.clone(), s.fitness_value()))
        .collect();
    let xs: Vec<Vec<f64>> = points.iter().map(|(x, _)| x.clone()).collect();
    let dbar = mean_pairwise_distance(&xs)?;
    let cfg = params.tuner.config_for(dbar)?;
    let sigma = optimal_sigma(&points, ModelKind::Rbf, &cfg)?;
    let model = fit_rbf(&points, sigma.sigma)?;

    let inner_params = DeParams {
        rng_seed: rng.next_u64(),
        ..params.inner_de
    };
    let inner_budget = params.inner_budget_per_dim * d;
    let mut surrogate = |x: &[f64]| model.predict(x);
    let inner_best = run_de(&mut surrogate, &local_space, &inner_params, inner_budget)?;

    let candidate = space.clamp_and_round(&inner_best.x)?;
    let (point, fallback) = resolve_duplicate(candidate, db, &space, &local_space, rng)?;
    let min_distance = db.min_distance_to(&point);

    objective.set_stage(Stage::LocalSearch);
    let fitness = objective.evaluate(&point)?;
    let solution = Solution::evaluated(point, fitness, Stage::LocalSearch);
    db.push(solution.clone())?;

    Ok(StageOutcome {
        evaluated: solution,
        diagnostics: IterationDiagnostics {
            iteration,
            stage: Stage::LocalSearch,
            class1_count: None,
            min_distance: Some(min_distance),
            sigma_pnn: None,
            sigma_rbf: Some(sigma.sigma),
            box_widths_summary: Some(box_summary),
            fallback,
        },
    })
}

/// Runs the full loop: a Latin-hypercube initial design of
/// `params.initial_design` points, then stage iterations until
/// `params.budget` real evaluations are spent. A budget equal to the design
/// size runs zero iterations. Returns the best solution, the evaluation
/// trace, and per-stage diagnostics.
pub fn run_gdde(
    mut objective: ObjectiveHandle,
    space: &DecisionSpace,
    params: &GddeParams,
) -> Result<GddeOutcome> {
    params.validate()?;
    if objective.remaining() < params.budget {
        return Err(Error::InvalidArgument(format!(
            "objective handle has {} evaluations left, run needs {}",
            objective.remaining(),
            params.budget
        )));
    }
    let start_used = objective.used();
    let spent = |obj: &ObjectiveHandle| obj.used() - start_used;

    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let design_seed = rng.next_u64();
    let design = lhs(space, params.initial_design, design_seed)?;

    let mut db = EvaluationDatabase::new(space.clone());
    objective.set_stage(Stage::Init);
    for raw in design {
        let (point, _) = resolve_duplicate(raw, &db, space, space, &mut rng)?;
        let fitness = objective.evaluate(&point)?;
        db.push(Solution::evaluated(point, fitness, Stage::Init))?;
    }

    let mut diagnostics = Vec::new();
    let mut iteration = 0usize;
    while spent(&objective) < params.budget {
        iteration += 1;
        match params.mode {
            GddeMode::Full => {
                let outcome =
                    prescreen_stage(&mut db, &mut objective, params, iteration, &mut rng)?;
                diagnostics.push(outcome.diagnostics);
                if spent(&objective) < params.budget {
                    let outcome =
                        local_stage(&mut db, &mut objective, params, iteration, &mut rng)?;
                    diagnostics.push(outcome.diagnostics);
                }
            }
            GddeMode::ClassifierOnly => {
                let outcome =
                    prescreen_stage(&mut db, &mut objective, params, iteration, &mut rng)?;
                diagnostics.push(outcome.diagnostics);
            }
            GddeMode::LocalOnly => {
                let outcome = local_stage(&mut db, &mut objective, params, iteration, &mut rng)?;
                diagnostics.push(outcome.diagnostics);
            }
        }
    }

    let best = db
        .best()
        .expect("database holds the initial design")
        .clone();
    Ok(GddeOutcome {
        best,
        trace: objective.into_trace(),
        diagnostics,
    })
}
