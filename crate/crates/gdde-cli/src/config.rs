//! TOML experiment configuration: schema, parsing, validation, and the
//! mapping onto [`DeParams`] / [`GddeParams`].

use std::collections::BTreeSet;
use std::path::Path;

use gdde::{DeParams, DeStrategy, GddeMode, GddeParams};
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

/// A whole experiment: one problem, a list of algorithms, one evaluation
/// budget, one seed list, and optional parameter overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub algorithms: AlgorithmsConfig,
    pub budget: BudgetConfig,
    pub seeds: SeedsConfig,
    #[serde(default)]
    pub params: ParamsConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    /// Benchmark name (`sphere`, `ellipsoid`, `rosenbrock`, `ackley`,
    /// `rastrigin`) or reservoir case name (`channel2d`, `egglike`).
    pub name: String,
    /// Problem dimension; required for benchmarks, forbidden for reservoir
    /// cases (the case fixes its own decision space).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Benchmark,
    Reservoir,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmsConfig {
    /// Algorithms to run, in output order.
    pub run: Vec<Algorithm>,
}

/// The four algorithm variants the harness can launch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Plain differential evolution (no surrogate).
    De,
    /// Classification-prescreening stage only.
    Classifier,
    /// Local surrogate-search stage only.
    Local,
    /// Both stages per iteration.
    Gdde,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::De => "de",
            Algorithm::Classifier => "classifier",
            Algorithm::Local => "local",
            Algorithm::Gdde => "gdde",
        }
    }

    /// Loop mode for the surrogate-assisted variants; `None` for plain DE.
    pub fn gdde_mode(&self) -> Option<GddeMode> {
        match self {
            Algorithm::De => None,
            Algorithm::Classifier => Some(GddeMode::ClassifierOnly),
            Algorithm::Local => Some(GddeMode::LocalOnly),
            Algorithm::Gdde => Some(GddeMode::Full),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    /// Total real evaluations per run, initial design included.
    pub evaluations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsConfig {
    /// One run per algorithm per seed.
    pub seeds: Vec<u64>,
}

/// Optional overrides for every tunable of the optimizers. Omitted fields
/// take the library defaults (see [`show_defaults_text`]).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    /// Outer population size NP (default 50).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population_size: Option<usize>,
    /// Mutation weight Mu in (0, 2] (default 0.5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<f64>,
    /// Crossover rate CR in [0, 1] (default 0.9).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossover: Option<f64>,
    /// Mutation strategy: `best1` or `current_to_best1` (default `best1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<DeStrategy>,
    /// Prescreening class-1 size λ (default ⌈population_size / 3⌉).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_class_size: Option<usize>,
    /// Initial Latin-hypercube design size τ (default 100); also the local
    /// training-set size unless `local_train_count` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_design: Option<usize>,
    /// Override of the local-surrogate training-set size (default: unset,
    /// meaning `initial_design`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_train_count: Option<usize>,
    /// Inner (surrogate-search) population size (default 50).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_population_size: Option<usize>,
    /// Inner mutation weight (default 0.5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_mutation: Option<f64>,
    /// Inner crossover rate (default 0.9).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_crossover: Option<f64>,
    /// Inner mutation strategy (default `best1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_strategy: Option<DeStrategy>,
    /// Surrogate-search evaluations per problem dimension (default 100).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_budget_per_dim: Option<usize>,
    /// Shape-factor tuner response-surface sample count (default 10).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuner_m: Option<usize>,
    /// σ_min = factor × mean pairwise training distance (default 0.1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_min_factor: Option<f64>,
    /// σ_max = factor × mean pairwise training distance (default 2.0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_max_factor: Option<f64>,
}

impl ParamsConfig {
    /// Outer DE parameters with this config's overrides and the given seed.
    pub fn de_params(&self, rng_seed: u64) -> DeParams {
        let mut p = DeParams::default();
        if let Some(v) = self.population_size {
            p.population_size = v;
        }
        if let Some(v) = self.mutation {
            p.mutation = v;
        }
        if let Some(v) = self.crossover {
            p.crossover = v;
        }
        if let Some(v) = self.strategy {
            p.strategy = v;
        }
        p.rng_seed = rng_seed;
        p
    }

    fn inner_de_params(&self) -> DeParams {
        let mut p = DeParams::default();
        if let Some(v) = self.inner_population_size {
            p.population_size = v;
        }
        if let Some(v) = self.inner_mutation {
            p.mutation = v;
        }
        if let Some(v) = self.inner_crossover {
            p.crossover = v;
        }
        if let Some(v) = self.inner_strategy {
            p.strategy = v;
        }
        p
    }

    /// Full surrogate-assisted parameters for one run. The class-1 default
    /// tracks the configured population size when λ itself is not set.
    pub fn gdde_params(&self, mode: GddeMode, budget: usize, rng_seed: u64) -> GddeParams {
        let de = self.de_params(rng_seed);
        let mut g = GddeParams {
            first_class_size: self
                .first_class_size
                .unwrap_or_else(|| de.population_size.div_ceil(3)),
            de,
            inner_de: self.inner_de_params(),
            local_train_count: self.local_train_count,
            budget,
            rng_seed,
            mode,
            ..GddeParams::default()
        };
        if let Some(v) = self.initial_design {
            g.initial_design = v;
        }
        if let Some(v) = self.inner_budget_per_dim {
            g.inner_budget_per_dim = v;
        }
        if let Some(v) = self.tuner_m {
            g.tuner.m = v;
        }
        if let Some(v) = self.sigma_min_factor {
            g.tuner.sigma_min_factor = v;
        }
        if let Some(v) = self.sigma_max_factor {
            g.tuner.sigma_max_factor = v;
        }
        g
    }
}

impl ExperimentConfig {
    /// Structural checks that don't need the problem instantiated: non-empty,
    /// duplicate-free algorithm and seed lists, and per-algorithm parameter
    /// and budget-minimum validation.
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.run.is_empty() {
            return Err(HarnessError::Config(
                "algorithm list is empty; [algorithms] run must name at least one algorithm".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for alg in &self.algorithms.run {
            if !seen.insert(*alg) {
                return Err(HarnessError::Config(format!(
                    "algorithm `{}` is listed more than once",
                    alg.name()
                )));
            }
        }
        if self.seeds.seeds.is_empty() {
            return Err(HarnessError::Config(
                "seed list is empty; [seeds] seeds must contain at least one seed".into(),
            ));
        }
        let mut seed_set = BTreeSet::new();
        for seed in &self.seeds.seeds {
            if !seed_set.insert(*seed) {
                return Err(HarnessError::Config(format!(
                    "seed {seed} is listed more than once"
                )));
            }
        }
        let budget = self.budget.evaluations;
        if budget == 0 {
            return Err(HarnessError::Config(
                "budget.evaluations must be at least 1".into(),
            ));
        }
        for alg in &self.algorithms.run {
            match alg.gdde_mode() {
                None => {
                    let p = self.params.de_params(0);
                    p.validate()
                        .map_err(|e| HarnessError::Config(format!("algorithm `de`: {e}")))?;
                    if budget < p.population_size {
                        return Err(HarnessError::Config(format!(
                            "algorithm `de`: budget {} is below the minimum of one full \
                             population ({} evaluations)",
                            budget, p.population_size
                        )));
                    }
                }
                Some(mode) => {
                    self.params
                        .gdde_params(mode, budget, 0)
                        .validate()
                        .map_err(|e| {
                            HarnessError::Config(format!("algorithm `{}`: {e}", alg.name()))
                        })?;
                }
            }
        }
        match self.problem.kind {
            ProblemKind::Benchmark => {
                if self.problem.dims.is_none() {
                    return Err(HarnessError::Config(
                        "problem.dims is required for benchmark problems".into(),
                    ));
                }
            }
            ProblemKind::Reservoir => {
                if self.problem.dims.is_some() {
                    return Err(HarnessError::Config(
                        "problem.dims must be omitted for reservoir cases; the case fixes \
                         its own decision space"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Parses a configuration from TOML text. Parse errors keep the line/column
/// and field context reported by the TOML parser.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        HarnessError::Config(format!("cannot read config file {}: {e}", path.display()))
    })?;
    parse_config(&text)
}

/// An annotated example configuration carrying every tunable with its
/// default value. The text itself parses as a valid configuration.
pub fn show_defaults_text() -> String {
    let np = DeParams::default().population_size;
    let g = GddeParams::default();
    format!(
        r#"# Experiment configuration with every tunable and its default value.

[problem]
kind = "benchmark"  # "benchmark" or "reservoir"
name = "ellipsoid"  # benchmarks: sphere | ellipsoid | rosenbrock | ackley | rastrigin
                    # reservoir cases: channel2d | egglike
dims = 20           # benchmarks only; reservoir cases fix their own dimension

[algorithms]
# Any non-empty subset, run and reported in this order:
#   de          plain differential evolution (no surrogate)
#   classifier  classification-prescreening stage only
#   local       local surrogate-search stage only
#   gdde        both stages per iteration
run = ["de", "classifier", "local", "gdde"]

[budget]
evaluations = {budget}   # total real evaluations per run, initial design included

[seeds]
seeds = [1, 2, 3, 4, 5]  # one run per algorithm per seed

[params]                  # optional section; omitted fields take these defaults
population_size = {np}      # outer population size NP
mutation = {mu}            # mutation weight Mu, in (0, 2]
crossover = {cr}           # crossover rate CR, in [0, 1]
strategy = "best1"        # "best1" or "current_to_best1"
first_class_size = {lambda}     # prescreening class-1 size; default is ceil(population_size / 3)
initial_design = {tau}      # Latin-hypercube design size; also the local training-set size
# local_train_count = {tau}  # optional override of the local training-set size
inner_population_size = {inp}
inner_mutation = {imu}
inner_crossover = {icr}
inner_strategy = "best1"
inner_budget_per_dim = {ibpd}  # surrogate-search evaluations per problem dimension
tuner_m = {tm}                  # shape-factor response-surface sample count
sigma_min_factor = {smin}        # sigma_min = factor x mean pairwise training distance
sigma_max_factor = {smax}        # sigma_max = factor x mean pairwise training distance
"#,
        budget = g.budget,
        np = np,
        mu = g.de.mutation,
        cr = g.de.crossover,
        lambda = g.first_class_size,
        tau = g.initial_design,
        inp = g.inner_de.population_size,
        imu = g.inner_de.mutation,
        icr = g.inner_de.crossover,
        ibpd = g.inner_budget_per_dim,
        tm = g.tuner.m,
        smin = g.tuner.sigma_min_factor,
        smax = g.tuner.sigma_max_factor,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> &'static str {
        r#"
            [problem]
            kind = "benchmark"
            name = "sphere"
            dims = 5

            [algorithms]
            run = ["de", "gdde"]

            [budget]
            evaluations = 200

            [seeds]
            seeds = [1, 2, 3]
        "#
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_config(minimal_toml()).unwrap();
        assert_eq!(cfg.problem.name, "sphere");
        assert_eq!(cfg.problem.dims, Some(5));
        assert_eq!(cfg.algorithms.run, vec![Algorithm::De, Algorithm::Gdde]);
        assert_eq!(cfg.budget.evaluations, 200);
        assert_eq!(cfg.seeds.seeds, vec![1, 2, 3]);
        let g = cfg.params.gdde_params(GddeMode::Full, 200, 7);
        let expected = GddeParams {
            budget: 200,
            rng_seed: 7,
            de: DeParams {
                rng_seed: 7,
                ..DeParams::default()
            },
            ..GddeParams::default()
        };
        assert_eq!(g, expected);
        let d = cfg.params.de_params(7);
        assert_eq!(
            d,
            DeParams {
                rng_seed: 7,
                ..DeParams::default()
            }
        );
    }

    #[test]
    fn params_overrides_reach_both_param_sets() {
        let text = format!(
            "{}\n{}",
            minimal_toml(),
            r#"
            [params]
            population_size = 10
            mutation = 0.7
            crossover = 0.4
            strategy = "current_to_best1"
            initial_design = 20
            local_train_count = 15
            inner_population_size = 12
            inner_mutation = 0.9
            inner_crossover = 0.2
            inner_strategy = "current_to_best1"
            inner_budget_per_dim = 40
            tuner_m = 6
            sigma_min_factor = 0.2
            sigma_max_factor = 1.5
        "#
        );
        let cfg = parse_config(&text).unwrap();
        let g = cfg.params.gdde_params(GddeMode::LocalOnly, 200, 3);
        assert_eq!(g.de.population_size, 10);
        assert_eq!(g.de.mutation, 0.7);
        assert_eq!(g.de.crossover, 0.4);
        assert_eq!(g.de.strategy, DeStrategy::CurrentToBest1);
        // λ defaults to ⌈NP/3⌉ of the *configured* population size.
        assert_eq!(g.first_class_size, 4);
        assert_eq!(g.initial_design, 20);
        assert_eq!(g.local_train_count, Some(15));
        assert_eq!(g.inner_de.population_size, 12);
        assert_eq!(g.inner_de.mutation, 0.9);
        assert_eq!(g.inner_de.crossover, 0.2);
        assert_eq!(g.inner_de.strategy, DeStrategy::CurrentToBest1);
        assert_eq!(g.inner_budget_per_dim, 40);
        assert_eq!(g.tuner.m, 6);
        assert_eq!(g.tuner.sigma_min_factor, 0.2);
        assert_eq!(g.tuner.sigma_max_factor, 1.5);
        assert_eq!(g.mode, GddeMode::LocalOnly);
    }

    #[test]
    fn explicit_first_class_size_wins_over_derived_default() {
        let text = format!(
            "{}\n[params]\npopulation_size = 30\nfirst_class_size = 5\n",
            minimal_toml()
        );
        let cfg = parse_config(&text).unwrap();
        let g = cfg.params.gdde_params(GddeMode::Full, 200, 0);
        assert_eq!(g.first_class_size, 5);
    }

    #[test]
    fn unknown_field_is_a_config_error_with_location() {
        let text = format!("{}\n[params]\npopulatoin_size = 10\n", minimal_toml());
        let err = parse_config(&text).unwrap_err();
        match err {
            HarnessError::Config(msg) => {
                assert!(msg.contains("populatoin_size"), "field name missing: {msg}");
                assert!(msg.contains("line"), "line info missing: {msg}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_config("[problem\nkind = \"benchmark\"").unwrap_err();
        match err {
            HarnessError::Config(msg) => assert!(msg.contains("line 1"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_algorithm_list_is_rejected() {
        let text = minimal_toml().replace("run = [\"de\", \"gdde\"]", "run = []");
        let err = parse_config(&text).unwrap_err();
        assert!(
            matches!(err, HarnessError::Config(ref m) if m.contains("algorithm list is empty"))
        );
    }

    #[test]
    fn duplicate_algorithms_and_seeds_are_rejected() {
        let text = minimal_toml().replace("[\"de\", \"gdde\"]", "[\"de\", \"de\"]");
        assert!(matches!(parse_config(&text).unwrap_err(),
            HarnessError::Config(ref m) if m.contains("more than once")));
        let text = minimal_toml().replace("[1, 2, 3]", "[1, 1]");
        assert!(matches!(parse_config(&text).unwrap_err(),
            HarnessError::Config(ref m) if m.contains("seed 1")));
    }

    #[test]
    fn budget_below_minimum_is_a_config_error() {
        // Plain DE needs at least one full population of evaluations.
        let text = minimal_toml().replace("evaluations = 200", "evaluations = 30");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, HarnessError::Config(ref m) if m.contains("below the minimum")));
        // The surrogate loop needs the budget to cover the initial design.
        let text = format!(
            "{}\n[params]\ninitial_design = 300\n",
            minimal_toml().replace("run = [\"de\", \"gdde\"]", "run = [\"gdde\"]")
        );
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, HarnessError::Config(ref m) if m.contains("initial design")));
    }

    #[test]
    fn zero_budget_is_a_config_error() {
        let text = minimal_toml().replace("evaluations = 200", "evaluations = 0");
        assert!(matches!(parse_config(&text).unwrap_err(),
            HarnessError::Config(ref m) if m.contains("at least 1")));
    }

    #[test]
    fn benchmark_requires_dims_and_reservoir_forbids_them() {
        let text = minimal_toml().replace("dims = 5", "");
        assert!(matches!(parse_config(&text).unwrap_err(),
            HarnessError::Config(ref m) if m.contains("dims is required")));
        let text = minimal_toml()
            .replace("kind = \"benchmark\"", "kind = \"reservoir\"")
            .replace("name = \"sphere\"", "name = \"channel2d\"");
        assert!(matches!(parse_config(&text).unwrap_err(),
            HarnessError::Config(ref m) if m.contains("must be omitted")));
    }

    #[test]
    fn defaults_text_parses_and_matches_library_defaults() {
        let cfg = parse_config(&show_defaults_text()).unwrap();
        let g = cfg.params.gdde_params(GddeMode::Full, 500, 0);
        assert_eq!(g, GddeParams::default());
        let d = cfg.params.de_params(0);
        assert_eq!(d, DeParams::default());
    }
}
