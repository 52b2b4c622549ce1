//! Surrogate-assisted differential evolution for expensive black-box maximization.
//!
//! The library implements a two-stage surrogate-assisted loop (`gdde`) in which a
//! budgeted stream of real evaluations is spent alternately on
//!
//! 1. a *prescreening stage*: a probabilistic-neural-network classifier trained on
//!    the best/rest split of the evaluation database filters DE offspring, and the
//!    most uncertain promising candidate (max-min distance to the database) is
//!    evaluated; and
//! 2. a *local search stage*: a Gaussian RBF interpolant fitted to the best points
//!    is maximized by an inner DE inside the bounding box of those points, and the
//!    surrogate optimum is evaluated.
//!
//! Kernel widths for both models are re-tuned every iteration by leave-one-out
//! cross-validation with a quadratic response-surface fit (`tuner`).
//!
//! The crate also ships a plain budgeted DE baseline (`de`), Latin hypercube
//! initialization (`sampling`), standard analytic benchmark functions
//! (`benchmarks`), and a deterministic desk-scale two-phase (oil-water)
//! incompressible waterflood simulator with an NPV objective (`reservoir`) that
//! serves as the expensive black box for well placement and control optimization.
//!
//! Everything maximizes: minimization benchmarks are negated at registration.
//! All randomness flows from explicit seeds; a run is bit-reproducible.

// `!(x > 0.0)`-style guards are deliberate throughout: the negation makes NaN
// take the rejecting branch, so one predicate covers "out of range or not a
// number". The positive spelling would need a second `is_nan()` clause.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod de;
pub mod error;
pub mod gdde;
pub mod pnn;
pub mod problem;
pub mod rbf;
pub mod reservoir;
pub mod sampling;
pub mod space;
pub mod trace;
pub mod tuner;

pub use benchmarks::{benchmark, Benchmark};
pub use de::{crossover, donor_vector, mutate, run_de, DeParams, DeStrategy};
pub use error::{Error, Result};
pub use gdde::{
    default_first_class_size, local_stage, prescreen_stage, run_gdde, select_uncertain,
    BoxWidthsSummary, FallbackKind, GddeMode, GddeOutcome, GddeParams, IterationDiagnostics,
    StageOutcome,
};
pub use pnn::{
    class_density, classify, log_pattern_value, loocv_misclassifications, pattern_value,
    ClassLabel, PnnModel,
};
pub use problem::{select_best, EvaluationDatabase, ObjectiveHandle, Solution, Stage};
pub use rbf::{fit_rbf, gaussian_kernel, predict, RbfModel};
pub use reservoir::{
    decision_space, decode, load_case, make_case, npv, npv_of, simulate, write_rates_csv,
    DecodeMode, Economics, RateSeries, ReservoirCase, ResolvedControl, SimulationOutput, StepRates,
    UnitSystem, WellControl, WellKind, WellLayout, WellStepRates, WellTemplate, BBL_PER_CUBIC_FOOT,
    BBL_PER_CUBIC_METER, CHANNEL_FIELD_SEED, EGG_FIELD_SEED,
};
pub use sampling::lhs;
pub use space::{euclidean, is_duplicate, DecisionSpace, VariableKind, DUPLICATE_TOLERANCE};
pub use trace::{RunTrace, TraceRecord};
pub use tuner::{
    fit_quadratic, loocv_error, mean_pairwise_distance, optimal_sigma, optimal_sigma_from,
    ModelKind, QuadFit1D, SigmaChoice, SigmaSource, TunerConfig, TunerSettings,
};
