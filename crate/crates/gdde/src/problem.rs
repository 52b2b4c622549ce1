//! Solutions, the evaluation database, and the black-box objective contract.
//!
//! The whole library maximizes. The database is append-only; entry order is
//! evaluation order and doubles as the budget axis of convergence curves.

use crate::error::{Error, Result};
use crate::space::{euclidean, is_duplicate, DecisionSpace};
use crate::trace::{RunTrace, TraceRecord};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which part of an optimization run produced an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    /// Initial space-filling design.
    Init,
    /// Classification-based prescreening stage.
    Prescreen,
    /// Local surrogate search stage.
    LocalSearch,
    /// Plain DE baseline (no surrogate).
    Baseline,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Init => "Init",
            Stage::Prescreen => "Prescreen",
            Stage::LocalSearch => "LocalSearch",
            Stage::Baseline => "Baseline",
        };
        f.write_str(name)
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Init" => Ok(Stage::Init),
            "Prescreen" => Ok(Stage::Prescreen),
            "LocalSearch" => Ok(Stage::LocalSearch),
            "Baseline" => Ok(Stage::Baseline),
            other => Err(Error::Parse(format!("unknown stage tag {other:?}"))),
        }
    }
}

/// A candidate point, optionally carrying the objective value from the one
/// real evaluation it received (never a surrogate prediction).
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub fitness: Option<f64>,
    pub stage: Stage,
}

impl Solution {
    /// An evaluated solution.
    pub fn evaluated(x: Vec<f64>, fitness: f64, stage: Stage) -> Self {
        Self {
            x,
            fitness: Some(fitness),
            stage,
        }
    }

    /// Fitness, panicking if the solution was never evaluated.
    pub fn fitness_value(&self) -> f64 {
        self.fitness.expect("solution carries no fitness")
    }
}

/// Append-only store of every real evaluation of a run.
///
/// Invariants: entries are in evaluation order, all carry a fitness, all are
/// feasible, and no two entries share an identical `x` (duplicates must be
/// resolved by the caller before evaluating; `push` enforces the invariant).
#[derive(Debug, Clone)]
pub struct EvaluationDatabase {
    space: DecisionSpace,
    entries: Vec<Solution>,
}

impl EvaluationDatabase {
    pub fn new(space: DecisionSpace) -> Self {
        Self {
            space,
            entries: Vec::new(),
        }
    }

    pub fn space(&self) -> &DecisionSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Solution] {
        &self.entries
    }

    /// Appends an evaluated, feasible, non-duplicate solution.
    pub fn push(&mut self, solution: Solution) -> Result<()> {
        if solution.fitness.is_none() {
            return Err(Error::InvalidArgument(
                "database entries must carry a fitness".into(),
            ));
        }
        if !self.space.is_feasible(&solution.x) {
            return Err(Error::InvalidArgument(
                "database entries must be feasible".into(),
            ));
        }
        if self.contains(&solution.x) {
            return Err(Error::DuplicateEntry);
        }
        self.entries.push(solution);
        Ok(())
    }

    /// Whether `x` duplicates an existing entry (max-abs tolerance).
    pub fn contains(&self, x: &[f64]) -> bool {
        self.entries.iter().any(|s| is_duplicate(&s.x, x))
    }

    /// Min Euclidean distance from `x` to any entry; `+inf` on an empty database.
    pub fn min_distance_to(&self, x: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|s| euclidean(&s.x, x))
            .fold(f64::INFINITY, f64::min)
    }

    /// The best entry (largest fitness, earliest evaluation on ties).
    pub fn best(&self) -> Option<&Solution> {
        let mut best: Option<&Solution> = None;
        for s in &self.entries {
            match best {
                None => best = Some(s),
                Some(b) if s.fitness_value() > b.fitness_value() => best = Some(s),
                _ => {}
            }
        }
        best
    }
}

/// The `k` entries with the largest fitness, sorted descending; ties broken by
/// earlier evaluation order.
pub fn select_best(db: &EvaluationDatabase, k: usize) -> Result<Vec<Solution>> {
    if k > db.len() {
        return Err(Error::InsufficientData {
            needed: k,
            got: db.len(),
        });
    }
    let mut order: Vec<usize> = (0..db.len()).collect();
    // Stable sort keeps evaluation order among equal fitness values.
    order.sort_by(|&a, &b| {
        db.entries()[b]
            .fitness_value()
            .total_cmp(&db.entries()[a].fitness_value())
    });
    Ok(order[..k]
        .iter()
        .map(|&i| db.entries()[i].clone())
        .collect())
}

type ObjectiveFn = Box<dyn FnMut(&[f64]) -> f64 + Send>;

/// A budgeted, counted, stage-tagged handle to the real (expensive) objective.
///
/// Every call to [`evaluate`](Self::evaluate) consumes one unit of budget and
/// appends one record to the internal [`RunTrace`], tagged with the stage set
/// by the most recent [`set_stage`](Self::set_stage). Values are maximized.
pub struct ObjectiveHandle {
    f: ObjectiveFn,
    budget: usize,
    used: usize,
    stage: Stage,
    trace: RunTrace,
}

impl ObjectiveHandle {
    /// Wraps a deterministic objective with an evaluation budget.
    pub fn new<F>(budget: usize, f: F) -> Self
    where
        F: FnMut(&[f64]) -> f64 + Send + 'static,
    {
        Self {
            f: Box::new(f),
            budget,
            used: 0,
            stage: Stage::Baseline,
            trace: RunTrace::new(),
        }
    }

    /// Evaluates `x`, consuming one unit of budget.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        if self.used >= self.budget {
            return Err(Error::BudgetExhausted {
                budget: self.budget,
            });
        }
        let value = (self.f)(x);
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "objective returned a non-finite value {value} at {x:?}"
            )));
        }
        self.used += 1;
        self.trace.push(TraceRecord {
            eval_index: self.used,
            stage: self.stage,
            fitness: value,
            x: x.to_vec(),
        });
        Ok(value)
    }

    /// Tags subsequent evaluations with `stage`.
    pub fn set_stage(&mut self, stage: Stage) {
        self.stage = stage;
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.used
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    /// Consumes the handle, yielding the full evaluation trace.
    pub fn into_trace(self) -> RunTrace {
        self.trace
    }
}

impl fmt::Debug for ObjectiveHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveHandle")
            .field("budget", &self.budget)
            .field("used", &self.used)
            .field("stage", &self.stage)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::VariableKind;

    fn db_with_fitnesses(fitnesses: &[f64]) -> EvaluationDatabase {
        let space = DecisionSpace::uniform_box(-10.0, 10.0, 1).unwrap();
        let mut db = EvaluationDatabase::new(space);
        for (i, &f) in fitnesses.iter().enumerate() {
            db.push(Solution::evaluated(vec![i as f64 * 0.25], f, Stage::Init))
                .unwrap();
        }
        db
    }

    #[test]
    fn select_best_sorts_descending() {
        let db = db_with_fitnesses(&[3.0, 1.0, 4.0, 1.0, 5.0]);
        let top = select_best(&db, 2).unwrap();
        let values: Vec<f64> = top.iter().map(|s| s.fitness_value()).collect();
        assert_eq!(values, vec![5.0, 4.0]);
    }

    #[test]
    fn select_best_whole_database() {
        let db = db_with_fitnesses(&[3.0, 1.0, 4.0]);
        let all = select_best(&db, 3).unwrap();
        let values: Vec<f64> = all.iter().map(|s| s.fitness_value()).collect();
        assert_eq!(values, vec![4.0, 3.0, 1.0]);
    }

    #[test]
    fn select_best_breaks_ties_by_evaluation_order() {
        let db = db_with_fitnesses(&[2.0, 2.0, 2.0]);
        let top = select_best(&db, 1).unwrap();
        assert_eq!(top[0].x, vec![0.0], "earliest-evaluated entry wins the tie");
        // A larger cut preserves evaluation order across the whole tie group.
        let all = select_best(&db, 3).unwrap();
        let xs: Vec<f64> = all.iter().map(|s| s.x[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5]);
    }

    #[test]
    fn select_best_rejects_oversized_k() {
        let db = db_with_fitnesses(&[1.0]);
        assert!(matches!(
            select_best(&db, 2),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn select_best_values_non_increasing_and_subset() {
        let db = db_with_fitnesses(&[0.3, -1.0, 7.5, 7.5, 2.0, -3.5, 7.4]);
        let top = select_best(&db, 5).unwrap();
        let values: Vec<f64> = top.iter().map(|s| s.fitness_value()).collect();
        for pair in values.windows(2) {
            assert!(pair[0] >= pair[1]);
        }
        for v in values {
            assert!(db.entries().iter().any(|s| s.fitness_value() == v));
        }
    }

    #[test]
    fn database_rejects_duplicates_and_infeasible() {
        let space = DecisionSpace::new(vec![1.0], vec![5.0], vec![VariableKind::Integer]).unwrap();
        let mut db = EvaluationDatabase::new(space);
        db.push(Solution::evaluated(vec![2.0], 0.5, Stage::Init))
            .unwrap();
        assert!(matches!(
            db.push(Solution::evaluated(vec![2.0], 0.9, Stage::Init)),
            Err(Error::DuplicateEntry)
        ));
        assert!(matches!(
            db.push(Solution::evaluated(vec![2.5], 0.9, Stage::Init)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            db.push(Solution {
                x: vec![3.0],
                fitness: None,
                stage: Stage::Init
            }),
            Err(Error::InvalidArgument(_))
        ));
        assert_eq!(db.len(), 1);
    }

    #[test]
    fn min_distance_over_all_entries() {
        let db = db_with_fitnesses(&[1.0, 2.0, 3.0]); // x = 0.0, 0.25, 0.5
        assert_eq!(db.min_distance_to(&[0.6]), 0.09999999999999998);
        assert_eq!(db.min_distance_to(&[0.0]), 0.0);
        let empty = EvaluationDatabase::new(db.space().clone());
        assert_eq!(empty.min_distance_to(&[0.0]), f64::INFINITY);
    }

    #[test]
    fn handle_counts_traces_and_enforces_budget() {
        let mut handle = ObjectiveHandle::new(2, |x: &[f64]| -x[0] * x[0]);
        handle.set_stage(Stage::Init);
        assert_eq!(handle.remaining(), 2);
        assert_eq!(handle.evaluate(&[2.0]).unwrap(), -4.0);
        handle.set_stage(Stage::Prescreen);
        assert_eq!(handle.evaluate(&[1.0]).unwrap(), -1.0);
        assert!(matches!(
            handle.evaluate(&[0.0]),
            Err(Error::BudgetExhausted { budget: 2 })
        ));
        assert_eq!(handle.used(), 2);
        let trace = handle.into_trace();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace.records()[0].eval_index, 1);
        assert_eq!(trace.records()[0].stage, Stage::Init);
        assert_eq!(trace.records()[1].stage, Stage::Prescreen);
    }

    #[test]
    fn handle_rejects_non_finite_objective_values() {
        let mut handle = ObjectiveHandle::new(5, |_: &[f64]| f64::NAN);
        assert!(matches!(
            handle.evaluate(&[1.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert_eq!(
            handle.used(),
            0,
            "a rejected evaluation must not consume budget"
        );
    }

    #[test]
    fn stage_tags_round_trip_through_strings() {
        for stage in [
            Stage::Init,
            Stage::Prescreen,
            Stage::LocalSearch,
            Stage::Baseline,
        ] {
            assert_eq!(stage.to_string().parse::<Stage>().unwrap(), stage);
        }
        assert!("Unknown".parse::<Stage>().is_err());
    }
}
