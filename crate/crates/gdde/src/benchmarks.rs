//! Analytic benchmark objectives on their canonical boxes.
//!
//! Every function is negated so the library's maximization convention holds;
//! each documented optimum evaluates to exactly 0, the global maximum.

use crate::error::{Error, Result};
use crate::problem::ObjectiveHandle;
use crate::space::DecisionSpace;
use std::f64::consts::{E, PI};

/// The available benchmark functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    Sphere,
    Ellipsoid,
    Rosenbrock,
    Ackley,
    Rastrigin,
}

impl Benchmark {
    pub const ALL: [Benchmark; 5] = [
        Benchmark::Sphere,
        Benchmark::Ellipsoid,
        Benchmark::Rosenbrock,
        Benchmark::Ackley,
        Benchmark::Rastrigin,
    ];

    /// Case-insensitive lookup by name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "sphere" => Ok(Benchmark::Sphere),
            "ellipsoid" => Ok(Benchmark::Ellipsoid),
            "rosenbrock" => Ok(Benchmark::Rosenbrock),
            "ackley" => Ok(Benchmark::Ackley),
            "rastrigin" => Ok(Benchmark::Rastrigin),
            _ => Err(Error::UnknownName(name.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::Sphere => "sphere",
            Benchmark::Ellipsoid => "ellipsoid",
            Benchmark::Rosenbrock => "rosenbrock",
            Benchmark::Ackley => "ackley",
            Benchmark::Rastrigin => "rastrigin",
        }
    }

    /// Canonical box, replicated across `dims` (≥ 2) dimensions.
    pub fn space(&self, dims: usize) -> Result<DecisionSpace> {
        if dims < 2 {
            return Err(Error::InvalidArgument(format!(
                "benchmark functions need at least 2 dimensions, got {dims}"
            )));
        }
        let half = match self {
            Benchmark::Sphere | Benchmark::Ellipsoid | Benchmark::Rastrigin => 5.12,
            Benchmark::Rosenbrock => 2.048,
            Benchmark::Ackley => 32.768,
        };
        DecisionSpace::uniform_box(-half, half, dims)
    }

    /// The global maximizer of the negated function.
    pub fn optimum(&self, dims: usize) -> Vec<f64> {
        match self {
            Benchmark::Rosenbrock => vec![1.0; dims],
            _ => vec![0.0; dims],
        }
    }

    /// Negated function value (to be maximized; optimum value is 0).
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let value = match self {
            Benchmark::Sphere => x.iter().map(|v| v * v).sum(),
            Benchmark::Ellipsoid => x
                .iter()
                .enumerate()
                .map(|(i, v)| (i + 1) as f64 * v * v)
                .sum(),
            Benchmark::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            Benchmark::Ackley => {
                let d = x.len() as f64;
                let rms = (x.iter().map(|v| v * v).sum::<f64>() / d).sqrt();
                let mean_cos = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
                // Grouped so both terms vanish exactly at the origin.
                20.0 * (1.0 - (-0.2 * rms).exp()) + (E - mean_cos.exp())
            }
            Benchmark::Rastrigin => x
                .iter()
                .map(|v| v * v + 10.0 * (1.0 - (2.0 * PI * v).cos()))
                .sum(),
        };
        -value
    }

    /// A budgeted handle evaluating this function, plus its box.
    pub fn objective_handle(
        &self,
        dims: usize,
        budget: usize,
    ) -> Result<(ObjectiveHandle, DecisionSpace)> {
        let space = self.space(dims)?;
        let which = *self;
        Ok((
            ObjectiveHandle::new(budget, move |x: &[f64]| which.evaluate(x)),
            space,
        ))
    }
}

/// Convenience lookup: a named benchmark as (handle, space).
pub fn benchmark(
    name: &str,
    dims: usize,
    budget: usize,
) -> Result<(ObjectiveHandle, DecisionSpace)> {
    Benchmark::from_name(name)?.objective_handle(dims, budget)
}
