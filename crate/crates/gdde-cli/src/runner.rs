//! Experiment execution: a worker pool over (algorithm × seed) jobs, plus
//! all run outputs (traces, diagnostics, convergence matrices, summaries).

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use gdde::gdde::IterationDiagnostics;
use gdde::{run_de, run_gdde, RunTrace, Solution, Stage};
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, ExperimentConfig, ParamsConfig, ProblemConfig};
use crate::problem::ResolvedProblem;
use crate::{HarnessError, Result};

/// Everything one run produces before any file is written.
struct RunOutput {
    algorithm: Algorithm,
    seed: u64,
    trace: RunTrace,
    diagnostics: Option<Vec<IterationDiagnostics>>,
    best: Solution,
}

/// Per-algorithm aggregate over seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub name: String,
    pub median_final_best: f64,
    pub min_final_best: f64,
    pub max_final_best: f64,
    pub runs: Vec<RunSummary>,
}

/// Final result of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub final_best: f64,
    pub best_x: Vec<f64>,
}

/// The JSON summary written next to the per-run outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub problem: ProblemConfig,
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<AlgorithmSummary>,
    /// Echo of the configuration the experiment ran with.
    pub config: ExperimentConfig,
}

/// Median with the even-count convention of averaging the two middle values.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn runtime_err<E: std::fmt::Display>(e: E) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

/// Runs one (algorithm, seed) job to completion on a fresh objective handle.
fn execute_job(
    problem: &ResolvedProblem,
    params: &ParamsConfig,
    algorithm: Algorithm,
    seed: u64,
    budget: usize,
) -> Result<RunOutput> {
    let mut handle = problem.objective(budget)?;
    match algorithm.gdde_mode() {
        None => {
            handle.set_stage(Stage::Baseline);
            let de = params.de_params(seed);
            let best = run_de(
                &mut |x: &[f64]| handle.evaluate(x),
                problem.space(),
                &de,
                budget,
            )
            .map_err(runtime_err)?;
            Ok(RunOutput {
                algorithm,
                seed,
                trace: handle.into_trace(),
                diagnostics: None,
                best,
            })
        }
        Some(mode) => {
            let g = params.gdde_params(mode, budget, seed);
            let outcome = run_gdde(handle, problem.space(), &g).map_err(runtime_err)?;
            Ok(RunOutput {
                algorithm,
                seed,
                trace: outcome.trace,
                diagnostics: Some(outcome.diagnostics),
                best: outcome.best,
            })
        }
    }
}

/// Runs every (algorithm × seed) combination of the configuration, at most
/// `workers` at a time, and writes all outputs into `out_dir`:
///
/// * `trace_{algorithm}_seed{seed}.csv` — per-run evaluation trace
/// * `diagnostics_{algorithm}_seed{seed}.jsonl` — per-iteration diagnostics
///   (surrogate-assisted algorithms only)
/// * `convergence_{algorithm}.csv` — best-so-far matrix, evaluation × seed
/// * `summary.json` / `summary.txt` — aggregate results plus config echo
///
/// Outputs are byte-identical for identical configurations regardless of
/// the worker count: every run's randomness is fully seeded, runs never
/// share mutable state that affects results, and files are written in
/// configuration order after all runs finish.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<ExperimentSummary> {
    config.validate()?;
    let problem = ResolvedProblem::new(&config.problem)?;
    let budget = config.budget.evaluations;

    let jobs: Vec<(Algorithm, u64)> = config
        .algorithms
        .run
        .iter()
        .flat_map(|&alg| config.seeds.seeds.iter().map(move |&seed| (alg, seed)))
        .collect();

    let results: Vec<Mutex<Option<Result<RunOutput>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let cursor = AtomicUsize::new(0);
    let worker_count = workers.max(1).min(jobs.len());

    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                let index = cursor.fetch_add(1, Ordering::Relaxed);
                if index >= jobs.len() {
                    break;
                }
                let (algorithm, seed) = jobs[index];
                let outcome = execute_job(&problem, &config.params, algorithm, seed, budget);
                *results[index].lock().unwrap() = Some(outcome);
            });
        }
    });

    let mut runs = Vec::with_capacity(jobs.len());
    for slot in results {
        match slot.into_inner().unwrap() {
            Some(Ok(run)) => runs.push(run),
            Some(Err(e)) => return Err(e),
            None => return Err(HarnessError::Runtime("a run produced no result".into())),
        }
    }

    write_outputs(config, &runs, out_dir)
}

fn write_outputs(
    config: &ExperimentConfig,
    runs: &[RunOutput],
    out_dir: &Path,
) -> Result<ExperimentSummary> {
    std::fs::create_dir_all(out_dir).map_err(runtime_err)?;
    let budget = config.budget.evaluations;

    for run in runs {
        if run.trace.len() != budget {
            return Err(HarnessError::Runtime(format!(
                "run {}/seed {} recorded {} evaluations, expected the full budget {}",
                run.algorithm.name(),
                run.seed,
                run.trace.len(),
                budget
            )));
        }
        let trace_path = out_dir.join(format!(
            "trace_{}_seed{}.csv",
            run.algorithm.name(),
            run.seed
        ));
        run.trace.write_csv_path(&trace_path).map_err(runtime_err)?;

        if let Some(diags) = &run.diagnostics {
            let mut text = String::new();
            for d in diags {
                let line = serde_json::to_string(d).map_err(runtime_err)?;
                text.push_str(&line);
                text.push('\n');
            }
            let path = out_dir.join(format!(
                "diagnostics_{}_seed{}.jsonl",
                run.algorithm.name(),
                run.seed
            ));
            std::fs::write(path, text).map_err(runtime_err)?;
        }
    }

    let mut algorithms = Vec::new();
    for &alg in &config.algorithms.run {
        let of_alg: Vec<&RunOutput> = runs.iter().filter(|r| r.algorithm == alg).collect();

        // Best-so-far convergence matrix: one row per evaluation index, one
        // column per seed, in configured seed order.
        let mut text = String::from("eval");
        for run in &of_alg {
            write!(text, ",seed{}", run.seed).expect("string write cannot fail");
        }
        text.push('\n');
        let curves: Vec<Vec<f64>> = of_alg.iter().map(|r| r.trace.best_so_far()).collect();
        for i in 0..budget {
            write!(text, "{}", i + 1).expect("string write cannot fail");
            for curve in &curves {
                write!(text, ",{}", curve[i]).expect("string write cannot fail");
            }
            text.push('\n');
        }
        let path = out_dir.join(format!("convergence_{}.csv", alg.name()));
        std::fs::write(path, text).map_err(runtime_err)?;

        let finals: Vec<f64> = of_alg.iter().map(|r| r.best.fitness_value()).collect();
        algorithms.push(AlgorithmSummary {
            name: alg.name().to_string(),
            median_final_best: median(&finals),
            min_final_best: finals.iter().copied().fold(f64::INFINITY, f64::min),
            max_final_best: finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            runs: of_alg
                .iter()
                .map(|r| RunSummary {
                    seed: r.seed,
                    final_best: r.best.fitness_value(),
                    best_x: r.best.x.clone(),
                })
                .collect(),
        });
    }

    let summary = ExperimentSummary {
        problem: config.problem.clone(),
        budget,
        seeds: config.seeds.seeds.clone(),
        algorithms,
        config: config.clone(),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(runtime_err)?;
    std::fs::write(out_dir.join("summary.json"), json + "\n").map_err(runtime_err)?;
    std::fs::write(out_dir.join("summary.txt"), render_summary_table(&summary))
        .map_err(runtime_err)?;
    Ok(summary)
}

/// Human-readable median/min/max table, one row per algorithm.
pub fn render_summary_table(summary: &ExperimentSummary) -> String {
    let mut text = format!(
        "problem: {} ({} runs/algorithm, budget {} evaluations)\n",
        summary.problem.name,
        summary.seeds.len(),
        summary.budget
    );
    text.push_str(&format!(
        "{:<12} {:>16} {:>16} {:>16}\n",
        "algorithm", "median", "min", "max"
    ));
    for alg in &summary.algorithms {
        text.push_str(&format!(
            "{:<12} {:>16.6e} {:>16.6e} {:>16.6e}\n",
            alg.name, alg.median_final_best, alg.min_final_best, alg.max_final_best
        ));
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_handles_odd_even_and_unsorted_input() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[5.0]), 5.0);
        assert_eq!(median(&[-1.0, -3.0]), -2.0);
    }
}
