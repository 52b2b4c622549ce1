//! Comparison of finished runs: recomputes best-so-far medians from the raw
//! trace CSVs (independently of `summary.json`) at 10%-of-budget checkpoints
//! and reports the pairwise ordering between algorithms.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use gdde::RunTrace;
use serde::{Deserialize, Serialize};

use crate::runner::median;
use crate::{HarnessError, Result};

/// Machine-readable comparison outcome (also written as `compare.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    /// Common trace length of every run.
    pub budget: usize,
    /// Common seed set of every algorithm.
    pub seeds: Vec<u64>,
    /// Evaluation indices compared (10% steps of the budget, 1-based).
    pub checkpoints: Vec<usize>,
    pub algorithms: Vec<CompareAlgorithm>,
    pub pairs: Vec<PairComparison>,
    /// Algorithm names ordered best-first by median at the final checkpoint.
    pub final_ranking: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareAlgorithm {
    pub name: String,
    /// Median best-so-far across seeds, one value per checkpoint.
    pub median_best_so_far: Vec<f64>,
}

/// Checkpoint win/tie/loss counts for one ordered pair (maximization).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairComparison {
    pub first: String,
    pub second: String,
    pub first_wins: usize,
    pub ties: usize,
    pub second_wins: usize,
}

fn config_err(msg: String) -> HarnessError {
    HarnessError::Config(msg)
}

/// Parses `trace_{algorithm}_seed{seed}.csv` into its algorithm and seed.
fn parse_trace_name(file_name: &str) -> Option<(String, u64)> {
    let stem = file_name.strip_prefix("trace_")?.strip_suffix(".csv")?;
    let (algorithm, seed) = stem.rsplit_once("_seed")?;
    let seed: u64 = seed.parse().ok()?;
    if algorithm.is_empty() {
        return None;
    }
    Some((algorithm.to_string(), seed))
}

/// Compares every algorithm with trace files in `dir`, writes `compare.json`
/// there, and returns the report.
///
/// Preconditions (all violations are configuration errors): at least two
/// algorithms, every algorithm run with the same seed set, and every trace
/// the same length (the budget).
pub fn compare_dir(dir: &Path) -> Result<CompareReport> {
    let mut names: Vec<String> = Vec::new();
    let entries = std::fs::read_dir(dir)
        .map_err(|e| config_err(format!("cannot read directory {}: {e}", dir.display())))?;
    for entry in entries {
        let entry = entry.map_err(|e| HarnessError::Runtime(e.to_string()))?;
        if let Some(name) = entry.file_name().to_str() {
            names.push(name.to_string());
        }
    }
    names.sort();

    // algorithm name → seed → best-so-far curve, in deterministic order.
    let mut curves: BTreeMap<String, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for name in &names {
        let Some((algorithm, seed)) = parse_trace_name(name) else {
            continue;
        };
        let trace = RunTrace::read_csv_path(dir.join(name))
            .map_err(|e| config_err(format!("trace file {name}: {e}")))?;
        curves
            .entry(algorithm)
            .or_default()
            .insert(seed, trace.best_so_far());
    }

    if curves.len() < 2 {
        return Err(config_err(format!(
            "comparison needs trace files from at least two algorithms, found {} in {}",
            curves.len(),
            dir.display()
        )));
    }

    let seed_sets: BTreeMap<&String, BTreeSet<u64>> = curves
        .iter()
        .map(|(alg, by_seed)| (alg, by_seed.keys().copied().collect()))
        .collect();
    let reference = seed_sets.values().next().expect("at least two algorithms");
    for (alg, seeds) in &seed_sets {
        if seeds != reference {
            return Err(config_err(format!(
                "algorithms were run with different seed sets: `{alg}` has {seeds:?}",
            )));
        }
    }

    let mut budget = None;
    for (alg, by_seed) in &curves {
        for (seed, curve) in by_seed {
            match budget {
                None => budget = Some(curve.len()),
                Some(b) if b != curve.len() => {
                    return Err(config_err(format!(
                        "mismatched budgets: trace of `{alg}` seed {seed} has {} evaluations, \
                         another trace has {b}",
                        curve.len()
                    )));
                }
                Some(_) => {}
            }
        }
    }
    let budget = budget.expect("at least two algorithms with traces");
    if budget == 0 {
        return Err(config_err("traces are empty".into()));
    }

    let mut checkpoints: Vec<usize> = (1..=10).map(|j| (j * budget).div_ceil(10)).collect();
    checkpoints.dedup();

    let algorithms: Vec<CompareAlgorithm> = curves
        .iter()
        .map(|(name, by_seed)| {
            let median_best_so_far = checkpoints
                .iter()
                .map(|&c| {
                    let at: Vec<f64> = by_seed.values().map(|curve| curve[c - 1]).collect();
                    median(&at)
                })
                .collect();
            CompareAlgorithm {
                name: name.clone(),
                median_best_so_far,
            }
        })
        .collect();

    let mut pairs = Vec::new();
    for i in 0..algorithms.len() {
        for j in (i + 1)..algorithms.len() {
            let (a, b) = (&algorithms[i], &algorithms[j]);
            let mut p = PairComparison {
                first: a.name.clone(),
                second: b.name.clone(),
                first_wins: 0,
                ties: 0,
                second_wins: 0,
            };
            for (&ma, &mb) in a.median_best_so_far.iter().zip(&b.median_best_so_far) {
                if ma > mb {
                    p.first_wins += 1;
                } else if mb > ma {
                    p.second_wins += 1;
                } else {
                    p.ties += 1;
                }
            }
            pairs.push(p);
        }
    }

    let mut final_ranking: Vec<(String, f64)> = algorithms
        .iter()
        .map(|a| {
            let last = *a.median_best_so_far.last().expect("non-empty checkpoints");
            (a.name.clone(), last)
        })
        .collect();
    final_ranking.sort_by(|(na, fa), (nb, fb)| fb.total_cmp(fa).then_with(|| na.cmp(nb)));

    let report = CompareReport {
        budget,
        seeds: reference.iter().copied().collect(),
        checkpoints,
        algorithms,
        pairs,
        final_ranking: final_ranking.into_iter().map(|(n, _)| n).collect(),
    };

    let json =
        serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    std::fs::write(dir.join("compare.json"), json + "\n")
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok(report)
}

/// Human-readable table: median best-so-far per checkpoint per algorithm,
/// then the pairwise checkpoint tallies and the final ranking.
pub fn render_compare_table(report: &CompareReport) -> String {
    let mut text = format!(
        "{} runs/algorithm, budget {} evaluations, checkpoints every 10%\n",
        report.seeds.len(),
        report.budget
    );
    text.push_str(&format!("{:>10}", "eval"));
    for alg in &report.algorithms {
        text.push_str(&format!(" {:>16}", alg.name));
    }
    text.push('\n');
    for (k, &checkpoint) in report.checkpoints.iter().enumerate() {
        text.push_str(&format!("{checkpoint:>10}"));
        for alg in &report.algorithms {
            text.push_str(&format!(" {:>16.6e}", alg.median_best_so_far[k]));
        }
        text.push('\n');
    }
    text.push_str("\npairwise (first wins / ties / second wins across checkpoints):\n");
    for p in &report.pairs {
        text.push_str(&format!(
            "  {} vs {}: {}/{}/{}\n",
            p.first, p.second, p.first_wins, p.ties, p.second_wins
        ));
    }
    text.push_str(&format!(
        "final ranking (median at evaluation {}): {}\n",
        report.checkpoints.last().expect("non-empty checkpoints"),
        report.final_ranking.join(" > ")
    ));
    text
}
