//! Problem construction: turns a `[problem]` section into a decision space
//! plus a factory for budgeted objective handles.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use gdde::reservoir::{make_case, npv_of, DecodeMode, ReservoirCase};
use gdde::{Benchmark, DecisionSpace, ObjectiveHandle};

use crate::config::{ProblemConfig, ProblemKind};
use crate::{HarnessError, Result};

/// Cache of already-simulated points, keyed on the exact bit patterns of the
/// coordinates. Shared across all runs of one experiment.
type NpvCache = Arc<Mutex<HashMap<Vec<u64>, f64>>>;

#[derive(Debug)]
enum ProblemImpl {
    Benchmark {
        bench: Benchmark,
        dims: usize,
    },
    /// Reservoir simulations dominate run time, and concurrent runs revisit
    /// points (shared seeded initial designs, integer-lattice duplicates), so
    /// the case's NPV values are memoized. A cache hit still consumes
    /// evaluation budget exactly like a fresh simulation: the cache never
    /// changes optimizer behavior or traces, only wall time.
    Reservoir {
        case: Arc<ReservoirCase>,
        cache: NpvCache,
    },
}

/// A validated problem that can mint one objective handle per run.
#[derive(Debug)]
pub struct ResolvedProblem {
    space: DecisionSpace,
    imp: ProblemImpl,
}

impl ResolvedProblem {
    pub fn new(config: &ProblemConfig) -> Result<Self> {
        match config.kind {
            ProblemKind::Benchmark => {
                let dims = config.dims.ok_or_else(|| {
                    HarnessError::Config("problem.dims is required for benchmark problems".into())
                })?;
                let bench = Benchmark::from_name(&config.name)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                let space = bench
                    .space(dims)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                Ok(Self {
                    space,
                    imp: ProblemImpl::Benchmark { bench, dims },
                })
            }
            ProblemKind::Reservoir => {
                let (case, space) =
                    make_case(&config.name).map_err(|e| HarnessError::Config(e.to_string()))?;
                Ok(Self {
                    space,
                    imp: ProblemImpl::Reservoir {
                        case: Arc::new(case),
                        cache: Arc::new(Mutex::new(HashMap::new())),
                    },
                })
            }
        }
    }

    pub fn space(&self) -> &DecisionSpace {
        &self.space
    }

    /// A fresh budgeted objective handle for one run. Reservoir handles share
    /// the experiment-wide simulation cache; a simulation failure surfaces as
    /// a non-finite value, which the handle rejects with the offending point.
    pub fn objective(&self, budget: usize) -> Result<ObjectiveHandle> {
        match &self.imp {
            ProblemImpl::Benchmark { bench, dims } => {
                let (handle, _) = bench
                    .objective_handle(*dims, budget)
                    .map_err(|e| HarnessError::Runtime(e.to_string()))?;
                Ok(handle)
            }
            ProblemImpl::Reservoir { case, cache } => {
                let case = Arc::clone(case);
                let cache = Arc::clone(cache);
                Ok(ObjectiveHandle::new(budget, move |x: &[f64]| {
                    let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
                    if let Some(&value) = cache.lock().unwrap().get(&key) {
                        return value;
                    }
                    let value = npv_of(&case, x).unwrap_or(f64::NAN);
                    cache.lock().unwrap().insert(key, value);
                    value
                }))
            }
        }
    }
}

/// Text for the `list-problems` subcommand: every benchmark function and
/// reservoir case the `[problem]` section accepts, built from the library's
/// own registries so the list can never go stale.
pub fn list_problems_text() -> String {
    let mut text = String::from(
        "benchmark functions (kind = \"benchmark\"; maximized, optimum value 0; set problem.dims):\n",
    );
    for bench in Benchmark::ALL {
        writeln!(text, "  {}", bench.name()).expect("string write cannot fail");
    }
    text.push_str(
        "\nreservoir cases (kind = \"reservoir\"; objective is net present value in dollars):\n",
    );
    for name in ["channel2d", "egglike"] {
        let (case, space) = make_case(name).expect("built-in case");
        let controls = match case.mode {
            DecodeMode::PlacementOnly => "well placement only".to_string(),
            DecodeMode::Joint => {
                format!(
                    "well placement + per-step rates over {} steps",
                    case.num_steps
                )
            }
        };
        writeln!(
            text,
            "  {:<10} {:>3} variables ({}; {} injectors, {} producers on a {}x{} grid)",
            name,
            space.dims(),
            controls,
            case.num_injectors(),
            case.num_producers(),
            case.nx,
            case.ny,
        )
        .expect("string write cannot fail");
    }
    text
}
