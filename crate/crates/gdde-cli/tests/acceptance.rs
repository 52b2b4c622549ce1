//! Acceptance suite: one test per acceptance criterion, each ending in a
//! single `criterion N …: PASS` line (shown with `--nocapture`) with the
//! measured numbers and wall time. Every tolerance and time bound is pinned
//! in the assertions. The long criterion-8 run is `#[ignore]`-gated for the
//! slow/nightly suite (`cargo test -p gdde-cli --test acceptance -- --ignored`).

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use gdde::{
    benchmark, class_density, classify, fit_rbf, lhs, optimal_sigma, optimal_sigma_from,
    reservoir::{decode, make_case, npv_of, simulate},
    run_de, run_gdde, Benchmark, ClassLabel, DeParams, DecisionSpace, GddeMode, GddeParams,
    ModelKind, PnnModel, RunTrace, SigmaSource, Stage, TunerConfig,
};
use gdde_cli::runner::median;
use gdde_cli::{parse_config, run_experiment};
use tempfile::tempdir;

/// Asserts the wall bound and prints the one-line verdict.
fn pass(criterion: &str, started: Instant, bound: Duration, detail: &str) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < bound,
        "{criterion}: wall time {elapsed:.2?} exceeded the {bound:?} bound"
    );
    println!("{criterion}: PASS ({detail}; {elapsed:.2?} < {bound:?})");
}

#[test]
fn criterion_1_rbf_interpolates_its_training_points() {
    let started = Instant::now();
    let test_functions =
        [Benchmark::Ellipsoid, Benchmark::Ackley, Benchmark::Rastrigin, Benchmark::Rosenbrock];
    let mut fits = 0usize;
    let mut worst_relative = 0.0f64;
    'outer: loop {
        for dims in [2usize, 10, 20] {
            for n in [5usize, 50, 150] {
                if fits == 100 {
                    break 'outer;
                }
                let bench = test_functions[fits % test_functions.len()];
                let space = bench.space(dims).unwrap();
                let design = lhs(&space, n, 40_000 + fits as u64).unwrap();
                let points: Vec<(Vec<f64>, f64)> = design
                    .into_iter()
                    .map(|x| {
                        let y = bench.evaluate(&x);
                        (x, y)
                    })
                    .collect();

                let cfg = TunerConfig::from_data(&points).unwrap();
                let sigma = optimal_sigma(&points, ModelKind::Rbf, &cfg).unwrap().sigma;
                let model = fit_rbf(&points, sigma).unwrap();

                let values: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
                let range = values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    - values.iter().copied().fold(f64::INFINITY, f64::min);
                assert!(range > 0.0, "degenerate training range");
                for (x, y) in &points {
                    let err = (model.predict(x).unwrap() - y).abs() / range;
                    worst_relative = worst_relative.max(err);
                }
                fits += 1;
            }
        }
    }
    assert_eq!(fits, 100);
    assert!(
        worst_relative <= 1e-6,
        "worst center-prediction error {worst_relative:.3e} of training range exceeds 1e-6"
    );
    pass(
        "criterion 1 (RBF interpolation exactness)",
        started,
        Duration::from_secs(30),
        &format!("100 tuned fits, worst center error {worst_relative:.3e} of range <= 1e-6"),
    );
}

#[test]
fn criterion_2_tuner_recovers_interior_minimum_and_clips_exactly() {
    let started = Instant::now();
    let cfg = TunerConfig { m: 10, sigma_min: 1.0, sigma_max: 3.0 };

    // Convex quadratic with an irrational interior minimizer.
    let target = 3.0f64.sqrt();
    let choice =
        optimal_sigma_from(&cfg, 2.0, |s| Ok(4.0 * (s - target).powi(2) + 0.25)).unwrap();
    assert_eq!(choice.source, SigmaSource::QuadraticMinimum);
    let rel = (choice.sigma - target).abs() / target;
    assert!(rel <= 1e-9, "interior minimizer off by {rel:.3e} relative (> 1e-9)");

    // Minimizer below the window: clipped to exactly sigma_min.
    let low = optimal_sigma_from(&cfg, 2.0, |s| Ok((s - 0.5).powi(2))).unwrap();
    assert_eq!(low.source, SigmaSource::ClippedLow);
    assert_eq!(low.sigma, cfg.sigma_min, "clipped-low must return sigma_min bit-exactly");

    // Minimizer above the window: clipped to exactly sigma_max.
    let high = optimal_sigma_from(&cfg, 2.0, |s| Ok((s - 5.0).powi(2))).unwrap();
    assert_eq!(high.source, SigmaSource::ClippedHigh);
    assert_eq!(high.sigma, cfg.sigma_max, "clipped-high must return sigma_max bit-exactly");

    pass(
        "criterion 2 (shape-factor tuner)",
        started,
        Duration::from_secs(1),
        &format!("interior recovered to {rel:.2e} rel, clips bit-exact"),
    );
}

#[test]
fn criterion_3_pnn_separates_clusters_and_matches_hand_example() {
    let started = Instant::now();

    // Two well-separated clusters: the centroid gap must be at least six
    // within-cluster standard deviations before the zero-error claims apply.
    let unit = DecisionSpace::continuous(vec![0.0; 2], vec![1.0; 2]).unwrap();
    let cluster1 = lhs(&unit, 20, 11).unwrap();
    let cluster2: Vec<Vec<f64>> = lhs(&unit, 20, 23)
        .unwrap()
        .into_iter()
        .map(|p| p.iter().map(|v| v + 10.0).collect())
        .collect();
    let centroid = |pts: &[Vec<f64>]| -> Vec<f64> {
        let mut c = vec![0.0; 2];
        for p in pts {
            for (ci, v) in c.iter_mut().zip(p) {
                *ci += v / pts.len() as f64;
            }
        }
        c
    };
    let spread = |pts: &[Vec<f64>], c: &[f64]| -> f64 {
        (pts.iter()
            .map(|p| p.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum::<f64>()
            / pts.len() as f64)
            .sqrt()
    };
    let (c1, c2) = (centroid(&cluster1), centroid(&cluster2));
    let gap = c1.iter().zip(&c2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let sigma_data = spread(&cluster1, &c1).max(spread(&cluster2, &c2));
    assert!(
        gap >= 6.0 * sigma_data,
        "cluster gap {gap:.2} below 6 spreads ({:.2})",
        6.0 * sigma_data
    );

    let model = PnnModel::train(cluster1.clone(), cluster2.clone(), 1.0).unwrap();
    let mut resubstitution_errors = 0usize;
    for p in &cluster1 {
        if classify(&model, p).unwrap() != ClassLabel::One {
            resubstitution_errors += 1;
        }
    }
    for p in &cluster2 {
        if classify(&model, p).unwrap() != ClassLabel::Two {
            resubstitution_errors += 1;
        }
    }
    assert_eq!(resubstitution_errors, 0, "resubstitution must be error-free");
    let loocv = gdde::loocv_misclassifications(&cluster1, &cluster2, 1.0).unwrap();
    assert_eq!(loocv, 0, "leave-one-out must be error-free");

    // Hand-checkable one-dimensional example: class 1 = {0}, class 2 = {3, 4},
    // sigma = 1, query x = 1.8. Densities pinned to 1e-6.
    let hand = PnnModel::train(vec![vec![0.0]], vec![vec![3.0], vec![4.0]], 1.0).unwrap();
    let p1 = class_density(&hand, &[1.8], ClassLabel::One).unwrap();
    let p2 = class_density(&hand, &[1.8], ClassLabel::Two).unwrap();
    assert!(
        (p1 - 0.078_950_158_300_894_15).abs() <= 1e-6,
        "class-1 density {p1} off the pinned value"
    );
    assert!(
        (p2 - 0.114_830_323_914_722_18).abs() <= 1e-6,
        "class-2 density {p2} off the pinned value"
    );
    assert_eq!(classify(&hand, &[1.8]).unwrap(), ClassLabel::Two);

    pass(
        "criterion 3 (PNN classification)",
        started,
        Duration::from_secs(1),
        &format!("gap {gap:.1} >= 6 spreads, resubstitution+LOOCV errors 0, hand example matches"),
    );
}

#[test]
fn criterion_4_de_solves_sphere() {
    let started = Instant::now();
    let finals: Vec<f64> = (1..=5u64)
        .map(|seed| {
            let (mut handle, space) = benchmark("sphere", 10, 5000).unwrap();
            handle.set_stage(Stage::Baseline);
            let params = DeParams { rng_seed: seed, ..DeParams::default() };
            run_de(&mut |x: &[f64]| handle.evaluate(x), &space, &params, 5000)
                .unwrap()
                .fitness_value()
        })
        .collect();
    let med = median(&finals);
    assert!(
        med >= -1e-3,
        "median final sphere value {med:.3e} below -1e-3 (finals {finals:?})"
    );
    pass(
        "criterion 4 (plain DE on sphere)",
        started,
        Duration::from_secs(10),
        &format!("median final {med:.3e} >= -1e-3 over 5 seeds"),
    );
}

fn gdde_final(name: &str, dims: usize, budget: usize, mode: GddeMode, seed: u64) -> f64 {
    let (handle, space) = benchmark(name, dims, budget).unwrap();
    let params = GddeParams { budget, rng_seed: seed, mode, ..GddeParams::default() };
    run_gdde(handle, &space, &params).unwrap().best.fitness_value()
}

fn de_final(name: &str, dims: usize, budget: usize, seed: u64) -> f64 {
    let (mut handle, space) = benchmark(name, dims, budget).unwrap();
    handle.set_stage(Stage::Baseline);
    let params = DeParams { rng_seed: seed, ..DeParams::default() };
    run_de(&mut |x: &[f64]| handle.evaluate(x), &space, &params, budget)
        .unwrap()
        .fitness_value()
}

#[test]
fn criterion_5_surrogate_loop_beats_plain_de_on_analytic_problems() {
    let started = Instant::now();
    let seeds: Vec<u64> = (1..=5).collect();
    let mut detail = String::new();

    for name in ["ellipsoid", "rosenbrock"] {
        let de: Vec<f64> = seeds.iter().map(|&s| de_final(name, 20, 500, s)).collect();
        let full: Vec<f64> =
            seeds.iter().map(|&s| gdde_final(name, 20, 500, GddeMode::Full, s)).collect();
        let (de_med, full_med) = (median(&de), median(&full));
        assert!(
            full_med > de_med,
            "{name}: full loop median {full_med:.4e} not strictly better than DE {de_med:.4e}"
        );
        detail.push_str(&format!("{name}: {full_med:.2e} > {de_med:.2e}; "));
    }

    // At a tighter budget on the ill-conditioned quadratic, the local
    // surrogate stage alone must do at least as well as prescreening alone.
    let local: Vec<f64> = seeds
        .iter()
        .map(|&s| gdde_final("ellipsoid", 20, 300, GddeMode::LocalOnly, s))
        .collect();
    let classifier: Vec<f64> = seeds
        .iter()
        .map(|&s| gdde_final("ellipsoid", 20, 300, GddeMode::ClassifierOnly, s))
        .collect();
    let (local_med, classifier_med) = (median(&local), median(&classifier));
    assert!(
        local_med >= classifier_med,
        "local-only median {local_med:.4e} below classifier-only {classifier_med:.4e} at budget 300"
    );
    detail.push_str(&format!("local {local_med:.2e} >= classifier {classifier_med:.2e} @300"));

    pass(
        "criterion 5 (surrogate loop vs plain DE)",
        started,
        Duration::from_secs(300),
        &detail,
    );
}

#[test]
fn criterion_6_simulator_conserves_volume_and_respects_symmetry() {
    let started = Instant::now();
    let (case, _space) = make_case("channel2d").unwrap();

    // A spread-out ten-well layout: five injectors, five producers.
    let x = [
        10.0, 10.0, 10.0, 25.0, 10.0, 40.0, 25.0, 10.0, 25.0, 40.0, // injectors
        40.0, 10.0, 40.0, 25.0, 40.0, 40.0, 25.0, 25.0, 45.0, 45.0, // producers
    ];
    let layout = decode(&x, &case, case.mode).unwrap();
    let out = simulate(&case, &layout).unwrap();

    // Incompressibility: production balances injection at every step.
    let mut worst_voidage = 0.0f64;
    for s in &out.series.steps {
        worst_voidage = worst_voidage.max(((s.q_o + s.q_w) - s.q_i).abs() / s.q_i);
    }
    assert!(worst_voidage <= 1e-6, "voidage imbalance {worst_voidage:.3e} > 1e-6");

    // Water volume bookkeeping closes over the whole run.
    let injected_minus_produced: f64 =
        out.series.steps.iter().map(|s| (s.q_i - s.q_w) * case.dt_days).sum();
    let vp = case.cell_pore_volume();
    let stored: f64 = out.sw.iter().map(|&s| (s - case.sw_init) * vp).sum();
    let balance = (stored - injected_minus_produced).abs() / injected_minus_produced;
    assert!(balance <= 1e-6, "water balance residual {balance:.3e} > 1e-6");

    // Saturations stay inside their physical bounds.
    for &s in &out.sw {
        assert!(
            s >= case.swc && s <= 1.0 - case.sor,
            "saturation {s} outside [{}, {}]",
            case.swc,
            1.0 - case.sor
        );
    }

    // Mirror symmetry on a homogeneous permeability field: reflecting every
    // well column about the grid midline cannot change the NPV.
    let mut homogeneous = case.clone();
    homogeneous.perm = vec![200.0; homogeneous.nx * homogeneous.ny];
    let mirrored: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(k, &v)| if k % 2 == 0 { (homogeneous.nx + 1) as f64 - v } else { v })
        .collect();
    let npv_a = npv_of(&homogeneous, &x).unwrap();
    let npv_b = npv_of(&homogeneous, &mirrored).unwrap();
    let asym = (npv_a - npv_b).abs() / npv_a.abs();
    assert!(asym <= 1e-9, "mirrored-layout NPV asymmetry {asym:.3e} > 1e-9");

    pass(
        "criterion 6 (reservoir simulator physics)",
        started,
        Duration::from_secs(60),
        &format!(
            "voidage {worst_voidage:.1e}, water balance {balance:.1e}, mirror asymmetry {asym:.1e}"
        ),
    );
}

/// Median best-so-far curve over seeds for one algorithm, read back from the
/// trace files an experiment wrote.
fn median_curve(dir: &Path, algorithm: &str, seeds: &[u64], budget: usize) -> Vec<f64> {
    let curves: Vec<Vec<f64>> = seeds
        .iter()
        .map(|seed| {
            let trace =
                RunTrace::read_csv_path(dir.join(format!("trace_{algorithm}_seed{seed}.csv")))
                    .unwrap();
            let curve = trace.best_so_far();
            assert_eq!(curve.len(), budget);
            curve
        })
        .collect();
    (0..budget)
        .map(|i| {
            let at: Vec<f64> = curves.iter().map(|c| c[i]).collect();
            median(&at)
        })
        .collect()
}

#[test]
fn criterion_7_placement_ablation_orders_the_four_algorithms() {
    let started = Instant::now();
    let toml = r#"
        [problem]
        kind = "reservoir"
        name = "channel2d"

        [algorithms]
        run = ["de", "classifier", "local", "gdde"]

        [budget]
        evaluations = 600

        [seeds]
        seeds = [1, 2, 3, 4, 5]
    "#;
    let cfg = parse_config(toml).unwrap();
    let dir = tempdir().unwrap();
    let summary = run_experiment(&cfg, dir.path(), 1).unwrap();

    let final_median = |name: &str| {
        summary
            .algorithms
            .iter()
            .find(|a| a.name == name)
            .unwrap_or_else(|| panic!("missing algorithm {name}"))
            .median_final_best
    };
    let (de_med, gdde_med) = (final_median("de"), final_median("gdde"));
    assert!(
        gdde_med >= de_med,
        "full-loop median NPV {gdde_med:.6e} below plain DE {de_med:.6e}"
    );

    // Best-so-far dominance after the initial design (evaluations 101..=600,
    // the initial design being 100): the full loop's median curve must be at
    // least DE's at 80% or more of those checkpoints.
    let seeds = [1u64, 2, 3, 4, 5];
    let budget = 600;
    let tau = GddeParams::default().initial_design;
    let gdde_curve = median_curve(dir.path(), "gdde", &seeds, budget);
    let de_curve = median_curve(dir.path(), "de", &seeds, budget);
    let post_init = tau..budget;
    let total = post_init.len();
    let dominated = post_init.clone().filter(|&i| gdde_curve[i] >= de_curve[i]).count();
    let share = dominated as f64 / total as f64;
    assert!(
        share >= 0.8,
        "full loop dominates DE at only {dominated}/{total} post-initialization checkpoints"
    );

    pass(
        "criterion 7 (well-placement ablation)",
        started,
        Duration::from_secs(30 * 60),
        &format!(
            "median NPV {gdde_med:.4e} >= {de_med:.4e}, dominance {dominated}/{total} ({:.0}%)",
            share * 100.0
        ),
    );
}

#[test]
#[ignore = "slow suite: joint placement+rate ablation on the masked field (run with -- --ignored)"]
fn criterion_8_joint_ablation_on_masked_field() {
    let started = Instant::now();
    let toml = r#"
        [problem]
        kind = "reservoir"
        name = "egglike"

        [algorithms]
        run = ["de", "gdde"]

        [budget]
        evaluations = 1000

        [seeds]
        seeds = [1, 2, 3]

        [params]
        initial_design = 200
    "#;
    let cfg = parse_config(toml).unwrap();
    let dir = tempdir().unwrap();
    let summary = run_experiment(&cfg, dir.path(), 1).unwrap();

    let final_median = |name: &str| {
        summary.algorithms.iter().find(|a| a.name == name).unwrap().median_final_best
    };
    let (de_med, gdde_med) = (final_median("de"), final_median("gdde"));
    assert!(
        gdde_med >= de_med,
        "full-loop median NPV {gdde_med:.6e} below plain DE {de_med:.6e} on the joint problem"
    );

    pass(
        "criterion 8 (joint placement+rate ablation)",
        started,
        Duration::from_secs(2 * 60 * 60),
        &format!("median NPV {gdde_med:.4e} >= {de_med:.4e} over 3 seeds at budget 1000"),
    );
}

#[test]
fn criterion_9_repeated_experiments_are_byte_identical() {
    let started = Instant::now();
    let toml = r#"
        [problem]
        kind = "reservoir"
        name = "channel2d"

        [algorithms]
        run = ["de", "classifier", "local", "gdde"]

        [budget]
        evaluations = 60

        [seeds]
        seeds = [1, 2]

        [params]
        population_size = 10
        initial_design = 12
    "#;
    let cfg = parse_config(toml).unwrap();
    let dir_a = tempdir().unwrap();
    let dir_b = tempdir().unwrap();
    run_experiment(&cfg, dir_a.path(), 1).unwrap();
    run_experiment(&cfg, dir_b.path(), 2).unwrap();

    let mut compared = 0usize;
    for alg in ["de", "classifier", "local", "gdde"] {
        for seed in [1, 2] {
            let name = format!("trace_{alg}_seed{seed}.csv");
            let a = fs::read(dir_a.path().join(&name)).unwrap();
            let b = fs::read(dir_b.path().join(&name)).unwrap();
            assert!(!a.is_empty());
            assert_eq!(a, b, "trace {name} differs between repeated runs");
            compared += 1;
        }
    }
    assert_eq!(compared, 8);

    pass(
        "criterion 9 (trace determinism)",
        started,
        Duration::from_secs(300),
        "8 trace CSVs byte-identical across repeated runs and worker counts",
    );
}
