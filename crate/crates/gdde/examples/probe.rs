use gdde::{fit_rbf, lhs, loocv_error, mean_pairwise_distance, optimal_sigma, Benchmark, ModelKind, TunerConfig};

fn main() {
    let funcs = [Benchmark::Ellipsoid, Benchmark::Ackley, Benchmark::Rastrigin, Benchmark::Rosenbrock];
    let mut fits = 0usize;
    'outer: loop {
        for dims in [2usize, 10, 20] {
            for n in [5usize, 50, 150] {
                if fits == 100 { break 'outer; }
                let bench = funcs[fits % funcs.len()];
                let space = bench.space(dims).unwrap();
                let design = lhs(&space, n, 40_000 + fits as u64).unwrap();
                let points: Vec<(Vec<f64>, f64)> =
                    design.into_iter().map(|x| { let y = bench.evaluate(&x); (x, y) }).collect();
                let cfg = TunerConfig::from_data(&points).unwrap();
                let choice = optimal_sigma(&points, ModelKind::Rbf, &cfg).unwrap();
                let model = fit_rbf(&points, choice.sigma).unwrap();
                let values: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
                let range = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - values.iter().cloned().fold(f64::INFINITY, f64::min);
                let mut worst = 0.0f64;
                for (x, y) in &points {
                    worst = worst.max((model.predict(x).unwrap() - y).abs() / range);
                }
                if worst > 1e-6 {
                    let xs: Vec<Vec<f64>> = points.iter().map(|(x, _)| x.clone()).collect();
                    let dbar = mean_pairwise_distance(&xs).unwrap();
                    println!("FAIL fit={fits} {} d={dims} n={n}: sigma={:.4} ({:?}) window=[{:.4},{:.4}] dbar={dbar:.4} err={worst:.3e}",
                        bench.name(), choice.sigma, choice.source, cfg.sigma_min, cfg.sigma_max);
                    // LOOCV profile over the window
                    for k in 0..10 {
                        let s = cfg.sigma_min + (cfg.sigma_max - cfg.sigma_min) * k as f64 / 9.0;
                        let e = loocv_error(&points, s, ModelKind::Rbf);
                        let ce = fit_rbf(&points, s).map(|m| {
                            points.iter().map(|(x, y)| (m.predict(x).unwrap() - y).abs() / range)
                                .fold(0.0f64, f64::max)
                        });
                        println!("    sigma={s:.4} loocv={:?} center_err={:?}", e.map(|v| format!("{v:.4e}")), ce.map(|v| format!("{v:.3e}")));
                    }
                }
                fits += 1;
            }
        }
    }
    println!("done: {fits} fits probed");
}
