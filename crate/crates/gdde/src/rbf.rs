//! Gaussian radial-basis-function interpolation, the local surrogate model.

use crate::error::{Error, Result};
use crate::space::{euclidean, is_duplicate};
use nalgebra::{DMatrix, DVector};

/// `exp(−r²/σ²)` for a distance `r ≥ 0` and shape factor `σ > 0`.
pub fn gaussian_kernel(r: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "kernel shape factor must be positive and finite, got {sigma}"
        )));
    }
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "kernel distance must be nonnegative, got {r}"
        )));
    }
    Ok((-(r * r) / (sigma * sigma)).exp())
}

/// Relative ridge added to the Gram diagonal before solving; the Gaussian
/// Gram has unit diagonal, so the absolute shift equals this constant.
const GRAM_RIDGE: f64 = 1e-10;

/// A fitted Gaussian RBF interpolant `f̂(x) = Σᵢ ωᵢ·exp(−‖x−cᵢ‖²/σ²)`.
#[derive(Debug, Clone)]
pub struct RbfModel {
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
    sigma: f64,
}

impl RbfModel {
    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dims(&self) -> usize {
        self.centers[0].len()
    }

    /// See [`predict`].
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        predict(self, x)
    }
}

/// Fits the interpolant by solving the Gram system `Φω = f`.
///
/// Duplicate centers are dropped (first occurrence kept) and a ridge of
/// `1e−10·(trace/n)` is added to the diagonal before the Cholesky solve, so
/// near-coincident centers cannot blow up the weights. A Gram matrix the
/// ridge cannot rescue reports ill-conditioning.
pub fn fit_rbf(points: &[(Vec<f64>, f64)], sigma: f64) -> Result<RbfModel> {
    if points.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "RBF shape factor must be positive and finite, got {sigma}"
        )));
    }
    let dims = points[0].0.len();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    let mut values: Vec<f64> = Vec::with_capacity(points.len());
    for (x, f) in points {
        if x.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: x.len(),
            });
        }
        if !centers.iter().any(|c| is_duplicate(c, x)) {
            centers.push(x.clone());
            values.push(*f);
        }
    }
    let n = centers.len();
    let inv_sigma2 = 1.0 / (sigma * sigma);
    let mut gram = DMatrix::from_fn(n, n, |i, j| {
        let r = euclidean(&centers[i], &centers[j]);
        (-(r * r) * inv_sigma2).exp()
    });
    let ridge = GRAM_RIDGE * gram.trace() / n as f64;
    for i in 0..n {
        gram[(i, i)] += ridge;
    }
    let chol = gram.cholesky().ok_or_else(|| {
        Error::IllConditioned(format!(
            "Gram matrix of {n} centers at shape factor {sigma} is not positive definite"
        ))
    })?;
    let weights = chol.solve(&DVector::from_vec(values));
    Ok(RbfModel {
        centers,
        weights: weights.as_slice().to_vec(),
        sigma,
    })
}

/// Evaluates the interpolant at `x`.
pub fn predict(model: &RbfModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dims() {
        return Err(Error::DimensionMismatch {
            expected: model.dims(),
            got: x.len(),
        });
    }
    let inv_sigma2 = 1.0 / (model.sigma * model.sigma);
    let mut sum = 0.0;
    for (c, w) in model.centers.iter().zip(&model.weights) {
        let r2: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        sum += w * (-r2 * inv_sigma2).exp();
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_values_at_reference_distances() {
        assert_eq!(gaussian_kernel(0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(
            gaussian_kernel(1.0, 1.0).unwrap(),
            0.36787944117144233,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            gaussian_kernel(2.0, 1.0).unwrap(),
            0.01831563888873418,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            gaussian_kernel(3.0, 3.0).unwrap(),
            0.36787944117144233,
            max_relative = 1e-15
        );
    }

    #[test]
    fn kernel_rejects_bad_arguments() {
        assert!(gaussian_kernel(1.0, 0.0).is_err());
        assert!(gaussian_kernel(1.0, -2.0).is_err());
        assert!(gaussian_kernel(-0.5, 1.0).is_err());
        assert!(gaussian_kernel(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn single_point_weight_equals_its_value() {
        let model = fit_rbf(&[(vec![0.3, -0.1], 7.0)], 1.0).unwrap();
        assert_relative_eq!(model.weights()[0], 7.0, max_relative = 1e-8);
        assert_relative_eq!(
            model.predict(&[0.3, -0.1]).unwrap(),
            7.0,
            max_relative = 1e-8
        );
    }

    #[test]
    fn two_point_weights_match_the_closed_form_solve() {
        // Centers at distance 1, values (0, 1), σ = 1:
        // ω = [[1, e⁻¹], [e⁻¹, 1]]⁻¹ (0, 1)ᵀ.
        let model = fit_rbf(&[(vec![0.0], 0.0), (vec![1.0], 1.0)], 1.0).unwrap();
        assert_relative_eq!(model.weights()[0], -0.4254590641196608, max_relative = 1e-9);
        assert_relative_eq!(model.weights()[1], 1.1565176427496657, max_relative = 1e-9);
        // Midpoint: (ω₁ + ω₂)·e^{−1/4}.
        assert_relative_eq!(
            model.predict(&[0.5]).unwrap(),
            0.5693489935081161,
            max_relative = 1e-9
        );
    }

    #[test]
    fn interpolation_reproduces_training_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let points: Vec<(Vec<f64>, f64)> = (0..20)
            .map(|_| {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..5.0)).collect();
                let f = x[0].sin() + 0.5 * x[1] - 0.1 * x[2] * x[2];
                (x, f)
            })
            .collect();
        let values: Vec<f64> = points.iter().map(|p| p.1).collect();
        let range = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let model = fit_rbf(&points, 2.0).unwrap();
        for (x, f) in &points {
            let p = model.predict(x).unwrap();
            assert!(
                (p - f).abs() <= 1e-6 * range,
                "interpolation off at {x:?}: predicted {p}, trained {f}"
            );
        }
    }

    #[test]
    fn far_from_all_centers_prediction_decays_to_zero() {
        let model = fit_rbf(&[(vec![0.0, 0.0], 5.0), (vec![1.0, 0.0], -3.0)], 1.0).unwrap();
        let far = model.predict(&[60.0, 60.0]).unwrap();
        assert!(far.abs() < 1e-300, "expected Gaussian decay, got {far}");
    }

    #[test]
    fn duplicate_centers_are_dropped_keeping_the_first() {
        let points = vec![
            (vec![0.0, 0.0], 1.0),
            (vec![0.0, 0.0], 2.0),
            (vec![1.0, 1.0], 3.0),
        ];
        let model = fit_rbf(&points, 1.5).unwrap();
        assert_eq!(model.centers().len(), 2);
        assert_relative_eq!(
            model.predict(&[0.0, 0.0]).unwrap(),
            1.0,
            max_relative = 1e-8
        );
        assert_relative_eq!(
            model.predict(&[1.0, 1.0]).unwrap(),
            3.0,
            max_relative = 1e-8
        );
    }

    #[test]
    fn prediction_rejects_wrong_dimension() {
        let model = fit_rbf(&[(vec![0.0, 0.0], 1.0)], 1.0).unwrap();
        assert!(matches!(
            model.predict(&[0.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn fit_rejects_empty_input_and_bad_sigma() {
        assert!(matches!(
            fit_rbf(&[], 1.0),
            Err(Error::InsufficientData { needed: 1, got: 0 })
        ));
        assert!(fit_rbf(&[(vec![0.0], 1.0)], 0.0).is_err());
        assert!(fit_rbf(&[(vec![0.0], 1.0)], -1.0).is_err());
    }

    #[test]
    fn translation_leaves_predictions_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let points: Vec<(Vec<f64>, f64)> = (0..12)
            .map(|_| {
                let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
                let f = (x[0] - 0.2) * x[1];
                (x, f)
            })
            .collect();
        let shift = [13.5, -7.25];
        let shifted: Vec<(Vec<f64>, f64)> = points
            .iter()
            .map(|(x, f)| (vec![x[0] + shift[0], x[1] + shift[1]], *f))
            .collect();
        let base = fit_rbf(&points, 0.8).unwrap();
        let moved = fit_rbf(&shifted, 0.8).unwrap();
        for probe in [[0.1, 0.3], [-0.7, 0.9], [0.5, -0.5]] {
            let a = base.predict(&probe).unwrap();
            let b = moved
                .predict(&[probe[0] + shift[0], probe[1] + shift[1]])
                .unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_leaves_predictions_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let points: Vec<(Vec<f64>, f64)> = (0..10)
            .map(|_| {
                let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
                let f = x[0] + x[1] * x[1];
                (x, f)
            })
            .collect();
        let (s, c) = 0.7f64.sin_cos();
        let rotate = |x: &[f64]| vec![c * x[0] - s * x[1], s * x[0] + c * x[1]];
        let rotated: Vec<(Vec<f64>, f64)> = points.iter().map(|(x, f)| (rotate(x), *f)).collect();
        let base = fit_rbf(&points, 0.9).unwrap();
        let turned = fit_rbf(&rotated, 0.9).unwrap();
        for probe in [[0.2, 0.1], [-0.4, 0.6]] {
            let a = base.predict(&probe).unwrap();
            let b = turned.predict(&rotate(&probe)).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    #[test]
    fn prediction_varies_smoothly_between_close_inputs() {
        let model = fit_rbf(&[(vec![0.0], 1.0), (vec![1.0], 2.0), (vec![2.0], 0.5)], 1.0).unwrap();
        let mut prev = model.predict(&[0.0]).unwrap();
        for k in 1..=400 {
            let x = k as f64 * 0.005;
            let here = model.predict(&[x]).unwrap();
            // |f̂′| is bounded by Σ|ωᵢ|·max|φ′| ≤ Σ|ωᵢ|·√(2/e)/σ.
            let lipschitz: f64 = model.weights().iter().map(|w| w.abs()).sum::<f64>()
                * (2.0_f64 / std::f64::consts::E).sqrt();
            assert!((here - prev).abs() <= lipschitz * 0.005 + 1e-12);
            prev = here;
        }
    }
}
