//! Shape-factor selection by quadratic response-surface fit of the
//! leave-one-out cross-validation error.
//!
//! `m` trial shape factors are sampled uniformly on `[σ_min, σ_max]`, the
//! LOOCV error is measured at each, a 1-D quadratic is least-squares fitted,
//! and its minimizer is clipped back into the bounds. A concave fit or too
//! few usable samples falls back to the best sampled value; if every sample
//! fails, a data-scale default is returned with a warning flag.

use crate::error::{Error, Result};
use crate::pnn::loocv_misclassifications;
use crate::space::{euclidean, is_duplicate};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Which model family's LOOCV error drives the tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Rbf,
    Pnn,
}

/// Absolute tuning bounds for one call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunerConfig {
    /// Number of trial shape factors (≥ 3).
    pub m: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl TunerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 3 {
            return Err(Error::InvalidArgument(format!(
                "tuner needs at least 3 trial shape factors, got {}",
                self.m
            )));
        }
        if !(self.sigma_min > 0.0 && self.sigma_min < self.sigma_max && self.sigma_max.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "tuner bounds must satisfy 0 < sigma_min < sigma_max, got [{}, {}]",
                self.sigma_min, self.sigma_max
            )));
        }
        Ok(())
    }

    /// Default data-scaled bounds: `[0.1·D̄, 2·D̄]` with `m = 10`, where `D̄`
    /// is the mean pairwise distance among the training inputs.
    pub fn from_data(points: &[(Vec<f64>, f64)]) -> Result<Self> {
        let xs: Vec<Vec<f64>> = points.iter().map(|(x, _)| x.clone()).collect();
        let dbar = mean_pairwise_distance(&xs)?;
        Self::from_mean_distance(dbar)
    }

    /// Data-scaled bounds from a precomputed mean pairwise distance.
    pub fn from_mean_distance(dbar: f64) -> Result<Self> {
        if !(dbar > 0.0) || !dbar.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "mean pairwise distance must be positive to scale tuner bounds, got {dbar}"
            )));
        }
        Ok(Self {
            m: 10,
            sigma_min: 0.1 * dbar,
            sigma_max: 2.0 * dbar,
        })
    }
}

/// Tuning bound factors carried in algorithm parameters; turned into a
/// concrete [`TunerConfig`] per call from the training data's scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunerSettings {
    pub m: usize,
    pub sigma_min_factor: f64,
    pub sigma_max_factor: f64,
}

impl Default for TunerSettings {
    fn default() -> Self {
        Self {
            m: 10,
            sigma_min_factor: 0.1,
            sigma_max_factor: 2.0,
        }
    }
}

impl TunerSettings {
    pub fn config_for(&self, mean_distance: f64) -> Result<TunerConfig> {
        let cfg = TunerConfig {
            m: self.m,
            sigma_min: self.sigma_min_factor * mean_distance,
            sigma_max: self.sigma_max_factor * mean_distance,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Mean Euclidean distance over all unordered point pairs.
pub fn mean_pairwise_distance(points: &[Vec<f64>]) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += euclidean(&points[i], &points[j]);
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Coefficients of `e(σ) ≈ β₀ + β₁·σ + β₁₁·σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadFit1D {
    pub beta0: f64,
    pub beta1: f64,
    pub beta11: f64,
}

impl QuadFit1D {
    pub fn evaluate(&self, sigma: f64) -> f64 {
        self.beta0 + self.beta1 * sigma + self.beta11 * sigma * sigma
    }

    /// The interior minimizer `−β₁/(2β₁₁)`, defined only for a convex fit.
    pub fn minimizer(&self) -> Option<f64> {
        (self.beta11 > 0.0).then(|| -self.beta1 / (2.0 * self.beta11))
    }
}

/// Leave-one-out cross-validation error at one shape factor.
///
/// For `Rbf` the points are (input, target) pairs and the error is the sum
/// of squared held-out residuals. Each held-out model is the ridged
/// interpolant of [`fit_rbf`] on the remaining points; the residuals are
/// computed through the algebraic identity e_i = ω_i/(A⁻¹)ᵢᵢ on the full
/// ridged Gram system, which equals the refit-per-fold definition exactly
/// because deleting a row/column of `Φ + ridge·I` yields the deleted fit's
/// system. Duplicate inputs are dropped (first kept), matching `fit_rbf`.
///
/// For `Pnn` the targets must be the 0/1 class encoding (class 1 ↦ 1.0,
/// class 2 ↦ 0.0); the squared held-out error then equals the
/// misclassification count.
pub fn loocv_error(points: &[(Vec<f64>, f64)], sigma: f64, kind: ModelKind) -> Result<f64> {
    match kind {
        ModelKind::Rbf => rbf_loocv(points, sigma),
        ModelKind::Pnn => pnn_loocv(points, sigma),
    }
}

fn rbf_loocv(points: &[(Vec<f64>, f64)], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "LOOCV shape factor must be positive and finite, got {sigma}"
        )));
    }
    let mut centers: Vec<&[f64]> = Vec::with_capacity(points.len());
    let mut values: Vec<f64> = Vec::with_capacity(points.len());
    for (x, f) in points {
        if !centers.iter().any(|c| is_duplicate(c, x)) {
            centers.push(x);
            values.push(*f);
        }
    }
    let n = centers.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let inv_sigma2 = 1.0 / (sigma * sigma);
    let mut gram = DMatrix::from_fn(n, n, |i, j| {
        let mut r2 = 0.0;
        for (a, b) in centers[i].iter().zip(centers[j]) {
            r2 += (a - b) * (a - b);
        }
        (-r2 * inv_sigma2).exp()
    });
    let ridge = 1e-10 * gram.trace() / n as f64;
    for i in 0..n {
        gram[(i, i)] += ridge;
    }
    let chol = gram.cholesky().ok_or_else(|| {
        Error::IllConditioned(format!(
            "Gram matrix of {n} centers at shape factor {sigma} is not positive definite"
        ))
    })?;
    let weights = chol.solve(&DVector::from_vec(values));
    let inverse = chol.inverse();
    let mut error = 0.0;
    for i in 0..n {
        let residual = weights[i] / inverse[(i, i)];
        error += residual * residual;
    }
    Ok(error)
}

fn pnn_loocv(points: &[(Vec<f64>, f64)], sigma: f64) -> Result<f64> {
    let mut class1 = Vec::new();
    let mut class2 = Vec::new();
    for (x, label) in points {
        if *label == 1.0 {
            class1.push(x.clone());
        } else if *label == 0.0 {
            class2.push(x.clone());
        } else {
            return Err(Error::InvalidArgument(format!(
                "PNN LOOCV labels must be 1.0 (class 1) or 0.0 (class 2), got {label}"
            )));
        }
    }
    Ok(loocv_misclassifications(&class1, &class2, sigma)? as f64)
}

/// Least-squares quadratic through `(σᵢ, eᵢ)` samples.
///
/// The fit runs on standardized abscissae and the coefficients are mapped
/// back exactly, so widely scaled σ ranges stay well conditioned.
pub fn fit_quadratic(sigmas: &[f64], errors: &[f64]) -> Result<QuadFit1D> {
    let m = sigmas.len();
    if m != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: errors.len(),
        });
    }
    if m < 3 {
        return Err(Error::InsufficientData { needed: 3, got: m });
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if sigmas[i] == sigmas[j] {
                return Err(Error::RankDeficient);
            }
        }
    }
    let mean = sigmas.iter().sum::<f64>() / m as f64;
    let var = sigmas.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / m as f64;
    let scale = var.sqrt();
    let design = DMatrix::from_fn(m, 3, |i, j| {
        let s = (sigmas[i] - mean) / scale;
        match j {
            0 => 1.0,
            1 => s,
            _ => s * s,
        }
    });
    let rhs = DVector::from_column_slice(errors);
    let svd = design.svd(true, true);
    let gamma = svd.solve(&rhs, 1e-12).map_err(|_| Error::RankDeficient)?;
    let (g0, g1, g2) = (gamma[0], gamma[1], gamma[2]);
    // e = g0 + g1·(σ−μ)/t + g2·((σ−μ)/t)², expanded in powers of σ.
    let beta11 = g2 / (scale * scale);
    let beta1 = g1 / scale - 2.0 * g2 * mean / (scale * scale);
    let beta0 = g0 - g1 * mean / scale + g2 * mean * mean / (scale * scale);
    Ok(QuadFit1D {
        beta0,
        beta1,
        beta11,
    })
}

/// How the tuned shape factor was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    /// Interior minimizer of the convex quadratic fit.
    QuadraticMinimum,
    /// Minimizer fell below the bounds; clipped to `sigma_min`.
    ClippedLow,
    /// Minimizer exceeded the bounds; clipped to `sigma_max`.
    ClippedHigh,
    /// Concave fit or too few usable samples; best sampled value.
    BestSampled,
    /// Every sampled evaluation failed; data-scale default (warning).
    DefaultFallback,
}

/// A tuned shape factor plus the provenance flag for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaChoice {
    pub sigma: f64,
    pub source: SigmaSource,
}

impl SigmaChoice {
    /// True when no sampled LOOCV evaluation succeeded.
    pub fn is_fallback(&self) -> bool {
        self.source == SigmaSource::DefaultFallback
    }
}

/// Core tuning loop over an arbitrary error function `eval(σ)`.
///
/// Samples `cfg.m` uniform shape factors (inclusive of both bounds), drops
/// samples whose evaluation reports a degenerate fold or ill-conditioning,
/// and selects σ as documented on the module. `fallback_sigma` is returned
/// (flagged) when every sample fails.
pub fn optimal_sigma_from<F>(
    cfg: &TunerConfig,
    fallback_sigma: f64,
    mut eval: F,
) -> Result<SigmaChoice>
where
    F: FnMut(f64) -> Result<f64>,
{
    cfg.validate()?;
    if !(fallback_sigma > 0.0) || !fallback_sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "fallback shape factor must be positive and finite, got {fallback_sigma}"
        )));
    }
    let step = (cfg.sigma_max - cfg.sigma_min) / (cfg.m - 1) as f64;
    let mut sigmas = Vec::with_capacity(cfg.m);
    let mut errors = Vec::with_capacity(cfg.m);
    for i in 0..cfg.m {
        let sigma = cfg.sigma_min + i as f64 * step;
        match eval(sigma) {
            Ok(e) => {
                sigmas.push(sigma);
                errors.push(e);
            }
            Err(Error::DegenerateFold) | Err(Error::IllConditioned(_)) => {}
            Err(other) => return Err(other),
        }
    }
    if sigmas.is_empty() {
        return Ok(SigmaChoice {
            sigma: fallback_sigma,
            source: SigmaSource::DefaultFallback,
        });
    }
    let best_sampled = || {
        let mut best = 0;
        for (i, &e) in errors.iter().enumerate().skip(1) {
            if e < errors[best] {
                best = i;
            }
        }
        SigmaChoice {
            sigma: sigmas[best],
            source: SigmaSource::BestSampled,
        }
    };
    if sigmas.len() < 3 {
        return Ok(best_sampled());
    }
    let fit = fit_quadratic(&sigmas, &errors)?;
    match fit.minimizer() {
        None => Ok(best_sampled()),
        Some(s) if s < cfg.sigma_min => Ok(SigmaChoice {
            sigma: cfg.sigma_min,
            source: SigmaSource::ClippedLow,
        }),
        Some(s) if s > cfg.sigma_max => Ok(SigmaChoice {
            sigma: cfg.sigma_max,
            source: SigmaSource::ClippedHigh,
        }),
        Some(s) => Ok(SigmaChoice {
            sigma: s,
            source: SigmaSource::QuadraticMinimum,
        }),
    }
}

/// Tunes the shape factor for a model family on concrete training data,
/// using the data's mean pairwise distance as the total-failure default.
pub fn optimal_sigma(
    points: &[(Vec<f64>, f64)],
    kind: ModelKind,
    cfg: &TunerConfig,
) -> Result<SigmaChoice> {
    let xs: Vec<Vec<f64>> = points.iter().map(|(x, _)| x.clone()).collect();
    let fallback = mean_pairwise_distance(&xs)?;
    optimal_sigma_from(cfg, fallback, |sigma| loocv_error(points, sigma, kind))
}
