//! Two-class probabilistic neural network used to prescreen candidates.
//!
//! Class densities are averages of Gaussian pattern functions. All
//! comparisons run in log space with a log-sum-exp reduction: at high
//! dimension the pattern values underflow f64 (e.g. d > 100 with a wide
//! shape factor), while log densities stay finite.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const LOG_2PI: f64 = 1.8378770664093453;

/// Class label of the two-class network. `One` marks promising candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassLabel {
    One,
    Two,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `(2π)^{−d/2}·σ^{−d}·exp(−‖x−center‖²/(2σ²))`: one pattern-layer neuron.
pub fn pattern_value(x: &[f64], center: &[f64], sigma: f64) -> Result<f64> {
    Ok(log_pattern_value(x, center, sigma)?.exp())
}

/// Natural log of [`pattern_value`]; finite for all finite inputs.
pub fn log_pattern_value(x: &[f64], center: &[f64], sigma: f64) -> Result<f64> {
    if x.len() != center.len() {
        return Err(Error::DimensionMismatch {
            expected: center.len(),
            got: x.len(),
        });
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "PNN shape factor must be positive and finite, got {sigma}"
        )));
    }
    let d = x.len() as f64;
    Ok(-0.5 * d * LOG_2PI - d * sigma.ln() - squared_distance(x, center) / (2.0 * sigma * sigma))
}

/// `log(Σ exp(vᵢ))` without overflow/underflow.
fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// A trained two-class PNN: the training points of each class plus one
/// shared shape factor.
#[derive(Debug, Clone)]
pub struct PnnModel {
    class1: Vec<Vec<f64>>,
    class2: Vec<Vec<f64>>,
    sigma: f64,
    dims: usize,
}

impl PnnModel {
    /// Trains (stores) the network. Both classes must be nonempty and share
    /// one dimensionality; `sigma` must be positive.
    pub fn train(class1: Vec<Vec<f64>>, class2: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        if class1.is_empty() || class2.is_empty() {
            return Err(Error::InvalidArgument(
                "both PNN classes need at least one training point".into(),
            ));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "PNN shape factor must be positive and finite, got {sigma}"
            )));
        }
        let dims = class1[0].len();
        if dims == 0 {
            return Err(Error::InvalidArgument(
                "PNN training points must have at least one dimension".into(),
            ));
        }
        for p in class1.iter().chain(&class2) {
            if p.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    got: p.len(),
                });
            }
        }
        Ok(Self {
            class1,
            class2,
            sigma,
            dims,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn class_points(&self, label: ClassLabel) -> &[Vec<f64>] {
        match label {
            ClassLabel::One => &self.class1,
            ClassLabel::Two => &self.class2,
        }
    }

    /// Natural log of the class density `pᵢ(x)`.
    pub fn log_class_density(&self, x: &[f64], label: ClassLabel) -> Result<f64> {
        let points = self.class_points(label);
        let mut terms = Vec::with_capacity(points.len());
        for c in points {
            terms.push(log_pattern_value(x, c, self.sigma)?);
        }
        Ok(log_sum_exp(&terms) - (points.len() as f64).ln())
    }

    /// See [`classify`].
    pub fn classify(&self, x: &[f64]) -> Result<ClassLabel> {
        classify(self, x)
    }
}

/// Average pattern value of one class: `pᵢ(x) = (1/Nᵢ)·Σⱼ pattern(x, xᵢⱼ)`.
///
/// May underflow to zero at very high dimension; comparisons should use
/// [`PnnModel::log_class_density`] instead.
pub fn class_density(model: &PnnModel, x: &[f64], label: ClassLabel) -> Result<f64> {
    Ok(model.log_class_density(x, label)?.exp())
}

/// The class with the larger density at `x`; an exact tie yields class 2
/// (not promising), biasing the prescreen toward fewer false positives.
pub fn classify(model: &PnnModel, x: &[f64]) -> Result<ClassLabel> {
    let log_p1 = model.log_class_density(x, ClassLabel::One)?;
    let log_p2 = model.log_class_density(x, ClassLabel::Two)?;
    Ok(if log_p1 > log_p2 {
        ClassLabel::One
    } else {
        ClassLabel::Two
    })
}

/// Leave-one-out misclassification count over a labeled training set.
///
/// Each fold retrains on all points but one — realized by excluding the
/// held-out point's pattern term, which is exactly equivalent — and both
/// classes must survive every deletion, so each needs at least 2 points.
/// With class labels encoded 1 ↦ 1.0 and 2 ↦ 0.0, the squared prediction
/// error of a fold is 0 or 1, so the total equals the misclassification
/// count.
pub fn loocv_misclassifications(
    class1: &[Vec<f64>],
    class2: &[Vec<f64>],
    sigma: f64,
) -> Result<usize> {
    if class1.len() < 2 || class2.len() < 2 {
        return Err(Error::DegenerateFold);
    }
    let full = PnnModel::train(class1.to_vec(), class2.to_vec(), sigma)?;
    let mut errors = 0usize;
    for (true_label, points, other_label) in [
        (ClassLabel::One, class1, ClassLabel::Two),
        (ClassLabel::Two, class2, ClassLabel::One),
    ] {
        for (i, x) in points.iter().enumerate() {
            let mut own_terms = Vec::with_capacity(points.len() - 1);
            for (j, c) in points.iter().enumerate() {
                if j != i {
                    own_terms.push(log_pattern_value(x, c, sigma)?);
                }
            }
            let log_own = log_sum_exp(&own_terms) - ((points.len() - 1) as f64).ln();
            let log_other = full.log_class_density(x, other_label)?;
            let (log_p1, log_p2) = match true_label {
                ClassLabel::One => (log_own, log_other),
                ClassLabel::Two => (log_other, log_own),
            };
            let predicted = if log_p1 > log_p2 {
                ClassLabel::One
            } else {
                ClassLabel::Two
            };
            if predicted != true_label {
                errors += 1;
            }
        }
    }
    Ok(errors)
}
