//! Decision spaces: per-variable bounds and kinds, bound repair, duplicates.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Two vectors are considered the same point when their max-abs coordinate
/// difference is at most this, measured after bound repair. Exact match on
/// integer problems, robust against round-off on continuous ones.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// The kind of a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    /// Takes only whole-number values within its bounds (well indices).
    Integer,
    /// Takes any real value within its bounds (well controls).
    Continuous,
}

/// A box-bounded mixed-integer decision space.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
    kinds: Vec<VariableKind>,
}

impl DecisionSpace {
    /// Builds a space, validating `lower[i] <= upper[i]`, finite bounds and
    /// matching lengths.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, kinds: Vec<VariableKind>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != kinds.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len().max(kinds.len()),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidArgument(
                "space must have at least 1 dimension".into(),
            ));
        }
        for i in 0..lower.len() {
            if !lower[i].is_finite() || !upper[i].is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "bounds of dimension {i} must be finite"
                )));
            }
            if lower[i] > upper[i] {
                return Err(Error::InvalidArgument(format!(
                    "lower bound {} exceeds upper bound {} in dimension {i}",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(Self {
            lower,
            upper,
            kinds,
        })
    }

    /// All-continuous convenience constructor.
    pub fn continuous(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let kinds = vec![VariableKind::Continuous; lower.len()];
        Self::new(lower, upper, kinds)
    }

    /// Uniform box `[lo, hi]^d` of continuous variables.
    pub fn uniform_box(lo: f64, hi: f64, dims: usize) -> Result<Self> {
        Self::continuous(vec![lo; dims], vec![hi; dims])
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn kinds(&self) -> &[VariableKind] {
        &self.kinds
    }

    /// Width `upper[i] - lower[i]` of dimension `i`.
    pub fn range(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// Repairs a raw vector onto the feasible set: integer coordinates are
    /// rounded to the nearest whole number (ties to even) first, then every
    /// coordinate is clipped into `[lower[i], upper[i]]`.
    ///
    /// Idempotent: repairing a repaired vector changes nothing.
    pub fn clamp_and_round(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: x.len(),
            });
        }
        let mut out = Vec::with_capacity(x.len());
        for (i, &xi) in x.iter().enumerate() {
            let v = match self.kinds[i] {
                VariableKind::Integer => xi.round_ties_even(),
                VariableKind::Continuous => xi,
            };
            out.push(v.clamp(self.lower[i], self.upper[i]));
        }
        Ok(out)
    }

    /// Whether `x` already lies on the feasible set (bounds and integrality).
    pub fn is_feasible(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x.iter().enumerate().all(|(i, &v)| {
                v >= self.lower[i]
                    && v <= self.upper[i]
                    && (self.kinds[i] == VariableKind::Continuous || v.fract() == 0.0)
            })
    }

    /// Draws one uniform feasible point (each coordinate uniform in its bounds,
    /// then repaired).
    pub fn sample_uniform<R: rand::Rng>(&self, rng: &mut R) -> Vec<f64> {
        use rand::RngExt;
        let raw: Vec<f64> = (0..self.dims())
            .map(|i| {
                if self.lower[i] == self.upper[i] {
                    self.lower[i]
                } else {
                    rng.random_range(self.lower[i]..self.upper[i])
                }
            })
            .collect();
        self.clamp_and_round(&raw)
            .expect("raw sample has the right length")
    }
}

/// Duplicate predicate: max-abs coordinate difference at most
/// [`DUPLICATE_TOLERANCE`]. Both inputs are expected to be repaired already.
pub fn is_duplicate(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(&x, &y)| (x - y).abs() <= DUPLICATE_TOLERANCE)
}

/// Euclidean distance between two equal-length vectors.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mixed_space() -> DecisionSpace {
        DecisionSpace::new(
            vec![1.0, 0.0],
            vec![5.0, 5.0],
            vec![VariableKind::Integer, VariableKind::Continuous],
        )
        .unwrap()
    }

    #[test]
    fn round_and_clip_forced() {
        let space = mixed_space();
        let out = space.clamp_and_round(&[1.4, 7.0]).unwrap();
        assert_eq!(out, vec![1.0, 5.0]);
    }

    #[test]
    fn feasible_vector_unchanged() {
        let space = mixed_space();
        let out = space.clamp_and_round(&[3.0, 2.5]).unwrap();
        assert_eq!(out, vec![3.0, 2.5]);
    }

    #[test]
    fn round_happens_before_clip() {
        let space = DecisionSpace::new(
            vec![1.0, 0.0],
            vec![10.0, 1.0],
            vec![VariableKind::Integer, VariableKind::Continuous],
        )
        .unwrap();
        let out = space.clamp_and_round(&[0.5, -3.2]).unwrap();
        // 0.5 rounds to 0 (ties to even), then clips up to the bound 1.
        assert_eq!(out, vec![1.0, 0.0]);
    }

    #[test]
    fn ties_round_to_even() {
        let space = DecisionSpace::new(
            vec![-10.0; 4],
            vec![10.0; 4],
            vec![VariableKind::Integer; 4],
        )
        .unwrap();
        let out = space.clamp_and_round(&[0.5, 1.5, 2.5, -1.5]).unwrap();
        assert_eq!(out, vec![0.0, 2.0, 2.0, -2.0]);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let space = mixed_space();
        assert!(matches!(
            space.clamp_and_round(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn invalid_bounds_rejected() {
        let err = DecisionSpace::continuous(vec![1.0], vec![0.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn duplicate_predicate_exact_and_tolerant() {
        assert!(is_duplicate(&[1.0, 2.0], &[1.0, 2.0]));
        assert!(is_duplicate(&[1.0], &[1.0 + 5e-13]));
        assert!(!is_duplicate(&[1.0], &[1.0 + 1e-11]));
        assert!(!is_duplicate(&[1.0], &[1.0, 2.0]));
    }

    #[test]
    fn euclidean_matches_hand_value() {
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
    }

    proptest! {
        #[test]
        fn clamp_and_round_is_idempotent_and_feasible(
            raw in proptest::collection::vec(-1e3..1e3f64, 6),
            int_mask in proptest::collection::vec(any::<bool>(), 6),
        ) {
            let kinds: Vec<VariableKind> = int_mask
                .iter()
                .map(|&b| if b { VariableKind::Integer } else { VariableKind::Continuous })
                .collect();
            let space = DecisionSpace::new(vec![-50.0; 6], vec![50.0; 6], kinds).unwrap();
            let once = space.clamp_and_round(&raw).unwrap();
            let twice = space.clamp_and_round(&once).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(space.is_feasible(&once));
        }
    }
}
