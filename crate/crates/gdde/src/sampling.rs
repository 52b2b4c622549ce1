//! Latin hypercube sampling for the initial design.

use crate::error::{Error, Result};
use crate::space::DecisionSpace;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generates `n` feasible vectors by Latin hypercube sampling.
///
/// Per dimension, the `n` samples occupy the `n` equal-width strata of
/// `[lower, upper]` exactly once, with uniform random jitter inside each
/// stratum (midpoints would collapse integer dimensions). Each vector is then
/// passed through [`DecisionSpace::clamp_and_round`], so integer dimensions
/// may lose strict stratification. A pure function of `(space, n, seed)`.
pub fn lhs(space: &DecisionSpace, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "LHS sample count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = space.dims();
    let mut points = vec![vec![0.0; d]; n];
    for dim in 0..d {
        let lo = space.lower()[dim];
        let width = space.range(dim) / n as f64;
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        for (point, stratum) in points.iter_mut().zip(&strata) {
            let jitter: f64 = rng.random();
            point[dim] = lo + (*stratum as f64 + jitter) * width;
        }
    }
    for point in &mut points {
        let repaired = space.clamp_and_round(point)?;
        *point = repaired;
    }
    Ok(points)
}
