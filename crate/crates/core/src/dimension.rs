//! Two-nearest-neighbor maximum-likelihood intrinsic dimension estimate.

use crate::data::DistanceMatrix;
use crate::error::{Error, Result};

/// Minimum sample size accepted by [`estimate_intrinsic_dim`].
pub const MIN_POINTS: usize = 20;

/// Continuous two-NN estimate `n / sum_i log(r2(i) / r1(i))` after dropping
/// exact duplicates (the first copy of each point is kept).
pub fn two_nn_dimension(dist: &DistanceMatrix) -> Result<f64> {
    let n = dist.len();
    if n < MIN_POINTS {
        return Err(Error::TooFewPoints { needed: MIN_POINTS, got: n });
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&i| (0..i).all(|j| dist.get(i, j) > 0.0))
        .collect();
    if keep.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: keep.len() });
    }
    let mut log_sum = 0.0;
    for &i in &keep {
        let (mut r1, mut r2) = (f64::INFINITY, f64::INFINITY);
        for &j in &keep {
            if j == i {
                continue;
            }
            let d = dist.get(i, j);
            if d < r1 {
                r2 = r1;
                r1 = d;
            } else if d < r2 {
                r2 = d;
            }
        }
        log_sum += (r2 / r1).ln();
    }
    if !(log_sum > 0.0) {
        return Err(Error::invalid("degenerate neighbor ratios; dimension undefined"));
    }
    Ok(keep.len() as f64 / log_sum)
}

/// Integer intrinsic dimension (rounded two-NN estimate, at least 1).
pub fn estimate_intrinsic_dim(dist: &DistanceMatrix) -> Result<usize> {
    let d = two_nn_dimension(dist)?;
    Ok((d.round() as usize).max(1))
}
