//! Classical multidimensional scaling.
//!
//! `B = -1/2 J D^2 J` is eigendecomposed and the top eigenpairs give
//! coordinates `V Lambda^(1/2)`. Negative eigenvalues (non-Euclidean input)
//! are dropped.

use faer::{Mat, Side};

use crate::data::DistanceMatrix;
use crate::error::{Error, Result};

/// Relative eigenvalue cutoff: eigenvalues at or below `EIG_TOL * lambda_max`
/// are treated as zero.
pub const EIG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetDim {
    Fixed(usize),
    /// Keep every eigenvalue above tolerance.
    Auto,
}

#[derive(Debug, Clone)]
pub struct MdsEmbedding {
    pub p: usize,
    /// Row-major `n x p` coordinates.
    pub coords: Vec<f64>,
    /// Retained eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Full spectrum of `B`, non-increasing.
    pub spectrum: Vec<f64>,
}

impl MdsEmbedding {
    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.p).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self, idx: impl IntoIterator<Item = usize>) -> Vec<Vec<f64>> {
        idx.into_iter().map(|i| self.point(i).to_vec()).collect()
    }

    /// Euclidean distance between embedded points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Double-centered Gram matrix `-1/2 J D^2 J`.
pub fn double_center(dist: &DistanceMatrix) -> Mat<f64> {
    let n = dist.len();
    let sq = |i: usize, j: usize| {
        let d = dist.get(i, j);
        d * d
    };
    let row_means: Vec<f64> = (0..n)
        .map(|i| dist.row(i).iter().map(|d| d * d).sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    Mat::from_fn(n, n, |i, j| -0.5 * (sq(i, j) - row_means[i] - row_means[j] + grand))
}

pub fn mds_embed(dist: &DistanceMatrix, p: TargetDim) -> Result<MdsEmbedding> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::invalid("empty distance matrix"));
    }
    if let TargetDim::Fixed(q) = p {
        if q == 0 || q > n.saturating_sub(1).max(1) {
            return Err(Error::invalid(format!("target dimension {q} must lie in [1, {}]", n.saturating_sub(1).max(1))));
        }
    }
    let b = double_center(dist);
    let eig = b
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Structural(format!("eigendecomposition failed: {e:?}")))?;
    let s = eig.S();
    let u = eig.U();
    // faer returns eigenvalues in ascending order
    let order: Vec<usize> = (0..n).rev().collect();
    let spectrum: Vec<f64> = order.iter().map(|&k| s[k]).collect();
    let top = spectrum.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = EIG_TOL * top;
    let positive = spectrum.iter().take_while(|&&l| l > cutoff && l > 0.0).count();
    let keep = match p {
        TargetDim::Auto => positive,
        TargetDim::Fixed(q) => q.min(positive),
    };

    let mut coords = vec![0.0; n * keep];
    for (axis, &k) in order[..keep].iter().enumerate() {
        let root = s[k].sqrt();
        for i in 0..n {
            coords[i * keep + axis] = u[(i, k)] * root;
        }
    }
    Ok(MdsEmbedding {
        p: keep,
        coords,
        eigenvalues: spectrum[..keep].to_vec(),
        spectrum,
    })
}
