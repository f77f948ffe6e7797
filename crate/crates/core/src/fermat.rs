//! Scaled sample Fermat distance on the kNN ∪ MST graph.
//!
//! Raw power-alpha path lengths over the sparse graph are multiplied by
//! `n^((alpha - 1) / (alpha d))`, where `d` is the intrinsic dimension.
//! The percolation constant of the population distance is never needed.

use crate::data::{DistanceMatrix, Grid, SmoothCurve};
use crate::dimension::estimate_intrinsic_dim;
use crate::error::{Error, Result};
use crate::geometry::{l2_to_all, pairwise_l2};
use crate::graph::{union_graph, PowerPaths, SparseGraph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermatConfig {
    pub alpha: f64,
    pub k_graph: usize,
    /// Intrinsic dimension; estimated from the pooled L2 distances if `None`.
    pub d_hat: Option<usize>,
    /// Neighbors used to attach a new curve; defaults to `k_graph`.
    pub k_oos: Option<usize>,
}

impl Default for FermatConfig {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            k_graph: 15,
            d_hat: None,
            k_oos: None,
        }
    }
}

impl FermatConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha = {} must be >= 1", self.alpha)));
        }
        if self.k_graph == 0 {
            return Err(Error::invalid("k_graph must be positive"));
        }
        if self.d_hat == Some(0) {
            return Err(Error::invalid("d_hat must be positive"));
        }
        if self.k_oos == Some(0) {
            return Err(Error::invalid("k_oos must be positive"));
        }
        Ok(())
    }
}

/// `n^((alpha - 1) / (alpha d))`.
pub fn scale_factor(n: usize, alpha: f64, d: usize) -> f64 {
    if alpha == 1.0 {
        1.0
    } else {
        (n as f64).powf((alpha - 1.0) / (alpha * d as f64))
    }
}

/// Fitted estimator over a pooled sample.
#[derive(Debug, Clone)]
pub struct FermatModel {
    pub graph: SparseGraph,
    pub scale: f64,
    /// Scaled Fermat distances between all pooled curves.
    pub distances: DistanceMatrix,
    /// Pairwise L2 distances the graph was built from.
    pub l2: DistanceMatrix,
    pub alpha: f64,
    pub k_graph: usize,
    pub d_hat: usize,
    pub k_oos: usize,
    pub curves: Vec<SmoothCurve>,
    pub grid: Grid,
}

pub fn fit_fermat(curves: &[SmoothCurve], grid: &Grid, cfg: &FermatConfig) -> Result<FermatModel> {
    cfg.validate()?;
    let l2 = pairwise_l2(curves, grid)?;
    fit_fermat_from_l2(l2, curves.to_vec(), grid.clone(), cfg)
}

/// Same as [`fit_fermat`] with precomputed L2 distances.
pub fn fit_fermat_from_l2(
    l2: DistanceMatrix,
    curves: Vec<SmoothCurve>,
    grid: Grid,
    cfg: &FermatConfig,
) -> Result<FermatModel> {
    cfg.validate()?;
    let n = l2.len();
    if n < cfg.k_graph + 1 {
        return Err(Error::TooFewPoints {
            needed: cfg.k_graph + 1,
            got: n,
        });
    }
    let d_hat = match cfg.d_hat {
        Some(d) => d,
        None => estimate_intrinsic_dim(&l2)?,
    };
    let graph = union_graph(&l2, cfg.k_graph)?;
    let raw = PowerPaths::new(&graph, cfg.alpha)?.all_pairs()?;
    let scale = scale_factor(n, cfg.alpha, d_hat);
    let distances = if scale == 1.0 { raw } else { raw.scaled(scale) };
    Ok(FermatModel {
        graph,
        scale,
        distances,
        l2,
        alpha: cfg.alpha,
        k_graph: cfg.k_graph,
        d_hat,
        k_oos: cfg.k_oos.unwrap_or(cfg.k_graph).min(n),
        curves,
        grid,
    })
}

impl FermatModel {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }
}

/// Scaled Fermat distances from a new curve to every pooled curve.
///
/// The graph is kept fixed and the new curve is attached to its `k_oos`
/// nearest pooled curves (L2, ties to the smaller index). A curve that
/// coincides with pooled curve `x` is the same node as `x`, so row `x` of the
/// model is returned.
pub fn fermat_out_of_sample(model: &FermatModel, new_curve: &SmoothCurve) -> Result<Vec<f64>> {
    let to_pool = l2_to_all(new_curve, &model.curves, &model.grid)?;
    if let Some(x) = to_pool.iter().position(|&d| d == 0.0) {
        return Ok(model.distances.row(x).to_vec());
    }
    let mut order: Vec<usize> = (0..to_pool.len()).collect();
    order.sort_by(|&a, &b| to_pool[a].total_cmp(&to_pool[b]).then(a.cmp(&b)));
    let paths = PowerPaths::new(&model.graph, model.alpha)?;
    let seeds: Vec<(usize, f64)> = order[..model.k_oos]
        .iter()
        .map(|&i| {
            let w = to_pool[i];
            (i, if model.alpha == 1.0 { w } else { w.powf(model.alpha) })
        })
        .collect();
    let mut v = paths.power_sums_from_seeds(&seeds)?;
    paths.root_in_place(&mut v);
    if model.scale != 1.0 {
        for x in &mut v {
            *x *= model.scale;
        }
    }
    Ok(v)
}
