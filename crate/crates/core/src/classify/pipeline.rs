//! End-to-end semi-supervised classification: smoothing, L2 geometry, the
//! scaled Fermat estimator on the pooled sample, then a classifier trained on
//! the labeled prefix and applied to the unlabeled suffix.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::classify::mds::{mds_embed, TargetDim};
use crate::classify::svm::{balanced_class_weights, median_heuristic, svm_predict, svm_train_ovr, Kernel, SvmConfig};
use crate::classify::wknn::{default_sigma_grid, loocv_sigma, wknn_vote, SigmaSelection, WknnConfig};
use crate::data::{Dataset, DistanceMatrix, Grid, SmoothCurve};
use crate::error::{Error, Result};
use crate::fermat::{fit_fermat_from_l2, FermatConfig};
use crate::geometry::pairwise_l2;
use crate::smoothing::{smooth_dataset_with_bandwidths, SmootherConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Weighted kNN on Fermat distances.
    FdWknn,
    /// Linear SVM on an MDS embedding keeping every positive eigenvalue.
    FdSvmHigh,
    /// Gaussian SVM on an MDS embedding of dimension `d_hat`.
    FdGsvmLow,
    /// Unweighted kNN on L2 distances of the labeled sample only.
    NaiveKnn,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::FdWknn, Method::FdSvmHigh, Method::FdGsvmLow, Method::NaiveKnn];

    pub fn name(self) -> &'static str {
        match self {
            Method::FdWknn => "fd-wknn",
            Method::FdSvmHigh => "fd-svm-high",
            Method::FdGsvmLow => "fd-gsvm-low",
            Method::NaiveKnn => "naive-knn",
        }
    }

    /// 2 for the kNN pipeline, 4 for the SVM pipelines.
    pub fn default_alpha(self) -> f64 {
        match self {
            Method::FdWknn | Method::NaiveKnn => 2.0,
            Method::FdSvmHigh | Method::FdGsvmLow => 4.0,
        }
    }

    pub fn uses_fermat(self) -> bool {
        !matches!(self, Method::NaiveKnn)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub method: Method,
    pub fermat: FermatConfig,
    pub wknn: WknnConfig,
    pub smoother: SmootherConfig,
    /// Evaluation grid size; derived from the sampling rates when `None`.
    pub grid_size: Option<usize>,
    pub svm: SvmConfig,
    /// Overrides the method's MDS target dimension.
    pub target_dim: Option<TargetDim>,
    /// Weight SVM samples by `1 / (M pi_k)`.
    pub balance_classes: bool,
}

impl PipelineConfig {
    /// Defaults for `method`, including its default alpha.
    pub fn new(method: Method) -> Self {
        Self {
            method,
            fermat: FermatConfig::with_alpha(method.default_alpha()),
            wknn: WknnConfig::default(),
            smoother: SmootherConfig::default(),
            grid_size: None,
            svm: SvmConfig::default(),
            target_dim: None,
            balance_classes: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub grid_size: usize,
    /// Smoothing bandwidths, one per curve (empty when smoothing was skipped).
    pub bandwidths: Vec<f64>,
    pub k: usize,
    pub sigma: Option<SigmaSelection>,
    pub d_hat: Option<usize>,
    pub scale: Option<f64>,
    pub alpha: Option<f64>,
    /// MDS target dimension actually used.
    pub p: Option<usize>,
    /// Retained MDS eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Count of MDS eigenvalues at or below zero.
    pub negative_eigenvalues: usize,
    pub svm_bandwidth: Option<f64>,
    pub svm_converged: Option<bool>,
    pub timings: Vec<StageTiming>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Predicted class per unlabeled curve, in dataset order.
    pub predictions: Vec<usize>,
    /// Neighbor-weight entropies (weighted kNN only).
    pub weight_entropies: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

fn timed<T>(diag: &mut Diagnostics, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(stage));
    diag.timings.push(StageTiming {
        stage,
        seconds: start.elapsed().as_secs_f64(),
    });
    out
}

/// Runs the full pipeline on raw curves.
pub fn classify_pipeline(dataset: &Dataset, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let mut diag = Diagnostics::default();
    let m = cfg.grid_size.unwrap_or_else(|| Grid::default_size(dataset.curves()));
    let grid = Grid::new(m).map_err(|e| e.in_stage("grid"))?;
    let (curves, bandwidths) = timed(&mut diag, "smoothing", || {
        smooth_dataset_with_bandwidths(dataset.curves(), &grid, &cfg.smoother)
    })?;
    diag.bandwidths = bandwidths;
    let l2 = timed(&mut diag, "geometry", || pairwise_l2(&curves, &grid))?;
    classify_with(diag, &l2, &curves, &grid, &dataset.labeled_classes(), dataset.n_classes(), cfg)
}

/// Runs everything after smoothing, given precomputed pooled L2 distances.
///
/// `labels` covers the labeled prefix of `curves`.
pub fn classify_from_l2(
    l2: &DistanceMatrix,
    curves: &[SmoothCurve],
    grid: &Grid,
    labels: &[usize],
    n_classes: usize,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    classify_with(Diagnostics::default(), l2, curves, grid, labels, n_classes, cfg)
}

fn classify_with(
    mut diag: Diagnostics,
    l2: &DistanceMatrix,
    curves: &[SmoothCurve],
    grid: &Grid,
    labels: &[usize],
    n_classes: usize,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    diag.grid_size = grid.len();
    let n = l2.len();
    let n_l = labels.len();
    if curves.len() != n {
        return Err(Error::invalid("curve count does not match distance matrix"));
    }
    if n_l == 0 {
        return Err(Error::invalid("no labeled curves").in_stage("input"));
    }
    if n_l > n {
        return Err(Error::invalid("more labels than curves").in_stage("input"));
    }
    if let Some(bad) = labels.iter().find(|&&c| c >= n_classes) {
        return Err(Error::invalid(format!("label {bad} out of range")).in_stage("input"));
    }
    let k = cfg.wknn.resolve_k(n_l).map_err(|e| e.in_stage("input"))?;
    diag.k = k;

    if cfg.method == Method::NaiveKnn {
        let preds = timed(&mut diag, "prediction", || {
            (n_l..n)
                .map(|u| wknn_vote(&l2.row(u)[..n_l], labels, k, f64::INFINITY).map(|v| v.class))
                .collect::<Result<Vec<_>>>()
        })?;
        return Ok(PipelineOutput {
            predictions: preds,
            weight_entropies: None,
            diagnostics: diag,
        });
    }

    let model = timed(&mut diag, "fermat", || {
        fit_fermat_from_l2(l2.clone(), curves.to_vec(), grid.clone(), &cfg.fermat)
    })?;
    diag.d_hat = Some(model.d_hat);
    diag.scale = Some(model.scale);
    diag.alpha = Some(model.alpha);
    let fermat = &model.distances;

    match cfg.method {
        Method::FdWknn => {
            let labeled_idx: Vec<usize> = (0..n_l).collect();
            let (sigma, selection) = timed(&mut diag, "tuning", || {
                if let Some(s) = cfg.wknn.sigma {
                    return Ok((s, None));
                }
                if n_l < k + 1 {
                    return Ok((f64::INFINITY, None));
                }
                let sub = fermat.submatrix(&labeled_idx);
                let grid_vals = match &cfg.wknn.sigma_grid {
                    Some(g) => g.clone(),
                    None => default_sigma_grid(&sub, k),
                };
                let sel = loocv_sigma(&sub, labels, k, &grid_vals)?;
                Ok((sel.sigma, Some(sel)))
            })?;
            diag.sigma = selection;
            if sigma.is_infinite() {
                diag.warnings
                    .push(format!("only {n_l} labeled curves for k = {k}; using unweighted votes"));
            }
            if diag.sigma.as_ref().is_some_and(|s| s.degenerate) {
                diag.warnings.push("all labeled curves share one class".into());
            }
            let votes = timed(&mut diag, "prediction", || {
                (n_l..n)
                    .map(|u| wknn_vote(&fermat.row(u)[..n_l], labels, k, sigma))
                    .collect::<Result<Vec<_>>>()
            })?;
            Ok(PipelineOutput {
                predictions: votes.iter().map(|v| v.class).collect(),
                weight_entropies: Some(votes.iter().map(|v| v.weight_entropy()).collect()),
                diagnostics: diag,
            })
        }
        Method::FdSvmHigh | Method::FdGsvmLow => {
            let target = cfg.target_dim.unwrap_or(match cfg.method {
                Method::FdSvmHigh => TargetDim::Auto,
                _ => TargetDim::Fixed(model.d_hat.min(n.saturating_sub(1)).max(1)),
            });
            if let TargetDim::Fixed(p) = target {
                if p < model.d_hat {
                    diag.warnings.push(format!(
                        "target dimension {p} is below the estimated intrinsic dimension {}",
                        model.d_hat
                    ));
                }
            }
            let emb = timed(&mut diag, "embedding", || mds_embed(fermat, target))?;
            diag.p = Some(emb.p);
            diag.eigenvalues = emb.eigenvalues.clone();
            diag.negative_eigenvalues = emb.spectrum.iter().filter(|&&l| l <= 0.0).count();
            if emb.p == 0 {
                return Err(Error::Structural("embedding has no positive eigenvalues".into()).in_stage("embedding"));
            }

            // train on the classes actually present among the labels
            let mut present: Vec<usize> = labels.to_vec();
            present.sort_unstable();
            present.dedup();
            if present.len() < n_classes {
                diag.warnings
                    .push(format!("{} of {n_classes} classes have labeled curves", present.len()));
            }
            if present.len() == 1 {
                return Ok(PipelineOutput {
                    predictions: vec![present[0]; n - n_l],
                    weight_entropies: None,
                    diagnostics: diag,
                });
            }
            let compact: Vec<usize> = labels
                .iter()
                .map(|c| present.binary_search(c).expect("present class"))
                .collect();
            let x_train = emb.rows(0..n_l);
            let kernel = match cfg.method {
                Method::FdSvmHigh => Kernel::Linear,
                _ => Kernel::Gaussian {
                    bandwidth: median_heuristic(&x_train),
                },
            };
            if let Kernel::Gaussian { bandwidth } = kernel {
                diag.svm_bandwidth = Some(bandwidth);
            }
            let svm = timed(&mut diag, "training", || {
                let weights = if cfg.balance_classes {
                    balanced_class_weights(&compact, present.len())?
                } else {
                    vec![1.0; present.len()]
                };
                svm_train_ovr(&x_train, &compact, present.len(), kernel, &weights, &cfg.svm)
            })?;
            diag.svm_converged = Some(svm.all_converged());
            if !svm.all_converged() {
                diag.warnings.push("SVM solver hit its iteration cap".into());
            }
            let preds = timed(&mut diag, "prediction", || {
                (n_l..n)
                    .map(|u| svm_predict(&svm, emb.point(u)).map(|c| present[c]))
                    .collect::<Result<Vec<_>>>()
            })?;
            Ok(PipelineOutput {
                predictions: preds,
                weight_entropies: None,
                diagnostics: diag,
            })
        }
        Method::NaiveKnn => unreachable!("handled above"),
    }
}
