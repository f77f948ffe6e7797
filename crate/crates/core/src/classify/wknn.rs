//! Softmax-weighted k-nearest-neighbor vote and leave-one-out tuning of the
//! weight temperature `sigma`.

use crate::data::DistanceMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WknnConfig {
    /// Neighbor count; `round(n_labeled / n0)` when `None`.
    pub k: Option<usize>,
    pub n0: usize,
    /// Fixed temperature; chosen by leave-one-out when `None`.
    pub sigma: Option<f64>,
    /// Candidate temperatures; derived from the labeled distances when `None`.
    pub sigma_grid: Option<Vec<f64>>,
}

impl Default for WknnConfig {
    fn default() -> Self {
        Self {
            k: None,
            n0: 5,
            sigma: None,
            sigma_grid: None,
        }
    }
}

impl WknnConfig {
    pub fn resolve_k(&self, n_labeled: usize) -> Result<usize> {
        let k = match self.k {
            Some(k) => k,
            None => {
                if self.n0 == 0 {
                    return Err(Error::invalid("n0 must be positive"));
                }
                ((n_labeled as f64 / self.n0 as f64).round() as usize).max(1)
            }
        };
        if k == 0 || k > n_labeled {
            return Err(Error::invalid(format!("k = {k} must lie in [1, {n_labeled}]")));
        }
        Ok(k)
    }
}

/// Indices of the `k` smallest entries, nearest first, ties to the smaller index.
pub(crate) fn nearest(dists: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dists.len()).collect();
    let cmp = |a: &usize, b: &usize| dists[*a].total_cmp(&dists[*b]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    idx
}

/// Softmax weights `exp(-d/sigma)` over the given neighbor distances.
/// An infinite `sigma` gives equal weights.
pub fn softmax_weights(neighbor_dists: &[f64], sigma: f64) -> Vec<f64> {
    let k = neighbor_dists.len();
    if sigma.is_infinite() {
        return vec![1.0 / k as f64; k];
    }
    let dmin = neighbor_dists.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = neighbor_dists.iter().map(|d| (-(d - dmin) / sigma).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Weighted vote over classes; ties go to the smallest class index.
fn vote(neighbors: &[usize], weights: &[f64], labels: &[usize]) -> usize {
    let n_classes = neighbors.iter().map(|&i| labels[i] + 1).max().unwrap_or(1);
    let mut score = vec![0.0; n_classes];
    for (&i, &w) in neighbors.iter().zip(weights) {
        score[labels[i]] += w;
    }
    let mut best = 0;
    for c in 1..n_classes {
        if score[c] > score[best] {
            best = c;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct WknnVote {
    pub class: usize,
    /// Labeled indices of the `k` neighbors, nearest first.
    pub neighbors: Vec<usize>,
    pub weights: Vec<f64>,
}

impl WknnVote {
    /// Shannon entropy of the neighbor weights (nats).
    pub fn weight_entropy(&self) -> f64 {
        self.weights
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| -w * w.ln())
            .sum()
    }
}

fn check_inputs(dists: &[f64], labels: &[usize], k: usize, sigma: f64) -> Result<()> {
    if dists.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} distances but {} labels",
            dists.len(),
            labels.len()
        )));
    }
    if k == 0 || k > dists.len() {
        return Err(Error::invalid(format!("k = {k} must lie in [1, {}]", dists.len())));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma = {sigma} must be positive")));
    }
    if dists.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::invalid("distances must be finite and nonnegative"));
    }
    Ok(())
}

pub fn wknn_vote(dists: &[f64], labels: &[usize], k: usize, sigma: f64) -> Result<WknnVote> {
    check_inputs(dists, labels, k, sigma)?;
    let neighbors = nearest(dists, k);
    let nd: Vec<f64> = neighbors.iter().map(|&i| dists[i]).collect();
    let weights = softmax_weights(&nd, sigma);
    Ok(WknnVote {
        class: vote(&neighbors, &weights, labels),
        neighbors,
        weights,
    })
}

/// Predicted class for a target given its distances to the labeled sample.
pub fn wknn_predict(dists: &[f64], labels: &[usize], k: usize, sigma: f64) -> Result<usize> {
    Ok(wknn_vote(dists, labels, k, sigma)?.class)
}

/// Geometric grid of 15 values from 0.1x to 10x the median distance of each
/// labeled point to its k-th nearest labeled neighbor.
pub fn default_sigma_grid(labeled: &DistanceMatrix, k: usize) -> Vec<f64> {
    let n = labeled.len();
    let mut kth: Vec<f64> = (0..n)
        .filter_map(|i| {
            let others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| labeled.get(i, j)).collect();
            if others.is_empty() {
                return None;
            }
            let kk = k.min(others.len());
            let nb = nearest(&others, kk);
            Some(others[nb[kk - 1]])
        })
        .collect();
    kth.sort_by(f64::total_cmp);
    let mut median = if kth.is_empty() {
        0.0
    } else if kth.len() % 2 == 1 {
        kth[kth.len() / 2]
    } else {
        0.5 * (kth[kth.len() / 2 - 1] + kth[kth.len() / 2])
    };
    if !(median > 0.0) {
        let positive: Vec<f64> = labeled.as_slice().iter().copied().filter(|&d| d > 0.0).collect();
        median = if positive.is_empty() {
            1.0
        } else {
            positive.iter().sum::<f64>() / positive.len() as f64
        };
    }
    (0..15)
        .map(|i| median * 10f64.powf(-1.0 + 2.0 * i as f64 / 14.0))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSelection {
    pub sigma: f64,
    /// Leave-one-out accuracy at the chosen sigma.
    pub accuracy: f64,
    /// Accuracy for every grid value, in grid order.
    pub accuracies: Vec<f64>,
    /// Set when every labeled point shares one class.
    pub degenerate: bool,
}

/// Picks the grid value with the best leave-one-out accuracy on the labeled
/// sample; ties go to the smallest sigma.
pub fn loocv_sigma(labeled: &DistanceMatrix, labels: &[usize], k: usize, grid: &[f64]) -> Result<SigmaSelection> {
    let n = labeled.len();
    if labels.len() != n {
        return Err(Error::invalid("label count does not match distance matrix"));
    }
    if grid.is_empty() || grid.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::invalid("sigma grid must be nonempty and positive"));
    }
    if n < k + 1 {
        return Err(Error::TooFewPoints { needed: k + 1, got: n });
    }
    let smallest = grid.iter().copied().fold(f64::INFINITY, f64::min);
    if labels.iter().all(|&c| c == labels[0]) {
        return Ok(SigmaSelection {
            sigma: smallest,
            accuracy: 1.0,
            accuracies: vec![1.0; grid.len()],
            degenerate: true,
        });
    }

    // each fold's neighbor set does not depend on sigma
    let folds: Vec<(Vec<usize>, Vec<f64>)> = (0..n)
        .map(|i| {
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let d: Vec<f64> = others.iter().map(|&j| labeled.get(i, j)).collect();
            let nb = nearest(&d, k);
            let dist = nb.iter().map(|&p| d[p]).collect();
            (nb.into_iter().map(|p| others[p]).collect(), dist)
        })
        .collect();

    let accuracies: Vec<f64> = grid
        .iter()
        .map(|&sigma| {
            let hits = folds
                .iter()
                .enumerate()
                .filter(|(i, (nb, d))| vote(nb, &softmax_weights(d, sigma), labels) == labels[*i])
                .count();
            hits as f64 / n as f64
        })
        .collect();

    let mut best: Option<(f64, f64)> = None;
    for (&sigma, &acc) in grid.iter().zip(&accuracies) {
        best = match best {
            Some((bs, ba)) if acc < ba || (acc == ba && sigma >= bs) => Some((bs, ba)),
            _ => Some((sigma, acc)),
        };
    }
    let (sigma, accuracy) = best.expect("grid is nonempty");
    Ok(SigmaSelection {
        sigma,
        accuracy,
        accuracies,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn k_one_takes_nearest_label() {
        assert_eq!(wknn_predict(&[0.5, 0.2, 0.9], &[0, 1, 0], 1, 1.0).unwrap(), 1);
    }

    #[test]
    fn huge_sigma_is_majority_vote() {
        let d = [0.1, 0.2, 0.05, 5.0];
        let l = [0, 0, 1, 1];
        assert_eq!(wknn_predict(&d, &l, 3, 1e12).unwrap(), 0);
        assert_eq!(wknn_predict(&d, &l, 3, f64::INFINITY).unwrap(), 0);
    }

    #[test]
    fn softmax_hand_example() {
        let v = wknn_vote(&[0.1, 0.2], &[1, 0], 2, 0.1).unwrap();
        let e1 = (-1.0f64).exp();
        let e2 = (-2.0f64).exp();
        assert!((v.weights[0] - e1 / (e1 + e2)).abs() < 1e-12);
        assert!((v.weights[0] - 0.7311).abs() < 1e-4);
        assert!((v.weights[1] - 0.2689).abs() < 1e-4);
        assert_eq!(v.class, 1);
    }

    #[test]
    fn equal_distances_reduce_to_majority_and_tie_to_smallest_class() {
        assert_eq!(wknn_predict(&[1.0, 1.0, 1.0], &[2, 1, 2], 3, 0.3).unwrap(), 2);
        assert_eq!(wknn_predict(&[1.0, 1.0], &[1, 0], 2, 0.3).unwrap(), 0);
    }

    #[test]
    fn rejects_bad_k() {
        assert!(wknn_predict(&[1.0, 2.0], &[0, 1], 3, 1.0).is_err());
        assert!(wknn_predict(&[1.0, 2.0], &[0, 1], 0, 1.0).is_err());
        assert!(wknn_predict(&[1.0, f64::NAN], &[0, 1], 1, 1.0).is_err());
    }

    #[test]
    fn resolve_k_rounds() {
        let c = WknnConfig::default();
        assert_eq!(c.resolve_k(60).unwrap(), 12);
        assert_eq!(c.resolve_k(22).unwrap(), 4);
        assert_eq!(c.resolve_k(23).unwrap(), 5);
        assert_eq!(c.resolve_k(2).unwrap(), 1);
        let ten = WknnConfig { n0: 10, ..WknnConfig::default() };
        assert_eq!(ten.resolve_k(575).unwrap(), 58);
    }

    fn line(points: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_upper(points.len(), |i, j| (points[i] - points[j]).abs()).unwrap()
    }

    #[test]
    fn separated_clusters_pick_smallest_sigma() {
        let d = line(&[0.0, 0.1, 0.2, 0.3, 10.0, 10.1, 10.2, 10.3]);
        let labels = [0, 0, 0, 0, 1, 1, 1, 1];
        let grid = default_sigma_grid(&d, 2);
        let sel = loocv_sigma(&d, &labels, 2, &grid).unwrap();
        assert_eq!(sel.accuracy, 1.0);
        assert_eq!(sel.sigma, grid[0]);
    }

    #[test]
    fn one_point_per_class_has_zero_accuracy() {
        let d = line(&[0.0, 1.0]);
        let grid = [0.5, 1.0, 2.0];
        let sel = loocv_sigma(&d, &[0, 1], 1, &grid).unwrap();
        assert_eq!(sel.accuracy, 0.0);
        assert_eq!(sel.sigma, 0.5);
    }

    #[test]
    fn degenerate_labels_flagged() {
        let d = line(&[0.0, 1.0, 2.0]);
        let sel = loocv_sigma(&d, &[1, 1, 1], 1, &[3.0, 0.2]).unwrap();
        assert!(sel.degenerate);
        assert_eq!(sel.sigma, 0.2);
    }

    #[test]
    fn selection_matches_exhaustive_grid() {
        // overlapping classes, so accuracy varies along the grid
        let pts = [0.0, 0.05, 1.0, 1.02, 1.04, 3.0, 3.02, 3.05, 0.08, 1.5];
        let labels = [1, 1, 0, 0, 0, 2, 2, 2, 0, 1];
        let d = line(&pts);
        let k = 3;
        let grid = default_sigma_grid(&d, k);
        let sel = loocv_sigma(&d, &labels, k, &grid).unwrap();
        // exhaustive oracle: brute-force LOO by direct calls to wknn_predict
        let mut best = (f64::NAN, -1.0);
        for &s in &grid {
            let mut hits = 0;
            for i in 0..pts.len() {
                let dist: Vec<f64> = (0..pts.len()).filter(|&j| j != i).map(|j| d.get(i, j)).collect();
                let lab: Vec<usize> = (0..pts.len()).filter(|&j| j != i).map(|j| labels[j]).collect();
                if wknn_predict(&dist, &lab, k, s).unwrap() == labels[i] {
                    hits += 1;
                }
            }
            let acc = hits as f64 / pts.len() as f64;
            if acc > best.1 {
                best = (s, acc);
            }
        }
        assert_eq!(sel.sigma, best.0);
        assert_eq!(sel.accuracy, best.1);
    }

    #[test]
    fn grid_is_geometric_and_brackets_scale() {
        let d = line(&[0.0, 1.0, 2.0, 3.0]);
        let g = default_sigma_grid(&d, 1);
        assert_eq!(g.len(), 15);
        assert!((g[0] - 0.1).abs() < 1e-12);
        assert!((g[14] - 10.0).abs() < 1e-9);
        assert!((g[7] - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn weights_positive_and_normalized(d in prop::collection::vec(0.0f64..50.0, 1..30), sigma in 0.01f64..100.0) {
            let w = softmax_weights(&d, sigma);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|&x| x > 0.0));
        }

        #[test]
        fn rescaling_distances_and_sigma_keeps_prediction(
            d in prop::collection::vec(0.0f64..10.0, 3..25),
            seed in 0usize..1000,
            sigma in 0.05f64..5.0,
            c in prop::sample::select(vec![0.1, 10.0]),
        ) {
            let labels: Vec<usize> = (0..d.len()).map(|i| (i * 7 + seed) % 3).collect();
            let k = 1 + seed % d.len();
            let scaled: Vec<f64> = d.iter().map(|x| x * c).collect();
            prop_assert_eq!(
                wknn_predict(&d, &labels, k, sigma).unwrap(),
                wknn_predict(&scaled, &labels, k, sigma * c).unwrap()
            );
        }
    }
}
