//! One-vs-rest support vector machines trained by SMO.
//!
//! Each binary problem is the weighted C-SVC dual
//! `min 1/2 a'Qa - e'a  s.t. y'a = 0, 0 <= a_i <= C w_i`, solved with
//! maximal-violating-pair selection using second-order information.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    /// `exp(-|x - y|^2 / (2 h^2))` with bandwidth `h`.
    Gaussian { bandwidth: f64 },
}

impl Kernel {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Gaussian { bandwidth } => {
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
                (-sq / (2.0 * bandwidth * bandwidth)).exp()
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// Box constraint `C`.
    pub regularization: f64,
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    /// Iteration cap, in multiples of the training size.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            regularization: 1.0,
            tolerance: 1e-4,
            max_passes: 10_000,
        }
    }
}

/// Per-class weights `1 / (M pi_k)`, so a balanced sample gets weight 1.
pub fn balanced_class_weights(labels: &[usize], n_classes: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; n_classes];
    for &c in labels {
        if c >= n_classes {
            return Err(Error::invalid(format!("label {c} out of range")));
        }
        counts[c] += 1;
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::invalid(format!("class {missing} has no labeled samples")));
    }
    let n = labels.len() as f64;
    Ok(counts
        .iter()
        .map(|&c| n / (n_classes as f64 * c as f64))
        .collect())
}

/// Gaussian bandwidth from the median pairwise distance of the rows.
pub fn median_heuristic(x: &[Vec<f64>]) -> f64 {
    let mut d = Vec::with_capacity(x.len() * x.len().saturating_sub(1) / 2);
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            d.push(dot_dist(&x[i], &x[j]));
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let med = if m % 2 == 1 { d[m / 2] } else { 0.5 * (d[m / 2 - 1] + d[m / 2]) };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

fn dot_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// A trained binary machine: `f(x) = sum_i coef_i K(x_i, x) - rho`.
#[derive(Debug, Clone)]
pub struct BinarySvm {
    /// `alpha_i y_i` for every training row.
    pub coef: Vec<f64>,
    pub rho: f64,
    /// Primal weight vector (linear kernel only).
    pub weights: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

const TAU: f64 = 1e-12;

/// Solves one binary problem given the kernel matrix (row-major, `n x n`),
/// labels in `{-1, +1}` and per-sample upper bounds.
pub(crate) fn smo(kernel: &[f64], y: &[f64], upper: &[f64], cfg: &SvmConfig) -> (Vec<f64>, f64, usize, bool) {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = cfg.max_passes.saturating_mul(n.max(1));
    let mut iter = 0;
    let mut converged = false;

    let is_upper = |a: &[f64], t: usize| a[t] >= upper[t];
    let is_lower = |a: &[f64], t: usize| a[t] <= 0.0;

    while iter < max_iter {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut sel_i = None;
        for t in 0..n {
            let cand = if y[t] > 0.0 {
                (!is_upper(&alpha, t)).then(|| -grad[t])
            } else {
                (!is_lower(&alpha, t)).then_some(grad[t])
            };
            if let Some(v) = cand {
                if v >= gmax {
                    gmax = v;
                    sel_i = Some(t);
                }
            }
        }
        // j: second-order pick in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut sel_j = None;
        let mut best_obj = f64::INFINITY;
        if let Some(i) = sel_i {
            let kii = kernel[i * n + i];
            for t in 0..n {
                let (in_low, g_side, grad_diff, quad) = if y[t] > 0.0 {
                    (!is_lower(&alpha, t), grad[t], gmax + grad[t], kii + kernel[t * n + t] - 2.0 * y[i] * q(i, t))
                } else {
                    (!is_upper(&alpha, t), -grad[t], gmax - grad[t], kii + kernel[t * n + t] + 2.0 * y[i] * q(i, t))
                };
                if !in_low {
                    continue;
                }
                if g_side >= gmax2 {
                    gmax2 = g_side;
                }
                if grad_diff > 0.0 {
                    let quad = if quad > 0.0 { quad } else { TAU };
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= best_obj {
                        best_obj = obj;
                        sel_j = Some(t);
                    }
                }
            }
        }
        let (i, j) = match (sel_i, sel_j) {
            (Some(i), Some(j)) if gmax + gmax2 >= cfg.tolerance => (i, j),
            _ => {
                converged = true;
                break;
            }
        };
        iter += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (ci, cj) = (upper[i], upper[j]);
        if y[i] != y[j] {
            let mut quad = kernel[i * n + i] + kernel[j * n + j] + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let mut quad = kernel[i * n + i] + kernel[j * n + j] - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    // offset from free vectors, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if is_upper(&alpha, t) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(&alpha, t) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { 0.5 * (ub + lb) };
    (alpha, rho, iter, converged)
}

fn kernel_matrix(x: &[Vec<f64>], kernel: Kernel) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&x[i], &x[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

fn fit_machine(km: &[f64], x: &[Vec<f64>], y: &[f64], upper: &[f64], kernel: Kernel, cfg: &SvmConfig) -> BinarySvm {
    let (alpha, rho, iterations, converged) = smo(km, y, upper, cfg);
    let coef: Vec<f64> = alpha.iter().zip(y).map(|(a, yi)| a * yi).collect();
    let weights = matches!(kernel, Kernel::Linear).then(|| {
        let mut w = vec![0.0; x.first().map_or(0, Vec::len)];
        for (row, &c) in x.iter().zip(&coef) {
            if c != 0.0 {
                for (wk, xk) in w.iter_mut().zip(row) {
                    *wk += c * xk;
                }
            }
        }
        w
    });
    BinarySvm {
        coef,
        rho,
        weights,
        iterations,
        converged,
    }
}

/// Trains a weighted binary machine on labels `y` in `{-1, +1}` with
/// per-sample bounds `upper`.
pub fn train_binary(x: &[Vec<f64>], y: &[f64], upper: &[f64], kernel: Kernel, cfg: &SvmConfig) -> BinarySvm {
    fit_machine(&kernel_matrix(x, kernel), x, y, upper, kernel, cfg)
}

#[derive(Debug, Clone)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub class_weights: Vec<f64>,
    pub regularization: f64,
    /// One machine per class (class `k` versus the rest).
    pub machines: Vec<BinarySvm>,
    train_x: Vec<Vec<f64>>,
    dim: usize,
}

pub fn svm_train_ovr(
    x: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    kernel: Kernel,
    class_weights: &[f64],
    cfg: &SvmConfig,
) -> Result<SvmModel> {
    if x.len() != labels.len() {
        return Err(Error::invalid("row and label counts differ"));
    }
    if n_classes < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    if class_weights.len() != n_classes || class_weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::invalid("class weights must be positive, one per class"));
    }
    if !(cfg.regularization > 0.0) {
        return Err(Error::invalid("regularization must be positive"));
    }
    if let Kernel::Gaussian { bandwidth } = kernel {
        if !(bandwidth > 0.0) {
            return Err(Error::invalid("Gaussian bandwidth must be positive"));
        }
    }
    let mut seen = vec![false; n_classes];
    for &c in labels {
        if c >= n_classes {
            return Err(Error::invalid(format!("label {c} out of range")));
        }
        seen[c] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::invalid(format!("class {missing} missing from training labels")));
    }
    let dim = x[0].len();
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::invalid("rows have inconsistent dimension"));
    }

    let km = kernel_matrix(x, kernel);
    let upper: Vec<f64> = labels.iter().map(|&c| cfg.regularization * class_weights[c]).collect();
    let machines = (0..n_classes)
        .map(|k| {
            let y: Vec<f64> = labels.iter().map(|&c| if c == k { 1.0 } else { -1.0 }).collect();
            fit_machine(&km, x, &y, &upper, kernel, cfg)
        })
        .collect();
    Ok(SvmModel {
        kernel,
        class_weights: class_weights.to_vec(),
        regularization: cfg.regularization,
        machines,
        train_x: x.to_vec(),
        dim,
    })
}

impl BinarySvm {
    pub fn decision(&self, train_x: &[Vec<f64>], kernel: Kernel, x: &[f64]) -> f64 {
        match &self.weights {
            Some(w) => dot(w, x) - self.rho,
            None => {
                train_x
                    .iter()
                    .zip(&self.coef)
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(xi, c)| c * kernel.eval(xi, x))
                    .sum::<f64>()
                    - self.rho
            }
        }
    }
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "point has dimension {}, model expects {}",
                x.len(),
                self.dim
            )));
        }
        Ok(self
            .machines
            .iter()
            .map(|m| m.decision(&self.train_x, self.kernel, x))
            .collect())
    }

    pub fn all_converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }
}

/// Class with the largest one-vs-rest decision value; ties go to the
/// smallest class index.
pub fn svm_predict(model: &SvmModel, x: &[f64]) -> Result<usize> {
    let v = model.decision_values(x)?;
    let mut best = 0;
    for k in 1..v.len() {
        if v[k] > v[best] {
            best = k;
        }
    }
    Ok(best)
}
