//! Shared data types: raw and smoothed curves, the pooled dataset and dense
//! distance matrices.

use crate::error::{Error, Result};

/// Raw discrete, noisy observations `(t_j, x_j)` of one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    id: String,
    t: Vec<f64>,
    x: Vec<f64>,
    noise_sd: Option<f64>,
}

impl DiscreteCurve {
    /// Builds a curve from observation pairs. Times must be strictly
    /// increasing and lie in `[0, 1]`.
    pub fn new(id: impl Into<String>, obs: Vec<(f64, f64)>, noise_sd: Option<f64>) -> Result<Self> {
        let (t, x) = obs.into_iter().unzip();
        Self::from_parts(id, t, x, noise_sd)
    }

    pub fn from_parts(
        id: impl Into<String>,
        t: Vec<f64>,
        x: Vec<f64>,
        noise_sd: Option<f64>,
    ) -> Result<Self> {
        let id = id.into();
        if t.is_empty() {
            return Err(Error::invalid("curve has no observations").in_curve(&id));
        }
        if t.len() != x.len() {
            return Err(Error::invalid("time and value vectors differ in length").in_curve(&id));
        }
        if let Some(bad) = t.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("time {bad} outside [0, 1]")).in_curve(&id));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("times are not strictly increasing").in_curve(&id));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite observation").in_curve(&id));
        }
        if let Some(sd) = noise_sd {
            if !(sd >= 0.0 && sd.is_finite()) {
                return Err(Error::invalid(format!("noise_sd {sd} must be finite and >= 0")).in_curve(&id));
            }
        }
        Ok(Self { id, t, x, noise_sd })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn noise_sd(&self) -> Option<f64> {
        self.noise_sd
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn with_noise_sd(mut self, noise_sd: Option<f64>) -> Self {
        self.noise_sd = noise_sd;
        self
    }
}

/// Equidistant evaluation grid on `[0, 1]` shared by all smoothed curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 points, got {m}")));
        }
        let last = (m - 1) as f64;
        let points = (0..m).map(|i| i as f64 / last).collect();
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.points.len() - 1) as f64
    }

    /// Trapezoidal integral over `[0, 1]` of values sampled on the grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let m = values.len();
        let inner: f64 = values[1..m - 1].iter().sum();
        self.spacing() * (inner + 0.5 * (values[0] + values[m - 1]))
    }

    /// Default grid size for a sample: `max(101, median J)` capped at 2001.
    pub fn default_size<'a>(curves: impl IntoIterator<Item = &'a DiscreteCurve>) -> usize {
        let mut lens: Vec<usize> = curves.into_iter().map(DiscreteCurve::len).collect();
        if lens.is_empty() {
            return 101;
        }
        lens.sort_unstable();
        let mid = lens.len() / 2;
        let median = if lens.len().is_multiple_of(2) {
            (lens[mid - 1] + lens[mid]).div_ceil(2)
        } else {
            lens[mid]
        };
        median.clamp(101, 2001)
    }
}

/// A trajectory evaluated on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothCurve {
    pub id: String,
    pub values: Vec<f64>,
}

impl SmoothCurve {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite value in smoothed curve").in_curve(&id));
        }
        Ok(Self { id, values })
    }

    /// Samples `f` on every grid point.
    pub fn from_fn(id: impl Into<String>, grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            id: id.into(),
            values: grid.points().iter().map(|&t| f(t)).collect(),
        }
    }
}

/// Pooled sample with labeled curves first, followed by unlabeled ones.
#[derive(Debug, Clone)]
pub struct Dataset {
    curves: Vec<DiscreteCurve>,
    labels: Vec<Option<usize>>,
    n_labeled: usize,
    n_classes: usize,
}

impl Dataset {
    pub fn new(curves: Vec<DiscreteCurve>, labels: Vec<Option<usize>>, n_classes: usize) -> Result<Self> {
        if curves.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} curves but {} label slots",
                curves.len(),
                labels.len()
            )));
        }
        let n_labeled = labels.iter().take_while(|l| l.is_some()).count();
        if labels[n_labeled..].iter().any(Option::is_some) {
            return Err(Error::invalid("labeled curves must precede unlabeled curves"));
        }
        if let Some(bad) = labels.iter().flatten().find(|&&c| c >= n_classes) {
            return Err(Error::invalid(format!("label {bad} out of range for {n_classes} classes")));
        }
        Ok(Self {
            curves,
            labels,
            n_labeled,
            n_classes,
        })
    }

    pub fn curves(&self) -> &[DiscreteCurve] {
        &self.curves
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    /// Labels of the labeled prefix.
    pub fn labeled_classes(&self) -> Vec<usize> {
        self.labels[..self.n_labeled].iter().flatten().copied().collect()
    }

    pub fn n_labeled(&self) -> usize {
        self.n_labeled
    }

    pub fn n_unlabeled(&self) -> usize {
        self.curves.len() - self.n_labeled
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }
}

/// Dense symmetric matrix of pairwise distances, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal, non-negativity and finiteness.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::invalid(format!("expected {} entries, got {}", n * n, entries.len())));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let v = entries[i * n + j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::invalid(format!("entry ({i}, {j}) = {v} is not a finite nonnegative distance")));
                }
                if v != entries[j * n + i] {
                    return Err(Error::invalid(format!("asymmetric entry at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, entries })
    }

    /// Builds a matrix from its strict upper triangle; `f(i, j)` is called
    /// once for each `i < j`.
    pub fn from_upper(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Self::new(n, entries)
    }

    pub(crate) fn from_raw_unchecked(n: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), n * n);
        Self { n, entries }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Multiplies every entry by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|v| v * c).collect(),
        }
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let mut entries = Vec::with_capacity(m * m);
        for &i in idx {
            entries.extend(idx.iter().map(|&j| self.get(i, j)));
        }
        Self { n: m, entries }
    }

    /// Rows `rows` restricted to columns `cols`, row-major.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Vec<Vec<f64>> {
        rows.map(|i| self.row(i)[cols.clone()].to_vec()).collect()
    }
}
