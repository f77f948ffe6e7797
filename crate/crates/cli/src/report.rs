//! Classification reports: a deterministic JSON summary, a confusion-matrix
//! CSV and a separate wall-clock timing table.

use std::io::Write;
use std::path::Path;

use anyhow::Result;
use fermat_fda::classify::pipeline::{Diagnostics, StageTiming};
use serde::Serialize;

use crate::io::create;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Evaluation {
    /// Unlabeled curves with a known true class.
    pub test_count: usize,
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub per_class_accuracy: Vec<Option<f64>>,
}

pub fn evaluate(truth: &[Option<usize>], predicted: &[usize], n_classes: usize) -> Evaluation {
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (t, &p) in truth.iter().zip(predicted) {
        if let Some(t) = *t {
            confusion[t][p] += 1;
        }
    }
    let test_count: usize = confusion.iter().flatten().sum();
    let hits: usize = (0..n_classes).map(|k| confusion[k][k]).sum();
    let per_class_accuracy = confusion
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let total: usize = row.iter().sum();
            (total > 0).then(|| row[k] as f64 / total as f64)
        })
        .collect();
    Evaluation {
        test_count,
        accuracy: if test_count == 0 { 0.0 } else { hits as f64 / test_count as f64 },
        confusion,
        per_class_accuracy,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaReport {
    pub sigma: f64,
    pub loocv_accuracy: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub method: String,
    pub alpha: Option<f64>,
    pub k_graph: usize,
    pub n0: usize,
    pub seed: u64,
    pub grid_size: usize,
    pub n_curves: usize,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    /// Class names; position is the class index used in every table.
    pub classes: Vec<String>,
    pub k: usize,
    pub sigma: Option<SigmaReport>,
    pub d_hat: Option<usize>,
    pub scale: Option<f64>,
    pub mds_dimension: Option<usize>,
    pub mds_eigenvalues: Vec<f64>,
    pub mds_negative_eigenvalues: usize,
    pub svm_bandwidth: Option<f64>,
    pub svm_converged: Option<bool>,
    pub bandwidth_median: Option<f64>,
    pub warnings: Vec<String>,
    pub evaluation: Option<Evaluation>,
}

pub(crate) fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    Some(if m % 2 == 1 { s[m / 2] } else { 0.5 * (s[m / 2 - 1] + s[m / 2]) })
}

impl ClassifyReport {
    pub fn sigma_from(diag: &Diagnostics) -> Option<SigmaReport> {
        diag.sigma.as_ref().map(|s| SigmaReport {
            sigma: s.sigma,
            loocv_accuracy: s.accuracy,
            degenerate: s.degenerate,
        })
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_confusion(path: &Path, eval: &Evaluation, classes: &[String]) -> Result<()> {
    let mut w = create(path)?;
    write!(w, "true\\predicted")?;
    for c in classes {
        write!(w, ",{c}")?;
    }
    writeln!(w)?;
    for (name, row) in classes.iter().zip(&eval.confusion) {
        write!(w, "{name}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timings(path: &Path, timings: &[StageTiming]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "stage,seconds")?;
    for t in timings {
        writeln!(w, "{},{}", t.stage, t.seconds)?;
    }
    w.flush()?;
    Ok(())
}
