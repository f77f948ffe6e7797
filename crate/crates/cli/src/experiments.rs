//! Simulation experiments at desk scale.
//!
//! Replicate `r` of an experiment uses seed `base + r` for every setting, so
//! settings are paired by replicate.

use std::time::Instant;

use anyhow::Result;
use fermat_fda::classify::pipeline::classify_from_l2;
use fermat_fda::geometry::pairwise_l2;
use fermat_fda::simgen::{gen_model, SimModel, SimSpec};
use fermat_fda::smoothing::smooth_dataset;
use fermat_fda::{Grid, Method, PipelineConfig};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Accuracy against the labeled sample size.
    Fig1Desk,
    /// Growing unlabeled sample with fixed versus growing sampling rate.
    ThresholdJ,
    /// Power parameter of the Fermat distance.
    AlphaSweep,
    /// Wall-clock cost against the pooled sample size.
    Timing,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1Desk => "fig1-desk",
            Preset::ThresholdJ => "threshold-j",
            Preset::AlphaSweep => "alpha-sweep",
            Preset::Timing => "timing",
        }
    }

    pub fn default_reps(self) -> usize {
        match self {
            Preset::Fig1Desk | Preset::AlphaSweep => 5,
            Preset::ThresholdJ => 3,
            Preset::Timing => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Setting {
    pub n: usize,
    pub j: usize,
    pub n_labeled: usize,
    /// Sampling option index for the threshold experiment.
    pub option: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MethodSpec {
    #[serde(serialize_with = "method_name")]
    pub method: Method,
    pub alpha: f64,
}

fn method_name<S: serde::Serializer>(m: &Method, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(m.name())
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            alpha: method.default_alpha(),
        }
    }

    pub fn with_alpha(method: Method, alpha: f64) -> Self {
        Self { method, alpha }
    }
}

/// Shared tuning for every replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub model: SimModel,
    pub k_graph: usize,
    pub n0: usize,
    /// Evaluation grid size; `max(101, J)` capped at 2001 when `None`.
    pub grid: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            model: SimModel::I,
            k_graph: 15,
            n0: 5,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub accuracy: f64,
    pub seconds: f64,
    pub d_hat: Option<usize>,
}

/// One simulated dataset, smoothed once and classified by every method.
pub fn run_replicate(setting: &Setting, seed: u64, methods: &[MethodSpec], opts: &RunOptions) -> Result<Vec<Outcome>> {
    let sim = gen_model(&SimSpec::new(opts.model, setting.n, setting.n_labeled, setting.j, seed))?;
    let start = Instant::now();
    let m = opts.grid.unwrap_or_else(|| Grid::default_size(sim.dataset.curves()));
    let grid = Grid::new(m)?;
    let curves = smooth_dataset(sim.dataset.curves(), &grid, &Default::default())?;
    let l2 = pairwise_l2(&curves, &grid)?;
    let shared = start.elapsed().as_secs_f64();
    let labels = &sim.truth.labels[..setting.n_labeled];
    let truth = &sim.truth.labels[setting.n_labeled..];
    methods
        .iter()
        .map(|spec| {
            let mut cfg = PipelineConfig::new(spec.method);
            cfg.fermat.alpha = spec.alpha;
            cfg.fermat.k_graph = opts.k_graph;
            cfg.wknn.n0 = opts.n0;
            let t0 = Instant::now();
            let out = classify_from_l2(&l2, &curves, &grid, labels, opts.model.n_classes(), &cfg)?;
            let hits = out.predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
            Ok(Outcome {
                accuracy: if truth.is_empty() { 0.0 } else { hits as f64 / truth.len() as f64 },
                seconds: shared + t0.elapsed().as_secs_f64(),
                d_hat: out.diagnostics.d_hat,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RepRecord {
    pub setting: Setting,
    pub method: MethodSpec,
    pub rep: usize,
    pub seed: u64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub setting: Setting,
    pub method: MethodSpec,
    pub reps: usize,
    pub mean_accuracy: f64,
    pub sd_accuracy: f64,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Experiment {
    pub preset: &'static str,
    pub model: String,
    pub base_seed: u64,
    pub rows: Vec<SummaryRow>,
    pub replicates: Vec<RepRecord>,
}

/// Settings and methods of a preset.
pub fn preset_design(preset: Preset) -> (Vec<Setting>, Vec<MethodSpec>) {
    let plain = |n, j, n_labeled| Setting {
        n,
        j,
        n_labeled,
        option: None,
    };
    match preset {
        Preset::Fig1Desk => (
            [20, 30, 40, 50, 100].into_iter().map(|nl| plain(400, 100, nl)).collect(),
            Method::ALL.into_iter().map(MethodSpec::new).collect(),
        ),
        Preset::ThresholdJ => {
            let fixed = [(50, 200), (50, 400), (50, 800), (50, 1000)];
            let growing = [(50, 200), (100, 400), (200, 800), (400, 1000)];
            let settings = fixed
                .iter()
                .map(|&(j, n)| (1, j, n))
                .chain(growing.iter().map(|&(j, n)| (2, j, n)))
                .map(|(option, j, n)| Setting {
                    n,
                    j,
                    n_labeled: 100,
                    option: Some(option),
                })
                .collect();
            (settings, vec![MethodSpec::new(Method::FdWknn), MethodSpec::new(Method::FdSvmHigh)])
        }
        Preset::AlphaSweep => {
            let methods = [1.0, 2.0, 4.0, 8.0]
                .into_iter()
                .flat_map(|a| [MethodSpec::with_alpha(Method::FdWknn, a), MethodSpec::with_alpha(Method::FdSvmHigh, a)])
                .collect();
            (vec![plain(400, 100, 40)], methods)
        }
        Preset::Timing => (
            [250, 500, 1000, 2000].into_iter().map(|n| plain(n, 100, n / 10)).collect(),
            vec![MethodSpec::new(Method::FdWknn)],
        ),
    }
}

pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

pub fn run_experiment(
    preset: Preset,
    settings: &[Setting],
    methods: &[MethodSpec],
    reps: usize,
    base_seed: u64,
    opts: &RunOptions,
) -> Result<Experiment> {
    let mut replicates = Vec::new();
    let mut rows = Vec::new();
    for setting in settings {
        let mut by_method: Vec<Vec<Outcome>> = vec![Vec::new(); methods.len()];
        for rep in 0..reps {
            let seed = base_seed.wrapping_add(rep as u64);
            let outcomes = run_replicate(setting, seed, methods, opts)?;
            for (k, o) in outcomes.into_iter().enumerate() {
                replicates.push(RepRecord {
                    setting: *setting,
                    method: methods[k],
                    rep,
                    seed,
                    outcome: o.clone(),
                });
                by_method[k].push(o);
            }
        }
        for (spec, outs) in methods.iter().zip(&by_method) {
            let acc: Vec<f64> = outs.iter().map(|o| o.accuracy).collect();
            let secs: Vec<f64> = outs.iter().map(|o| o.seconds).collect();
            let (mean_accuracy, sd_accuracy) = mean_sd(&acc);
            rows.push(SummaryRow {
                setting: *setting,
                method: *spec,
                reps,
                mean_accuracy,
                sd_accuracy,
                mean_seconds: mean_sd(&secs).0,
            });
        }
    }
    Ok(Experiment {
        preset: preset.name(),
        model: opts.model.name().to_string(),
        base_seed,
        rows,
        replicates,
    })
}

pub fn write_summary_csv(path: &std::path::Path, exp: &Experiment) -> Result<()> {
    use std::io::Write;
    let mut w = crate::io::create(path)?;
    writeln!(w, "preset,model,option,n,j,n_labeled,method,alpha,reps,mean_accuracy,sd_accuracy,mean_seconds")?;
    for r in &exp.rows {
        let option = r.setting.option.map(|o| o.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{option},{},{},{},{},{},{},{},{},{}",
            exp.preset,
            exp.model,
            r.setting.n,
            r.setting.j,
            r.setting.n_labeled,
            r.method.method.name(),
            r.method.alpha,
            r.reps,
            r.mean_accuracy,
            r.sd_accuracy,
            r.mean_seconds
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_preset_matches_sampling_options() {
        let (settings, _) = preset_design(Preset::ThresholdJ);
        let pairs = |opt| -> Vec<(usize, usize)> {
            settings.iter().filter(|s| s.option == Some(opt)).map(|s| (s.j, s.n)).collect()
        };
        assert_eq!(pairs(1), [(50, 200), (50, 400), (50, 800), (50, 1000)]);
        assert_eq!(pairs(2), [(50, 200), (100, 400), (200, 800), (400, 1000)]);
        assert!(settings.iter().all(|s| s.n_labeled == 100));
    }

    #[test]
    fn alpha_and_fig1_presets() {
        let (_, methods) = preset_design(Preset::AlphaSweep);
        let mut alphas: Vec<f64> = methods.iter().map(|m| m.alpha).collect();
        alphas.dedup();
        assert_eq!(alphas, [1.0, 2.0, 4.0, 8.0]);
        let (settings, _) = preset_design(Preset::Fig1Desk);
        assert_eq!(settings.iter().map(|s| s.n_labeled).collect::<Vec<_>>(), [20, 30, 40, 50, 100]);
    }

    #[test]
    fn replicate_is_reproducible() {
        let setting = Setting {
            n: 90,
            j: 40,
            n_labeled: 30,
            option: None,
        };
        let methods = [MethodSpec::new(Method::FdWknn), MethodSpec::new(Method::NaiveKnn)];
        let a = run_replicate(&setting, 4, &methods, &RunOptions::default()).unwrap();
        let b = run_replicate(&setting, 4, &methods, &RunOptions::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.accuracy, y.accuracy);
            assert!((0.0..=1.0).contains(&x.accuracy));
        }
    }
}
