//! Seeded generators for the four simulation models.
//!
//! Randomness comes from `ChaCha8Rng` seeded with the spec seed. Curve `i`
//! draws its label and latent variables from stream `2i` and its
//! observation noise from stream `2i + 1`, so curves can be generated in any
//! order with identical output.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::data::{Dataset, DiscreteCurve};
use crate::error::{Error, Result};

/// Number of Fourier terms in model (iv).
pub const FOURIER_TERMS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimModel {
    /// Three-spiral scores through a three-bump mean curve.
    I,
    /// Model (i) with class-independent time warping.
    Ii,
    /// Model (i) with class-dependent time warping.
    Iii,
    /// Two-class Gaussian Fourier model.
    Iv,
}

impl SimModel {
    pub const ALL: [SimModel; 4] = [SimModel::I, SimModel::Ii, SimModel::Iii, SimModel::Iv];

    pub fn name(self) -> &'static str {
        match self {
            SimModel::I => "i",
            SimModel::Ii => "ii",
            SimModel::Iii => "iii",
            SimModel::Iv => "iv",
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            SimModel::Iv => 2,
            _ => 3,
        }
    }

    /// Signal-to-noise divisor `R`.
    pub fn default_r(self) -> f64 {
        match self {
            SimModel::Iv => 20.0,
            _ => 4.0,
        }
    }

    /// Range of the warping parameter for class `y`, if the model warps.
    pub fn beta_range(self, y: usize) -> Option<(f64, f64)> {
        match self {
            SimModel::Ii => Some((-0.5, 0.5)),
            SimModel::Iii => Some(match y {
                0 => (-0.5, 0.0),
                1 => (-0.25, 0.25),
                _ => (0.0, 0.5),
            }),
            _ => None,
        }
    }
}

impl fmt::Display for SimModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SimModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model {s:?}; expected i, ii, iii or iv")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSpec {
    pub model: SimModel,
    pub n: usize,
    pub n_labeled: usize,
    /// Observations per curve.
    pub j: usize,
    pub r: f64,
    pub seed: u64,
}

impl SimSpec {
    /// Spec with the model's default `R`.
    pub fn new(model: SimModel, n: usize, n_labeled: usize, j: usize, seed: u64) -> Self {
        Self {
            model,
            n,
            n_labeled,
            j,
            r: model.default_r(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_labeled > self.n {
            return Err(Error::invalid(format!(
                "n_labeled = {} exceeds n = {}",
                self.n_labeled, self.n
            )));
        }
        if self.j < 2 {
            return Err(Error::invalid(format!("J = {} must be at least 2", self.j)));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::invalid(format!("R = {} must be positive", self.r)));
        }
        Ok(())
    }
}

/// Noise-free mean curve of model (i).
pub fn gen_mean_curve_i(z1: f64, z2: f64, t: f64) -> f64 {
    let bump = |c: f64| (-(t - c).powi(2) / 0.005).exp();
    -z1 * bump(0.2) - z2 * bump(0.5) - z1 * z2 * bump(0.8) / 5.0
}

/// Spiral scores for class `y` at angle `theta` with per-coordinate jitter.
pub fn spiral_scores(y: usize, theta: f64, delta1: f64, delta2: f64) -> (f64, f64) {
    let phase = theta + 2.0 * y as f64 * PI / 3.0;
    (
        (theta * phase.cos() + delta1 + 15.0) / 10.0,
        (theta * phase.sin() + delta2 + 15.0) / 10.0,
    )
}

/// Draws `theta ~ U[1, 2 pi]` and independent `delta ~ N(0, 0.5^2)` per coordinate.
pub fn gen_spiral_scores<R: Rng + ?Sized>(y: usize, rng: &mut R) -> (f64, f64) {
    let normal = Normal::new(0.0, 0.5).expect("valid normal");
    let theta = rng.random_range(1.0..TAU);
    let d1 = normal.sample(rng);
    let d2 = normal.sample(rng);
    spiral_scores(y, theta, d1, d2)
}

/// `(exp(beta t) - 1) / (exp(beta) - 1)`, with the identity as the `beta -> 0` limit.
pub fn warp(t: f64, beta: f64) -> f64 {
    if beta.abs() < 1e-8 {
        t
    } else {
        (beta * t).exp_m1() / beta.exp_m1()
    }
}

/// Fourier basis function `phi_l` (1-based): constant, then cosine/sine pairs.
pub fn fourier_basis(l: usize, t: f64) -> f64 {
    match l {
        0 => panic!("basis index is 1-based"),
        1 => 1.0,
        _ if l.is_multiple_of(2) => SQRT_2 * ((l / 2) as f64 * TAU * t).cos(),
        _ => SQRT_2 * (((l - 1) / 2) as f64 * TAU * t).sin(),
    }
}

/// Standard deviation of score `Z_l` for class `y` in model (iv).
pub fn fourier_score_sd(l: usize, y: usize) -> f64 {
    let rate = if y == 0 { 6.0 } else { 4.0 };
    (-(l as f64) / rate).exp()
}

/// Model (iv) curve: class-1 sine signal plus the Fourier expansion of `z`.
pub fn model_iv_curve(y: usize, z: &[f64], t: f64) -> f64 {
    let signal = if y == 1 { (2.0 * TAU * t).sin() } else { 0.0 };
    signal + fourier_part(z, t)
}

pub fn fourier_part(z: &[f64], t: f64) -> f64 {
    z.iter().enumerate().map(|(l, &zl)| zl * fourier_basis(l + 1, t)).sum()
}

/// Ground truth behind a simulated dataset.
#[derive(Debug, Clone)]
pub struct SimTruth {
    pub labels: Vec<usize>,
    /// `(z1, z2)` for models (i)-(iii), the 50 Fourier scores for model (iv).
    pub latents: Vec<Vec<f64>>,
    /// Warping parameter per curve (models (ii) and (iii)).
    pub beta: Vec<Option<f64>>,
    /// Noise-free values at the observation times.
    pub clean: Vec<Vec<f64>>,
    /// Grid average of the across-subject variance of the clean curves.
    pub integrated_variance: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub dataset: Dataset,
    pub truth: SimTruth,
    /// Observation times shared by every curve.
    pub times: Vec<f64>,
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Draw {
    label: usize,
    latent: Vec<f64>,
    beta: Option<f64>,
    clean: Vec<f64>,
}

fn draw_curve(model: SimModel, times: &[f64], rng: &mut ChaCha8Rng) -> Draw {
    let label = rng.random_range(0..model.n_classes());
    match model {
        SimModel::Iv => {
            let latent: Vec<f64> = (1..=FOURIER_TERMS)
                .map(|l| {
                    Normal::new(0.0, fourier_score_sd(l, label))
                        .expect("valid normal")
                        .sample(rng)
                })
                .collect();
            let clean = times.iter().map(|&t| model_iv_curve(label, &latent, t)).collect();
            Draw {
                label,
                latent,
                beta: None,
                clean,
            }
        }
        _ => {
            let (z1, z2) = gen_spiral_scores(label, rng);
            let beta = model.beta_range(label).map(|(lo, hi)| rng.random_range(lo..=hi));
            let clean = times
                .iter()
                .map(|&t| gen_mean_curve_i(z1, z2, beta.map_or(t, |b| warp(t, b))))
                .collect();
            Draw {
                label,
                latent: vec![z1, z2],
                beta,
                clean,
            }
        }
    }
}

/// Grid average of the across-subject sample variance.
pub fn integrated_variance(clean: &[Vec<f64>]) -> f64 {
    let n = clean.len();
    if n < 2 {
        return 0.0;
    }
    let j = clean[0].len();
    let total: f64 = (0..j)
        .map(|k| {
            let mean = clean.iter().map(|c| c[k]).sum::<f64>() / n as f64;
            clean.iter().map(|c| (c[k] - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        })
        .sum();
    total / j as f64
}

/// Observation times `j / (J - 1)`.
pub fn observation_times(j: usize) -> Vec<f64> {
    (0..j).map(|k| k as f64 / (j - 1) as f64).collect()
}

pub fn gen_model(spec: &SimSpec) -> Result<SimOutput> {
    spec.validate()?;
    let times = observation_times(spec.j);
    let draws: Vec<Draw> = (0..spec.n)
        .into_par_iter()
        .map(|i| draw_curve(spec.model, &times, &mut substream(spec.seed, 2 * i as u64)))
        .collect();
    let clean: Vec<Vec<f64>> = draws.iter().map(|d| d.clean.clone()).collect();
    let v_hat = integrated_variance(&clean);
    let noise_sd = (v_hat / spec.r).sqrt();
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::invalid(format!("noise level: {e}")))?;

    let curves = draws
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let mut rng = substream(spec.seed, 2 * i as u64 + 1);
            let x: Vec<f64> = d.clean.iter().map(|&c| c + noise.sample(&mut rng)).collect();
            DiscreteCurve::from_parts(format!("c{i:05}"), times.clone(), x, Some(noise_sd))
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = draws.iter().map(|d| d.label).collect();
    let visible = labels
        .iter()
        .enumerate()
        .map(|(i, &c)| (i < spec.n_labeled).then_some(c))
        .collect();
    let dataset = Dataset::new(curves, visible, spec.model.n_classes())?;
    Ok(SimOutput {
        dataset,
        truth: SimTruth {
            labels,
            latents: draws.iter().map(|d| d.latent.clone()).collect(),
            beta: draws.iter().map(|d| d.beta).collect(),
            clean,
            integrated_variance: v_hat,
            noise_sd,
        },
        times,
    })
}
