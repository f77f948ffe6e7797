//! Ridged local linear smoothing of individual curves.
//!
//! Each curve is smoothed on its own with the biweight kernel
//! `K(u) = 15/16 (1 - u^2)^2` on `[-1, 1]`. The local linear estimate at `t` is
//!
//! ```text
//!   (T0 S2 - T1 S1) / (S0 S2 - S1^2 + ridge * sign(.) * 1{|S0 S2 - S1^2| < ridge})
//! ```
//!
//! where `S_l = 1/J sum K_b(T_j - t) ((T_j - t)/b)^l` and `T_l` carries an
//! extra factor `x_j`. The default ridge is `J^-2`.
//!
//! When no bandwidth is given, an AMISE plug-in rule is used:
//! `b = C_K (sigma^2 / (J theta22))^(1/5)` clamped to `[2/J, 0.5]`, with
//! `theta22` estimated from a blocked quartic pilot fit (block count picked by
//! Mallows' Cp) and `sigma^2` taken from `noise_sd` or from first differences.

use faer::prelude::*;
use faer::Mat;
use rayon::prelude::*;

use crate::data::{DiscreteCurve, Grid, SmoothCurve};
use crate::error::{Error, Result};

/// `(R(K) / mu2(K)^2)^(1/5)` for the biweight: `R(K) = 5/7`, `mu2(K) = 1/7`.
pub fn biweight_amise_constant() -> f64 {
    35f64.powf(0.2)
}

#[inline]
pub fn biweight(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        let v = 1.0 - u * u;
        0.9375 * v * v
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SmootherConfig {
    /// Fixed bandwidth in `(0, 1]`; plug-in rule when `None`.
    pub bandwidth: Option<f64>,
    /// Ridge override; `J^-2` per curve when `None`.
    pub ridge: Option<f64>,
}

impl SmootherConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.bandwidth {
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::invalid(format!("bandwidth {b} must lie in (0, 1]")));
            }
        }
        if let Some(r) = self.ridge {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("ridge {r} must be positive")));
            }
        }
        Ok(())
    }
}

/// Ridged local linear estimate of the curve at `t`.
pub fn local_linear_eval(curve: &DiscreteCurve, t: f64, b: f64, ridge: f64) -> Result<f64> {
    if !t.is_finite() || !b.is_finite() || !ridge.is_finite() {
        return Err(Error::invalid("non-finite smoothing input"));
    }
    if b <= 0.0 || ridge <= 0.0 {
        return Err(Error::invalid(format!("bandwidth {b} and ridge {ridge} must be positive")));
    }
    let times = curve.times();
    let xs = curve.values();
    let lo = times.partition_point(|&s| s < t - b);
    let hi = times.partition_point(|&s| s <= t + b);

    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in lo..hi {
        let u = (times[j] - t) / b;
        let w = biweight(u) / b;
        if w == 0.0 {
            continue;
        }
        let wu = w * u;
        s0 += w;
        s1 += wu;
        s2 += wu * u;
        t0 += w * xs[j];
        t1 += wu * xs[j];
    }
    if s0 == 0.0 {
        return Err(Error::NoSupport { t, bandwidth: b });
    }
    let inv_j = 1.0 / curve.len() as f64;
    let (s0, s1, s2, t0, t1) = (s0 * inv_j, s1 * inv_j, s2 * inv_j, t0 * inv_j, t1 * inv_j);

    let det = s0 * s2 - s1 * s1;
    let denom = if det.abs() < ridge {
        // sign(0) taken as +1 so the denominator never vanishes
        det + if det < 0.0 { -ridge } else { ridge }
    } else {
        det
    };
    Ok((t0 * s2 - t1 * s1) / denom)
}

/// Noise variance: `noise_sd^2` when provided, else the first-difference
/// estimator `sum (x_{j+1} - x_j)^2 / (2 (J - 1))`.
pub fn noise_variance(curve: &DiscreteCurve) -> f64 {
    if let Some(sd) = curve.noise_sd() {
        return sd * sd;
    }
    let x = curve.values();
    if x.len() < 2 {
        return 0.0;
    }
    let ss: f64 = x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    ss / (2.0 * (x.len() - 1) as f64)
}

struct QuarticBlock {
    center: f64,
    half_width: f64,
    /// coefficients in the scaled coordinate `s = (t - center) / half_width`
    coef: [f64; 5],
}

impl QuarticBlock {
    fn second_derivative(&self, t: f64) -> f64 {
        let s = (t - self.center) / self.half_width;
        let c = &self.coef;
        (2.0 * c[2] + 6.0 * c[3] * s + 12.0 * c[4] * s * s) / (self.half_width * self.half_width)
    }
}

fn fit_quartic(t: &[f64], x: &[f64]) -> (QuarticBlock, f64) {
    let (first, last) = (t[0], t[t.len() - 1]);
    let center = 0.5 * (first + last);
    let half_width = (0.5 * (last - first)).max(f64::EPSILON);
    let design = Mat::<f64>::from_fn(t.len(), 5, |i, p| ((t[i] - center) / half_width).powi(p as i32));
    let rhs = Mat::<f64>::from_fn(x.len(), 1, |i, _| x[i]);
    let sol = design.qr().solve_lstsq(&rhs);
    let coef = [sol[(0, 0)], sol[(1, 0)], sol[(2, 0)], sol[(3, 0)], sol[(4, 0)]];
    let block = QuarticBlock {
        center,
        half_width,
        coef,
    };
    let rss = t
        .iter()
        .zip(x)
        .map(|(&ti, &xi)| {
            let s = (ti - center) / half_width;
            let fit = coef[0] + s * (coef[1] + s * (coef[2] + s * (coef[3] + s * coef[4])));
            (xi - fit).powi(2)
        })
        .sum();
    (block, rss)
}

/// Split `0..len` into `blocks` contiguous ranges of near-equal size.
fn block_ranges(len: usize, blocks: usize) -> Vec<std::ops::Range<usize>> {
    (0..blocks)
        .map(|b| (b * len / blocks)..((b + 1) * len / blocks))
        .collect()
}

/// Estimate of `theta22 = int m''(t)^2 dt` from a blocked quartic pilot fit.
pub fn pilot_curvature(curve: &DiscreteCurve) -> f64 {
    let t = curve.times();
    let x = curve.values();
    let j = t.len();
    let max_blocks = (j / 20).clamp(1, 5);

    let fits: Vec<(Vec<QuarticBlock>, f64)> = (1..=max_blocks)
        .map(|nb| {
            let mut rss = 0.0;
            let blocks = block_ranges(j, nb)
                .into_iter()
                .map(|r| {
                    let (blk, r_rss) = fit_quartic(&t[r.clone()], &x[r]);
                    rss += r_rss;
                    blk
                })
                .collect();
            (blocks, rss)
        })
        .collect();

    let rss_max = fits[max_blocks - 1].1;
    let dof = j as f64 - 5.0 * max_blocks as f64;
    let chosen = if rss_max <= 0.0 || dof <= 0.0 {
        0
    } else {
        let scale = rss_max / dof;
        (0..max_blocks)
            .map(|i| {
                let nb = (i + 1) as f64;
                (i, fits[i].1 / scale - (j as f64 - 10.0 * nb))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };

    let (blocks, _) = &fits[chosen];
    let ranges = block_ranges(j, blocks.len());
    let mut acc = 0.0;
    for (blk, r) in blocks.iter().zip(ranges) {
        for &ti in &t[r] {
            acc += blk.second_derivative(ti).powi(2);
        }
    }
    // design points are dense on [0, 1], so the sample mean approximates the integral
    acc / j as f64
}

/// Plug-in bandwidth for one curve, in `[2/J, 0.5]`.
pub fn plug_in_bandwidth(curve: &DiscreteCurve) -> Result<f64> {
    let j = curve.len();
    if j < 10 {
        return Err(Error::TooFewPoints { needed: 10, got: j });
    }
    let jf = j as f64;
    let (lo, hi) = (2.0 / jf, 0.5);
    let sigma2 = noise_variance(curve);
    if sigma2 <= 0.0 {
        return Ok(lo);
    }
    let theta = pilot_curvature(curve);
    if !(theta > 0.0) || !theta.is_finite() {
        return Ok(hi);
    }
    let b = biweight_amise_constant() * (sigma2 / (jf * theta)).powf(0.2);
    Ok(b.clamp(lo, hi))
}

/// Smooths one curve on the grid, returning the curve and the bandwidth used.
pub fn smooth_curve(curve: &DiscreteCurve, grid: &Grid, cfg: &SmootherConfig) -> Result<(SmoothCurve, f64)> {
    let run = || -> Result<(SmoothCurve, f64)> {
        let b = match cfg.bandwidth {
            Some(b) => b,
            None => plug_in_bandwidth(curve)?,
        };
        let ridge = cfg.ridge.unwrap_or_else(|| (curve.len() as f64).powi(-2));
        let values = grid
            .points()
            .iter()
            .map(|&t| local_linear_eval(curve, t, b, ridge))
            .collect::<Result<Vec<f64>>>()?;
        Ok((SmoothCurve::new(curve.id(), values)?, b))
    };
    run().map_err(|e| match e {
        e @ Error::Curve { .. } => e,
        e => e.in_curve(curve.id()),
    })
}

/// Smooths every curve on the shared grid, preserving order.
pub fn smooth_dataset(raw: &[DiscreteCurve], grid: &Grid, cfg: &SmootherConfig) -> Result<Vec<SmoothCurve>> {
    Ok(smooth_dataset_with_bandwidths(raw, grid, cfg)?.0)
}

pub fn smooth_dataset_with_bandwidths(
    raw: &[DiscreteCurve],
    grid: &Grid,
    cfg: &SmootherConfig,
) -> Result<(Vec<SmoothCurve>, Vec<f64>)> {
    cfg.validate()?;
    let out = raw
        .par_iter()
        .map(|c| smooth_curve(c, grid, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(out.into_iter().unzip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn uniform_curve(j: usize, f: impl Fn(f64) -> f64) -> DiscreteCurve {
        let t: Vec<f64> = (0..j).map(|i| i as f64 / (j - 1) as f64).collect();
        let x = t.iter().map(|&s| f(s)).collect();
        DiscreteCurve::from_parts("c", t, x, None).unwrap()
    }

    /// Direct weighted least squares for the local line at `t`.
    fn wls_oracle(curve: &DiscreteCurve, t: f64, b: f64) -> f64 {
        let (mut a00, mut a01, mut a11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&tj, &xj) in curve.times().iter().zip(curve.values()) {
            let w = biweight((tj - t) / b);
            let d = tj - t;
            a00 += w;
            a01 += w * d;
            a11 += w * d * d;
            r0 += w * xj;
            r1 += w * d * xj;
        }
        // intercept of the 2x2 normal equations by Cramer's rule
        (r0 * a11 - r1 * a01) / (a00 * a11 - a01 * a01)
    }

    #[test]
    fn reproduces_affine_and_constant() {
        let c = uniform_curve(50, |t| 2.0 * t + 1.0);
        for &t in &[0.15, 0.3, 0.5, 0.77, 0.88] {
            let v = local_linear_eval(&c, t, 0.1, 1.0 / 2500.0).unwrap();
            assert!((v - (2.0 * t + 1.0)).abs() < 1e-10, "t={t} v={v}");
        }
        let k = uniform_curve(50, |_| -4.5);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let v = local_linear_eval(&k, t, 0.1, 1.0 / 2500.0).unwrap();
            assert!((v + 4.5).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_matches_wls_oracle() {
        let c = uniform_curve(200, |t| t * t);
        let v = local_linear_eval(&c, 0.5, 0.2, 1.0 / 40_000.0).unwrap();
        let oracle = wls_oracle(&c, 0.5, 0.2);
        assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
        assert!((v - 0.25).abs() <= 0.04);
    }

    #[test]
    fn empty_window_is_an_error() {
        let c = DiscreteCurve::new("c", vec![(0.0, 1.0), (0.1, 2.0)], None).unwrap();
        assert!(matches!(local_linear_eval(&c, 0.9, 0.05, 0.01), Err(Error::NoSupport { .. })));
        assert!(local_linear_eval(&c, f64::NAN, 0.05, 0.01).is_err());
        assert!(local_linear_eval(&c, 0.05, f64::INFINITY, 0.01).is_err());
    }

    #[test]
    fn ridge_keeps_denominator_away_from_zero() {
        // a single point in the window makes S0 S2 - S1^2 vanish
        let c = DiscreteCurve::new("c", vec![(0.0, 1.0), (0.5, 3.0), (1.0, 2.0)], None).unwrap();
        let v = local_linear_eval(&c, 0.45, 0.1, 1.0 / 9.0).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn plug_in_requires_ten_points() {
        let c = uniform_curve(9, |t| t);
        assert!(matches!(plug_in_bandwidth(&c), Err(Error::TooFewPoints { needed: 10, got: 9 })));
    }

    #[test]
    fn plug_in_affine_is_harmless() {
        let c = uniform_curve(100, |t| 3.0 * t - 1.0);
        let b = plug_in_bandwidth(&c).unwrap();
        assert!((0.02..=0.5).contains(&b));
        let g = Grid::new(101).unwrap();
        let (s, _) = smooth_curve(&c, &g, &SmootherConfig::default()).unwrap();
        for (&t, &v) in g.points().iter().zip(&s.values) {
            assert!((v - (3.0 * t - 1.0)).abs() < 1e-8);
        }
    }

    fn noisy_sine(j: usize, rng: &mut ChaCha8Rng) -> DiscreteCurve {
        let noise = Normal::new(0.0, 0.1).unwrap();
        let t: Vec<f64> = (0..j).map(|i| i as f64 / (j - 1) as f64).collect();
        let x = t
            .iter()
            .map(|&s| (2.0 * std::f64::consts::PI * s).sin() + noise.sample(rng))
            .collect();
        DiscreteCurve::from_parts("s", t, x, None).unwrap()
    }

    #[test]
    fn plug_in_shrinks_with_sampling_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mut small, mut large) = (0.0, 0.0);
        for _ in 0..100 {
            small += plug_in_bandwidth(&noisy_sine(50, &mut rng)).unwrap();
            large += plug_in_bandwidth(&noisy_sine(200, &mut rng)).unwrap();
        }
        assert!(large / 100.0 <= small / 100.0, "J=200 mean {} vs J=50 mean {}", large / 100.0, small / 100.0);
    }

    #[test]
    fn plug_in_monotone_in_noise_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let base = noisy_sine(120, &mut rng);
            let sd = rng.random_range(0.01..0.5);
            let b1 = plug_in_bandwidth(&base.clone().with_noise_sd(Some(sd))).unwrap();
            let b2 = plug_in_bandwidth(&base.with_noise_sd(Some(2.0 * sd))).unwrap();
            assert!(b2 >= b1);
        }
    }

    #[test]
    fn smoothing_is_deterministic_and_order_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw: Vec<DiscreteCurve> = (0..6)
            .map(|i| {
                let c = noisy_sine(80, &mut rng);
                DiscreteCurve::from_parts(format!("c{i}"), c.times().to_vec(), c.values().to_vec(), None).unwrap()
            })
            .collect();
        let g = Grid::new(101).unwrap();
        let a = smooth_dataset(&raw, &g, &SmootherConfig::default()).unwrap();
        let b = smooth_dataset(&raw, &g, &SmootherConfig::default()).unwrap();
        assert_eq!(a, b);
        let ids: Vec<&str> = a.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["c0", "c1", "c2", "c3", "c4", "c5"]);
        assert!(smooth_dataset(&[], &g, &SmootherConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn errors_carry_curve_id() {
        let c = uniform_curve(5, |t| t);
        let g = Grid::new(11).unwrap();
        let err = smooth_dataset(&[c], &g, &SmootherConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Curve { ref id, .. } if id == "c"));
    }

    #[test]
    fn raw_on_grid_is_close_to_itself() {
        let c = uniform_curve(401, |t| (3.0 * t).sin()).with_noise_sd(Some(0.0));
        let g = Grid::new(401).unwrap();
        let (s, b) = smooth_curve(&c, &g, &SmootherConfig::default()).unwrap();
        assert!((b - 2.0 / 401.0).abs() < 1e-15);
        for (v, x) in s.values.iter().zip(c.values()) {
            assert!((v - x).abs() <= 9.0 * b * b);
        }
    }
}
