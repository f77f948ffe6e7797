//! L2 geometry on the common evaluation grid.

use rayon::prelude::*;

use crate::data::{DistanceMatrix, Grid, SmoothCurve};
use crate::error::{Error, Result};

pub fn make_grid(m: usize) -> Result<Grid> {
    Grid::new(m)
}

/// L2 distance between two curves by trapezoidal quadrature of the squared
/// difference.
pub fn l2_distance(a: &SmoothCurve, b: &SmoothCurve, grid: &Grid) -> Result<f64> {
    if a.values.len() != grid.len() || b.values.len() != grid.len() {
        return Err(Error::invalid(format!(
            "curves of length {} and {} do not match grid of size {}",
            a.values.len(),
            b.values.len(),
            grid.len()
        )));
    }
    Ok(l2_unchecked(&a.values, &b.values, grid.spacing()))
}

#[inline]
pub(crate) fn l2_unchecked(a: &[f64], b: &[f64], h: f64) -> f64 {
    let m = a.len();
    let mut inner = 0.0;
    for k in 1..m - 1 {
        let d = a[k] - b[k];
        inner += d * d;
    }
    let d0 = a[0] - b[0];
    let d1 = a[m - 1] - b[m - 1];
    let sq = h * (inner + 0.5 * (d0 * d0 + d1 * d1));
    sq.max(0.0).sqrt()
}

/// All pairwise L2 distances. Rows are computed in parallel.
pub fn pairwise_l2(curves: &[SmoothCurve], grid: &Grid) -> Result<DistanceMatrix> {
    if curves.is_empty() {
        return Err(Error::invalid("pairwise_l2 needs at least one curve"));
    }
    if let Some(c) = curves.iter().find(|c| c.values.len() != grid.len()) {
        return Err(Error::invalid(format!("curve {} is not aligned to the grid", c.id)));
    }
    let n = curves.len();
    let h = grid.spacing();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| l2_unchecked(&curves[i].values, &curves[j].values, h))
                .collect()
        })
        .collect();
    let mut entries = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(DistanceMatrix::from_raw_unchecked(n, entries))
}

/// L2 distances from one curve to each of `curves`.
pub fn l2_to_all(query: &SmoothCurve, curves: &[SmoothCurve], grid: &Grid) -> Result<Vec<f64>> {
    curves.iter().map(|c| l2_distance(query, c, grid)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_endpoints_and_spacing() {
        assert_eq!(make_grid(2).unwrap().points(), &[0.0, 1.0]);
        assert_eq!(make_grid(5).unwrap().points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = make_grid(101).unwrap();
        assert!((g.spacing() - 0.01).abs() < 1e-15);
        for w in g.points().windows(2) {
            assert!((w[1] - w[0] - 0.01).abs() < 1e-12);
        }
        assert!(make_grid(1).is_err());
        assert!(make_grid(0).is_err());
    }

    #[test]
    fn trapezoid_exact_for_affine() {
        let g = make_grid(37).unwrap();
        let vals: Vec<f64> = g.points().iter().map(|t| 3.5 * t - 1.25).collect();
        // integral of 3.5t - 1.25 over [0,1] is 0.5
        assert!((g.integrate(&vals) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn l2_basic_cases() {
        let g = make_grid(11).unwrap();
        let a = SmoothCurve::from_fn("a", &g, |_| 3.0);
        let b = SmoothCurve::from_fn("b", &g, |_| 1.0);
        assert_eq!(l2_distance(&a, &a, &g).unwrap(), 0.0);
        assert!((l2_distance(&a, &b, &g).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn l2_sine_matches_closed_form() {
        let g = make_grid(2001).unwrap();
        let a = SmoothCurve::from_fn("a", &g, |t| (2.0 * PI * t).sin());
        let z = SmoothCurve::from_fn("z", &g, |_| 0.0);
        let d = l2_distance(&a, &z, &g).unwrap();
        // fine-grid midpoint-rule oracle, independent of the trapezoid path
        let n = 200_000;
        let oracle = ((0..n)
            .map(|k| {
                let t = (k as f64 + 0.5) / n as f64;
                (2.0 * PI * t).sin().powi(2)
            })
            .sum::<f64>()
            / n as f64)
            .sqrt();
        assert!((oracle - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((d - 0.5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn l2_rejects_misaligned() {
        let g = make_grid(11).unwrap();
        let a = SmoothCurve::from_fn("a", &g, |_| 0.0);
        let b = SmoothCurve::new("b", vec![0.0; 5]).unwrap();
        assert!(l2_distance(&a, &b, &g).is_err());
        assert!(pairwise_l2(&[a, b], &g).is_err());
    }

    #[test]
    fn pairwise_small_cases() {
        let g = make_grid(21).unwrap();
        assert!(pairwise_l2(&[], &g).is_err());
        let one = pairwise_l2(&[SmoothCurve::from_fn("a", &g, |t| t)], &g).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.get(0, 0), 0.0);
        let two = pairwise_l2(
            &[SmoothCurve::from_fn("a", &g, |_| 0.0), SmoothCurve::from_fn("b", &g, |_| 1.0)],
            &g,
        )
        .unwrap();
        assert!((two.get(0, 1) - 1.0).abs() < 1e-12);
        assert_eq!(two.get(0, 1), two.get(1, 0));
    }

    fn curves_strategy(count: usize, m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, m), count)
    }

    proptest! {
        #[test]
        fn pairwise_matches_scalar_and_is_metric(raw in curves_strategy(5, 17)) {
            let g = make_grid(17).unwrap();
            let curves: Vec<SmoothCurve> = raw
                .into_iter()
                .enumerate()
                .map(|(i, v)| SmoothCurve::new(i.to_string(), v).unwrap())
                .collect();
            let d = pairwise_l2(&curves, &g).unwrap();
            for i in 0..5 {
                prop_assert_eq!(d.get(i, i), 0.0);
                for j in 0..5 {
                    prop_assert_eq!(d.get(i, j), d.get(j, i));
                    prop_assert!(d.get(i, j) >= 0.0);
                    prop_assert_eq!(d.get(i, j), l2_distance(&curves[i], &curves[j], &g).unwrap());
                    for k in 0..5 {
                        prop_assert!(d.get(i, k) <= d.get(i, j) + d.get(j, k) + 1e-9);
                    }
                }
            }
        }
    }
}
