//! SMO solver against an independent dual QP solver (accelerated projected
//! gradient onto the box-and-hyperplane feasible set).

use fermat_fda::classify::mds::{mds_embed, TargetDim};
use fermat_fda::classify::svm::{median_heuristic, svm_predict, svm_train_ovr, Kernel, SvmConfig};
use fermat_fda::fermat::{fit_fermat, FermatConfig};
use fermat_fda::simgen::{gen_model, SimModel, SimSpec};
use fermat_fda::{Grid, SmoothCurve};

fn gaussian(a: &[f64], b: &[f64], h: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (-sq / (2.0 * h * h)).exp()
}

/// Projects `v` onto `{0 <= a <= c, y'a = 0}` by bisection on the multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - lam * yi).clamp(0.0, c)).collect() };
    let g = |a: &[f64]| a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>();
    let bound = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    // g is non-increasing in lambda
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

struct QpMachine {
    coef: Vec<f64>,
    bias: f64,
}

fn qp_binary(k: &[Vec<f64>], y: &[f64], c: f64) -> QpMachine {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| y[i] * y[j] * k[i][j]).collect()).collect();
    // Lipschitz constant via power iteration
    let mut v = vec![1.0; n];
    let mut lip = 1.0;
    for _ in 0..200 {
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i][j] * v[j]).sum()).collect();
        lip = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / lip).collect();
    }
    let step = 1.0 / (1.01 * lip);
    let mut a = vec![0.0; n];
    let mut a_prev = a.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        let z: Vec<f64> = a.iter().zip(&a_prev).map(|(x, p)| x + mom * (x - p)).collect();
        let grad: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i][j] * z[j]).sum::<f64>() - 1.0).collect();
        let stepped: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi - step * gi).collect();
        a_prev = a;
        a = project(&stepped, y, c);
        t = t_next;
    }
    let coef: Vec<f64> = a.iter().zip(y).map(|(ai, yi)| ai * yi).collect();
    let f = |i: usize| (0..n).map(|j| coef[j] * k[i][j]).sum::<f64>();
    let free: Vec<usize> = (0..n).filter(|&i| a[i] > 1e-6 * c && a[i] < c * (1.0 - 1e-6)).collect();
    let bias = if free.is_empty() {
        0.0
    } else {
        free.iter().map(|&i| y[i] - f(i)).sum::<f64>() / free.len() as f64
    };
    QpMachine { coef, bias }
}

#[test]
fn gaussian_ovr_matches_qp_reference_on_spiral_embedding() {
    let n = 220;
    let n_train = 120;
    let sim = gen_model(&SimSpec::new(SimModel::I, n, n, 100, 2024)).unwrap();
    let grid = Grid::new(101).unwrap();
    // noise-free curves on the grid
    let curves: Vec<SmoothCurve> = sim
        .truth
        .latents
        .iter()
        .enumerate()
        .map(|(i, z)| SmoothCurve::from_fn(format!("c{i}"), &grid, |t| fermat_fda::simgen::gen_mean_curve_i(z[0], z[1], t)))
        .collect();
    let model = fit_fermat(&curves, &grid, &FermatConfig::with_alpha(4.0)).unwrap();
    let emb = mds_embed(&model.distances, TargetDim::Fixed(2)).unwrap();
    let labels = &sim.truth.labels;
    let x_train = emb.rows(0..n_train);
    let y_train = &labels[..n_train];
    let h = median_heuristic(&x_train);
    let c = 1.0;
    let svm = svm_train_ovr(
        &x_train,
        y_train,
        3,
        Kernel::Gaussian { bandwidth: h },
        &[1.0; 3],
        &SvmConfig {
            tolerance: 1e-6,
            ..SvmConfig::default()
        },
    )
    .unwrap();

    let k: Vec<Vec<f64>> = x_train.iter().map(|a| x_train.iter().map(|b| gaussian(a, b, h)).collect()).collect();
    let machines: Vec<QpMachine> = (0..3)
        .map(|cls| {
            let y: Vec<f64> = y_train.iter().map(|&l| if l == cls { 1.0 } else { -1.0 }).collect();
            qp_binary(&k, &y, c)
        })
        .collect();

    let test: Vec<usize> = (n_train..n).collect();
    assert_eq!(test.len(), 100);
    let mut agree = 0;
    for &u in &test {
        let p = emb.point(u);
        let ours = svm_predict(&svm, p).unwrap();
        let scores: Vec<f64> = machines
            .iter()
            .map(|m| x_train.iter().zip(&m.coef).map(|(xi, ci)| ci * gaussian(xi, p, h)).sum::<f64>() + m.bias)
            .collect();
        let mut reference = 0;
        for cls in 1..3 {
            if scores[cls] > scores[reference] {
                reference = cls;
            }
        }
        agree += usize::from(ours == reference);
    }
    assert!(agree >= 95, "agreement {agree}/100");
}
