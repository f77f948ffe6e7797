//! Fixtures shared by the criterion benches.

use fermat_fda::geometry::pairwise_l2;
use fermat_fda::simgen::{gen_model, SimModel, SimSpec};
use fermat_fda::smoothing::smooth_dataset;
use fermat_fda::{Dataset, DistanceMatrix, Grid, SmoothCurve};

/// Model (i) sample with a tenth of the curves labeled.
pub fn model_i(n: usize, j: usize, seed: u64) -> Dataset {
    gen_model(&SimSpec::new(SimModel::I, n, n / 10, j, seed))
        .expect("valid simulation spec")
        .dataset
}

pub struct Smoothed {
    pub grid: Grid,
    pub curves: Vec<SmoothCurve>,
    pub l2: DistanceMatrix,
}

pub fn smoothed(n: usize, j: usize, seed: u64) -> Smoothed {
    let data = model_i(n, j, seed);
    let grid = Grid::new(Grid::default_size(data.curves())).expect("grid size");
    let curves = smooth_dataset(data.curves(), &grid, &Default::default()).expect("smoothing");
    let l2 = pairwise_l2(&curves, &grid).expect("l2");
    Smoothed { grid, curves, l2 }
}
