//! Shared fixtures for the sampler benchmarks.

use nalgebra::{DMatrix, DVector};
use orthant_enet::{center_data, RegressionData};

/// Deterministic regression problem with mildly correlated columns.
pub fn synthetic_data(n: usize, p: usize) -> RegressionData {
    let x = DMatrix::from_fn(n, p, |i, j| {
        let t = (i * 31 + j * 17) as f64;
        (t * 0.37).sin() + 0.3 * ((i + j) as f64 * 0.11).cos()
    });
    let beta = DVector::from_fn(p, |j, _| if j % 3 == 0 { 1.5 } else { 0.0 });
    let y = &x * beta + DVector::from_fn(n, |i, _| ((i * 7) as f64 * 0.53).sin());
    center_data(y.as_slice(), &x, false).expect("fixture data are well conditioned")
}
