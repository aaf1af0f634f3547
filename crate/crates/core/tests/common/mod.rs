//! Finite-difference oracles shared by the integration targets. They only use
//! plain function values of `F` and, for the Hessian, the gradient after it
//! has been checked against differences of values.

#![allow(dead_code)]

use flowlab::symfun::{eval_bundle, CurvatureVector, SpeedFunction};
use nalgebra::DMatrix;

pub fn cv(v: &[f64]) -> CurvatureVector {
    CurvatureVector::new(v.to_vec()).unwrap()
}

/// Two Richardson levels on a central difference `d(s)` taken with step `s h`.
pub fn richardson(d: impl Fn(f64) -> f64) -> f64 {
    let (d1, d2, d4) = (d(1.0), d(0.5), d(0.25));
    let (r1, r2) = ((4.0 * d2 - d1) / 3.0, (4.0 * d4 - d2) / 3.0);
    (16.0 * r2 - r1) / 15.0
}

fn shifted(v: &[f64], i: usize, d: f64) -> Vec<f64> {
    let mut w = v.to_vec();
    w[i] += d;
    w
}

/// Gradient of `f` at `w`, indexed like `w` rather than in sorted order.
pub fn gradient_in_input_order(f: &SpeedFunction, w: &[f64]) -> Vec<f64> {
    let g = eval_bundle(f, &cv(w)).gradient;
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]));
    let mut out = vec![0.0; w.len()];
    for (rank, &idx) in order.iter().enumerate() {
        out[idx] = g[rank];
    }
    out
}

/// Relative step used for entry `i`.
pub const FD_STEP: f64 = 0.05;

/// Gradient from values of `f`, steps proportional to each entry.
pub fn fd_gradient(f: &SpeedFunction, v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let h = FD_STEP * v[i];
            richardson(|s| (f.value(&cv(&shifted(v, i, s * h))) - f.value(&cv(&shifted(v, i, -s * h)))) / (2.0 * s * h))
        })
        .collect()
}

/// Hessian from differences of the gradient, column by column.
pub fn fd_hessian(f: &SpeedFunction, v: &[f64]) -> DMatrix<f64> {
    let n = v.len();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let h = FD_STEP * v[j];
        let plus: Vec<Vec<f64>> = [1.0, 0.5, 0.25]
            .iter()
            .map(|s| gradient_in_input_order(f, &shifted(v, j, s * h)))
            .collect();
        let minus: Vec<Vec<f64>> = [1.0, 0.5, 0.25]
            .iter()
            .map(|s| gradient_in_input_order(f, &shifted(v, j, -s * h)))
            .collect();
        for i in 0..n {
            let level = |s: f64| {
                let idx = if s == 1.0 { 0 } else if s == 0.5 { 1 } else { 2 };
                (plus[idx][i] - minus[idx][i]) / (2.0 * s * h)
            };
            out[(i, j)] = richardson(level);
        }
    }
    out
}

/// Largest entrywise deviation of the closed-form gradient and Hessian from
/// the oracles, relative to `max |grad|` and `max(max |H|, max |grad| / max
/// lambda)`. `v` must be sorted ascending.
pub fn derivative_errors(f: &SpeedFunction, v: &[f64]) -> (f64, f64) {
    let b = eval_bundle(f, &cv(v));
    let n = v.len();
    let g = fd_gradient(f, v);
    let gmax = b.gradient.amax();
    let grad_err = (0..n).map(|i| (g[i] - b.gradient[i]).abs()).fold(0.0, f64::max) / gmax;
    let h = fd_hessian(f, v);
    let hmax = b.hessian.amax().max(gmax / v[n - 1]);
    let hess_err = (&h - &b.hessian).amax() / hmax;
    (grad_err, hess_err)
}
