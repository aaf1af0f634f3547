use serde::Serialize;

use super::curvature::{CurvatureVector, MAX_DIM};
use crate::error::{Error, Result};

/// `sigma_k` of `values` with the positions in `skip` left out, by the
/// prefix recurrence `e_j <- e_j + x e_{j-1}`.
///
/// Returns 1 for `k == 0` and 0 for `k < 0` or `k` larger than the number of
/// retained entries.
pub(crate) fn sigma_skip(values: &[f64], k: isize, skip: &[usize]) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let k = k as usize;
    if k == 0 {
        return 1.0;
    }
    let retained = values.len() - skip.len();
    if k > retained {
        return 0.0;
    }
    let mut e = [0.0f64; MAX_DIM + 1];
    e[0] = 1.0;
    let mut count = 0usize;
    for (i, &x) in values.iter().enumerate() {
        if skip.contains(&i) {
            continue;
        }
        count += 1;
        for j in (1..=count.min(k)).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e[k]
}

/// `sigma_k` of the full slice.
#[inline]
pub(crate) fn sigma_all(values: &[f64], k: isize) -> f64 {
    sigma_skip(values, k, &[])
}

/// `sigma_k(lambda)` with the entries at `excluded` removed (equivalently set
/// to zero). Indices refer to the ascending order of `lambda`.
pub fn sigma(lambda: &CurvatureVector, k: i32, excluded: &[usize]) -> Result<f64> {
    let n = lambda.dim();
    for (pos, &i) in excluded.iter().enumerate() {
        if i >= n {
            return Err(Error::arg(format!(
                "excluded index {i} out of range for dimension {n}"
            )));
        }
        if excluded[..pos].contains(&i) {
            return Err(Error::arg(format!("excluded index {i} repeated")));
        }
    }
    Ok(sigma_skip(lambda.as_slice(), k as isize, excluded))
}

/// Power sum `S_k = sum_i lambda_i^k`, `k >= 1`.
pub fn power_sum(lambda: &CurvatureVector, k: i32) -> Result<f64> {
    if k < 1 {
        return Err(Error::arg(format!("power sum order must be >= 1, got {k}")));
    }
    Ok(lambda.as_slice().iter().map(|x| x.powi(k)).sum())
}

/// One residual `lhs - rhs` together with the magnitude of the terms that
/// produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub residual: f64,
    pub scale: f64,
}

impl IdentityResidual {
    fn new(residual: f64, scale: f64) -> Self {
        Self { residual, scale }
    }

    /// `|residual| / scale`, or the bare residual magnitude when every term
    /// vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual.abs() / self.scale
        } else {
            self.residual.abs()
        }
    }
}

/// Residuals of the four standard identities linking `sigma_k`, `sigma_{k;i}`
/// and the entries of `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaIdentityResiduals {
    /// `sigma_{k+1} - sigma_{k+1;i} - lambda_i sigma_{k;i}`, worst over `i`.
    pub split: IdentityResidual,
    /// `sum_i lambda_i sigma_{k;i} - (k+1) sigma_{k+1}`.
    pub weighted_sum: IdentityResidual,
    /// `sum_i sigma_{k;i} - (n-k) sigma_k`.
    pub plain_sum: IdentityResidual,
    /// `sum_i lambda_i^2 sigma_{k;i} - (sigma_1 sigma_{k+1} - (k+2) sigma_{k+2})`.
    pub square_sum: IdentityResidual,
}

impl SigmaIdentityResiduals {
    pub fn as_array(&self) -> [IdentityResidual; 4] {
        [
            self.split,
            self.weighted_sum,
            self.plain_sum,
            self.square_sum,
        ]
    }

    pub fn max_relative(&self) -> f64 {
        self.as_array()
            .iter()
            .map(IdentityResidual::relative)
            .fold(0.0, f64::max)
    }
}

/// Evaluates the four identities for `0 <= k <= n`. Scales are the sums of the
/// absolute values of the terms on both sides.
pub fn sigma_identity_residuals(lambda: &CurvatureVector, k: i32) -> Result<SigmaIdentityResiduals> {
    let n = lambda.dim();
    if k < 0 || k as usize > n {
        return Err(Error::arg(format!("identity order k={k} outside 0..={n}")));
    }
    let v = lambda.as_slice();
    let k = k as isize;
    let s = |j: isize| sigma_all(v, j);
    let s_excl: Vec<f64> = (0..n).map(|i| sigma_skip(v, k, &[i])).collect();
    let s_next_excl: Vec<f64> = (0..n).map(|i| sigma_skip(v, k + 1, &[i])).collect();

    let sk = s(k);
    let sk1 = s(k + 1);
    let sk2 = s(k + 2);

    let mut split = IdentityResidual::new(0.0, 0.0);
    for i in 0..n {
        let r = sk1 - s_next_excl[i] - v[i] * s_excl[i];
        let sc = sk1.abs() + s_next_excl[i].abs() + (v[i] * s_excl[i]).abs();
        let cand = IdentityResidual::new(r, sc);
        if cand.relative() > split.relative() || i == 0 {
            split = cand;
        }
    }

    let lhs2: f64 = (0..n).map(|i| v[i] * s_excl[i]).sum();
    let rhs2 = (k + 1) as f64 * sk1;
    let weighted_sum = IdentityResidual::new(lhs2 - rhs2, lhs2.abs() + rhs2.abs());

    let lhs3: f64 = s_excl.iter().sum();
    let rhs3 = (n as isize - k) as f64 * sk;
    let plain_sum = IdentityResidual::new(lhs3 - rhs3, lhs3.abs() + rhs3.abs());

    let lhs4: f64 = (0..n).map(|i| v[i] * v[i] * s_excl[i]).sum();
    let a = s(1) * sk1;
    let b = (k + 2) as f64 * sk2;
    let square_sum = IdentityResidual::new(lhs4 - (a - b), lhs4.abs() + a.abs() + b.abs());

    Ok(SigmaIdentityResiduals {
        split,
        weighted_sum,
        plain_sum,
        square_sum,
    })
}
