use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::symfun::{sigma_skip, CurvatureVector, IdentityResidual};

/// Dense symmetric matrix. Only ever built by evaluating one triangle and
/// mirroring it, so symmetry is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn from_fn(size: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(size, size);
        for i in 0..size {
            for j in i..size {
                let v = entry(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    /// Symmetric part of an arbitrary square matrix.
    pub fn symmetrized(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::arg("matrix is not square"));
        }
        Ok(Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
    }

    pub fn identity(size: usize) -> Self {
        Self(DMatrix::identity(size, size))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("matrix has non-finite entries"));
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect();
        if ev.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("symmetric eigensolve produced non-finite eigenvalues"));
        }
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }
}

/// Smallest eigenvalue. A matrix is declared PSD when this is at least
/// `-PSD_TOL * frobenius_norm`.
pub fn psd_margin(m: &SymmetricMatrix) -> Result<f64> {
    if m.size() == 0 {
        return Err(Error::arg("empty matrix"));
    }
    Ok(m.eigenvalues()?[0])
}

/// Relative tolerance for PSD verdicts.
pub const PSD_TOL: f64 = 1e-10;

pub fn is_psd(m: &SymmetricMatrix) -> Result<bool> {
    Ok(psd_margin(m)? >= -PSD_TOL * m.frobenius_norm())
}

fn check_order(lambda: &CurvatureVector, k: usize, what: &str) -> Result<()> {
    let n = lambda.dim();
    if k < 1 || k > n {
        return Err(Error::arg(format!("{what}: k={k} outside 1..={n}")));
    }
    Ok(())
}

/// The `(m+1) x (m+1)` matrix with `d00 = sigma_k`, `d0j = sigma_{k;j}`,
/// `dii = sigma_{k;i}` and `dij = sigma_{k;ij}`. Row/column `i >= 1` refers to
/// curvature index `i - 1` in ascending order.
pub fn build_d(lambda: &CurvatureVector, k: usize, m: usize) -> Result<SymmetricMatrix> {
    check_order(lambda, k, "D matrix")?;
    let n = lambda.dim();
    if m < 1 || m > n {
        return Err(Error::arg(format!("D matrix: m={m} outside 1..={n}")));
    }
    let v = lambda.as_slice();
    let k = k as isize;
    Ok(SymmetricMatrix::from_fn(m + 1, |i, j| match (i, j) {
        (0, 0) => sigma_skip(v, k, &[]),
        (0, j) => sigma_skip(v, k, &[j - 1]),
        (i, j) if i == j => sigma_skip(v, k, &[i - 1]),
        (i, j) => sigma_skip(v, k, &[i - 1, j - 1]),
    }))
}

/// `a_ii = sigma_{k-1;i} / lambda_i`, `a_ij = sigma_{k-2;ij}`.
pub fn build_a(lambda: &CurvatureVector, k: usize) -> Result<SymmetricMatrix> {
    check_order(lambda, k, "A matrix")?;
    let v = lambda.as_slice();
    let k = k as isize;
    Ok(SymmetricMatrix::from_fn(lambda.dim(), |i, j| {
        if i == j {
            sigma_skip(v, k - 1, &[i]) / v[i]
        } else {
            sigma_skip(v, k - 2, &[i, j])
        }
    }))
}

/// `xi_i = sigma_{k-1;i}`, the gradient of `sigma_k`.
pub fn xi(lambda: &CurvatureVector, k: usize) -> DVector<f64> {
    let v = lambda.as_slice();
    DVector::from_iterator(v.len(), (0..v.len()).map(|i| sigma_skip(v, k as isize - 1, &[i])))
}

/// `sigma_k A - xi xi^T`, assembled from the cancellation-free entries
/// `w_ii = sigma_{k-1;i} sigma_{k;i} / lambda_i` and
/// `w_ij = sigma_{k;ij} sigma_{k-2;ij} - sigma_{k-1;ij}^2`.
///
/// At `k = n` every entry vanishes identically; the direct difference would
/// leave pure rounding noise there.
pub fn build_a_gap(lambda: &CurvatureVector, k: usize) -> Result<SymmetricMatrix> {
    check_order(lambda, k, "sigma_k A - xi xi^T")?;
    let v = lambda.as_slice();
    let k = k as isize;
    Ok(SymmetricMatrix::from_fn(lambda.dim(), |i, j| {
        if i == j {
            sigma_skip(v, k - 1, &[i]) * sigma_skip(v, k, &[i]) / v[i]
        } else {
            let s = |d: isize| sigma_skip(v, k - d, &[i, j]);
            s(0) * s(2) - s(1) * s(1)
        }
    }))
}

/// `sigma_k A - xi xi^T` evaluated literally from [`build_a`] and [`xi`].
pub fn build_a_gap_direct(lambda: &CurvatureVector, k: usize) -> Result<SymmetricMatrix> {
    let a = build_a(lambda, k)?;
    let x = xi(lambda, k);
    let sk = sigma_skip(lambda.as_slice(), k as isize, &[]);
    Ok(SymmetricMatrix::from_fn(lambda.dim(), |i, j| sk * a.get(i, j) - x[i] * x[j]))
}

/// Upper-left `m x m` block of the congruent matrix with
/// `a~_ii = sigma_{k;i}(sigma_k - sigma_{k;i})` and
/// `a~_ij = sigma_k sigma_{k;ij} - sigma_{k;i} sigma_{k;j}`.
pub fn build_a_tilde(lambda: &CurvatureVector, k: usize, m: usize) -> Result<SymmetricMatrix> {
    check_order(lambda, k, "A~ matrix")?;
    let n = lambda.dim();
    if m < 1 || m > n {
        return Err(Error::arg(format!("A~ matrix: m={m} outside 1..={n}")));
    }
    let v = lambda.as_slice();
    let k = k as isize;
    let sk = sigma_skip(v, k, &[]);
    let si: Vec<f64> = (0..m).map(|i| sigma_skip(v, k, &[i])).collect();
    Ok(SymmetricMatrix::from_fn(m, |i, j| {
        if i == j {
            si[i] * (sk - si[i])
        } else {
            sk * sigma_skip(v, k, &[i, j]) - si[i] * si[j]
        }
    }))
}

/// `det A~_m - sigma_k^{m-1} det D_m`.
///
/// The scale is the larger of the two Hadamard bounds, with the `A~` bound
/// taken over the magnitudes of the products that form each entry (so that
/// cancellation inside an entry does not shrink it).
pub fn det_identity_residual(lambda: &CurvatureVector, k: usize, m: usize) -> Result<IdentityResidual> {
    let a_tilde = build_a_tilde(lambda, k, m)?;
    let d = build_d(lambda, k, m)?;
    let v = lambda.as_slice();
    let ki = k as isize;
    let sk = sigma_skip(v, ki, &[]);
    let power = sk.powi(m as i32 - 1);
    let lhs = a_tilde.determinant();
    let rhs = power * d.determinant();

    let si: Vec<f64> = (0..m).map(|i| sigma_skip(v, ki, &[i])).collect();
    let a_bound: f64 = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mag = if i == j {
                        si[i] * sk + si[i] * si[i]
                    } else {
                        sk * sigma_skip(v, ki, &[i, j]) + si[i] * si[j]
                    };
                    mag * mag
                })
                .sum::<f64>()
                .sqrt()
        })
        .product();
    let d_bound: f64 = (0..=m)
        .map(|i| (0..=m).map(|j| d.get(i, j).powi(2)).sum::<f64>().sqrt())
        .product();
    Ok(IdentityResidual {
        residual: lhs - rhs,
        scale: a_bound.max(power * d_bound),
    })
}
