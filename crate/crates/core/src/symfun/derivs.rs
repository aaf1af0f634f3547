use nalgebra::{DMatrix, DVector};

use super::curvature::CurvatureVector;
use super::speed::{Order, SpeedFunction};
use crate::error::{Error, Result};

/// Relative gap below which a divided difference of the gradient is replaced
/// by its limit.
pub const DIVIDED_DIFFERENCE_GAP: f64 = 1e-8;

/// Derivatives of `log F`, present only where `F > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDerivatives {
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBundle {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub log: Option<LogDerivatives>,
}

impl DerivativeBundle {
    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    /// Log-gradient, or a domain error when `F <= 0`.
    pub fn log_gradient(&self) -> Result<&DVector<f64>> {
        self.log
            .as_ref()
            .map(|l| &l.gradient)
            .ok_or_else(|| Error::domain(format!("log F undefined where F = {}", self.value)))
    }

    pub fn log_hessian(&self) -> Result<&DMatrix<f64>> {
        self.log
            .as_ref()
            .map(|l| &l.hessian)
            .ok_or_else(|| Error::domain(format!("log F undefined where F = {}", self.value)))
    }
}

/// Value, gradient and Hessian of `f` at `lambda` (indices follow the
/// ascending order of `lambda`), plus log-derivatives `g = DF/F`,
/// `H = D2F/F - g g^T` when `F > 0`.
pub fn eval_bundle(f: &SpeedFunction, lambda: &CurvatureVector) -> DerivativeBundle {
    let n = lambda.dim();
    let jet = f.jet_at(lambda.as_slice(), Order::Hessian);
    let gradient = DVector::from_vec(jet.gradient);
    // symmetrize by construction: the jet is built from symmetric pieces, but
    // float accumulation order may differ between (i, j) and (j, i).
    let mut hessian = DMatrix::from_row_slice(n, n, &jet.hessian);
    for i in 0..n {
        for j in (i + 1)..n {
            let h = hessian[(i, j)];
            hessian[(j, i)] = h;
        }
    }
    let value = jet.value;
    let log = (value > 0.0 && value.is_finite()).then(|| {
        let g = &gradient / value;
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = hessian[(i, j)] / value - g[i] * g[j];
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        LogDerivatives {
            gradient: g,
            hessian: h,
        }
    });
    DerivativeBundle {
        value,
        gradient,
        hessian,
        log,
    }
}

/// `sum_i lambda_i dF/dlambda_i - beta F`.
pub fn euler_residual(f: &SpeedFunction, lambda: &CurvatureVector) -> f64 {
    let jet = f.jet_at(lambda.as_slice(), Order::Gradient);
    let euler: f64 = lambda
        .as_slice()
        .iter()
        .zip(&jet.gradient)
        .map(|(l, g)| l * g)
        .sum();
    euler - f.beta() * jet.value
}

/// `(dF/dlambda_p - dF/dlambda_q) / (lambda_p - lambda_q)`, with the limit
/// `(F_pp + F_qq)/2 - F_pq` used when the two curvatures are within
/// [`DIVIDED_DIFFERENCE_GAP`] of each other relative to `max(lambda)`.
pub fn gradient_divided_difference(
    bundle: &DerivativeBundle,
    lambda: &CurvatureVector,
    p: usize,
    q: usize,
) -> f64 {
    let gap = lambda[p] - lambda[q];
    if gap.abs() < DIVIDED_DIFFERENCE_GAP * lambda.max() {
        0.5 * (bundle.hessian[(p, p)] + bundle.hessian[(q, q)]) - bundle.hessian[(p, q)]
    } else {
        (bundle.gradient[p] - bundle.gradient[q]) / gap
    }
}

/// First and second derivative of `t -> F(W + tB)` at `t = 0` for
/// `W = diag(lambda)`, expressed through eigenvalue derivatives of `F`.
///
/// `b` is indexed in the ascending order of `lambda` and must be symmetric.
pub fn second_derivative_form(
    f: &SpeedFunction,
    lambda: &CurvatureVector,
    b: &DMatrix<f64>,
) -> Result<(f64, f64)> {
    let n = lambda.dim();
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::arg(format!(
            "direction matrix is {}x{}, expected {n}x{n}",
            b.nrows(),
            b.ncols()
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (x, y) = (b[(i, j)], b[(j, i)]);
            if (x - y).abs() > 1e-14 * x.abs().max(y.abs()).max(1.0) {
                return Err(Error::arg(format!("direction matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    let bundle = eval_bundle(f, lambda);
    let first: f64 = (0..n).map(|p| bundle.gradient[p] * b[(p, p)]).sum();
    let mut second = 0.0;
    for p in 0..n {
        for q in 0..n {
            second += bundle.hessian[(p, q)] * b[(p, p)] * b[(q, q)];
        }
    }
    for p in 0..n {
        for q in (p + 1)..n {
            second += 2.0 * gradient_divided_difference(&bundle, lambda, p, q) * b[(p, q)].powi(2);
        }
    }
    Ok((first, second))
}
