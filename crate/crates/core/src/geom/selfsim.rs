use serde::Serialize;

use super::curvature::{curvature_field, CurvatureField};
use super::profile::MeridianProfile;
use crate::error::{Error, Result};
use crate::symfun::{eval_bundle, CurvatureVector, IdentityResidual, SpeedFunction, MAX_DIM};

fn require_convex(field: &CurvatureField) -> Result<()> {
    match field.first_nonconvex() {
        Some((j, m, p)) => Err(Error::domain(format!(
            "profile leaves the positive cone at node {j}: curvatures ({m}, {p})"
        ))),
        None => Ok(()),
    }
}

/// `F` at each node of a convex field.
pub(crate) fn speed_values(field: &CurvatureField, f: &SpeedFunction) -> Vec<f64> {
    let n = field.dim();
    let mut buf = [0.0; MAX_DIM];
    field
        .nodes()
        .iter()
        .map(|c| {
            c.fill(&mut buf[..n]);
            f.value_at(&buf[..n])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfSimResidual {
    pub max_abs: f64,
    pub mean_abs: f64,
}

/// `|F(lambda) + C - u|` over the grid.
pub fn selfsim_residual(p: &MeridianProfile, f: &SpeedFunction, c: f64) -> Result<SelfSimResidual> {
    let field = curvature_field(p)?;
    require_convex(&field)?;
    Ok(selfsim_from_field(&field, f, c))
}

pub(crate) fn selfsim_from_field(field: &CurvatureField, f: &SpeedFunction, c: f64) -> SelfSimResidual {
    let speeds = speed_values(field, f);
    let res: Vec<f64> = speeds
        .iter()
        .zip(field.nodes())
        .map(|(s, node)| (s + c - node.support).abs())
        .collect();
    SelfSimResidual {
        max_abs: res.iter().copied().fold(0.0, f64::max),
        mean_abs: res.iter().sum::<f64>() / res.len() as f64,
    }
}

/// The radius `r` with `F(1/r, ..., 1/r) + C = r`, by bisection.
///
/// Needs `beta > 0` and `F(1, ..., 1) > 0`, so the left side is strictly
/// decreasing in `r`.
pub fn stationary_sphere_radius(f: &SpeedFunction, c: f64, n: usize) -> Result<f64> {
    if !(c <= 0.0) {
        return Err(Error::arg(format!("shift constant must be <= 0, got {c}")));
    }
    let unit = f.value(&CurvatureVector::constant(n, 1.0)?);
    if !(unit > 0.0) || !unit.is_finite() {
        return Err(Error::domain(format!("F(1, ..., 1) = {unit} is not positive")));
    }
    if !(f.beta() > 0.0) {
        return Err(Error::arg(format!("degree must be positive, got {}", f.beta())));
    }
    let beta = f.beta();
    let g = |r: f64| unit * r.powf(-beta) + c - r;

    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    let mut expansions = 0;
    while !(g(lo) > 0.0) {
        lo *= 0.5;
        expansions += 1;
        if expansions > 2000 || lo == 0.0 {
            return Err(Error::numeric("could not bracket the stationary radius from below"));
        }
    }
    while !(g(hi) < 0.0) {
        hi *= 2.0;
        expansions += 1;
        if expansions > 2000 || !hi.is_finite() {
            return Err(Error::numeric("could not bracket the stationary radius from above"));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi })
}

/// `Z = F tr b - n(beta-1)/(2 beta)|X|^2` and
/// `W = F/lambda_min - (beta-1)/(2 beta)|X|^2` at each node.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

fn extent(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

impl Diagnostics {
    pub fn z_range(&self) -> (f64, f64) {
        extent(&self.z)
    }

    pub fn w_range(&self) -> (f64, f64) {
        extent(&self.w)
    }
}

pub fn diagnostics(p: &MeridianProfile, f: &SpeedFunction) -> Result<Diagnostics> {
    let field = curvature_field(p)?;
    require_convex(&field)?;
    diagnostics_from_field(&field, f)
}

pub(crate) fn diagnostics_from_field(field: &CurvatureField, f: &SpeedFunction) -> Result<Diagnostics> {
    let beta = f.beta();
    if beta == 0.0 {
        return Err(Error::arg("diagnostics need a speed of nonzero degree"));
    }
    let n = field.dim() as f64;
    let k = (beta - 1.0) / (2.0 * beta);
    let speeds = speed_values(field, f);
    let mut z = Vec::with_capacity(speeds.len());
    let mut w = Vec::with_capacity(speeds.len());
    for (s, c) in speeds.iter().zip(field.nodes()) {
        let tr_b = 1.0 / c.merid + (n - 1.0) / c.par;
        z.push(s * tr_b - n * k * c.norm_x2);
        w.push(s / c.min() - k * c.norm_x2);
    }
    Ok(Diagnostics { z, w })
}

/// Residuals of two identities that hold on the stationary sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereIdentityResiduals {
    pub radius: f64,
    /// `beta F - (sum_i F_i lambda_i^2)(F + C)`.
    pub cubic: IdentityResidual,
    /// `sum_i F_i - beta F (F + C)`.
    pub trace: IdentityResidual,
}

impl SphereIdentityResiduals {
    pub fn max_relative(&self) -> f64 {
        self.cubic.relative().max(self.trace.relative())
    }
}

/// Evaluates both identities at `lambda = 1/r*` on the stationary sphere.
pub fn sphere_identity_residuals(f: &SpeedFunction, c: f64, n: usize) -> Result<SphereIdentityResiduals> {
    let r = stationary_sphere_radius(f, c, n)?;
    let lambda = CurvatureVector::constant(n, 1.0 / r)?;
    let b = eval_bundle(f, &lambda);
    let beta = f.beta();
    let fv = b.value;
    let l = 1.0 / r;
    let sum_g: f64 = b.gradient.iter().sum();
    let sum_gl2: f64 = b.gradient.iter().map(|g| g * l * l).sum();
    let shifted = fv + c;
    Ok(SphereIdentityResiduals {
        radius: r,
        cubic: IdentityResidual {
            residual: beta * fv - sum_gl2 * shifted,
            scale: (beta * fv).abs() + (sum_gl2 * shifted).abs(),
        },
        trace: IdentityResidual {
            residual: sum_g - beta * fv * shifted,
            scale: sum_g.abs() + (beta * fv * shifted).abs(),
        },
    })
}
