use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::symfun::MAX_DIM;

/// Smallest grid accepted for a profile.
pub const MIN_GRID: usize = 4;

/// Radial graph of a rotationally symmetric hypersurface in `R^{n+1}`:
/// `rho[j] = rho(theta_j)` at `theta_j = j pi / N`, `j = 0..=N`, with `theta`
/// the polar angle from the symmetry axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MeridianProfile {
    n: usize,
    rho: Vec<f64>,
}

impl MeridianProfile {
    /// Positivity and size are checked; convexity is not (see
    /// [`curvature_field`](super::curvature_field)).
    pub fn new(n: usize, rho: Vec<f64>) -> Result<Self> {
        if n < 2 || n > MAX_DIM {
            return Err(Error::arg(format!("hypersurface dimension n={n} outside 2..={MAX_DIM}")));
        }
        if rho.len() < MIN_GRID + 1 {
            return Err(Error::arg(format!(
                "profile needs at least {} nodes, got {}",
                MIN_GRID + 1,
                rho.len()
            )));
        }
        if let Some((j, r)) = rho.iter().enumerate().find(|(_, r)| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::domain(format!("rho[{j}] = {r} is not a finite positive radius")));
        }
        Ok(Self { n, rho })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of intervals `N`.
    pub fn grid(&self) -> usize {
        self.rho.len() - 1
    }

    pub fn dtheta(&self) -> f64 {
        PI / self.grid() as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * PI / self.grid() as f64
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn into_rho(self) -> Vec<f64> {
        self.rho
    }

    /// `t * rho`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.n, self.rho.iter().map(|r| r * t).collect())
    }

    /// `sin^{n-1}(theta)`-weighted trapezoid mean of `rho`.
    pub fn mean_radius(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (j, r) in self.rho.iter().enumerate() {
            let w = self.theta(j).sin().powi(self.n as i32 - 1);
            num += w * r;
            den += w;
        }
        num / den
    }

    /// Enclosed volume `|S^{n-1}|/(n+1) int rho^{n+1} sin^{n-1} theta`, by
    /// Simpson's rule on even grids and the trapezoid rule otherwise.
    pub fn enclosed_volume(&self) -> f64 {
        let h = self.dtheta();
        let n = self.n as i32;
        let grid = self.grid();
        let integral: f64 = self
            .rho
            .iter()
            .enumerate()
            .map(|(j, r)| {
                let w = if grid % 2 == 1 {
                    h
                } else if j == 0 || j == grid {
                    h / 3.0
                } else if j % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                };
                w * r.powi(n + 1) * self.theta(j).sin().powi(n - 1)
            })
            .sum();
        unit_sphere_area(self.n - 1) / (self.n as f64 + 1.0) * integral
    }

    /// Writes `theta,rho` rows with shortest round-trip formatting.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "rho"])?;
        for (j, r) in self.rho.iter().enumerate() {
            w.write_record([self.theta(j).to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a profile written by [`write_csv`](Self::write_csv). The theta
    /// column must be the uniform grid on `[0, pi]`.
    pub fn read_csv(input: impl Read, n: usize) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "theta" || &headers[1] != "rho" {
            return Err(Error::arg(format!("expected header `theta,rho`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut thetas = Vec::new();
        let mut rho = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::arg(format!("row {}: missing column", line + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::arg(format!("row {}: {e}", line + 1)))
            };
            thetas.push(parse(0)?);
            rho.push(parse(1)?);
        }
        let profile = Self::new(n, rho)?;
        for (j, t) in thetas.iter().enumerate() {
            if (t - profile.theta(j)).abs() > 1e-12 {
                return Err(Error::arg(format!(
                    "row {}: theta {t} is not on the uniform grid (expected {})",
                    j + 1,
                    profile.theta(j)
                )));
            }
        }
        Ok(profile)
    }
}

impl fmt::Display for MeridianProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "profile(n={}, N={})", self.n, self.grid())
    }
}

/// Area of the unit sphere `S^m` in `R^{m+1}`.
pub fn unit_sphere_area(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * unit_sphere_area(m - 2),
    }
}

/// Legendre polynomial `P_l(x)` by the three-term recurrence.
pub fn legendre(l: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if l == 0 {
        return prev;
    }
    for m in 1..l {
        let m = m as f64;
        let next = ((2.0 * m + 1.0) * x * cur - m * prev) / (m + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Initial data families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere { radius: f64 },
    /// Ellipsoid of revolution with equatorial semi-axis `a` and polar
    /// semi-axis `b`.
    Ellipsoid { a: f64, b: f64 },
    /// `rho = r (1 + eps P_l(cos theta))`.
    PerturbedSphere { radius: f64, mode: usize, amplitude: f64 },
}

impl Shape {
    pub fn radius_at(&self, theta: f64) -> f64 {
        match *self {
            Shape::Sphere { radius } => radius,
            Shape::Ellipsoid { a, b } => {
                let (s, c) = theta.sin_cos();
                a * b / (b * b * s * s + a * a * c * c).sqrt()
            }
            Shape::PerturbedSphere { radius, mode, amplitude } => radius * (1.0 + amplitude * legendre(mode, theta.cos())),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Sphere { radius } => radius > 0.0 && radius.is_finite(),
            Shape::Ellipsoid { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            Shape::PerturbedSphere { radius, amplitude, .. } => {
                radius > 0.0 && radius.is_finite() && amplitude.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!("invalid shape parameters: {self:?}")))
        }
    }
}

/// Samples `shape` on the `N`-interval grid and checks strict convexity.
pub fn make_shape(shape: Shape, n: usize, grid: usize) -> Result<MeridianProfile> {
    shape.validate()?;
    if grid < MIN_GRID {
        return Err(Error::arg(format!("grid N={grid} below {MIN_GRID}")));
    }
    let h = PI / grid as f64;
    let rho = (0..=grid)
        .map(|j| match shape {
            // constant profiles stay bitwise constant
            Shape::Sphere { radius } => radius,
            _ => shape.radius_at(j as f64 * h),
        })
        .collect();
    let profile = MeridianProfile::new(n, rho)?;
    let field = super::curvature_field(&profile)?;
    if let Some((j, merid, par)) = field.first_nonconvex() {
        return Err(Error::domain(format!(
            "shape {shape:?} is not strictly convex on the grid: node {j} has curvatures ({merid}, {par})"
        )));
    }
    Ok(profile)
}
