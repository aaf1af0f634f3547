use crate::error::{Error, Result};
use crate::geom::{cot_table, curvature_field, node_curvature, CurvatureField, MeridianProfile};
use crate::symfun::{CurvatureVector, Order, SpeedFunction, MAX_DIM};

/// The radial velocity `rho_t = -F(lambda) sqrt(rho^2 + rho'^2) / rho` on a
/// fixed grid.
struct Rhs<'a> {
    speed: &'a SpeedFunction,
    n: usize,
    h: f64,
    cot: Vec<f64>,
}

impl Rhs<'_> {
    fn eval(&self, rho: &[f64], stage: usize, out: &mut [f64]) -> Result<()> {
        let n = self.n;
        let mut buf = [0.0; MAX_DIM];
        for j in 0..rho.len() {
            if !(rho[j] > 0.0 && rho[j].is_finite()) {
                return Err(Error::ConvexityLost {
                    node: j,
                    stage,
                    reason: format!("radius {} is not positive", rho[j]),
                });
            }
            let c = node_curvature(rho, j, self.h, self.cot[j]);
            if !c.is_convex() {
                return Err(Error::ConvexityLost {
                    node: j,
                    stage,
                    reason: format!("principal curvatures ({}, {})", c.merid, c.par),
                });
            }
            c.fill(&mut buf[..n]);
            let speed = self.speed.value_at(&buf[..n]);
            if !speed.is_finite() {
                return Err(Error::numeric(format!("speed not finite at node {j} (stage {stage})")));
            }
            out[j] = -speed * (1.0 + c.slope * c.slope).sqrt();
        }
        Ok(())
    }
}

/// Classical 4-stage integrator with preallocated stage buffers.
pub(crate) struct Stepper<'a> {
    rhs: Rhs<'a>,
    stages: [Vec<f64>; 4],
    scratch: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(speed: &'a SpeedFunction, n: usize, grid: usize) -> Self {
        let len = grid + 1;
        Self {
            rhs: Rhs {
                speed,
                n,
                h: std::f64::consts::PI / grid as f64,
                cot: cot_table(grid),
            },
            stages: std::array::from_fn(|_| vec![0.0; len]),
            scratch: vec![0.0; len],
        }
    }

    /// Advances `rho` by `dt` in place. Stages are numbered 1 to 4 and the
    /// combined update is stage 5; `rho` is untouched on error.
    pub(crate) fn step(&mut self, rho: &mut [f64], dt: f64) -> Result<()> {
        let rhs = &self.rhs;
        let [k1, k2, k3, k4] = &mut self.stages;
        let tmp = &mut self.scratch;
        let len = rho.len();

        rhs.eval(rho, 1, k1)?;
        for j in 0..len {
            tmp[j] = rho[j] + 0.5 * dt * k1[j];
        }
        rhs.eval(tmp, 2, k2)?;
        for j in 0..len {
            tmp[j] = rho[j] + 0.5 * dt * k2[j];
        }
        rhs.eval(tmp, 3, k3)?;
        for j in 0..len {
            tmp[j] = rho[j] + dt * k3[j];
        }
        rhs.eval(tmp, 4, k4)?;
        for j in 0..len {
            let next = rho[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            if !(next > 0.0 && next.is_finite()) {
                return Err(Error::ConvexityLost {
                    node: j,
                    stage: 5,
                    reason: format!("updated radius {next} is not positive"),
                });
            }
            tmp[j] = next;
        }
        rho.copy_from_slice(tmp);
        Ok(())
    }
}

/// One step of `X_t = -F nu` on the radial graph.
pub fn flow_step(p: &MeridianProfile, speed: &SpeedFunction, dt: f64) -> Result<MeridianProfile> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::arg(format!("time step must be positive, got {dt}")));
    }
    if !speed.fits_dimension(p.dim()) {
        return Err(Error::arg(format!("speed `{speed}` does not fit dimension {}", p.dim())));
    }
    let mut rho = p.rho().to_vec();
    Stepper::new(speed, p.dim(), p.grid()).step(&mut rho, dt)?;
    MeridianProfile::new(p.dim(), rho)
}

/// `cfl * dtheta^2 / D_max` with
/// `D_j = (F_merid + (n-1) F_par) / (rho^2 + rho'^2)`.
///
/// The meridian term is the coefficient of `rho''` in the radial equation; the
/// parallel term is added because at and next to the poles `rho'' ` also enters
/// through the parallel curvature.
pub fn stable_time_step(p: &MeridianProfile, field: &CurvatureField, speed: &SpeedFunction, cfl: f64) -> Result<f64> {
    let n = p.dim();
    let mut buf = [0.0; MAX_DIM];
    let mut d_max = 0.0f64;
    for (c, r) in field.nodes().iter().zip(p.rho()) {
        c.fill(&mut buf[..n]);
        let jet = speed.jet_at(&buf[..n], Order::Gradient);
        let metric = r * r * (1.0 + c.slope * c.slope);
        let d = (jet.gradient[0].abs() + (n - 1) as f64 * jet.gradient[1].abs()) / metric;
        d_max = d_max.max(d);
    }
    if !(d_max > 0.0 && d_max.is_finite()) {
        return Err(Error::numeric(format!("diffusion estimate {d_max} is not usable")));
    }
    Ok(cfl * p.dtheta() * p.dtheta() / d_max)
}

/// `max curvature / min curvature - 1` over the grid.
pub fn roundness(p: &MeridianProfile) -> Result<f64> {
    curvature_field(p)?.roundness()
}

/// Radius at time `t` of the sphere shrinking from `r0` under `F`:
/// `(r0^{1+beta} - (1+beta) F(1,...,1) t)^{1/(1+beta)}`.
pub fn shrinking_sphere_oracle(speed: &SpeedFunction, n: usize, r0: f64, t: f64) -> Result<f64> {
    if !(r0 > 0.0 && r0.is_finite()) || !(t >= 0.0) {
        return Err(Error::arg(format!("need r0 > 0 and t >= 0, got r0={r0}, t={t}")));
    }
    let unit = speed.value(&CurvatureVector::constant(n, 1.0)?);
    let beta = speed.beta();
    if !(unit > 0.0) || !(beta > -1.0) {
        return Err(Error::domain("shrinking sphere needs F(1,...,1) > 0 and beta > -1"));
    }
    let e = 1.0 + beta;
    let base = r0.powf(e) - e * unit * t;
    if !(base > 0.0) {
        let extinction = r0.powf(e) / (e * unit);
        return Err(Error::domain(format!("t={t} is at or past the extinction time {extinction}")));
    }
    Ok(base.powf(1.0 / e))
}
