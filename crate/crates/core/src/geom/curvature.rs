use super::profile::MeridianProfile;
use crate::error::{Error, Result};
use crate::symfun::CurvatureVector;

/// Curvature data at one grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCurvature {
    /// Curvature of the meridian curve.
    pub merid: f64,
    /// Curvature along the parallels, multiplicity `n - 1`.
    pub par: f64,
    /// Support value `<X, nu> = rho^2 / sqrt(rho^2 + rho'^2)`.
    pub support: f64,
    /// `|X|^2 = rho^2`.
    pub norm_x2: f64,
    /// `rho' / rho`.
    pub slope: f64,
}

impl NodeCurvature {
    pub fn min(&self) -> f64 {
        self.merid.min(self.par)
    }

    pub fn max(&self) -> f64 {
        self.merid.max(self.par)
    }

    pub fn is_convex(&self) -> bool {
        self.merid > 0.0 && self.par > 0.0
    }

    /// Writes `(merid, par, ..., par)` into `out[..n]`.
    pub(crate) fn fill(&self, out: &mut [f64]) {
        out[0] = self.merid;
        for v in &mut out[1..] {
            *v = self.par;
        }
    }
}

/// `cot(theta_j)` for interior nodes; poles hold NaN and are never read.
pub(crate) fn cot_table(grid: usize) -> Vec<f64> {
    let h = std::f64::consts::PI / grid as f64;
    (0..=grid)
        .map(|j| {
            if j == 0 || j == grid {
                f64::NAN
            } else {
                let (s, c) = (j as f64 * h).sin_cos();
                c / s
            }
        })
        .collect()
}

/// Centered differences with even reflection at the poles. With
/// `q = rho'/rho`, `p = rho''/rho`:
/// `merid = (1 + 2q^2 - p) / (rho (1+q^2)^{3/2})`,
/// `par = (1 - q cot theta) / (rho sqrt(1+q^2))`, and at the poles
/// `par = merid = (1 - p)/rho`.
pub(crate) fn node_curvature(rho: &[f64], j: usize, h: f64, cot: f64) -> NodeCurvature {
    let last = rho.len() - 1;
    let r = rho[j];
    let (prev, next) = match j {
        0 => (rho[1], rho[1]),
        _ if j == last => (rho[last - 1], rho[last - 1]),
        _ => (rho[j - 1], rho[j + 1]),
    };
    let q = (next - prev) / (2.0 * h * r);
    let p = (next - 2.0 * r + prev) / (h * h * r);
    let s = 1.0 + q * q;
    let root = s.sqrt();
    let merid = (1.0 + 2.0 * q * q - p) / (r * s * root);
    let par = if j == 0 || j == last {
        merid
    } else {
        (1.0 - q * cot) / (r * root)
    };
    NodeCurvature {
        merid,
        par,
        support: r / root,
        norm_x2: r * r,
        slope: q,
    }
}

/// Per-node principal curvatures, support function and `|X|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    n: usize,
    nodes: Vec<NodeCurvature>,
}

impl CurvatureField {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[NodeCurvature] {
        &self.nodes
    }

    pub fn merid(&self) -> Vec<f64> {
        self.nodes.iter().map(|c| c.merid).collect()
    }

    pub fn par(&self) -> Vec<f64> {
        self.nodes.iter().map(|c| c.par).collect()
    }

    pub fn support(&self) -> Vec<f64> {
        self.nodes.iter().map(|c| c.support).collect()
    }

    pub fn norm_x2(&self) -> Vec<f64> {
        self.nodes.iter().map(|c| c.norm_x2).collect()
    }

    pub fn min_curvature(&self) -> f64 {
        self.nodes.iter().map(NodeCurvature::min).fold(f64::INFINITY, f64::min)
    }

    pub fn max_curvature(&self) -> f64 {
        self.nodes.iter().map(NodeCurvature::max).fold(f64::NEG_INFINITY, f64::max)
    }

    /// First node with a non-positive principal curvature.
    pub fn first_nonconvex(&self) -> Option<(usize, f64, f64)> {
        self.nodes
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_convex())
            .map(|(j, c)| (j, c.merid, c.par))
    }

    pub fn is_convex(&self) -> bool {
        self.first_nonconvex().is_none()
    }

    /// `max curvature / min curvature - 1` over all nodes.
    pub fn roundness(&self) -> Result<f64> {
        if let Some((j, m, p)) = self.first_nonconvex() {
            return Err(Error::domain(format!("profile not strictly convex at node {j} ({m}, {p})")));
        }
        Ok(self.max_curvature() / self.min_curvature() - 1.0)
    }

    /// The full curvature vector `(merid, par, ..., par)` at node `j`.
    pub fn lambda(&self, j: usize) -> Result<CurvatureVector> {
        let c = self.nodes.get(j).ok_or_else(|| Error::arg(format!("node {j} out of range")))?;
        let mut v = vec![0.0; self.n];
        c.fill(&mut v);
        CurvatureVector::new(v)
    }
}

/// Evaluates [`NodeCurvature`] at every node of `p`.
pub fn curvature_field(p: &MeridianProfile) -> Result<CurvatureField> {
    let rho = p.rho();
    let h = p.dtheta();
    let cot = cot_table(p.grid());
    let nodes: Vec<NodeCurvature> = (0..rho.len()).map(|j| node_curvature(rho, j, h, cot[j])).collect();
    if let Some(j) = nodes
        .iter()
        .position(|c| !(c.merid.is_finite() && c.par.is_finite() && c.support.is_finite()))
    {
        return Err(Error::numeric(format!("non-finite curvature at node {j}")));
    }
    Ok(CurvatureField { n: p.dim(), nodes })
}
