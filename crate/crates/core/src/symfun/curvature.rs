use std::fmt;
use std::ops::Index;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest supported dimension. Keeps the elementary-symmetric recurrences on
/// fixed-size stack buffers.
pub const MAX_DIM: usize = 32;

/// A point of the positive cone: `n >= 2` strictly positive, finite principal
/// curvatures, stored in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CurvatureVector {
    values: Vec<f64>,
}

impl CurvatureVector {
    /// Validates and sorts `values`.
    pub fn new(values: impl Into<Vec<f64>>) -> Result<Self> {
        let mut values = values.into();
        if values.len() < 2 {
            return Err(Error::arg(format!(
                "curvature vector needs at least 2 entries, got {}",
                values.len()
            )));
        }
        if values.len() > MAX_DIM {
            return Err(Error::arg(format!(
                "curvature vector dimension {} exceeds the supported maximum {MAX_DIM}",
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::domain(format!(
                "entry {i} = {v} is not a finite positive curvature"
            )));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// The umbilic point `(c, ..., c)`.
    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `t * lambda` for `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * t).collect::<Vec<_>>())
    }

    /// True when every entry is bitwise equal to the first.
    pub fn is_umbilic(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    /// Relative spread `max/min - 1`.
    pub fn spread(&self) -> f64 {
        self.max() / self.min() - 1.0
    }
}

impl Index<usize> for CurvatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl fmt::Display for CurvatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}
