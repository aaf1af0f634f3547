use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symfun::SpeedFunction;

/// Smallest grid a flow run accepts.
pub const MIN_FLOW_GRID: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Plain contraction `X_t = -F nu`.
    Raw,
    /// After every step, rescale so the weighted mean radius equals the
    /// stationary-sphere radius.
    Normalized,
}

/// Stop rules, checked before every step; the first one that holds ends the
/// run. All are checked in both modes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopCriteria {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
    /// Ends with `Converged` once roundness is at or below this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roundness_tol: Option<f64>,
    /// Ends with `Shrunk` once the mean radius is at or below this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_mean_radius: Option<f64>,
}

impl StopCriteria {
    pub fn is_empty(&self) -> bool {
        self.max_steps.is_none()
            && self.max_time.is_none()
            && self.roundness_tol.is_none()
            && self.min_mean_radius.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub speed: SpeedFunction,
    /// Shift `C` of the self-similar equation; used by diagnostics only.
    pub c_shift: f64,
    pub n: usize,
    /// Number of grid intervals `N`.
    pub grid: usize,
    /// Safety factor `c` in `dt = c dtheta^2 / D_max`.
    pub cfl: f64,
    pub mode: Mode,
    pub stop: StopCriteria,
    pub record_every: u64,
}

impl FlowConfig {
    /// Defaults: `C = 0`, `c = 0.5`, raw mode, a record every 100 steps and no
    /// stop rule (one must be added).
    pub fn new(speed: SpeedFunction, n: usize, grid: usize) -> Self {
        Self {
            speed,
            c_shift: 0.0,
            n,
            grid,
            cfl: 0.5,
            mode: Mode::Raw,
            stop: StopCriteria::default(),
            record_every: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid < MIN_FLOW_GRID {
            return Err(Error::arg(format!("grid N={} below {MIN_FLOW_GRID}", self.grid)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::arg(format!("cfl coefficient {} outside (0, 1]", self.cfl)));
        }
        if self.stop.is_empty() {
            return Err(Error::arg("at least one stop criterion is required"));
        }
        if self.record_every == 0 {
            return Err(Error::arg("record_every must be >= 1"));
        }
        if !self.c_shift.is_finite() {
            return Err(Error::arg("shift constant must be finite"));
        }
        if !self.speed.fits_dimension(self.n) {
            return Err(Error::arg(format!("speed `{}` does not fit dimension n={}", self.speed, self.n)));
        }
        if !(self.speed.beta() > 0.0) {
            return Err(Error::arg(format!("speed degree must be positive, got {}", self.speed.beta())));
        }
        let s = &self.stop;
        let positive = |v: Option<f64>, what: &str| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::arg(format!("{what} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive(s.max_time, "max_time")?;
        positive(s.roundness_tol, "roundness_tol")?;
        positive(s.min_mean_radius, "min_mean_radius")?;
        Ok(())
    }
}
