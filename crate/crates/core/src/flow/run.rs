use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use super::config::{FlowConfig, Mode};
use super::step::{stable_time_step, Stepper};
use crate::error::{Error, Result};
use crate::geom::{
    curvature_field, diagnostics_from_field, selfsim_from_field, stationary_sphere_radius, CurvatureField,
    MeridianProfile,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    Shrunk,
    StepLimit,
    ConvexityLost,
}

impl FlowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowStatus::Converged => "converged",
            FlowStatus::Shrunk => "shrunk",
            FlowStatus::StepLimit => "step_limit",
            FlowStatus::ConvexityLost => "convexity_lost",
        }
    }
}

/// Observables at one recorded step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowRecord {
    pub t: f64,
    pub step: u64,
    pub mean_radius: f64,
    pub roundness: f64,
    pub selfsim_residual_max: f64,
    #[serde(rename = "Z_min")]
    pub z_min: f64,
    #[serde(rename = "Z_max")]
    pub z_max: f64,
    #[serde(rename = "W_min")]
    pub w_min: f64,
    #[serde(rename = "W_max")]
    pub w_max: f64,
    pub min_curvature: f64,
}

/// Where a run left the positive cone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityFailure {
    pub step: u64,
    pub node: usize,
    pub stage: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub status: FlowStatus,
    pub steps: u64,
    pub time: f64,
    /// Last profile that was inside the cone.
    pub final_profile: MeridianProfile,
    pub failure: Option<ConvexityFailure>,
    /// Normalization target in normalized mode.
    pub target_radius: Option<f64>,
    pub wall_time_ms: f64,
}

impl FlowTrace {
    pub fn last_record(&self) -> Option<&FlowRecord> {
        self.records.last()
    }

    /// One row per record, columns as in [`FlowRecord`].
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.records.is_empty() {
            w.write_record([
                "t",
                "step",
                "mean_radius",
                "roundness",
                "selfsim_residual_max",
                "Z_min",
                "Z_max",
                "W_min",
                "W_max",
                "min_curvature",
            ])?;
        }
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> FlowSummary {
        let last = self.last_record();
        FlowSummary {
            status: self.status,
            steps: self.steps,
            final_time: self.time,
            final_roundness: last.map(|r| r.roundness),
            final_residual: last.map(|r| r.selfsim_residual_max),
            final_mean_radius: last.map(|r| r.mean_radius),
            oracle_mean_radius: None,
            failure: self.failure.clone(),
            wall_time_ms: self.wall_time_ms,
        }
    }
}

/// Compact JSON summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSummary {
    pub status: FlowStatus,
    pub steps: u64,
    pub final_time: f64,
    pub final_roundness: Option<f64>,
    pub final_residual: Option<f64>,
    pub final_mean_radius: Option<f64>,
    /// Radius of the exactly shrinking sphere at the final time, when the run
    /// started from a sphere in raw mode.
    pub oracle_mean_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<ConvexityFailure>,
    pub wall_time_ms: f64,
}

fn observe(
    config: &FlowConfig,
    profile: &MeridianProfile,
    field: &CurvatureField,
    t: f64,
    step: u64,
) -> Result<FlowRecord> {
    let diag = diagnostics_from_field(field, &config.speed)?;
    let (z_min, z_max) = diag.z_range();
    let (w_min, w_max) = diag.w_range();
    Ok(FlowRecord {
        t,
        step,
        mean_radius: profile.mean_radius(),
        roundness: field.max_curvature() / field.min_curvature() - 1.0,
        selfsim_residual_max: selfsim_from_field(field, &config.speed, config.c_shift).max_abs,
        z_min,
        z_max,
        w_min,
        w_max,
        min_curvature: field.min_curvature(),
    })
}

fn rescale(rho: &mut [f64], profile_n: usize, target: f64) -> Result<()> {
    let p = MeridianProfile::new(profile_n, rho.to_vec())?;
    let factor = target / p.mean_radius();
    rho.iter_mut().for_each(|r| *r *= factor);
    Ok(())
}

/// Integrates the flow from `initial` until a stop rule holds or the profile
/// leaves the positive cone.
///
/// Leaving the cone is reported through the trace status (with the failing
/// node and stage), never as an `Err`; errors are reserved for invalid
/// configurations and numerical breakdown.
pub fn run_flow(config: &FlowConfig, initial: &MeridianProfile) -> Result<FlowTrace> {
    let started = Instant::now();
    config.validate()?;
    if initial.dim() != config.n || initial.grid() != config.grid {
        return Err(Error::arg(format!(
            "initial profile has n={}, N={}, config expects n={}, N={}",
            initial.dim(),
            initial.grid(),
            config.n,
            config.grid
        )));
    }
    let n = config.n;
    let target = match config.mode {
        Mode::Raw => None,
        Mode::Normalized => Some(stationary_sphere_radius(&config.speed, 0.0, n)?),
    };
    let mut rho = initial.rho().to_vec();
    if let Some(r) = target {
        rescale(&mut rho, n, r)?;
    }
    let stop = config.stop;
    let mut stepper = Stepper::new(&config.speed, n, config.grid);
    let mut records = Vec::new();
    let mut t = 0.0f64;
    let mut step = 0u64;
    let mut failure = None;

    let status = loop {
        let profile = MeridianProfile::new(n, rho.clone())?;
        let field = curvature_field(&profile)?;
        if let Some((node, merid, par)) = field.first_nonconvex() {
            failure = Some(ConvexityFailure {
                step,
                node,
                stage: 0,
                reason: format!("principal curvatures ({merid}, {par})"),
            });
            break FlowStatus::ConvexityLost;
        }
        let roundness = field.max_curvature() / field.min_curvature() - 1.0;
        let mean = profile.mean_radius();
        let done = if stop.roundness_tol.is_some_and(|tol| roundness <= tol) {
            Some(FlowStatus::Converged)
        } else if stop.min_mean_radius.is_some_and(|m| mean <= m) {
            Some(FlowStatus::Shrunk)
        } else if stop.max_steps.is_some_and(|m| step >= m) || stop.max_time.is_some_and(|m| t >= m) {
            Some(FlowStatus::StepLimit)
        } else {
            None
        };
        if step % config.record_every == 0 || done.is_some() {
            records.push(observe(config, &profile, &field, t, step)?);
        }
        if let Some(status) = done {
            break status;
        }

        let mut dt = stable_time_step(&profile, &field, &config.speed, config.cfl)?;
        if let Some(m) = stop.max_time {
            dt = dt.min(m - t);
        }
        match stepper.step(&mut rho, dt) {
            Ok(()) => {}
            Err(Error::ConvexityLost { node, stage, reason }) => {
                failure = Some(ConvexityFailure {
                    step: step + 1,
                    node,
                    stage,
                    reason,
                });
                if records.last().map(|r| r.step) != Some(step) {
                    records.push(observe(config, &profile, &field, t, step)?);
                }
                break FlowStatus::ConvexityLost;
            }
            Err(e) => return Err(e),
        }
        if let Some(r) = target {
            rescale(&mut rho, n, r)?;
        }
        step += 1;
        t += dt;
    };

    // on failure `rho` still holds the last state inside the cone
    let final_profile = MeridianProfile::new(n, rho)?;
    Ok(FlowTrace {
        records,
        status,
        steps: step,
        time: t,
        final_profile,
        failure,
        target_radius: target,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}
