//! Explicit integration of the contracting flow `X_t = -F nu` on radial-graph
//! profiles, in raw and normalized form.

mod config;
mod run;
mod step;

pub use config::{FlowConfig, Mode, StopCriteria, MIN_FLOW_GRID};
pub use run::{run_flow, ConvexityFailure, FlowRecord, FlowStatus, FlowSummary, FlowTrace};
pub use step::{flow_step, roundness, shrinking_sphere_oracle, stable_time_step};
