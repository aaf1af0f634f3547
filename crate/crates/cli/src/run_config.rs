use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use flowlab::flow::{FlowConfig, Mode, StopCriteria};
use flowlab::symfun::SpeedFunction;
use serde::Deserialize;
use serde_json::Value;

use crate::shape::ShapeSpec;

const TOP_KEYS: &[&str] = &[
    "speed",
    "c_shift",
    "n",
    "grid",
    "cfl",
    "mode",
    "stop",
    "record_every",
    "initial",
    "output",
];
const STOP_KEYS: &[&str] = &["max_steps", "max_time", "roundness_tol", "min_mean_radius"];
const OUTPUT_KEYS: &[&str] = &["trace", "summary", "final_profile"];
const REQUIRED: &[&str] = &["speed", "n", "grid", "stop", "initial", "output"];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    speed: String,
    #[serde(default)]
    c_shift: f64,
    n: usize,
    grid: usize,
    #[serde(default = "default_cfl")]
    cfl: f64,
    #[serde(default = "default_mode")]
    mode: Mode,
    stop: StopCriteria,
    #[serde(default = "default_record_every")]
    record_every: u64,
    initial: String,
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    trace: PathBuf,
    summary: PathBuf,
    #[serde(default)]
    final_profile: Option<PathBuf>,
}

fn default_cfl() -> f64 {
    0.5
}

fn default_mode() -> Mode {
    Mode::Raw
}

fn default_record_every() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Shape(ShapeSpec),
    /// A profile CSV with `theta,rho` columns.
    Csv(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Outputs {
    pub trace: PathBuf,
    pub summary: PathBuf,
    pub final_profile: Option<PathBuf>,
}

/// A validated flow run file.
#[derive(Debug, Clone)]
pub struct RunConfigFile {
    pub flow: FlowConfig,
    pub initial: Initial,
    pub outputs: Outputs,
}

fn unknown_keys(v: &Value, allowed: &[&str], prefix: &str, out: &mut Vec<String>) {
    if let Some(obj) = v.as_object() {
        out.extend(
            obj.keys()
                .filter(|k| !allowed.contains(&k.as_str()))
                .map(|k| format!("{prefix}{k}")),
        );
    }
}

impl RunConfigFile {
    /// Parses and validates `text`. Relative paths resolve against `base`.
    ///
    /// Unknown keys are collected at every level and reported together.
    pub fn parse(text: &str, base: &Path) -> Result<Self, String> {
        let value: Value = serde_json::from_str(text).map_err(|e| format!("config is not valid JSON: {e}"))?;
        if !value.is_object() {
            return Err("config must be a JSON object".into());
        }
        let mut bad = Vec::new();
        unknown_keys(&value, TOP_KEYS, "", &mut bad);
        unknown_keys(&value["stop"], STOP_KEYS, "stop.", &mut bad);
        unknown_keys(&value["output"], OUTPUT_KEYS, "output.", &mut bad);
        if !bad.is_empty() {
            return Err(format!("unknown config keys: {}", bad.join(", ")));
        }
        let missing: BTreeSet<_> = REQUIRED.iter().filter(|k| value.get(**k).is_none()).collect();
        if !missing.is_empty() {
            let names: Vec<_> = missing.into_iter().map(|k| k.to_string()).collect();
            return Err(format!("missing config keys: {}", names.join(", ")));
        }
        let raw: RawConfig = serde_json::from_value(value).map_err(|e| format!("invalid config: {e}"))?;

        let speed = SpeedFunction::parse(&raw.speed).map_err(|e| format!("speed: {e}"))?;
        let mut flow = FlowConfig::new(speed, raw.n, raw.grid);
        flow.c_shift = raw.c_shift;
        flow.cfl = raw.cfl;
        flow.mode = raw.mode;
        flow.stop = raw.stop;
        flow.record_every = raw.record_every;
        flow.validate().map_err(|e| e.to_string())?;

        let initial = match raw.initial.strip_prefix("csv:") {
            Some(path) => Initial::Csv(base.join(path)),
            None => Initial::Shape(ShapeSpec::parse(&raw.initial).map_err(|e| format!("initial: {e}"))?),
        };
        let outputs = Outputs {
            trace: base.join(raw.output.trace),
            summary: base.join(raw.output.summary),
            final_profile: raw.output.final_profile.map(|p| base.join(p)),
        };
        Ok(Self { flow, initial, outputs })
    }
}
