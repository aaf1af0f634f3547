//! `flowlab` command-line driver.
//!
//! Exit codes: 0 success, 1 violation or failed check, 2 usage or config
//! error, 3 numerical failure.

mod run_config;
mod shape;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flowlab::flow::{run_flow, shrinking_sphere_oracle, FlowStatus, Mode};
use flowlab::geom::{make_shape, selfsim_residual, stationary_sphere_radius, MeridianProfile, Shape};
use flowlab::lemma_lab::{run_campaign, CampaignParams, InequalityReport, LemmaId};
use flowlab::symfun::SpeedFunction;
use serde_json::{json, Value};

use run_config::{Initial, RunConfigFile};
use shape::ShapeSpec;

#[derive(Debug, Parser)]
#[command(name = "flowlab", version, about = "Curvature-function inequality campaigns and contracting flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a seeded randomized campaign for one lemma id or for all of them.
    Verify(VerifyArgs),
    /// Integrate a flow described by a JSON run file.
    Flow {
        #[arg(long)]
        config: PathBuf,
    },
    /// Residual of the self-similar equation on a sampled shape.
    Selfsim(SelfsimArgs),
    /// Radius of the stationary sphere `F(1/r, ..., 1/r) + C = r`.
    SphereRadius(SpeedArgs),
}

#[derive(Debug, Args)]
struct SpeedArgs {
    /// Speed expression, e.g. `sigma(2)^0.5` or `1*sigma(1)^2 - 3*sigma(2)`.
    #[arg(long = "F")]
    speed: String,
    #[arg(long)]
    n: usize,
    #[arg(long = "C", default_value_t = 0.0, allow_negative_numbers = true)]
    c_shift: f64,
}

#[derive(Debug, Args)]
struct SelfsimArgs {
    #[command(flatten)]
    speed: SpeedArgs,
    /// `sphere:auto`, `sphere:R`, `ellipsoid:A,B` or `perturbed:R,L,EPS`.
    #[arg(long)]
    shape: String,
    #[arg(long, default_value_t = 200)]
    grid: usize,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Lemma id or `all`.
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Overrides the default speed `sigma(k)^alpha`.
    #[arg(long = "F")]
    speed: Option<String>,
    /// Fixes the shift constant of the rigidity campaign.
    #[arg(long = "C", allow_negative_numbers = true)]
    c_shift: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving `<lemma_id>.json`; reports go to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failed command: exit code plus message for stderr.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<flowlab::Error> for Failure {
    fn from(e: flowlab::Error) -> Self {
        use flowlab::Error as E;
        let code = match e {
            E::InvalidArgument(_) | E::Domain(_) | E::Parse { .. } => 2,
            E::Numeric(_) | E::ConvexityLost { .. } | E::Io(_) | E::Csv(_) => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::numeric(format!("writing {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn parse_speed(text: &str) -> Result<SpeedFunction, Failure> {
    SpeedFunction::parse(text).map_err(|e| Failure::usage(format!("--F: {e}")))
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let ids: Vec<LemmaId> = if args.suite == "all" {
        LemmaId::ALL.to_vec()
    } else {
        vec![args.suite.parse()?]
    };
    let mut params = CampaignParams::new(args.n, args.k, args.alpha);
    if let Some(text) = &args.speed {
        params = params.with_speed(parse_speed(text)?);
    }
    if let Some(c) = args.c_shift {
        params = params.with_shift(c);
    }
    let mut reports: Vec<InequalityReport> = Vec::with_capacity(ids.len());
    for id in ids {
        let report = run_campaign(id, &params, args.samples, args.seed)?;
        eprintln!(
            "{:<16} violations={} errors={} worst_margin={}",
            report.lemma_id,
            report.violations,
            report.errors,
            report.worst_margin.map_or("null".to_string(), |m| format!("{m:e}"))
        );
        reports.push(report);
    }
    match &args.out {
        Some(dir) => {
            for r in &reports {
                let mut text = r.to_json();
                text.push('\n');
                write_atomic(&dir.join(format!("{}.json", r.lemma_id)), text.as_bytes())?;
            }
        }
        None if reports.len() == 1 => println!("{}", reports[0].to_json()),
        None => println!("{}", serde_json::to_string_pretty(&reports).expect("reports serialize")),
    }
    Ok(if reports.iter().all(InequalityReport::passed) { 0 } else { 1 })
}

fn cmd_flow(config_path: &Path) -> CmdResult {
    let text = fs::read_to_string(config_path)
        .map_err(|e| Failure::usage(format!("reading {}: {e}", config_path.display())))?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let cfg = RunConfigFile::parse(&text, base).map_err(Failure::usage)?;
    let flow = &cfg.flow;

    let initial = match &cfg.initial {
        Initial::Shape(spec) => {
            let auto = match spec {
                ShapeSpec::AutoSphere => stationary_sphere_radius(&flow.speed, 0.0, flow.n)?,
                ShapeSpec::Fixed(_) => f64::NAN,
            };
            make_shape(spec.resolve(auto), flow.n, flow.grid)?
        }
        Initial::Csv(path) => {
            let file = fs::File::open(path).map_err(|e| Failure::usage(format!("reading {}: {e}", path.display())))?;
            MeridianProfile::read_csv(file, flow.n)?
        }
    };
    let trace = run_flow(flow, &initial)?;

    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    write_atomic(&cfg.outputs.trace, &csv)?;
    if let Some(path) = &cfg.outputs.final_profile {
        let mut buf = Vec::new();
        trace.final_profile.write_csv(&mut buf)?;
        write_atomic(path, &buf)?;
    }

    let mut summary = trace.summary();
    let sphere_start = match cfg.initial {
        Initial::Shape(ShapeSpec::Fixed(Shape::Sphere { radius })) => Some(radius),
        _ => None,
    };
    if let (Some(r0), Mode::Raw) = (sphere_start, flow.mode) {
        summary.oracle_mean_radius = shrinking_sphere_oracle(&flow.speed, flow.n, r0, trace.time).ok();
    }
    let mut value = serde_json::to_value(&summary).expect("summary serializes");
    if let Value::Object(obj) = &mut value {
        obj.insert("version".into(), json!(flowlab::VERSION));
        obj.insert(
            "config".into(),
            json!({
                "speed": flow.speed.to_string(),
                "c_shift": flow.c_shift,
                "n": flow.n,
                "grid": flow.grid,
                "cfl": flow.cfl,
                "mode": flow.mode,
                "stop": flow.stop,
                "record_every": flow.record_every,
            }),
        );
        obj.insert("target_radius".into(), json!(trace.target_radius));
    }
    let text = serde_json::to_string_pretty(&value).expect("summary serializes");
    write_atomic(&cfg.outputs.summary, format!("{text}\n").as_bytes())?;
    println!("{text}");

    Ok(match trace.status {
        FlowStatus::Converged | FlowStatus::Shrunk => 0,
        FlowStatus::StepLimit | FlowStatus::ConvexityLost => 1,
    })
}

fn cmd_selfsim(args: SelfsimArgs) -> CmdResult {
    let speed = parse_speed(&args.speed.speed)?;
    let n = args.speed.n;
    let c = args.speed.c_shift;
    let spec = ShapeSpec::parse(&args.shape).map_err(Failure::usage)?;
    let r_star = stationary_sphere_radius(&speed, c, n)?;
    let profile = make_shape(spec.resolve(r_star), n, args.grid)?;
    let res = selfsim_residual(&profile, &speed, c)?;
    let tolerance = 1e-8 * r_star.max(1.0);
    let passed = res.max_abs <= tolerance;
    let report = json!({
        "speed": speed.to_string(),
        "n": n,
        "C": c,
        "shape": args.shape,
        "grid": args.grid,
        "r_star": r_star,
        "residual_max": res.max_abs,
        "residual_mean": res.mean_abs,
        "tolerance": tolerance,
        "passed": passed,
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(if passed { 0 } else { 1 })
}

fn cmd_sphere_radius(args: SpeedArgs) -> CmdResult {
    let speed = parse_speed(&args.speed)?;
    let r = stationary_sphere_radius(&speed, args.c_shift, args.n)?;
    println!("{r}");
    Ok(0)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("FLOWLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("FLOWLAB_THREADS must be a non-negative integer, got `{value}`")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::numeric(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    configure_threads()?;
    match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Flow { config } => cmd_flow(&config),
        Command::Selfsim(args) => cmd_selfsim(args),
        Command::SphereRadius(args) => cmd_sphere_radius(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let code = match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(code)) => code,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            f.code
        }
        Err(_) => 3,
    };
    ExitCode::from(code)
}
