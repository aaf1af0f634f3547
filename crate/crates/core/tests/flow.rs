//! Flow runs checked against closed forms and against themselves at a
//! smaller time step.

use flowlab::flow::{run_flow, FlowConfig, FlowStatus, Mode};
use flowlab::geom::{make_shape, Shape};
use flowlab::symfun::SpeedFunction;

fn roundness_at(cfl: f64, max_time: f64) -> f64 {
    let speed = SpeedFunction::sigma_power(1, 1.0).unwrap();
    let mut cfg = FlowConfig::new(speed, 2, 48);
    cfg.cfl = cfl;
    cfg.mode = Mode::Normalized;
    cfg.stop.max_time = Some(max_time);
    cfg.record_every = 1_000_000;
    let start = make_shape(Shape::Ellipsoid { a: 1.0, b: 1.3 }, 2, 48).unwrap();
    let trace = run_flow(&cfg, &start).unwrap();
    assert_eq!(trace.status, FlowStatus::StepLimit);
    assert!((trace.time - max_time).abs() < 1e-12);
    trace.last_record().unwrap().roundness
}

#[test]
fn halving_the_step_barely_moves_roundness() {
    let coarse = roundness_at(0.5, 10.0);
    let fine = roundness_at(0.25, 10.0);
    assert!(coarse > 0.0 && coarse < 1e-3, "{coarse}");
    assert!((coarse - fine).abs() < 0.1 * fine, "{coarse} vs {fine}");
}

#[test]
fn raw_sphere_follows_the_closed_form() {
    // sigma_2^(1/2) on S^3 of radius r moves at sqrt(3)/r, so r^2 = 4 - 2 sqrt(3) t
    let speed = SpeedFunction::sigma_power(2, 0.5).unwrap();
    let mut cfg = FlowConfig::new(speed, 3, 32);
    cfg.stop.max_time = Some(0.8);
    let start = make_shape(Shape::Sphere { radius: 2.0 }, 3, 32).unwrap();
    let trace = run_flow(&cfg, &start).unwrap();
    let expect = (4.0 - 2.0 * 3f64.sqrt() * 0.8).sqrt();
    let got = trace.last_record().unwrap().mean_radius;
    assert!((got / expect - 1.0).abs() < 1e-9, "{got} vs {expect}");
}
