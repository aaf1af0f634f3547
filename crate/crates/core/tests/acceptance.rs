//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Closed forms used as references are written out here
//! rather than taken from the library.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use flowlab::flow::{flow_step, run_flow, FlowConfig, FlowStatus, Mode};
use flowlab::geom::{
    make_shape, selfsim_residual, sphere_identity_residuals, stationary_sphere_radius, MeridianProfile, Shape,
};
use flowlab::lemma_lab::{
    alpha_window, alpha_window_factor, alpha_window_scale, constrained_minimum, key_inequality_margin,
    key_inequality_scale, l1_rigid_regime, rigidity_terms, run_campaign, sample_lambda, sample_rng, CampaignParams,
    InequalityReport, LemmaId,
};
use flowlab::symfun::{euler_residual, sigma_identity_residuals, CurvatureVector, SpeedFunction};
use flowlab::Error;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use common::{cv, derivative_errors};

const SEED: u64 = 20_261_016;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("{what} took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn clean(report: &InequalityReport) -> Result<(), String> {
    ensure(report.violations == 0, || {
        format!(
            "{} [{}, n={}, k={}]: {} violations ({} errors), worst {:?} at {:?}: {}",
            report.lemma_id,
            report.parameters.speed,
            report.parameters.n,
            report.parameters.k,
            report.violations,
            report.errors,
            report.worst_margin,
            report.worst_index,
            report.worst_sample
        )
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn speed_choices(n: usize) -> Vec<SpeedFunction> {
    let mut out = Vec::new();
    for k in 1..=n {
        for alpha in [1.0 / k as f64, 0.5, 1.0, 2.0] {
            out.push(SpeedFunction::sigma_power(k, alpha).unwrap());
            out.push(SpeedFunction::power_sum_power(k, alpha).unwrap());
        }
    }
    out.push(SpeedFunction::parse("sigma(1)^2 + 2*sigma(2) + 0.5*S(2)").unwrap());
    out
}

/// Criterion 1: symmetric-function identities, Euler relation and
/// derivatives against finite differences.
fn algebra() -> Check {
    let start = Instant::now();
    let samples = 1000u64;
    let (mut worst_id, mut worst_euler, mut worst_grad, mut worst_hess) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..samples {
        let mut rng = sample_rng(SEED, i);
        let n = rng.random_range(2..=8);
        let lam = cv(&sample_lambda(&mut rng, n));
        for k in 1..=n as i32 {
            worst_id = worst_id.max(sigma_identity_residuals(&lam, k).unwrap().max_relative());
        }
        let choices = speed_choices(n);
        let f = &choices[rng.random_range(0..choices.len())];
        let scale = f.beta().abs() * f.magnitude(&lam);
        worst_euler = worst_euler.max(euler_residual(f, &lam).abs() / scale);
        let (g, h) = derivative_errors(f, lam.as_slice());
        worst_grad = worst_grad.max(g);
        worst_hess = worst_hess.max(h);
    }
    let elapsed = start.elapsed();
    ensure(worst_id <= 1e-12, || format!("identity residual {worst_id:e}"))?;
    ensure(worst_euler <= 1e-12, || format!("Euler residual {worst_euler:e}"))?;
    ensure(worst_grad <= 1e-6 && worst_hess <= 1e-6, || {
        format!("finite differences: gradient {worst_grad:e}, Hessian {worst_hess:e}")
    })?;
    within(elapsed, 10.0, "algebra suite")?;
    Ok(format!(
        "{samples} samples, n<=8: identities {worst_id:.1e}, Euler {worst_euler:.1e}, FD grad {worst_grad:.1e}, FD Hessian {worst_hess:.1e}, {:.1} s",
        elapsed.as_secs_f64()
    ))
}

/// Criterion 2: positivity of the two matrix families.
fn psd_suite() -> Check {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut configs = 0;
    for n in 2..=6 {
        for k in 1..=n {
            for id in [LemmaId::DMatrix, LemmaId::AMatrix] {
                let r = run_campaign(id, &CampaignParams::new(n, k, 1.0), 10_000, SEED).unwrap();
                clean(&r)?;
                worst = worst.min(r.worst_margin.unwrap_or(f64::NEG_INFINITY));
                configs += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(worst >= -1e-10, || format!("min eigenvalue / norm {worst:e}"))?;
    within(elapsed, 60.0, "PSD suite")?;
    Ok(format!(
        "{configs} campaigns x 10^4, worst min-eig/||M||_F {worst:.1e}, {:.1} s",
        elapsed.as_secs_f64()
    ))
}

/// Criterion 3: determinant identity.
fn determinant_identity() -> Check {
    let mut worst = 0.0f64;
    let mut configs = 0;
    for n in 2..=6 {
        for k in 1..=n {
            let r = run_campaign(LemmaId::DetIdentity, &CampaignParams::new(n, k, 1.0), 10_000, SEED).unwrap();
            clean(&r)?;
            worst = worst.max(-r.worst_margin.unwrap_or(f64::NEG_INFINITY));
            configs += 1;
        }
    }
    ensure(worst <= 1e-8, || format!("relative residual {worst:e}"))?;
    Ok(format!("{configs} campaigns x 10^4, worst relative residual {worst:.1e}"))
}

/// Criterion 4: the key inequality over sigma_k^alpha and S_k^alpha.
fn key_inequality() -> Check {
    let start = Instant::now();
    let mut configs = 0;
    let mut worst = f64::INFINITY;
    let mut worst_radial = 0.0f64;
    for n in 2..=6 {
        for k in 1..=n {
            let mut alphas = vec![1.0 / k as f64, 0.5, 1.0, 2.0];
            alphas.sort_by(f64::total_cmp);
            alphas.dedup();
            for alpha in alphas {
                for f in [
                    SpeedFunction::sigma_power(k, alpha).unwrap(),
                    SpeedFunction::power_sum_power(k, alpha).unwrap(),
                ] {
                    let params = CampaignParams::new(n, k, alpha).with_speed(f.clone());
                    let r = run_campaign(LemmaId::KeyInequality, &params, 100_000, SEED).unwrap();
                    clean(&r)?;
                    worst = worst.min(r.worst_margin.unwrap_or(f64::NEG_INFINITY));
                    configs += 1;
                    for i in 0..100 {
                        let mut rng = sample_rng(SEED ^ 0xface, i);
                        let lam = cv(&sample_lambda(&mut rng, n));
                        let c: f64 = rng.random_range(-5.0..5.0);
                        let y: Vec<f64> = lam.as_slice().iter().map(|x| c * x).collect();
                        let m = key_inequality_margin(&f, &lam, &y).unwrap();
                        worst_radial = worst_radial.max(m.abs() / key_inequality_scale(&lam, &y));
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(worst_radial <= 1e-12, || format!("radial direction margin {worst_radial:e}"))?;
    within(elapsed, 120.0, "key inequality suite")?;
    Ok(format!(
        "{configs} configurations x 10^5, worst margin/scale {worst:.1e}, radial |margin|/scale {worst_radial:.1e}, {:.1} s",
        elapsed.as_secs_f64()
    ))
}

/// Criterion 5: signs of J1 and L1, zero on umbilic points, strict in the
/// rigid regimes.
fn rigidity() -> Check {
    let configs: Vec<(usize, SpeedFunction)> = vec![
        (3, SpeedFunction::sigma_power(1, 1.0).unwrap()),
        (3, SpeedFunction::sigma_power(1, 2.0).unwrap()),
        (3, SpeedFunction::sigma_power(2, 0.5).unwrap()),
        (3, SpeedFunction::sigma_power(2, 1.0).unwrap()),
        (4, SpeedFunction::sigma_power(3, 1.0 / 3.0).unwrap()),
        (4, SpeedFunction::sigma_power(4, 0.5).unwrap()),
        (5, SpeedFunction::sigma_power(2, 0.75).unwrap()),
        (3, SpeedFunction::power_sum_power(2, 0.5).unwrap()),
        (4, SpeedFunction::power_sum_power(3, 1.0).unwrap()),
    ];
    let mut strict_checked = 0u64;
    for (n, f) in &configs {
        let r = run_campaign(
            LemmaId::Rigidity,
            &CampaignParams::new(*n, 1, 1.0).with_speed(f.clone()),
            100_000,
            SEED,
        )
        .unwrap();
        clean(&r)?;
        for i in 0..1000 {
            let mut rng = sample_rng(SEED ^ 0xbeef, i);
            let c = if i % 2 == 0 { 0.0 } else { -10f64.powf(rng.random_range(-3.0..3.0)) };
            let constant = CurvatureVector::constant(*n, 10f64.powf(rng.random_range(-3.0..3.0))).unwrap();
            let t = rigidity_terms(f, &constant, c).unwrap();
            ensure(t.l1.abs() <= 1e-12 * t.l1_scale && t.j1.abs() <= 1e-12 * t.j1_scale, || {
                format!("{f}, n={n}: umbilic point gives {t:?}")
            })?;
            let lam = cv(&sample_lambda(&mut rng, *n));
            if l1_rigid_regime(f, *n, c) && lam.spread() > 1e-3 {
                let t = rigidity_terms(f, &lam, c).unwrap();
                ensure(t.l1 > 0.0, || format!("{f}, n={n}, C={c}: L1 = {} at {:?}", t.l1, lam.as_slice()))?;
                strict_checked += 1;
            }
        }
    }
    Ok(format!(
        "{} configurations x 10^5 with beta >= 1, C <= 0; umbilic zeros exact; {strict_checked} strict L1 > 0 checks",
        configs.len()
    ))
}

/// Equality-constrained quadratic program solved through its KKT system.
fn kkt_minimum(t: &[f64], m: usize, alpha: f64) -> f64 {
    let n = t.len();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    let mut rhs = DVector::zeros(n + 1);
    for i in 0..n {
        a[(i, i)] = 2.0 * t[i];
        a[(i, n)] = 1.0;
        a[(n, i)] = 1.0;
    }
    rhs[m] = 4.0 * alpha;
    rhs[n] = 1.0;
    let sol = a.lu().solve(&rhs).expect("KKT system is regular");
    (0..n).map(|i| t[i] * sol[i] * sol[i]).sum::<f64>() - 4.0 * alpha * sol[m]
}

/// Criterion 6: closed-form constrained minimum.
fn constrained_min() -> Check {
    let r = run_campaign(LemmaId::ConstrainedMin, &CampaignParams::new(4, 2, 1.0), 10_000, SEED).unwrap();
    clean(&r)?;
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let mut rng = sample_rng(SEED ^ 0xc0de, i);
        let len = rng.random_range(2..=8);
        let t: Vec<f64> = (0..len).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
        let k: f64 = t.iter().map(|x| 1.0 / x).sum();
        let alpha = rng.random_range(0.0..2.0);
        let m = rng.random_range(0..len);
        let closed = constrained_minimum(&t, m, alpha, k).unwrap();
        worst = worst.max((closed - kkt_minimum(&t, m, alpha)).abs());
    }
    ensure(worst <= 1e-8, || format!("closed form vs KKT solve: {worst:e}"))?;
    let example = constrained_minimum(&[2.0, 2.0], 0, 0.5, 1.0).unwrap();
    ensure((example + 0.25).abs() <= 4.0 * f64::EPSILON, || format!("worked example gives {example}"))?;
    Ok(format!(
        "10^4 KKT solves, max |closed - KKT| {worst:.1e}; campaign clean; t=(2,2), alpha=1/2 -> {example}"
    ))
}

/// Criterion 7: the two-factor expression on its admissible exponent window.
fn alpha_window_grid() -> Check {
    let mut points = 0u64;
    let mut worst = f64::INFINITY;
    for n in 3..=6 {
        for k in 2..n {
            let (lo, hi) = alpha_window(n, k).unwrap();
            for ia in 0..=200 {
                let alpha = lo + (hi - lo) * ia as f64 / 200.0;
                for it in 0..=2000 {
                    let t = 1.0 + 99.0 * it as f64 / 2000.0;
                    let g = alpha_window_factor(t, alpha, n, k).unwrap();
                    let rel = g / alpha_window_scale(t, alpha, n, k);
                    worst = worst.min(rel);
                    points += 1;
                }
            }
            let top = alpha_window_factor(1.0, 0.5, n, k).unwrap();
            let bottom = alpha_window_factor(1.0, lo, n, k).unwrap();
            ensure(top == 0.0, || format!("n={n}, k={k}: g(1, 1/2) = {top}"))?;
            ensure(bottom.abs() <= 1e-14 * alpha_window_scale(1.0, lo, n, k), || {
                format!("n={n}, k={k}: g(1, alpha_min) = {bottom}")
            })?;
        }
    }
    ensure(worst >= -1e-12, || format!("g / scale reaches {worst:e}"))?;
    Ok(format!("{points} grid points, min g/scale {worst:.1e}; zeros at t=1 on both window ends"))
}

/// Criterion 8: spheres under the raw flow against the separable ODE.
fn shrinking_sphere() -> Check {
    let cases: [(usize, fn(f64) -> f64); 2] = [(1, |t| (4.0 - 4.0 * t).sqrt()), (2, |t| (8.0 - 3.0 * t).cbrt())];
    let mut parts = Vec::new();
    for (k, exact) in cases {
        let f = SpeedFunction::sigma_power(k, 1.0).unwrap();
        let mut c = FlowConfig::new(f, 2, 200);
        c.cfl = 0.5;
        c.record_every = 10;
        c.stop.min_mean_radius = Some(0.2);
        let p = make_shape(Shape::Sphere { radius: 2.0 }, 2, 200).unwrap();
        let start = Instant::now();
        let trace = run_flow(&c, &p).unwrap();
        let elapsed = start.elapsed();
        ensure(trace.status == FlowStatus::Shrunk, || format!("sigma_{k}: status {:?}", trace.status))?;
        let worst = trace
            .records
            .iter()
            .map(|r| (r.mean_radius / exact(r.t) - 1.0).abs())
            .fold(0.0, f64::max);
        let last = trace.last_record().unwrap();
        ensure(last.mean_radius <= 0.2, || format!("sigma_{k}: stopped at r = {}", last.mean_radius))?;
        ensure(worst <= 1e-6, || format!("sigma_{k}: relative deviation {worst:e}"))?;
        within(elapsed, 10.0, &format!("sigma_{k} sphere run"))?;
        parts.push(format!(
            "sigma_{k}: {} steps, max rel dev {worst:.1e}, {:.1} s",
            trace.steps,
            elapsed.as_secs_f64()
        ));
    }
    Ok(parts.join("; "))
}

/// Criterion 9: the stationary sphere and the identities on it.
fn stationary_sphere() -> Check {
    let mut combos = Vec::new();
    'outer: for n in 2..=6 {
        for k in 1..=n {
            for alpha in [1.0 / k as f64, 0.5, 2.0] {
                combos.push((n, k, alpha));
                if combos.len() == 20 {
                    break 'outer;
                }
            }
        }
    }
    let (mut worst_r, mut worst_res, mut worst_id) = (0.0f64, 0.0f64, 0.0f64);
    for &(n, k, alpha) in &combos {
        let f = SpeedFunction::sigma_power(k, alpha).unwrap();
        let closed = binomial(n, k).powf(alpha / (1.0 + k as f64 * alpha));
        let r = stationary_sphere_radius(&f, 0.0, n).unwrap();
        worst_r = worst_r.max((r / closed - 1.0).abs());
        let p = make_shape(Shape::Sphere { radius: r }, n, 64).unwrap();
        worst_res = worst_res.max(selfsim_residual(&p, &f, 0.0).unwrap().max_abs);
        worst_id = worst_id.max(sphere_identity_residuals(&f, 0.0, n).unwrap().max_relative());
    }
    ensure(worst_r <= 1e-12, || format!("radius vs closed form {worst_r:e}"))?;
    ensure(worst_res <= 1e-10, || format!("self-similar residual {worst_res:e}"))?;
    ensure(worst_id <= 1e-11, || format!("sphere identities {worst_id:e}"))?;
    Ok(format!(
        "{} (n,k,alpha): r* rel err {worst_r:.1e}, residual {worst_res:.1e}, identities {worst_id:.1e}",
        combos.len()
    ))
}

/// Criterion 10: normalized flows from an ellipsoid of aspect 1.5.
fn sphere_convergence() -> Check {
    // (label, n, F, F(1, ..., 1))
    let cases: Vec<(&str, usize, SpeedFunction, f64)> = vec![
        ("(2,1,1)", 2, SpeedFunction::sigma_power(1, 1.0).unwrap(), 2.0),
        ("(3,2,1/2)", 3, SpeedFunction::sigma_power(2, 0.5).unwrap(), 3f64.sqrt()),
        ("(3,2,1)", 3, SpeedFunction::sigma_power(2, 1.0).unwrap(), 3.0),
        ("(4,3,1/3)", 4, SpeedFunction::sigma_power(3, 1.0 / 3.0).unwrap(), 4f64.cbrt()),
        ("(3,S2,1/2)", 3, SpeedFunction::power_sum_power(2, 0.5).unwrap(), 3f64.sqrt()),
    ];
    let mut parts = Vec::new();
    for (label, n, f, unit) in cases {
        let mut c = FlowConfig::new(f.clone(), n, 200);
        c.mode = Mode::Normalized;
        c.record_every = 2000;
        c.stop.roundness_tol = Some(1e-5);
        c.stop.max_steps = Some(2_000_000);
        let p = make_shape(Shape::Ellipsoid { a: 1.0, b: 1.5 }, n, 200).unwrap();
        let start = Instant::now();
        let trace = run_flow(&c, &p).unwrap();
        let elapsed = start.elapsed();
        let last = *trace.last_record().unwrap();
        ensure(trace.status == FlowStatus::Converged && last.roundness < 1e-3, || {
            format!("{label}: status {:?}, roundness {:e}", trace.status, last.roundness)
        })?;
        ensure(trace.records.windows(2).all(|w| w[1].roundness < w[0].roundness), || {
            format!("{label}: roundness not monotone along the trace")
        })?;
        let beta = f.beta();
        // F(1/r, ..., 1/r) = r on the stationary sphere
        let r_star = unit.powf(1.0 / (1.0 + beta));
        let target = trace.target_radius.unwrap();
        ensure((target / r_star - 1.0).abs() <= 1e-12, || format!("{label}: target radius {target} vs {r_star}"))?;
        let z_sphere = n as f64 * r_star * r_star * (beta + 1.0) / (2.0 * beta);
        let spread = (last.z_max - last.z_min) / last.z_max.abs();
        let dev = (0.5 * (last.z_max + last.z_min) / z_sphere - 1.0).abs();
        ensure(spread <= 1e-4, || format!("{label}: Z spread {spread:e}"))?;
        ensure(dev <= 1e-3, || format!("{label}: Z deviates {dev:e} from the sphere value"))?;
        within(elapsed, 60.0, &format!("{label} run"))?;
        parts.push(format!(
            "{label} {} steps {:.1} s Zspread {spread:.0e}",
            trace.steps,
            elapsed.as_secs_f64()
        ));
    }
    Ok(parts.join("; "))
}

/// Criterion 11: the checker and the flow refuse what they should.
fn negative_controls() -> Check {
    let f = SpeedFunction::parse("1*sigma(1)^2 - 3*sigma(2)").unwrap();
    let r = run_campaign(LemmaId::Condition, &CampaignParams::new(2, 2, 1.0).with_speed(f), 1000, SEED).unwrap();
    ensure(r.violations > 0, || "condition checker accepted sigma_1^2 - 3 sigma_2".into())?;
    ensure(r.worst_sample.get("lambda").is_some(), || format!("no counterexample recorded: {}", r.worst_sample))?;

    let grid = 64;
    let dent: Vec<f64> = (0..=grid)
        .map(|j| 1.0 + 0.3 * (4.0 * j as f64 * std::f64::consts::PI / grid as f64).cos())
        .collect();
    let p = MeridianProfile::new(2, dent).unwrap();
    let mut c = FlowConfig::new(SpeedFunction::sigma_power(1, 1.0).unwrap(), 2, grid);
    c.stop.max_steps = Some(1000);
    let trace = run_flow(&c, &p).unwrap();
    ensure(trace.status == FlowStatus::ConvexityLost && trace.steps == 0, || {
        format!("dented profile: status {:?} after {} steps", trace.status, trace.steps)
    })?;
    let node = trace.failure.as_ref().map(|f| f.node).unwrap();

    let e = make_shape(Shape::Ellipsoid { a: 1.0, b: 1.5 }, 2, grid).unwrap();
    let stage = match flow_step(&e, &SpeedFunction::sigma_power(1, 1.0).unwrap(), 0.8) {
        Err(Error::ConvexityLost { stage, .. }) => stage,
        other => return Err(format!("oversized step returned {other:?}")),
    };
    Ok(format!(
        "{} of 1000 condition samples flagged, worst margin {:?}; dented profile stops at node {node}; oversized step fails at stage {stage}",
        r.violations, r.worst_margin
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("algebra suite", algebra),
        ("PSD suite", psd_suite),
        ("determinant identity", determinant_identity),
        ("key inequality", key_inequality),
        ("rigidity terms", rigidity),
        ("constrained minimum", constrained_min),
        ("alpha-window factor", alpha_window_grid),
        ("shrinking sphere", shrinking_sphere),
        ("stationary sphere", stationary_sphere),
        ("sphere convergence", sphere_convergence),
        ("negative controls", negative_controls),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| f == &id || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name} ({secs:.1} s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id:>2} {name} ({secs:.1} s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
