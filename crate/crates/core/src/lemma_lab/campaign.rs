use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::inequalities::*;
use super::matrix::{build_a_gap, build_d, det_identity_residual, psd_margin, PSD_TOL};
use crate::error::{Error, Result};
use crate::symfun::{sigma_identity_residuals, CurvatureVector, SpeedFunction};
use crate::VERSION;

/// Largest dimension a campaign accepts.
pub const MAX_CAMPAIGN_DIM: usize = 12;

/// Registered campaigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LemmaId {
    SigmaIdentities,
    DMatrix,
    AMatrix,
    DetIdentity,
    KeyInequality,
    Condition,
    BottomGap,
    Rigidity,
    CauchySchwarz,
    ConstrainedMin,
    AlphaWindow,
    PowerSumLogHessian,
}

impl LemmaId {
    pub const ALL: [LemmaId; 12] = [
        LemmaId::SigmaIdentities,
        LemmaId::DMatrix,
        LemmaId::AMatrix,
        LemmaId::DetIdentity,
        LemmaId::KeyInequality,
        LemmaId::Condition,
        LemmaId::BottomGap,
        LemmaId::Rigidity,
        LemmaId::CauchySchwarz,
        LemmaId::ConstrainedMin,
        LemmaId::AlphaWindow,
        LemmaId::PowerSumLogHessian,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LemmaId::SigmaIdentities => "sigprop",
            LemmaId::DMatrix => "Dmk",
            LemmaId::AMatrix => "ak",
            LemmaId::DetIdentity => "det-identity",
            LemmaId::KeyInequality => "key-inequality",
            LemmaId::Condition => "condition",
            LemmaId::BottomGap => "lamij",
            LemmaId::Rigidity => "rigidity",
            LemmaId::CauchySchwarz => "cs",
            LemmaId::ConstrainedMin => "condmin",
            LemmaId::AlphaWindow => "thm63",
            LemmaId::PowerSumLogHessian => "sk-loghess",
        }
    }

    /// Violation threshold, relative to the per-sample scale.
    pub fn tolerance(self) -> f64 {
        match self {
            LemmaId::DMatrix | LemmaId::AMatrix => PSD_TOL,
            LemmaId::DetIdentity | LemmaId::ConstrainedMin => 1e-8,
            LemmaId::BottomGap => 0.0,
            _ => 1e-12,
        }
    }

    /// What the margin is divided by.
    pub fn scale_description(self) -> &'static str {
        match self {
            LemmaId::SigmaIdentities => "sum of |terms| of each identity; margin = -max relative residual over k",
            LemmaId::DMatrix | LemmaId::AMatrix => "Frobenius norm; margin = min eigenvalue / norm",
            LemmaId::DetIdentity => "max of the Hadamard bounds of both sides; margin = -relative residual",
            LemmaId::KeyInequality => "sum y_i^2 / min(lambda)^2",
            LemmaId::Condition => {
                "per part: |F| and sum lambda_i|F_i| (positivity, strict), F(2l)/F(l) terms (scaling), \
                 max(l_i,l_j)/sum lambda|F_i| (quotient), sum y^2/min(lambda)^2 (key inequality)"
            }
            LemmaId::BottomGap => "sum |F_i| / max(lambda)^2; margin must be strictly positive",
            LemmaId::Rigidity => "sum of |terms| of J1 and of L1 separately; strict L1 > 0 in rigid regimes",
            LemmaId::CauchySchwarz => "sum of |terms|",
            LemmaId::ConstrainedMin => "absolute (1)",
            LemmaId::AlphaWindow => "product of the factor magnitudes",
            LemmaId::PowerSumLogHessian => "sum of |terms|",
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LemmaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LemmaId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<_> = LemmaId::ALL.iter().map(|id| id.as_str()).collect();
                Error::arg(format!("unknown lemma id `{s}` (known: {})", known.join(", ")))
            })
    }
}

/// Parameters shared by all campaigns; each campaign reads what it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignParams {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    /// Overrides the default speed `sigma_k^alpha`.
    pub speed: Option<SpeedFunction>,
    /// Fixes the shift constant in the rigidity campaign instead of sampling it.
    pub c_shift: Option<f64>,
}

impl CampaignParams {
    pub fn new(n: usize, k: usize, alpha: f64) -> Self {
        Self {
            n,
            k,
            alpha,
            speed: None,
            c_shift: None,
        }
    }

    pub fn with_speed(mut self, speed: SpeedFunction) -> Self {
        self.speed = Some(speed);
        self
    }

    pub fn with_shift(mut self, c: f64) -> Self {
        self.c_shift = Some(c);
        self
    }

    pub fn speed_function(&self) -> Result<SpeedFunction> {
        match &self.speed {
            Some(f) => Ok(f.clone()),
            None => SpeedFunction::sigma_power(self.k, self.alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportParameters {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub speed: String,
    pub condition_class: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_shift: Option<f64>,
}

/// Aggregated result of a campaign. A pure function of its inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub lemma_id: String,
    pub version: String,
    pub parameters: ReportParameters,
    pub samples: u64,
    pub seed: u64,
    pub tolerance: f64,
    pub scale: String,
    pub violations: u64,
    /// Samples whose evaluation raised an error; also counted as violations.
    pub errors: u64,
    /// `None` when the worst sample had no finite margin.
    pub worst_margin: Option<f64>,
    pub worst_index: Option<u64>,
    pub worst_sample: Value,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Result for one sample.
#[derive(Debug, Clone)]
struct Outcome {
    margin: f64,
    violated: bool,
    error: Option<String>,
    sample: Option<Value>,
}

impl Outcome {
    fn ok(margin: f64, violated: bool) -> Self {
        Self {
            margin,
            violated,
            error: None,
            sample: None,
        }
    }

    fn failed(err: Error) -> Self {
        Self {
            margin: f64::NAN,
            violated: true,
            error: Some(err.to_string()),
            sample: None,
        }
    }

    fn ordering_key(&self) -> f64 {
        if self.margin.is_nan() {
            f64::NEG_INFINITY
        } else {
            self.margin
        }
    }
}

/// The sample stream for one index: a ChaCha8 generator keyed by the seed and
/// positioned on stream `index`, so each sample is reproducible on its own.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Log-uniform entries on `[1e-3, 1e3]`; one sample in ten has a random pair
/// moved to within `1e-10` relative of each other.
pub fn sample_lambda(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..=3.0))).collect();
    if rng.random_bool(0.1) {
        let p = rng.random_range(0..n);
        let mut q = rng.random_range(0..n - 1);
        if q >= p {
            q += 1;
        }
        v[q] = v[p] * (1.0 + 1e-10 * rng.random_range(-1.0..=1.0));
    }
    v
}

/// Gaussian directions, either plain or weighted by `lambda`; one in twenty is
/// a multiple of `lambda` itself.
pub fn sample_direction(rng: &mut impl Rng, lambda: &[f64]) -> Vec<f64> {
    let u: f64 = rng.random();
    if u < 0.05 {
        let c: f64 = rng.sample(StandardNormal);
        lambda.iter().map(|l| c * l).collect()
    } else if u < 0.5 {
        lambda.iter().map(|l| l * rng.sample::<f64, _>(StandardNormal)).collect()
    } else {
        lambda.iter().map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

struct Campaign {
    id: LemmaId,
    params: CampaignParams,
    speed: SpeedFunction,
    tol: f64,
}

fn round_trip(v: &[f64]) -> Value {
    json!(v)
}

impl Campaign {
    fn new(id: LemmaId, params: &CampaignParams) -> Result<Self> {
        let n = params.n;
        if n < 2 || n > MAX_CAMPAIGN_DIM {
            return Err(Error::arg(format!("n={n} outside 2..={MAX_CAMPAIGN_DIM}")));
        }
        let speed = params.speed_function()?;
        if !speed.fits_dimension(n) {
            return Err(Error::arg(format!("speed function `{speed}` uses sigma_k with k > n={n}")));
        }
        let k = params.k;
        let needs_k = matches!(
            id,
            LemmaId::DMatrix | LemmaId::AMatrix | LemmaId::DetIdentity | LemmaId::PowerSumLogHessian
        );
        if needs_k && (k < 1 || k > n) {
            return Err(Error::arg(format!("k={k} outside 1..={n}")));
        }
        match id {
            LemmaId::BottomGap if n < 3 => return Err(Error::arg("lamij campaign needs n >= 3")),
            LemmaId::Rigidity => {
                if speed.beta() < 1.0 {
                    return Err(Error::arg(format!("rigidity campaign needs beta >= 1, got {}", speed.beta())));
                }
                if params.c_shift.is_some_and(|c| !(c <= 0.0)) {
                    return Err(Error::arg("rigidity campaign needs C <= 0"));
                }
            }
            LemmaId::ConstrainedMin if k < 1 => return Err(Error::arg("condmin campaign needs k >= 1")),
            LemmaId::AlphaWindow => {
                alpha_window(n, k)?;
            }
            _ => {}
        }
        Ok(Self {
            id,
            params: params.clone(),
            speed,
            tol: id.tolerance(),
        })
    }

    fn evaluate(&self, seed: u64, index: u64, record: bool) -> Outcome {
        let mut rng = sample_rng(seed, index);
        let mut sample = record.then(|| json!({}));
        let outcome = self.evaluate_with(&mut rng, &mut sample);
        let mut outcome = match outcome {
            Ok(o) => o,
            Err(e) => Outcome::failed(e),
        };
        if let Some(mut s) = sample {
            if let Some(obj) = s.as_object_mut() {
                obj.insert("margin".into(), json!(outcome.margin));
                if let Some(e) = &outcome.error {
                    obj.insert("error".into(), json!(e));
                }
            }
            outcome.sample = Some(s);
        }
        outcome
    }

    fn evaluate_with(&self, rng: &mut ChaCha8Rng, rec: &mut Option<Value>) -> Result<Outcome> {
        let n = self.params.n;
        let k = self.params.k;
        let tol = self.tol;
        let mut put = |key: &str, v: Value| {
            if let Some(obj) = rec.as_mut().and_then(Value::as_object_mut) {
                obj.insert(key.to_string(), v);
            }
        };
        match self.id {
            LemmaId::SigmaIdentities => {
                let l = CurvatureVector::new(sample_lambda(rng, n))?;
                put("lambda", round_trip(l.as_slice()));
                let mut worst = 0.0f64;
                for kk in 0..=n {
                    worst = worst.max(sigma_identity_residuals(&l, kk as i32)?.max_relative());
                }
                Ok(Outcome::ok(-worst, worst > tol))
            }
            LemmaId::DMatrix | LemmaId::AMatrix => {
                let l = CurvatureVector::new(sample_lambda(rng, n))?;
                put("lambda", round_trip(l.as_slice()));
                let m = if self.id == LemmaId::DMatrix {
                    build_d(&l, k, n)?
                } else {
                    build_a_gap(&l, k)?
                };
                let norm = m.frobenius_norm();
                let ev = psd_margin(&m)?;
                let margin = if norm > 0.0 { ev / norm } else { ev };
                Ok(Outcome::ok(margin, margin < -tol))
            }
            LemmaId::DetIdentity => {
                let l = CurvatureVector::new(sample_lambda(rng, n))?;
                let m = rng.random_range(1..=n);
                put("lambda", round_trip(l.as_slice()));
                put("m", json!(m));
                let r = det_identity_residual(&l, k, m)?;
                let rel = r.relative();
                Ok(Outcome::ok(-rel, !(rel <= tol)))
            }
            LemmaId::KeyInequality => {
                let l = CurvatureVector::new(sample_lambda(rng, n))?;
                let y = sample_direction(rng, l.as_slice());
                put("lambda", round_trip(l.as_slice()));
                put("y", round_trip(&y));
                let margin = key_inequality_margin(&self.speed, &l, &y)? / key_inequality_scale(&l, &y);
                Ok(Outcome::ok(margin, !(margin >= -tol)))
            }
            LemmaId::Condition => {
                let l = CurvatureVector::new(sample_lambda(rng, n))?;
                let y = sample_direction(rng, l.as_slice());
                put("lambda", round_trip(l.as_slice()));
                put("y", round_trip(&y));
                let c = condition_margins(&self.speed, &l, &y)?;
                let verdict = c.check(tol);
                put(
                    "detail",
                    json!({
                        "value": c.value,
                        "min_gradient": c.min_gradient,
                        "monotone_quotient": c.monotone_quotient,
                        "key": c.key,
                        "worst_part": verdict.worst.label(),
                        "violated_part": verdict.violated.map(ConditionPart::label),
                    }),
                );
                Ok(Outcome::ok(verdict.margin, verdict.violated.is_some()))
            }
            LemmaId::BottomGap => {
                let mut v = sample_lambda(rng, n);
                v.sort_by(f64::total_cmp);
                v[0] = v[1] * 10f64.powf(-rng.random_range(1e-3..=3.0));
                let l = CurvatureVector::new(v)?;
                let i = rng.random_range(2..n);
                let j = rng.random_range(1..i);
                put("lambda", round_trip(l.as_slice()));
                put("i", json!(i));
                put("j", json!(j));
                let q = bottom_gap_quotient(&self.speed, &l, i, j)?;
                let b = crate::symfun::eval_bundle(&self.speed, &l);
                let scale = b.gradient.iter().map(|g| g.abs()).sum::<f64>() / (l.max() * l.max());
                let margin = q / scale;
                Ok(Outcome::ok(margin, !(margin > tol)))
            }
            LemmaId::Rigidity => {
                let constant = rng.random_bool(0.05);
                let l = if constant {
                    CurvatureVector::constant(n, 10f64.powf(rng.random_range(-3.0..=3.0)))?
                } else {
                    CurvatureVector::new(sample_lambda(rng, n))?
                };
                let c = match self.params.c_shift {
                    Some(c) => c,
                    None if rng.random_bool(0.25) => 0.0,
                    None => -self.speed.value(&l) * 10f64.powf(rng.random_range(-3.0..=3.0)),
                };
                put("lambda", round_trip(l.as_slice()));
                put("c", json!(c));
                let r = rigidity_terms(&self.speed, &l, c)?;
                let j = r.j1 / r.j1_scale.max(f64::MIN_POSITIVE);
                let l1 = r.l1 / r.l1_scale.max(f64::MIN_POSITIVE);
                let rigid = l1_rigid_regime(&self.speed, n, c);
                let strict = rigid && l.spread() > 1e-3;
                put("detail", json!({"j1": r.j1, "l1": r.l1, "strict": strict}));
                let mut violated = !(j >= -tol) || !(l1 >= -tol);
                if constant {
                    violated |= !(l1.abs() <= tol) || r.j1 != 0.0;
                }
                if strict {
                    violated |= !(r.l1 > 0.0);
                }
                Ok(Outcome::ok(j.min(l1), violated))
            }
            LemmaId::CauchySchwarz => {
                let l = CurvatureVector::new(sample_lambda(rng, n))?;
                let h = sample_direction(rng, l.as_slice());
                put("lambda", round_trip(l.as_slice()));
                put("h", round_trip(&h));
                let m = cauchy_schwarz_margin(&self.speed, &l, &h)?;
                let s = cauchy_schwarz_scale(&self.speed, &l, &h)?;
                let margin = if s > 0.0 { m / s } else { m };
                Ok(Outcome::ok(margin, !(margin >= -tol)))
            }
            LemmaId::ConstrainedMin => {
                let w: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-1.0..=1.0))).collect();
                let kf = k as f64;
                let harmonic: f64 = w.iter().map(|x| 1.0 / x).sum();
                let t: Vec<f64> = w.iter().map(|x| x * harmonic / kf).collect();
                let k_actual: f64 = t.iter().map(|x| 1.0 / x).sum();
                let m = rng.random_range(0..n);
                let alpha = rng.random_range(0.0..=2.0);
                put("t", round_trip(&t));
                put("m", json!(m));
                put("alpha", json!(alpha));
                let fmin = constrained_minimum(&t, m, alpha, k_actual)?;
                let ystar = constrained_minimizer(&t, m, alpha, k_actual)?;
                let at_star = constrained_objective(&t, m, alpha, &ystar);
                let mut margin = -(at_star - fmin).abs();
                // random feasible points never go below the minimum
                for _ in 0..8 {
                    let mut y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let shift = (1.0 - y.iter().sum::<f64>()) / n as f64;
                    y.iter_mut().for_each(|v| *v += shift);
                    margin = margin.min(constrained_objective(&t, m, alpha, &y) - fmin);
                }
                put("minimum", json!(fmin));
                Ok(Outcome::ok(margin, !(margin >= -tol)))
            }
            LemmaId::AlphaWindow => {
                let (lo, hi) = alpha_window(n, k)?;
                let t = 10f64.powf(rng.random_range(0.0..=2.0));
                let alpha = rng.random_range(lo..=hi);
                put("t", json!(t));
                put("alpha", json!(alpha));
                let g = alpha_window_factor(t, alpha, n, k)?;
                let margin = g / alpha_window_scale(t, alpha, n, k);
                Ok(Outcome::ok(margin, !(margin >= -tol)))
            }
            LemmaId::PowerSumLogHessian => {
                let l = CurvatureVector::new(sample_lambda(rng, n))?;
                let h = sample_direction(rng, l.as_slice());
                put("lambda", round_trip(l.as_slice()));
                put("h", round_trip(&h));
                let (m, s) = power_sum_log_hessian_parts(&l, k, &h)?;
                let margin = if s > 0.0 { m / s } else { m };
                Ok(Outcome::ok(margin, !(margin >= -tol)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Tally {
    violations: u64,
    errors: u64,
    worst: Option<(f64, u64)>,
}

impl Tally {
    const EMPTY: Tally = Tally {
        violations: 0,
        errors: 0,
        worst: None,
    };

    fn merge(self, other: Tally) -> Tally {
        let worst = match (self.worst, other.worst) {
            (None, w) | (w, None) => w,
            (Some(a), Some(b)) => Some(if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
        };
        Tally {
            violations: self.violations + other.violations,
            errors: self.errors + other.errors,
            worst,
        }
    }
}

/// Draws `samples` inputs for `lemma`, evaluates each margin and aggregates.
///
/// Samples are evaluated in parallel on the current rayon pool; the result
/// does not depend on how the index range is split.
pub fn run_campaign(lemma: LemmaId, params: &CampaignParams, samples: u64, seed: u64) -> Result<InequalityReport> {
    let campaign = Campaign::new(lemma, params)?;
    let tally = (0..samples)
        .into_par_iter()
        .map(|i| {
            let o = campaign.evaluate(seed, i, false);
            Tally {
                violations: o.violated as u64,
                errors: o.error.is_some() as u64,
                worst: Some((o.ordering_key(), i)),
            }
        })
        .reduce(|| Tally::EMPTY, Tally::merge);

    let (worst_margin, worst_index, worst_sample) = match tally.worst {
        Some((_, i)) => {
            let o = campaign.evaluate(seed, i, true);
            (
                o.margin.is_finite().then_some(o.margin),
                Some(i),
                o.sample.unwrap_or(Value::Null),
            )
        }
        None => (None, None, Value::Null),
    };
    Ok(InequalityReport {
        lemma_id: lemma.as_str().to_string(),
        version: VERSION.to_string(),
        parameters: ReportParameters {
            n: params.n,
            k: params.k,
            alpha: params.alpha,
            speed: campaign.speed.to_string(),
            condition_class: campaign.speed.is_condition_class(),
            c_shift: params.c_shift,
        },
        samples,
        seed,
        tolerance: campaign.tol,
        scale: lemma.scale_description().to_string(),
        violations: tally.violations,
        errors: tally.errors,
        worst_margin,
        worst_index,
        worst_sample,
    })
}

/// [`run_campaign`] by string id.
pub fn run_campaign_by_name(lemma_id: &str, params: &CampaignParams, samples: u64, seed: u64) -> Result<InequalityReport> {
    run_campaign(lemma_id.parse()?, params, samples, seed)
}
