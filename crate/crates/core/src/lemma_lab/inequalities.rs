use crate::error::{Error, Result};
use crate::symfun::{eval_bundle, sigma_skip, Basis, CurvatureVector, DerivativeBundle, SpeedFunction, DIVIDED_DIFFERENCE_GAP};

fn check_direction(lambda: &CurvatureVector, y: &[f64], what: &str) -> Result<()> {
    if y.len() != lambda.dim() {
        return Err(Error::arg(format!(
            "{what} has {} entries, expected {}",
            y.len(),
            lambda.dim()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn near(lambda: &CurvatureVector, i: usize, j: usize) -> bool {
    (lambda[i] - lambda[j]).abs() < DIVIDED_DIFFERENCE_GAP * lambda.max()
}

/// `sum_i g_i y_i^2 / lambda_i + sum_ij H_ij y_i y_j` with `g`, `H` the
/// log-gradient and log-Hessian of `F`.
pub fn key_inequality_margin(f: &SpeedFunction, lambda: &CurvatureVector, y: &[f64]) -> Result<f64> {
    check_direction(lambda, y, "direction")?;
    key_margin_from_bundle(&eval_bundle(f, lambda), lambda, y)
}

fn key_margin_from_bundle(bundle: &DerivativeBundle, lambda: &CurvatureVector, y: &[f64]) -> Result<f64> {
    let g = bundle.log_gradient()?;
    let h = bundle.log_hessian()?;
    let n = lambda.dim();
    let mut total = 0.0;
    for i in 0..n {
        total += g[i] * y[i] * y[i] / lambda[i];
        for j in 0..n {
            total += h[(i, j)] * y[i] * y[j];
        }
    }
    Ok(total)
}

/// Normalization for [`key_inequality_margin`]: `sum y_i^2 / min(lambda)^2`.
pub fn key_inequality_scale(lambda: &CurvatureVector, y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>() / (lambda.min() * lambda.min())
}

/// The same quadratic form for `F = sigma_k`, written directly in the
/// `sigma_{k-1;i}`, `sigma_{k-2;ij}` entries.
pub fn sigma_quadratic_form_margin(lambda: &CurvatureVector, k: usize, y: &[f64]) -> Result<f64> {
    check_direction(lambda, y, "direction")?;
    let n = lambda.dim();
    if k < 1 || k > n {
        return Err(Error::arg(format!("k={k} outside 1..={n}")));
    }
    let v = lambda.as_slice();
    let k = k as isize;
    let sk = sigma_skip(v, k, &[]);
    let mut diag = 0.0;
    let mut linear = 0.0;
    for i in 0..n {
        let s = sigma_skip(v, k - 1, &[i]) / sk;
        diag += s / v[i] * y[i] * y[i];
        linear += s * y[i];
    }
    let mut off = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off += sigma_skip(v, k - 2, &[i, j]) / sk * y[i] * y[j];
            }
        }
    }
    Ok(diag + off - linear * linear)
}

/// `(lambda_i F_i - lambda_j F_j) / (lambda_i - lambda_j)`, with the
/// symmetrized limit `F_i + lambda_i F_ii - lambda_i F_ij` on near-equal pairs.
pub fn monotone_quotient(bundle: &DerivativeBundle, lambda: &CurvatureVector, i: usize, j: usize) -> f64 {
    let (gi, gj) = (bundle.gradient[i], bundle.gradient[j]);
    if near(lambda, i, j) {
        let h = &bundle.hessian;
        0.5 * (gi + gj) + 0.5 * (lambda[i] * h[(i, i)] + lambda[j] * h[(j, j)])
            - 0.5 * (lambda[i] + lambda[j]) * h[(i, j)]
    } else {
        (lambda[i] * gi - lambda[j] * gj) / (lambda[i] - lambda[j])
    }
}

/// Raw margins of the structural conditions on a speed function at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionMargins {
    /// `F(lambda)`.
    pub value: f64,
    /// `min_i dF/dlambda_i`.
    pub min_gradient: f64,
    /// `F(2 lambda) / F(lambda) - 2^beta`.
    pub scaling_residual: f64,
    /// Minimum over pairs of [`monotone_quotient`].
    pub monotone_quotient: f64,
    /// Key-inequality margin at the given direction; `None` where `F <= 0`.
    pub key: Option<f64>,
    value_scale: f64,
    gradient_scale: f64,
    min_weighted_gradient: f64,
    quotient_normalized: f64,
    key_scale: f64,
    scaling_scale: f64,
}

/// Which condition produced the worst normalized margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionPart {
    Positivity,
    Scaling,
    MonotoneQuotient,
    KeyInequality,
}

impl ConditionPart {
    pub fn label(self) -> &'static str {
        match self {
            ConditionPart::Positivity => "positivity",
            ConditionPart::Scaling => "scaling",
            ConditionPart::MonotoneQuotient => "monotone-quotient",
            ConditionPart::KeyInequality => "key-inequality",
        }
    }
}

/// Verdict of [`ConditionMargins::check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionVerdict {
    pub margin: f64,
    pub worst: ConditionPart,
    pub violated: Option<ConditionPart>,
}

impl ConditionMargins {
    /// Dimensionless margins: positivity is strict, the rest allow
    /// `-tol`.
    pub fn normalized(&self) -> [(ConditionPart, f64); 4] {
        let positivity = if self.value_scale > 0.0 && self.gradient_scale > 0.0 {
            (self.value / self.value_scale).min(self.min_weighted_gradient / self.gradient_scale)
        } else {
            f64::NEG_INFINITY
        };
        let scaling = -(self.scaling_residual.abs() / self.scaling_scale.max(f64::MIN_POSITIVE));
        let key = match self.key {
            Some(v) if self.key_scale > 0.0 => v / self.key_scale,
            Some(v) => v,
            None => f64::NEG_INFINITY,
        };
        [
            (ConditionPart::Positivity, positivity),
            (ConditionPart::Scaling, scaling),
            (ConditionPart::MonotoneQuotient, self.quotient_normalized),
            (ConditionPart::KeyInequality, key),
        ]
    }

    pub fn check(&self, tol: f64) -> ConditionVerdict {
        let parts = self.normalized();
        let (worst, margin) = parts
            .iter()
            .copied()
            .fold((ConditionPart::Positivity, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
        let violated = parts.iter().find_map(|&(part, m)| {
            let bad = match part {
                ConditionPart::Positivity => !(m > 0.0),
                _ => !(m >= -tol),
            };
            bad.then_some(part)
        });
        ConditionVerdict { margin, worst, violated }
    }
}

/// Evaluates positivity/monotonicity, the homogeneity spot check, the
/// quotient condition over all pairs and the key inequality at `y`.
pub fn condition_margins(f: &SpeedFunction, lambda: &CurvatureVector, y: &[f64]) -> Result<ConditionMargins> {
    check_direction(lambda, y, "direction")?;
    let n = lambda.dim();
    let bundle = eval_bundle(f, lambda);
    let value = bundle.value;
    let min_gradient = bundle.gradient.iter().copied().fold(f64::INFINITY, f64::min);
    let min_weighted_gradient = (0..n)
        .map(|i| lambda[i] * bundle.gradient[i])
        .fold(f64::INFINITY, f64::min);
    let gradient_scale: f64 = (0..n).map(|i| lambda[i] * bundle.gradient[i].abs()).sum();

    let doubled = lambda.scaled(2.0)?;
    let two_beta = 2f64.powf(f.beta());
    let scaling_residual = f.value(&doubled) / value - two_beta;
    let scaling_scale = if value != 0.0 {
        (f.magnitude(&doubled) + two_beta * f.magnitude(lambda)) / value.abs()
    } else {
        f64::INFINITY
    };

    let mut quotient = f64::INFINITY;
    let mut quotient_normalized = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let q = monotone_quotient(&bundle, lambda, i, j);
            quotient = quotient.min(q);
            let norm = if gradient_scale > 0.0 {
                q * lambda[i].max(lambda[j]) / gradient_scale
            } else {
                q
            };
            quotient_normalized = quotient_normalized.min(norm);
        }
    }

    let key = key_margin_from_bundle(&bundle, lambda, y).ok();
    Ok(ConditionMargins {
        value,
        min_gradient,
        scaling_residual,
        monotone_quotient: quotient,
        key,
        value_scale: f.magnitude(lambda),
        gradient_scale,
        min_weighted_gradient,
        quotient_normalized,
        key_scale: key_inequality_scale(lambda, y),
        scaling_scale,
    })
}

/// `[F_i (l_i - l_0)^2 - F_j (l_j - l_0)^2] / [(l_i - l_0)(l_j - l_0)(l_i - l_j)]`
/// for `i > j >= 1` (zero-based, ascending order), where `l_0` must be the
/// strict minimum. Near-equal `l_i`, `l_j` use the symmetrized limit
/// `F_ii - F_ij + 2 F_i / (l_i - l_0)`.
pub fn bottom_gap_quotient(f: &SpeedFunction, lambda: &CurvatureVector, i: usize, j: usize) -> Result<f64> {
    let n = lambda.dim();
    if n < 3 {
        return Err(Error::arg("needs at least 3 curvatures"));
    }
    if !(i > j && j >= 1 && i < n) {
        return Err(Error::arg(format!("indices must satisfy {n} > i > j >= 1, got i={i}, j={j}")));
    }
    let l0 = lambda[0];
    if !(l0 < lambda[1]) || lambda[1] - l0 < DIVIDED_DIFFERENCE_GAP * lambda.max() {
        return Err(Error::domain("smallest curvature is not strictly below the others"));
    }
    let b = eval_bundle(f, lambda);
    let (di, dj) = (lambda[i] - l0, lambda[j] - l0);
    if near(lambda, i, j) {
        let h = &b.hessian;
        let at_i = h[(i, i)] - h[(i, j)] + 2.0 * b.gradient[i] / di;
        let at_j = h[(j, j)] - h[(i, j)] + 2.0 * b.gradient[j] / dj;
        Ok(0.5 * (at_i + at_j))
    } else {
        Ok((b.gradient[i] * di * di - b.gradient[j] * dj * dj) / (di * dj * (lambda[i] - lambda[j])))
    }
}

/// `J1` and `L1` with their normalizing magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidityTerms {
    pub j1: f64,
    pub l1: f64,
    /// Sum of the magnitudes of the terms forming `j1`.
    pub j1_scale: f64,
    /// Sum of the magnitudes of the terms forming `l1`.
    pub l1_scale: f64,
}

/// `J1` (weighted by the smallest curvature) and `L1`, both summed over `i`
/// exactly as written, with `tr b = sum 1/lambda_i`.
pub fn rigidity_terms(f: &SpeedFunction, lambda: &CurvatureVector, c: f64) -> Result<RigidityTerms> {
    let beta = f.beta();
    if beta == 0.0 {
        return Err(Error::arg("speed function has degree 0"));
    }
    if !c.is_finite() {
        return Err(Error::arg("shift constant must be finite"));
    }
    let n = lambda.dim();
    let b = eval_bundle(f, lambda);
    let grad = &b.gradient;
    let l = lambda.as_slice();
    let lmin = lambda.min();
    let tr_b: f64 = l.iter().map(|x| 1.0 / x).sum();
    let ratio = (beta - 1.0) / beta;

    let mut j1_a = 0.0;
    let mut j1_b = 0.0;
    let mut j1_scale = 0.0;
    for i in 0..n {
        let w = l[i] / lmin - 1.0;
        j1_a += grad[i] * w;
        j1_b += grad[i] * l[i] * w;
        j1_scale += grad[i].abs() * (l[i] / lmin) * (ratio.abs() + c.abs() * l[i]);
    }
    let j1 = ratio * j1_a - c * j1_b;

    let sum_g: f64 = grad.iter().sum();
    let sum_gl2: f64 = (0..n).map(|i| grad[i] * l[i] * l[i]).sum();
    let abs_g: f64 = grad.iter().map(|g| g.abs()).sum();
    let abs_gl2: f64 = (0..n).map(|i| grad[i].abs() * l[i] * l[i]).sum();
    let nf = n as f64;
    let l1 = (beta - 1.0) * b.value * tr_b - nf * ratio * sum_g + c * (nf * beta * b.value - tr_b * sum_gl2);
    let l1_scale = (beta - 1.0).abs() * b.value.abs() * tr_b
        + nf * ratio.abs() * abs_g
        + c.abs() * (nf * beta.abs() * b.value.abs() + tr_b * abs_gl2);
    Ok(RigidityTerms { j1, l1, j1_scale, l1_scale })
}

/// `L1` rewritten as a sum over pairs,
/// `(beta-1)/beta sum_{i<j} (F_i l_i - F_j l_j)(l_i - l_j)/(l_i l_j)
///  - C sum_{i<j} (F_i l_i^2 - F_j l_j^2)(l_i - l_j)/(l_i l_j)`,
/// which uses the Euler relation and so is identically non-negative term by
/// term under the monotonicity conditions.
pub fn rigidity_l1_pairwise(f: &SpeedFunction, lambda: &CurvatureVector, c: f64) -> Result<f64> {
    let beta = f.beta();
    if beta == 0.0 {
        return Err(Error::arg("speed function has degree 0"));
    }
    let b = eval_bundle(f, lambda);
    let l = lambda.as_slice();
    let n = l.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (l[i] - l[j]) / (l[i] * l[j]);
            let first = (b.gradient[i] * l[i] - b.gradient[j] * l[j]) * d;
            let second = (b.gradient[i] * l[i] * l[i] - b.gradient[j] * l[j] * l[j]) * d;
            total += (beta - 1.0) / beta * first - c * second;
        }
    }
    Ok(total)
}

/// Whether `L1 = 0` forces an umbilic point for this `F` and `C`: a single
/// positive power `sigma_k^alpha` (`k < n`) or `S_k^alpha` with
/// `beta > 1, C <= 0` or `beta >= 1, C < 0`; for `sigma_n^alpha` only `C < 0`.
pub fn l1_rigid_regime(f: &SpeedFunction, n: usize, c: f64) -> bool {
    let Some((basis, alpha)) = f.single_power() else {
        return false;
    };
    let positive = f.terms()[0].coefficient > 0.0 && alpha > 0.0;
    if !positive {
        return false;
    }
    let beta = f.beta();
    match basis {
        Basis::Sigma(k) if k == n => c < 0.0,
        _ => (beta > 1.0 && c <= 0.0) || (beta >= 1.0 && c < 0.0),
    }
}

/// `sum_i g_i h_i^2 / lambda_i - (1/beta)(sum_i g_i h_i)^2`, `g` the
/// log-gradient.
pub fn cauchy_schwarz_margin(f: &SpeedFunction, lambda: &CurvatureVector, h: &[f64]) -> Result<f64> {
    check_direction(lambda, h, "column")?;
    let beta = f.beta();
    if beta == 0.0 {
        return Err(Error::arg("speed function has degree 0"));
    }
    let b = eval_bundle(f, lambda);
    let g = b.log_gradient()?;
    let (mut quad, mut lin) = (0.0, 0.0);
    for i in 0..lambda.dim() {
        quad += g[i] * h[i] * h[i] / lambda[i];
        lin += g[i] * h[i];
    }
    Ok(quad - lin * lin / beta)
}

/// Magnitude scale for [`cauchy_schwarz_margin`].
pub fn cauchy_schwarz_scale(f: &SpeedFunction, lambda: &CurvatureVector, h: &[f64]) -> Result<f64> {
    let b = eval_bundle(f, lambda);
    let g = b.log_gradient()?;
    let (mut quad, mut lin) = (0.0, 0.0);
    for i in 0..lambda.dim() {
        quad += (g[i] * h[i] * h[i] / lambda[i]).abs();
        lin += (g[i] * h[i]).abs();
    }
    Ok(quad + lin * lin / f.beta().abs())
}

fn check_weights(t: &[f64], m: usize, alpha: f64, k: f64) -> Result<()> {
    if t.is_empty() || m >= t.len() {
        return Err(Error::arg(format!("index {m} out of range for {} weights", t.len())));
    }
    if t.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::arg("weights must be finite and positive"));
    }
    if !(alpha.is_finite() && k.is_finite() && k > 0.0) {
        return Err(Error::arg("alpha and k must be finite, k > 0"));
    }
    let harmonic: f64 = t.iter().map(|x| 1.0 / x).sum();
    if (harmonic - k).abs() > 1e-10 * k.max(1.0) {
        return Err(Error::arg(format!("sum of 1/t is {harmonic}, constraint requires {k}")));
    }
    Ok(())
}

/// `f(y) = sum t_i y_i^2 - 4 alpha y_m`.
pub fn constrained_objective(t: &[f64], m: usize, alpha: f64, y: &[f64]) -> f64 {
    t.iter().zip(y).map(|(t, y)| t * y * y).sum::<f64>() - 4.0 * alpha * y[m]
}

/// Closed-form minimum of [`constrained_objective`] on `sum y_i = 1`, given
/// `sum 1/t_i = k`: `(1/k)(2 alpha / t_m - 1)^2 - 4 alpha^2 / t_m`.
pub fn constrained_minimum(t: &[f64], m: usize, alpha: f64, k: f64) -> Result<f64> {
    check_weights(t, m, alpha, k)?;
    let tm = t[m];
    Ok((2.0 * alpha / tm - 1.0).powi(2) / k - 4.0 * alpha * alpha / tm)
}

/// The Lagrange point `y_i = (1/t_i)(2 alpha [i = m] - 2 alpha/(k t_m) + 1/k)`.
pub fn constrained_minimizer(t: &[f64], m: usize, alpha: f64, k: f64) -> Result<Vec<f64>> {
    check_weights(t, m, alpha, k)?;
    let shift = 1.0 / k - 2.0 * alpha / (k * t[m]);
    Ok(t
        .iter()
        .enumerate()
        .map(|(i, ti)| (if i == m { 2.0 * alpha } else { 0.0 } + shift) / ti)
        .collect())
}

/// Range `[(n-1)/(k(n+1)-2), 1/2]` of exponents for which the factor below
/// is non-negative on `t >= 1`.
pub fn alpha_window(n: usize, k: usize) -> Result<(f64, f64)> {
    if k < 2 || k > n {
        return Err(Error::arg(format!("needs 2 <= k <= n, got n={n}, k={k}")));
    }
    let (n, k) = (n as f64, k as f64);
    Ok(((n - 1.0) / (k * (n + 1.0) - 2.0), 0.5))
}

/// `g(t, alpha) = (2 alpha/t - 1)((2/(k t) - n - 1) alpha + (n-1)/k)` for
/// `t >= 1`.
pub fn alpha_window_factor(t: f64, alpha: f64, n: usize, k: usize) -> Result<f64> {
    if !(t >= 1.0) || !t.is_finite() {
        return Err(Error::arg(format!("t must be a finite value >= 1, got {t}")));
    }
    if k < 1 || k > n {
        return Err(Error::arg(format!("needs 1 <= k <= n, got n={n}, k={k}")));
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok((2.0 * alpha / t - 1.0) * ((2.0 / (kf * t) - nf - 1.0) * alpha + (nf - 1.0) / kf))
}

/// Magnitude scale for [`alpha_window_factor`].
pub fn alpha_window_scale(t: f64, alpha: f64, n: usize, k: usize) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let a = (2.0 * alpha / t).abs() + 1.0;
    let b = (2.0 / (kf * t) + nf + 1.0) * alpha.abs() + (nf - 1.0) / kf;
    a * b
}

/// `sum_ij H_ij h_i h_j + (1/k)(g . h)^2` for the log-derivatives of `S_k`.
pub fn power_sum_log_hessian_margin(lambda: &CurvatureVector, k: usize, h: &[f64]) -> Result<f64> {
    Ok(power_sum_log_hessian_parts(lambda, k, h)?.0)
}

/// Margin together with the sum of the magnitudes of its terms.
pub fn power_sum_log_hessian_parts(lambda: &CurvatureVector, k: usize, h: &[f64]) -> Result<(f64, f64)> {
    check_direction(lambda, h, "column")?;
    if k < 1 {
        return Err(Error::arg("power sum order must be >= 1"));
    }
    let f = SpeedFunction::power_sum_power(k, 1.0)?;
    let b = eval_bundle(&f, lambda);
    let g = b.log_gradient()?;
    let hess = b.log_hessian()?;
    let n = lambda.dim();
    let (mut quad, mut quad_abs, mut lin, mut lin_abs) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        lin += g[i] * h[i];
        lin_abs += (g[i] * h[i]).abs();
        for j in 0..n {
            quad += hess[(i, j)] * h[i] * h[j];
            quad_abs += (hess[(i, j)] * h[i] * h[j]).abs();
        }
    }
    let kf = k as f64;
    Ok((quad + lin * lin / kf, quad_abs + lin_abs * lin_abs / kf))
}
