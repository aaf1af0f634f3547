use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use super::curvature::{CurvatureVector, MAX_DIM};
use super::sigma::{sigma_all, sigma_skip};
use crate::error::{Error, Result};

/// Building block of a speed function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Elementary symmetric function `sigma_k`.
    Sigma(usize),
    /// Power sum `S_k`.
    PowerSum(usize),
}

impl Basis {
    pub fn order(self) -> usize {
        match self {
            Basis::Sigma(k) | Basis::PowerSum(k) => k,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Sigma(k) => write!(f, "sigma({k})"),
            Basis::PowerSum(k) => write!(f, "S({k})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor {
    pub basis: Basis,
    pub exponent: f64,
}

impl Factor {
    pub fn degree(&self) -> f64 {
        self.basis.order() as f64 * self.exponent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn degree(&self) -> f64 {
        self.factors.iter().map(Factor::degree).sum()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coefficient)?;
        for factor in &self.factors {
            write!(f, "*{}", factor.basis)?;
            if factor.exponent != 1.0 {
                if factor.exponent < 0.0 {
                    write!(f, "^({})", factor.exponent)?;
                } else {
                    write!(f, "^{}", factor.exponent)?;
                }
            }
        }
        Ok(())
    }
}

/// A homogeneous symmetric function of the principal curvatures: a signed sum
/// of products of real powers of `sigma_k` and `S_k`, all terms of the same
/// degree `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedFunction {
    terms: Vec<Term>,
    beta: f64,
}

/// How much of the jet to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Order {
    Gradient,
    Hessian,
}

/// Value, gradient and row-major Hessian at a point (unsorted slices allowed).
#[derive(Debug, Clone)]
pub(crate) struct Jet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

impl SpeedFunction {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::arg("speed function needs at least one term"));
        }
        for term in &terms {
            if !term.coefficient.is_finite() {
                return Err(Error::arg(format!("term `{term}` has a non-finite coefficient")));
            }
            for factor in &term.factors {
                if factor.basis.order() == 0 || factor.basis.order() > MAX_DIM {
                    return Err(Error::arg(format!(
                        "term `{term}`: basis order must lie in 1..={MAX_DIM}"
                    )));
                }
                if !factor.exponent.is_finite() {
                    return Err(Error::arg(format!("term `{term}` has a non-finite exponent")));
                }
            }
        }
        let beta = terms[0].degree();
        for (i, term) in terms.iter().enumerate().skip(1) {
            let d = term.degree();
            if (d - beta).abs() > 1e-12 * beta.abs().max(1.0) {
                return Err(Error::arg(format!(
                    "mixed homogeneity degrees: term 1 `{}` has degree {beta} but term {} `{term}` has degree {d}",
                    terms[0],
                    i + 1
                )));
            }
        }
        Ok(Self { terms, beta })
    }

    /// `sigma_k^alpha`.
    pub fn sigma_power(k: usize, alpha: f64) -> Result<Self> {
        Self::single(Basis::Sigma(k), alpha)
    }

    /// `S_k^alpha`.
    pub fn power_sum_power(k: usize, alpha: f64) -> Result<Self> {
        Self::single(Basis::PowerSum(k), alpha)
    }

    fn single(basis: Basis, exponent: f64) -> Result<Self> {
        Self::new(vec![Term {
            coefficient: 1.0,
            factors: vec![Factor { basis, exponent }],
        }])
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).parse()
    }

    /// Homogeneity degree.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// The form `basis^exponent` with unit coefficient, if that is what this is.
    pub fn single_power(&self) -> Option<(Basis, f64)> {
        match self.terms.as_slice() {
            [Term {
                coefficient,
                factors,
            }] if *coefficient == 1.0 && factors.len() == 1 => {
                Some((factors[0].basis, factors[0].exponent))
            }
            _ => None,
        }
    }

    /// Products of positive powers of `sigma_k` and `S_k` with a positive
    /// coefficient. Signed combinations are kept for negative tests and are
    /// reported as outside this class.
    pub fn is_condition_class(&self) -> bool {
        match self.terms.as_slice() {
            [term] => {
                term.coefficient > 0.0
                    && !term.factors.is_empty()
                    && term.factors.iter().all(|f| f.exponent > 0.0)
            }
            _ => false,
        }
    }

    /// True when every `sigma_k` factor has `k <= n`, so the function is
    /// positive on the cone in dimension `n` (for the condition class).
    pub fn fits_dimension(&self, n: usize) -> bool {
        self.terms.iter().all(|t| {
            t.factors.iter().all(|f| match f.basis {
                Basis::Sigma(k) => k <= n,
                Basis::PowerSum(_) => true,
            })
        })
    }

    pub fn value(&self, lambda: &CurvatureVector) -> f64 {
        self.value_at(lambda.as_slice())
    }

    /// Value with absolute coefficients and factor magnitudes, a natural scale
    /// for sign tests on signed combinations.
    pub fn magnitude(&self, lambda: &CurvatureVector) -> f64 {
        let v = lambda.as_slice();
        self.terms
            .iter()
            .map(|t| {
                t.coefficient.abs()
                    * t.factors
                        .iter()
                        .map(|f| pow(basis_value(f.basis, v).abs(), f.exponent))
                        .product::<f64>()
            })
            .sum()
    }

    pub(crate) fn value_at(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coefficient
                    * t.factors
                        .iter()
                        .map(|f| pow(basis_value(f.basis, values), f.exponent))
                        .product::<f64>()
            })
            .sum()
    }

    pub(crate) fn jet_at(&self, values: &[f64], order: Order) -> Jet {
        let n = values.len();
        let mut out = Jet {
            value: 0.0,
            gradient: vec![0.0; if order >= Order::Gradient { n } else { 0 }],
            hessian: vec![0.0; if order >= Order::Hessian { n * n } else { 0 }],
        };
        for term in &self.terms {
            let jets: Vec<Jet> = term
                .factors
                .iter()
                .map(|f| power_jet(f.basis, f.exponent, values, order))
                .collect();
            accumulate_product(&mut out, term.coefficient, &jets, n, order);
        }
        out
    }
}

impl FromStr for SpeedFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for SpeedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, term) in self.terms.iter().enumerate() {
            if i == 0 {
                write!(f, "{term}")?;
            } else if term.coefficient < 0.0 {
                let flipped = Term {
                    coefficient: -term.coefficient,
                    factors: term.factors.clone(),
                };
                write!(f, " - {flipped}")?;
            } else {
                write!(f, " + {term}")?;
            }
        }
        Ok(())
    }
}

impl Serialize for SpeedFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn pow(base: f64, exponent: f64) -> f64 {
    if exponent == exponent.trunc() && exponent.abs() <= 64.0 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

fn basis_value(basis: Basis, v: &[f64]) -> f64 {
    match basis {
        Basis::Sigma(k) => sigma_all(v, k as isize),
        Basis::PowerSum(k) => v.iter().map(|x| x.powi(k as i32)).sum(),
    }
}

fn basis_jet(basis: Basis, v: &[f64], order: Order) -> Jet {
    let n = v.len();
    let value = basis_value(basis, v);
    let mut gradient = Vec::new();
    let mut hessian = Vec::new();
    match basis {
        Basis::Sigma(k) => {
            let k = k as isize;
            if order >= Order::Gradient {
                gradient = (0..n).map(|i| sigma_skip(v, k - 1, &[i])).collect();
            }
            if order >= Order::Hessian {
                hessian = vec![0.0; n * n];
                for i in 0..n {
                    for j in (i + 1)..n {
                        let h = sigma_skip(v, k - 2, &[i, j]);
                        hessian[i * n + j] = h;
                        hessian[j * n + i] = h;
                    }
                }
            }
        }
        Basis::PowerSum(k) => {
            let kf = k as f64;
            if order >= Order::Gradient {
                gradient = v.iter().map(|x| kf * x.powi(k as i32 - 1)).collect();
            }
            if order >= Order::Hessian {
                hessian = vec![0.0; n * n];
                if k >= 2 {
                    for i in 0..n {
                        hessian[i * n + i] = kf * (kf - 1.0) * v[i].powi(k as i32 - 2);
                    }
                }
            }
        }
    }
    Jet {
        value,
        gradient,
        hessian,
    }
}

/// Jet of `basis^exponent` by the chain rule.
fn power_jet(basis: Basis, exponent: f64, v: &[f64], order: Order) -> Jet {
    let b = basis_jet(basis, v, order);
    if exponent == 1.0 {
        return b;
    }
    let n = v.len();
    let value = pow(b.value, exponent);
    let mut gradient = Vec::new();
    let mut hessian = Vec::new();
    if order >= Order::Gradient {
        let d1 = exponent * pow(b.value, exponent - 1.0);
        gradient = b.gradient.iter().map(|g| d1 * g).collect();
        if order >= Order::Hessian {
            let c2 = exponent * (exponent - 1.0);
            let d2 = if c2 == 0.0 {
                0.0
            } else {
                c2 * pow(b.value, exponent - 2.0)
            };
            hessian = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut h = d1 * b.hessian[i * n + j];
                    if d2 != 0.0 {
                        h += d2 * b.gradient[i] * b.gradient[j];
                    }
                    hessian[i * n + j] = h;
                }
            }
        }
    }
    Jet {
        value,
        gradient,
        hessian,
    }
}

/// Adds `coefficient * prod(jets)` with its derivatives into `out`.
fn accumulate_product(out: &mut Jet, coefficient: f64, jets: &[Jet], n: usize, order: Order) {
    let m = jets.len();
    let product_except = |skip: &[usize]| -> f64 {
        jets.iter()
            .enumerate()
            .filter(|(i, _)| !skip.contains(i))
            .map(|(_, j)| j.value)
            .product()
    };
    out.value += coefficient * product_except(&[]);
    if order < Order::Gradient {
        return;
    }
    for f in 0..m {
        let rest = coefficient * product_except(&[f]);
        for i in 0..n {
            out.gradient[i] += rest * jets[f].gradient[i];
        }
        if order >= Order::Hessian {
            for idx in 0..n * n {
                out.hessian[idx] += rest * jets[f].hessian[idx];
            }
            for h in 0..m {
                if h == f {
                    continue;
                }
                let rest2 = coefficient * product_except(&[f, h]);
                for i in 0..n {
                    for j in 0..n {
                        out.hessian[i * n + j] += rest2 * jets[f].gradient[i] * jets[h].gradient[j];
                    }
                }
            }
        }
    }
}

/// Recursive-descent parser for expressions such as
/// `1.0*sigma(1)^2 - 3.0*sigma(2)` or `S(3)^(1/3)`.
struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_raw() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek_raw(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_raw()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn parse(mut self) -> Result<SpeedFunction> {
        let mut terms = Vec::new();
        let mut sign = if self.eat('-') {
            -1.0
        } else {
            self.eat('+');
            1.0
        };
        loop {
            let mut term = self.term()?;
            term.coefficient *= sign;
            terms.push(term);
            if self.eat('+') {
                sign = 1.0;
            } else if self.eat('-') {
                sign = -1.0;
            } else {
                break;
            }
        }
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        SpeedFunction::new(terms)
    }

    fn term(&mut self) -> Result<Term> {
        let mut term = Term {
            coefficient: 1.0,
            factors: Vec::new(),
        };
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_digit() || c == '.' => term.coefficient *= self.number()?,
                Some(c) if c.is_ascii_alphabetic() => term.factors.push(self.factor()?),
                _ => return self.err("expected a number, `sigma(k)` or `S(k)`"),
            }
            if !self.eat('*') {
                break;
            }
        }
        Ok(term)
    }

    fn factor(&mut self) -> Result<Factor> {
        let start = self.pos;
        while matches!(self.peek_raw(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        self.expect('(')?;
        let k = self.integer()?;
        self.expect(')')?;
        let basis = match name {
            "sigma" => Basis::Sigma(k),
            "S" => Basis::PowerSum(k),
            other => {
                self.pos = start;
                return self.err(format!("unknown basis `{other}` (use `sigma` or `S`)"));
            }
        };
        if k == 0 {
            self.pos = start;
            return self.err("basis order must be at least 1");
        }
        let exponent = if self.eat('^') { self.exponent()? } else { 1.0 };
        Ok(Factor { basis, exponent })
    }

    fn exponent(&mut self) -> Result<f64> {
        if self.eat('(') {
            let num = self.signed_number()?;
            let value = if self.eat('/') {
                let den = self.signed_number()?;
                if den == 0.0 {
                    return self.err("zero denominator in exponent");
                }
                num / den
            } else {
                num
            };
            self.expect(')')?;
            Ok(value)
        } else {
            self.signed_number()
        }
    }

    fn signed_number(&mut self) -> Result<f64> {
        if self.eat('-') {
            Ok(-self.number()?)
        } else {
            self.number()
        }
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek_raw(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer order");
        }
        self.src[start..self.pos]
            .parse()
            .or_else(|_| self.err("integer order out of range"))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        self.pos = i;
        match self.src[start..i].parse::<f64>() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.err("malformed number")
            }
        }
    }
}
