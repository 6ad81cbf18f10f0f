//! Truncated multivariate Taylor expansions ("jets") in the three chart
//! coordinates `(x1, x2, u)`.
//!
//! A jet stores `∂x1^a ∂x2^b ∂u^k F / (a! b! k!)` for every multi-index with
//! `a + b <= max_x_order` and `k <= max_u_order`. The two caps are independent:
//! the geometry pipeline differentiates five or six times in `u` but only twice
//! in `x`. Because the discarded monomials form an ideal, truncated arithmetic
//! is an honest commutative ring and composition with analytic functions is
//! exact up to the caps.
//!
//! Differentiating a jet lowers the matching cap by one, and combining jets
//! with different caps truncates to the common (smaller) caps, so every
//! coefficient a jet carries is always exact.

mod series;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;
use thiserror::Error;

pub(crate) use series::atanh_ext_value;
pub(crate) use series::{integrate as series_integrate, mul as series_mul, recip as series_recip};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("division by a jet whose constant term is zero")]
    SingularDivision,
    #[error("{function} is undefined at {value}")]
    Domain { function: &'static str, value: f64 },
    #[error("derivative index ({a}, {b}, {k}) exceeds jet caps (x <= {max_x}, u <= {max_u})")]
    OutOfCap {
        a: usize,
        b: usize,
        k: usize,
        max_x: usize,
        max_u: usize,
    },
}

/// Per-variable truncation orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JetSpec {
    pub max_u_order: usize,
    pub max_x_order: usize,
}

impl Default for JetSpec {
    fn default() -> Self {
        Self {
            max_u_order: 6,
            max_x_order: 2,
        }
    }
}

impl JetSpec {
    pub const fn new(max_x_order: usize, max_u_order: usize) -> Self {
        Self {
            max_u_order,
            max_x_order,
        }
    }

    /// Caps for a univariate series in the `u` slot (used for functions of `t`).
    pub const fn univariate(order: usize) -> Self {
        Self::new(0, order)
    }

    fn x_len(&self) -> usize {
        (self.max_x_order + 1) * (self.max_x_order + 2) / 2
    }

    fn u_len(&self) -> usize {
        self.max_u_order + 1
    }

    fn len(&self) -> usize {
        self.x_len() * self.u_len()
    }

    /// Graded position of the x-monomial `x1^a x2^b`.
    fn x_index(a: usize, b: usize) -> usize {
        let d = a + b;
        d * (d + 1) / 2 + b
    }

    fn index(&self, a: usize, b: usize, k: usize) -> usize {
        Self::x_index(a, b) * self.u_len() + k
    }

    fn contains(&self, a: usize, b: usize, k: usize) -> bool {
        a + b <= self.max_x_order && k <= self.max_u_order
    }

    fn x_monomials(&self) -> impl Iterator<Item = (usize, usize)> {
        let max = self.max_x_order;
        (0..=max).flat_map(|d| (0..=d).map(move |b| (d - b, b)))
    }

    pub fn meet(self, other: JetSpec) -> JetSpec {
        JetSpec::new(
            self.max_x_order.min(other.max_x_order),
            self.max_u_order.min(other.max_u_order),
        )
    }

    /// `(j - j0)^n` vanishes for every `n` above this; univariate series
    /// composed into a jet never need more coefficients.
    pub fn nilpotency(&self) -> usize {
        self.max_x_order + self.max_u_order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Var {
    X1,
    X2,
    U,
}

/// The point `(x1, x2, u)` a jet is expanded around.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BasePoint {
    pub x1: f64,
    pub x2: f64,
    pub u: f64,
}

impl BasePoint {
    pub const fn new(x1: f64, x2: f64, u: f64) -> Self {
        Self { x1, x2, u }
    }

    pub const fn at_t(t: f64) -> Self {
        Self::new(0.0, 0.0, t)
    }

    fn coordinate(&self, which: Var) -> f64 {
        match which {
            Var::X1 => self.x1,
            Var::X2 => self.x2,
            Var::U => self.u,
        }
    }
}

/// Univariate functions that can be composed with a jet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementary {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Atan,
    /// `1/2 ln|(1+z)/(1-z)|`: arctanh inside (-1, 1), real arccoth outside.
    AtanhExt,
}

#[derive(Clone, PartialEq)]
pub struct Jet {
    spec: JetSpec,
    base: BasePoint,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (a, b) in self.spec.x_monomials() {
            for k in 0..=self.spec.max_u_order {
                let c = self.coeff(a, b, k);
                if c != 0.0 {
                    m.entry(&(a, b, k), &c);
                }
            }
        }
        m.finish()
    }
}

/// Maps a target slot `(a, b, k)` to its source slot and the factor it picks up.
type Shift = fn(usize, usize, usize) -> (usize, usize, usize, f64);

impl Jet {
    pub fn constant(spec: JetSpec, base: BasePoint, value: f64) -> Self {
        let mut coeffs = vec![0.0; spec.len()];
        coeffs[0] = value;
        Self { spec, base, coeffs }
    }

    /// Jet of the coordinate function `which` at `base`.
    pub fn lift(which: Var, spec: JetSpec, base: BasePoint) -> Self {
        let mut j = Self::constant(spec, base, base.coordinate(which));
        let slot = match which {
            Var::X1 if spec.max_x_order >= 1 => Some(spec.index(1, 0, 0)),
            Var::X2 if spec.max_x_order >= 1 => Some(spec.index(0, 1, 0)),
            Var::U if spec.max_u_order >= 1 => Some(spec.index(0, 0, 1)),
            _ => None,
        };
        if let Some(i) = slot {
            j.coeffs[i] = 1.0;
        }
        j
    }

    /// Univariate jet of the identity at `t` (stored in the `u` slot).
    pub fn variable_t(t: f64, order: usize) -> Self {
        Self::lift(Var::U, JetSpec::univariate(order), BasePoint::at_t(t))
    }

    pub fn spec(&self) -> JetSpec {
        self.spec
    }

    pub fn base(&self) -> BasePoint {
        self.base
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw Taylor coefficient (0 outside the caps).
    pub fn coeff(&self, a: usize, b: usize, k: usize) -> f64 {
        if self.spec.contains(a, b, k) {
            self.coeffs[self.spec.index(a, b, k)]
        } else {
            0.0
        }
    }

    /// `∂x1^a ∂x2^b ∂u^k` at the base point.
    pub fn extract(&self, a: usize, b: usize, k: usize) -> Result<f64, JetError> {
        if !self.spec.contains(a, b, k) {
            return Err(JetError::OutOfCap {
                a,
                b,
                k,
                max_x: self.spec.max_x_order,
                max_u: self.spec.max_u_order,
            });
        }
        Ok(self.coeffs[self.spec.index(a, b, k)] * factorial(a) * factorial(b) * factorial(k))
    }

    /// `k`-th `u`-derivative at the base point (shorthand for `extract(0, 0, k)`).
    pub fn du(&self, k: usize) -> Result<f64, JetError> {
        self.extract(0, 0, k)
    }

    /// Copy with smaller caps. Caps larger than the current ones are clamped.
    pub fn truncate(&self, spec: JetSpec) -> Jet {
        let spec = spec.meet(self.spec);
        if spec == self.spec {
            return self.clone();
        }
        let mut out = Jet::constant(spec, self.base, 0.0);
        for (a, b) in spec.x_monomials() {
            for k in 0..=spec.max_u_order {
                out.coeffs[spec.index(a, b, k)] = self.coeffs[self.spec.index(a, b, k)];
            }
        }
        out
    }

    /// Jet of the partial derivative; the corresponding cap drops by one.
    pub fn derivative(&self, which: Var) -> Result<Jet, JetError> {
        let s = self.spec;
        let (spec, shift): (JetSpec, Shift) = match which {
            Var::U => {
                if s.max_u_order == 0 {
                    return Err(self.cap_error(0, 0, 1));
                }
                (JetSpec::new(s.max_x_order, s.max_u_order - 1), |a, b, k| {
                    (a, b, k + 1, (k + 1) as f64)
                })
            }
            Var::X1 => {
                if s.max_x_order == 0 {
                    return Err(self.cap_error(1, 0, 0));
                }
                (JetSpec::new(s.max_x_order - 1, s.max_u_order), |a, b, k| {
                    (a + 1, b, k, (a + 1) as f64)
                })
            }
            Var::X2 => {
                if s.max_x_order == 0 {
                    return Err(self.cap_error(0, 1, 0));
                }
                (JetSpec::new(s.max_x_order - 1, s.max_u_order), |a, b, k| {
                    (a, b + 1, k, (b + 1) as f64)
                })
            }
        };
        let mut out = Jet::constant(spec, self.base, 0.0);
        for (a, b) in spec.x_monomials() {
            for k in 0..=spec.max_u_order {
                let (sa, sb, sk, w) = shift(a, b, k);
                out.coeffs[spec.index(a, b, k)] = w * self.coeffs[s.index(sa, sb, sk)];
            }
        }
        Ok(out)
    }

    pub fn d_u(&self) -> Result<Jet, JetError> {
        self.derivative(Var::U)
    }

    pub fn d_x1(&self) -> Result<Jet, JetError> {
        self.derivative(Var::X1)
    }

    pub fn d_x2(&self) -> Result<Jet, JetError> {
        self.derivative(Var::X2)
    }

    fn cap_error(&self, a: usize, b: usize, k: usize) -> JetError {
        JetError::OutOfCap {
            a,
            b,
            k,
            max_x: self.spec.max_x_order,
            max_u: self.spec.max_u_order,
        }
    }

    /// True when every non-constant coefficient is zero.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0.0)
    }

    /// Largest absolute coefficient, a cheap size measure.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn zip_with(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        assert_eq!(self.base, other.base, "jets expanded at different points");
        let spec = self.spec.meet(other.spec);
        if spec == self.spec && spec == other.spec {
            let coeffs = self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| op(a, b))
                .collect();
            return Jet {
                spec,
                base: self.base,
                coeffs,
            };
        }
        let (l, r) = (self.truncate(spec), other.truncate(spec));
        l.zip_with(&r, op)
    }

    fn map(&self, op: impl Fn(f64) -> f64) -> Jet {
        Jet {
            spec: self.spec,
            base: self.base,
            coeffs: self.coeffs.iter().map(|&c| op(c)).collect(),
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        assert_eq!(self.base, other.base, "jets expanded at different points");
        let spec = self.spec.meet(other.spec);
        let (ls, rs) = (self.spec, other.spec);
        let un = spec.max_u_order;
        let mut out = Jet::constant(spec, self.base, 0.0);
        for (a1, b1) in spec.x_monomials() {
            for (a2, b2) in spec.x_monomials() {
                if a1 + a2 + b1 + b2 > spec.max_x_order {
                    continue;
                }
                let lo = ls.index(a1, b1, 0);
                let ro = rs.index(a2, b2, 0);
                let to = spec.index(a1 + a2, b1 + b2, 0);
                for k1 in 0..=un {
                    let l = self.coeffs[lo + k1];
                    if l == 0.0 {
                        continue;
                    }
                    for k2 in 0..=un - k1 {
                        out.coeffs[to + k1 + k2] += l * other.coeffs[ro + k2];
                    }
                }
            }
        }
        out
    }

    /// `g(self)` where `coeffs[n] = g^(n)(self.value()) / n!`. Missing
    /// high-order coefficients are treated as zero.
    pub fn compose(&self, coeffs: &[f64]) -> Jet {
        let n = self.spec.nilpotency().min(coeffs.len().saturating_sub(1));
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet::constant(self.spec, self.base, coeffs.get(n).copied().unwrap_or(0.0));
        for k in (0..n).rev() {
            acc = acc.product(&h);
            acc.coeffs[0] += coeffs[k];
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let a0 = self.value();
        if a0 == 0.0 || !a0.is_finite() {
            return Err(JetError::SingularDivision);
        }
        let n = self.spec.nilpotency();
        let mut c = Vec::with_capacity(n + 1);
        let mut p = 1.0 / a0;
        for k in 0..=n {
            c.push(if k % 2 == 0 { p } else { -p });
            p /= a0;
        }
        Ok(self.compose(&c))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet, JetError> {
        Ok(self * &other.recip()?)
    }

    pub fn powi(&self, n: i32) -> Result<Jet, JetError> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Jet::constant(self.spec, self.base, 1.0);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.product(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.product(&sq);
            }
        }
        Ok(acc)
    }

    /// `self^p` for real `p`; the constant term must be positive.
    pub fn powf(&self, p: f64) -> Result<Jet, JetError> {
        let c = series::powf(self.value(), p, self.spec.nilpotency(), "pow")?;
        Ok(self.compose(&c))
    }

    pub fn apply(&self, func: Elementary) -> Result<Jet, JetError> {
        let a0 = self.value();
        let n = self.spec.nilpotency();
        let c = match func {
            Elementary::Exp => series::exp(a0, n),
            Elementary::Ln => series::ln(a0, n)?,
            Elementary::Sqrt => series::powf(a0, 0.5, n, "sqrt")?,
            Elementary::Sin => series::sin_cos(a0, n).0,
            Elementary::Cos => series::sin_cos(a0, n).1,
            Elementary::Tan => series::tan(a0, n)?,
            Elementary::Atan => series::atan(a0, n)?,
            Elementary::AtanhExt => series::atanh_ext(a0, n)?,
        };
        Ok(self.compose(&c))
    }

    pub fn exp(&self) -> Jet {
        self.compose(&series::exp(self.value(), self.spec.nilpotency()))
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        self.apply(Elementary::Ln)
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        self.apply(Elementary::Sqrt)
    }

    pub fn sin(&self) -> Jet {
        self.compose(&series::sin_cos(self.value(), self.spec.nilpotency()).0)
    }

    pub fn cos(&self) -> Jet {
        self.compose(&series::sin_cos(self.value(), self.spec.nilpotency()).1)
    }

    pub fn atanh_ext(&self) -> Result<Jet, JetError> {
        self.apply(Elementary::AtanhExt)
    }

    pub fn scale(&self, s: f64) -> Jet {
        self.map(|c| c * s)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

macro_rules! ring_op {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                $body(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                $body(&self, &rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                $body(&self, rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                $body(self, &rhs)
            }
        }
    };
}

ring_op!(Add, add, |a: &Jet, b: &Jet| a.zip_with(b, |x, y| x + y));
ring_op!(Sub, sub, |a: &Jet, b: &Jet| a.zip_with(b, |x, y| x - y));
ring_op!(Mul, mul, |a: &Jet, b: &Jet| a.product(b));

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self + (-rhs)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self + (-rhs)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Sub<&Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        -rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Add<&Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        rhs + self
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|c| -c)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|c| -c)
    }
}
