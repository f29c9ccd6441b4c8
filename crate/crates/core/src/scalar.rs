//! Special functions and field-law moments.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::FieldLaw;
use crate::numeric::brent;

/// ln cosh x without overflow or cancellation.
pub fn ln_cosh(x: f64) -> f64 {
    let x = x.abs();
    if x < 1.0 {
        let s = x.sinh();
        0.5 * (s * s).ln_1p()
    } else {
        x + (-2.0 * x).exp().ln_1p() - LN_2
    }
}

pub fn ln_2cosh(x: f64) -> f64 {
    LN_2 + ln_cosh(x)
}

pub fn artanh(g: f64) -> f64 {
    0.5 * (2.0 * g / (1.0 - g)).ln_1p()
}

/// r(x) = -((1-x)/2) ln((1-x)/2) - ((1+x)/2) ln((1+x)/2).
pub fn binary_entropy_r(x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(domain("binary_entropy_r", x, "[-1, 1]"));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.ln() };
    Ok(term(0.5 * (1.0 - x)) + term(0.5 * (1.0 + x)))
}

/// r(tanh u) = ln 2 + ln cosh u - u tanh u, accurate for large |u|.
pub fn entropy_of_tanh(u: f64) -> f64 {
    let u = u.abs();
    if u < 1.0 {
        LN_2 + ln_cosh(u) - u * u.tanh()
    } else {
        let e = (-2.0 * u).exp();
        e.ln_1p() + 2.0 * u * e / (1.0 + e)
    }
}

/// gamma^{-1}(a) = 1 - r(a)/ln 2.
pub fn gamma_inv(a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(domain("gamma_inv", a, "[0, 1]"));
    }
    Ok(gamma_inv_unchecked(a))
}

fn gamma_inv_unchecked(a: f64) -> f64 {
    if a < 0.1 {
        // (1+a)ln(1+a) + (1-a)ln(1-a) = sum a^{2n} / (n(2n-1))
        let a2 = a * a;
        let mut pow = a2;
        let mut sum = 0.0;
        for n in 1..40 {
            let nf = n as f64;
            let term = pow / (nf * (2.0 * nf - 1.0));
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            pow *= a2;
        }
        sum / (2.0 * LN_2)
    } else if a == 1.0 {
        1.0
    } else {
        ((1.0 + a) * a.ln_1p() + (1.0 - a) * (-a).ln_1p()) / (2.0 * LN_2)
    }
}

/// r(1 - d) for d in [0, 1], without cancellation at small d.
fn entropy_near_one(d: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    0.5 * (d * LN_2 - (2.0 - d) * (-0.5 * d).ln_1p() - d * d.ln())
}

/// d = 1 - gamma(1 - e), accurate for small e.
pub(crate) fn gamma_complement(e: f64) -> f64 {
    if e <= 0.0 {
        return 0.0;
    }
    if e >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // e ~ d ln(2e/d) / (2 ln 2) for small d
    let mut d = (2.0 * LN_2 * e / (2.0 * LN_2 * e).recip().ln().max(1.0)).min(0.5);
    for _ in 0..200 {
        let f = entropy_near_one(d) / LN_2 - e;
        if f == 0.0 {
            return d;
        }
        if f > 0.0 {
            hi = d;
        } else {
            lo = d;
        }
        // d/dd r(1-d) = artanh(1-d) = ln((2-d)/d)/2
        let slope = 0.5 * ((2.0 - d) / d).ln() / LN_2;
        let mut next = d - f / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - d).abs();
        d = next;
        if step <= 2.0 * f64::EPSILON * d || hi - lo <= 2.0 * f64::EPSILON * d {
            break;
        }
    }
    d
}

/// gamma(x), the inverse of `gamma_inv`, by safeguarded Newton on a bisection bracket.
pub fn gamma(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("gamma", x, "[0, 1]"));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    if x > 0.5 {
        return Ok(1.0 - gamma_complement(1.0 - x));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut a = (2.0 * LN_2 * x).sqrt().min(0.5 * (1.0 + x));
    for _ in 0..200 {
        let f = gamma_inv_unchecked(a) - x;
        if f == 0.0 {
            return Ok(a);
        }
        if f > 0.0 {
            hi = a;
        } else {
            lo = a;
        }
        let slope = artanh(a) / LN_2;
        let mut next = a - f / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - a).abs();
        a = next;
        if step <= 2.0 * f64::EPSILON * a || hi - lo <= 2.0 * f64::EPSILON * a {
            break;
        }
    }
    Ok(a)
}

/// gamma'(x) = ln 2 / artanh(gamma(x)), with gamma'(1) = 0.
pub fn gamma_deriv(x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(domain("gamma_deriv", x, "(0, 1]"));
    }
    if x == 1.0 {
        return Ok(0.0);
    }
    if x > 0.5 {
        let d = gamma_complement(1.0 - x);
        return Ok(2.0 * LN_2 / ((2.0 - d) / d).ln());
    }
    Ok(LN_2 / artanh(gamma(x)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaQuery {
    Inv,
    Fwd,
    Deriv,
}

pub fn gamma_family(query: GammaQuery, arg: f64) -> Result<f64> {
    match query {
        GammaQuery::Inv => gamma_inv(arg),
        GammaQuery::Fwd => gamma(arg),
        GammaQuery::Deriv => gamma_deriv(arg),
    }
}

/// Slope of A = gamma^2: 2 gamma gamma' = 2 ln 2 g / artanh(g), g = gamma(x).
/// Runs from 2 ln 2 at x = 0 down to 0 at x = 1.
pub fn sk_slope(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x > 0.5 {
        let d = gamma_complement(1.0 - x);
        if d == 0.0 {
            return 0.0;
        }
        return 4.0 * LN_2 * (1.0 - d) / ((2.0 - d) / d).ln();
    }
    let g = gamma(x).unwrap_or(1.0);
    if g >= 1.0 {
        return 0.0;
    }
    let ratio = if g < 1e-4 {
        let g2 = g * g;
        1.0 / (1.0 + g2 / 3.0 + g2 * g2 / 5.0)
    } else {
        g / artanh(g)
    };
    2.0 * LN_2 * ratio
}

/// k(x) = (1/x) tanh(ln2/x) - ln cosh(ln2/x)/ln 2, k(0) = 1; the inverse of gamma'.
pub fn k_inverse_slope(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain("k_inverse_slope", x, "[0, inf)"));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let u = LN_2 / x;
    if u > 1.0 {
        let e = (-2.0 * u).exp();
        Ok(1.0 - (2.0 * u * e / (1.0 + e) + e.ln_1p()) / LN_2)
    } else {
        Ok((u * u.tanh() - ln_cosh(u)) / LN_2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    LnCosh,
    HTanh,
    AbsFirst,
}

pub fn field_moment(law: &FieldLaw, kind: MomentKind, t: f64) -> f64 {
    match kind {
        MomentKind::LnCosh => law.expect(|v| ln_cosh(t * v)),
        MomentKind::HTanh => law.expect(|v| v * (t * v).tanh()),
        MomentKind::AbsFirst => law.abs_first(),
    }
}

/// E[ln 2cosh(beta sqrt(b^2 + h^2))] over the product law.
pub fn paramagnet_pressure(h_law: &FieldLaw, b_law: &FieldLaw, beta: f64) -> f64 {
    if beta == 0.0 {
        return LN_2;
    }
    h_law.expect(|h| b_law.expect(|b| ln_2cosh(beta * h.hypot(b))))
}

/// A real number or +infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinite)
    }

    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

/// Law with its cached E|h|, for the rate function.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunctionHandle {
    law: FieldLaw,
    abs_first: f64,
    boundary_value: f64,
}

impl RateFunctionHandle {
    pub fn new(law: FieldLaw) -> Self {
        let abs_first = law.abs_first();
        let boundary_value = LN_2 * law.prob_nonzero();
        Self {
            law,
            abs_first,
            boundary_value,
        }
    }

    pub fn law(&self) -> &FieldLaw {
        &self.law
    }

    pub fn abs_first(&self) -> f64 {
        self.abs_first
    }

    /// I at the edge of its domain, z = +-E|h|.
    pub fn boundary_value(&self) -> f64 {
        self.boundary_value
    }

    /// (z, I(z)) as functions of the dual variable t >= 0.
    pub fn dual_point(&self, t: f64) -> (f64, f64) {
        let z = self.law.expect(|v| v * (t * v).tanh());
        (z, z * t - self.law.expect(|v| ln_cosh(t * v)))
    }
}

/// I(z) = sup_t { z t - E ln cosh(t h) }.
pub fn rate_function(handle: &RateFunctionHandle, z: f64) -> ExtendedReal {
    let z = z.abs();
    let m = handle.abs_first;
    if z > m {
        return ExtendedReal::Infinite;
    }
    if z == 0.0 {
        return ExtendedReal::Finite(0.0);
    }
    if z == m {
        return ExtendedReal::Finite(handle.boundary_value);
    }
    let law = &handle.law;
    let g = |t: f64| law.expect(|v| v * (t * v).tanh()) - z;
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return ExtendedReal::Finite(handle.dual_point(hi).1.min(handle.boundary_value));
        }
    }
    let t = brent(g, 0.0, hi, 1e-14, 1e-16).unwrap_or(hi);
    ExtendedReal::Finite((z * t - law.expect(|v| ln_cosh(t * v))).max(0.0))
}

/// arcosh(e^t / 2) for t >= ln 2, stable at both ends.
pub fn arcosh_half_exp(t: f64) -> f64 {
    let s = t - LN_2;
    if s <= 0.0 {
        return 0.0;
    }
    if s > 20.0 {
        return s + (1.0 - 4.0 * (-2.0 * t).exp()).sqrt().ln_1p();
    }
    let u = s.exp_m1();
    if u < 1e-12 {
        // arcosh(1+u) = sqrt(2u)(1 - u/12 + ...)
        return (2.0 * u).sqrt() * (1.0 - u / 12.0);
    }
    (u + (u * (2.0 + u)).sqrt()).ln_1p()
}
