//! Root finding, 1-d maximization and adaptive quadrature.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const ROOT_RTOL: f64 = 1e-12;
pub const ROOT_ATOL: f64 = 1e-14;
pub const INTEGRATION_ATOL: f64 = 1e-11;

/// Brent's method on a sign-changing bracket. Stops once the bracket
/// half-width is below `atol + rtol*|x|`.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    rtol: f64,
    atol: f64,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoBracket { lo, hi });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * (atol + rtol * b.abs());
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Ok(b)
}

/// Plain bisection for a predicate that is false at `lo` and true at `hi`.
/// Returns the final bracket.
pub fn bisect_predicate<F: FnMut(f64) -> bool>(
    mut pred: F,
    mut lo: f64,
    mut hi: f64,
    rtol: f64,
    atol: f64,
) -> (f64, f64) {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= atol + rtol * mid.abs() || mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of a unimodal `f` on [a, b].
/// Endpoints are compared as well, so boundary maxima are returned exactly.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let fa = f(a);
    let fb = f(b);
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        if x1 >= x2 {
            break;
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if fa > best.1 {
        best = (a, fa);
    }
    if fb > best.1 {
        best = (b, fb);
    }
    best
}

fn legendre_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        gauss_quad::GaussLegendre::new(10)
            .expect("valid degree")
            .as_node_weight_pairs()
            .to_vec()
    })
}

fn gl<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    legendre_rule()
        .iter()
        .map(|&(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

fn adapt<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    budget: &mut usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = gl(f, a, m);
    let right = gl(f, m, b);
    let both = left + right;
    let floor = 8.0 * f64::EPSILON * (left.abs() + right.abs());
    if (both - whole).abs() <= tol.max(floor) || depth >= 40 || *budget == 0 || m <= a || m >= b {
        return both;
    }
    *budget -= 1;
    adapt(f, a, m, left, 0.5 * tol, depth + 1, budget)
        + adapt(f, m, b, right, 0.5 * tol, depth + 1, budget)
}

/// Adaptive 10-point Gauss-Legendre quadrature of `f` over [a, b], split at
/// the given interior points.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, splits: &[f64], atol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut knots = vec![a];
    let mut inner: Vec<f64> = splits
        .iter()
        .copied()
        .filter(|s| *s > a && *s < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    knots.extend(inner);
    knots.push(b);
    knots.dedup();
    let pieces = (knots.len() - 1) as f64;
    // caps the work when noise keeps the error estimate above tolerance
    let mut budget = 100_000;
    knots
        .windows(2)
        .map(|w| {
            let whole = gl(&mut f, w[0], w[1]);
            adapt(&mut f, w[0], w[1], whole, atol / pieces, 0, &mut budget)
        })
        .sum()
}

/// Least-squares line through (x, y); returns (slope, intercept, r^2).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, intercept, r2)
}

/// ln(sum exp(v)) without overflow.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = LogSumExp::default();
    for v in values {
        acc.push(v);
    }
    acc.value()
}

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, v: f64) {
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    pub fn merge(&mut self, other: LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max <= self.max {
            self.sum += other.sum * (other.max - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}
