//! Critical lines and exponent fits.

use std::f64::consts::LN_2;

use crate::error::{domain, smooth_required, Error, Result};
use crate::hull::ConcaveHull;
use crate::numeric::linear_fit;
use crate::pressure::{ground_density, rem_classical};
use crate::scalar::{arcosh_half_exp, ExtendedReal};
use crate::solve::{at_line, beta_c_rem, y_maximizer};

/// sqrt(A² - h²) computed as sqrt((A-h)(A+h)), clamped at 0.
fn line_from(a: f64, h: f64) -> f64 {
    ((a - h) * (a + h)).max(0.0).sqrt()
}

/// Γ_c(β,h) of the REM.
pub fn gamma_c_rem(beta: f64, h: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(domain("gamma_c_rem", beta, "beta > 0"));
    }
    let bc = beta_c_rem(h)?;
    let a = arcosh_half_exp(rem_classical(h, beta, bc)) / beta;
    Ok(line_from(a, h))
}

/// β → ∞ limit of Γ_c(β,h) for the REM.
pub fn gamma_c_rem_ground_state(h: f64) -> Result<f64> {
    let bc = beta_c_rem(h)?;
    Ok(line_from(bc + h * (bc * h).tanh(), h))
}

/// Γ_c(β,h) = arcosh(e^{φ(β,y(β,h))}/2)/β, with y = 0 at h = 0.
pub fn gamma_c_hier(hull: &ConcaveHull, beta: f64, h: f64) -> Result<f64> {
    if !hull.is_smooth() {
        return Err(smooth_required());
    }
    if !(beta > 0.0) {
        return Err(domain("gamma_c_hier", beta, "beta > 0"));
    }
    if !(h >= 0.0) {
        return Err(domain("gamma_c_hier", h, "h >= 0"));
    }
    let y = if h == 0.0 {
        0.0
    } else {
        y_maximizer(hull, h, beta)?
    };
    Ok(arcosh_half_exp(ground_density(hull.slope_at(y), beta)) / beta)
}

/// Γ_c^{(1)}(β) = arcosh(e^{s(β)}/2)/β, zero when ā(1) = 0.
pub fn gamma_c_secondary(hull: &ConcaveHull, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(domain("gamma_c_secondary", beta, "beta > 0"));
    }
    let end = hull.end_slope();
    if end == 0.0 {
        return Ok(0.0);
    }
    Ok(arcosh_half_exp(ground_density(end, beta)) / beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub prefactor_log: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares slope of ln(value) against ln(h) inside the window.
pub fn exponent_fit(curve: &[(f64, f64)], window: (f64, f64)) -> Result<ExponentFit> {
    let inside: Vec<(f64, f64)> = curve
        .iter()
        .copied()
        .filter(|(h, _)| *h >= window.0 && *h <= window.1)
        .collect();
    if inside.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "{} points inside [{}, {}], need 5",
            inside.len(),
            window.0,
            window.1
        )));
    }
    if inside.iter().any(|(h, v)| !(*v > 0.0) || !(*h > 0.0)) {
        return Err(Error::InsufficientData(
            "log-log fit needs positive values".into(),
        ));
    }
    let xs: Vec<f64> = inside.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = inside.iter().map(|p| p.1.ln()).collect();
    let (exponent, prefactor_log, r2) = linear_fit(&xs, &ys);
    Ok(ExponentFit {
        exponent,
        prefactor_log,
        r2,
        points: inside.len(),
    })
}

/// n log-spaced points over [lo, hi], endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// (h, T_c - T_c(h)) along the AT line.
pub fn at_line_shift_curve(hull: &ConcaveHull, hs: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !hull.is_smooth() {
        return Err(smooth_required());
    }
    let tc = (hull.start_slope() / (2.0 * LN_2)).sqrt();
    hs.iter()
        .map(|&h| {
            let t = match at_line(hull, h)? {
                ExtendedReal::Finite(b) => 1.0 / b,
                ExtendedReal::Infinite => 0.0,
            };
            Ok((h, tc - t))
        })
        .collect()
}

/// (h, Γ_c(β,0) - Γ_c(β,h)).
pub fn gamma_c_shift_curve(hull: &ConcaveHull, beta: f64, hs: &[f64]) -> Result<Vec<(f64, f64)>> {
    let g0 = gamma_c_hier(hull, beta, 0.0)?;
    hs.iter()
        .map(|&h| Ok((h, g0 - gamma_c_hier(hull, beta, h)?)))
        .collect()
}
