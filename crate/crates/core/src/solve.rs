//! Self-consistency equations and maximizer equations.

use std::f64::consts::LN_2;

use crate::error::{domain, smooth_required, Error, Result};
use crate::hull::{freezing_threshold, ConcaveHull};
use crate::model::FieldLaw;
use crate::numeric::{bisect_predicate, brent, ROOT_ATOL, ROOT_RTOL};
use crate::pressure::ground_density;
use crate::scalar::{
    binary_entropy_r, entropy_of_tanh, k_inverse_slope, paramagnet_pressure, ExtendedReal,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SelfConsistencyProblem {
    pub slope: f64,
    pub law: FieldLaw,
}

/// Unique β > 0 with (slope/2)β² = ln 2 + E ln cosh βh - β E[h tanh βh].
pub fn beta_c_general(problem: &SelfConsistencyProblem) -> Result<f64> {
    beta_c(problem.slope, &problem.law)
}

pub fn beta_c(slope: f64, law: &FieldLaw) -> Result<f64> {
    if slope == 0.0 {
        return Err(Error::DegenerateSlope);
    }
    if !(slope > 0.0) {
        return Err(domain("beta_c_general", slope, "slope > 0"));
    }
    let top = (2.0 * LN_2 / slope).sqrt();
    if law.is_zero() {
        return Ok(top);
    }
    let f = |b: f64| 0.5 * slope * b * b - law.expect(|h| entropy_of_tanh(b * h));
    brent(
        f,
        0.0,
        top * (1.0 + 1e-9),
        ROOT_RTOL * 1e-2,
        ROOT_ATOL * 1e-2,
    )
}

/// Slope above which the density is frozen at inverse temperature β:
/// slope > s*(β) iff β > β_c(slope).
pub fn freezing_slope(law: &FieldLaw, beta: f64) -> f64 {
    2.0 * law.expect(|h| entropy_of_tanh(beta * h)) / (beta * beta)
}

/// β_c(h) of the REM: β² = 2 r(tanh(βh)).
pub fn beta_c_rem(h: f64) -> Result<f64> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(domain("beta_c_rem", h, "[0, inf)"));
    }
    let top = (2.0 * LN_2).sqrt();
    if h == 0.0 {
        return Ok(top);
    }
    let f = |b: f64| b * b - 2.0 * binary_entropy_r((b * h).tanh()).unwrap_or(0.0);
    brent(
        f,
        0.0,
        top * (1.0 + 1e-9),
        ROOT_RTOL * 1e-2,
        ROOT_ATOL * 1e-2,
    )
}

/// Largest x in [0, L] with density(ā(x)) >= p, where `density` is
/// non-decreasing in the slope.
pub(crate) fn level_crossing<F: Fn(f64) -> f64>(hull: &ConcaveHull, density: F, p: f64) -> f64 {
    match hull {
        ConcaveHull::Piecewise(h) => h
            .segments()
            .iter()
            .take_while(|s| density(s.slope()) >= p)
            .last()
            .map(|s| s.end)
            .unwrap_or(0.0),
        ConcaveHull::Smooth(s) => {
            if s.length <= 0.0 || density(hull.start_slope()) < p {
                return 0.0;
            }
            if density(hull.end_slope()) >= p {
                return s.length;
            }
            brent(
                |x| density(hull.slope_at(x)) - p,
                0.0,
                s.length,
                1e-14,
                1e-16,
            )
            .unwrap_or(0.0)
        }
    }
}

/// Fixed point y = k(φ(β,y)/(βh)) on a smooth hull.
pub fn y_maximizer(hull: &ConcaveHull, h: f64, beta: f64) -> Result<f64> {
    if !hull.is_smooth() {
        return Err(smooth_required());
    }
    if !(h > 0.0) {
        return Err(domain("y_maximizer", h, "h > 0"));
    }
    if !(beta > 0.0) {
        return Err(domain("y_maximizer", beta, "beta > 0"));
    }
    let f = |y: f64| {
        let phi = ground_density(hull.slope_at(y), beta);
        y - k_inverse_slope(phi / (beta * h)).unwrap_or(1.0)
    };
    brent(f, 0.0, hull.length(), 1e-14, 1e-300)
}

/// Largest z with φ(β,z) >= E ln 2cosh(β b).
pub fn z_maximizer(hull: &ConcaveHull, b_law: &FieldLaw, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(domain("z_maximizer", beta, "beta > 0"));
    }
    let p = paramagnet_pressure(&FieldLaw::zero(), b_law, beta);
    Ok(level_crossing(hull, |s| ground_density(s, beta), p))
}

/// σ = k(p(βΓ)/(βh)).
pub fn sigma_diag(h: f64, b_law: &FieldLaw, beta: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(domain("sigma_diag", h, "h > 0"));
    }
    if !(beta > 0.0) {
        return Err(domain("sigma_diag", beta, "beta > 0"));
    }
    let p = paramagnet_pressure(&FieldLaw::zero(), b_law, beta);
    k_inverse_slope(p / (beta * h))
}

/// β_c(h) = inf{β : x(β) > k(2 ln 2/(βh))}; infinite when no crossing below 1e6.
pub fn at_line(hull: &ConcaveHull, h: f64) -> Result<ExtendedReal> {
    if !hull.is_smooth() {
        return Err(smooth_required());
    }
    if !(h > 0.0) {
        return Err(domain("at_line", h, "h > 0"));
    }
    let a0 = hull.start_slope();
    let bc = (2.0 * LN_2 / a0).sqrt();
    let above = |b: f64| {
        let x = freezing_threshold(hull, b).unwrap_or(0.0);
        x > k_inverse_slope(2.0 * LN_2 / (b * h)).unwrap_or(1.0)
    };
    let mut hi = 2.0 * bc;
    while !above(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(ExtendedReal::Infinite);
        }
    }
    let (lo, hi) = bisect_predicate(above, bc, hi, 1e-15, 0.0);
    Ok(ExtendedReal::Finite(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::build_concave_hull;
    use crate::model::DistributionFn;
    use crate::scalar::{gamma, ln_cosh};
    use proptest::prelude::*;

    fn sk() -> ConcaveHull {
        build_concave_hull(&DistributionFn::Sk)
    }

    #[test]
    fn beta_c_examples() {
        let z = beta_c(1.0, &FieldLaw::zero()).unwrap();
        assert!((z - (2.0 * LN_2).sqrt()).abs() < 1e-15);
        let one = beta_c(1.0, &FieldLaw::point(1.0)).unwrap();
        // independent bisection on [0.5, 1.5]
        let g = |b: f64| 0.5 * b * b - (LN_2 + ln_cosh(b) - b * b.tanh());
        let (mut lo, mut hi) = (0.5, 1.5);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if g(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        assert!((one - lo).abs() < 1e-12);
        assert!((one - 0.9018).abs() < 1e-3);
        let skc = beta_c(2.0 * LN_2, &FieldLaw::zero()).unwrap();
        assert!((skc - 1.0).abs() < 1e-15);
        assert_eq!(beta_c(0.0, &FieldLaw::zero()), Err(Error::DegenerateSlope));
    }

    #[test]
    fn rem_and_general_agree() {
        for h in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let a = beta_c_rem(h).unwrap();
            let b = beta_c(1.0, &FieldLaw::point(h)).unwrap();
            assert!((a - b).abs() < 1e-10, "h = {h}");
        }
    }

    #[test]
    fn rem_small_and_large_h() {
        let h = 0.05;
        let approx = (2.0 * LN_2).sqrt() * (1.0 - h * h / 2.0);
        assert!((beta_c_rem(h).unwrap() - approx).abs() < 1e-4);
        let h = 1e3;
        let r = h * beta_c_rem(h).unwrap() / f64::ln(h);
        assert!((0.9..=1.1).contains(&r), "{r}");
    }

    #[test]
    fn freezing_slope_matches_beta_c() {
        let law = FieldLaw::point(0.8);
        for slope in [0.3, 1.0, 2.5] {
            let bc = beta_c(slope, &law).unwrap();
            assert!((freezing_slope(&law, bc) - slope).abs() < 1e-10);
        }
    }

    #[test]
    fn y_limits() {
        let h = sk();
        assert!(y_maximizer(&h, 1e-6, 0.8).unwrap() < 1e-9);
        let hf = 1e-3;
        for beta in [0.5_f64, 0.8] {
            let y = y_maximizer(&h, hf, beta).unwrap();
            let expect = beta * beta / (2.0 * LN_2) / (1.0 + beta * beta).powi(2);
            assert!((y / (hf * hf) / expect - 1.0).abs() < 1e-2, "beta {beta}");
        }
        let y = y_maximizer(&h, hf, 1.5).unwrap();
        let expect = 1.0 / (8.0 * LN_2);
        assert!((y / (hf * hf) / expect - 1.0).abs() < 1e-2);
        let rem = build_concave_hull(&DistributionFn::rem());
        assert!(matches!(
            y_maximizer(&rem, 0.5, 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn y_residual_is_small() {
        let h = sk();
        for (hf, beta) in [(0.1, 0.7), (0.5, 1.3), (2.0, 3.0)] {
            let y = y_maximizer(&h, hf, beta).unwrap();
            let phi = ground_density(h.slope_at(y), beta);
            let res = y - k_inverse_slope(phi / (beta * hf)).unwrap();
            assert!(res.abs() < 1e-10);
        }
    }

    #[test]
    fn z_examples() {
        let h = sk();
        assert_eq!(z_maximizer(&h, &FieldLaw::zero(), 1.5).unwrap(), 1.0);
        assert_eq!(z_maximizer(&h, &FieldLaw::point(50.0), 1.5).unwrap(), 0.0);
        let beta = 1.5;
        let t = ground_density(h.start_slope(), beta);
        let s = ground_density(h.end_slope(), beta);
        let target = 0.5 * (t + s);
        // Γ with ln 2cosh(βΓ) = target
        let gamma_field = crate::scalar::arcosh_half_exp(target) / beta;
        let z = z_maximizer(&h, &FieldLaw::point(gamma_field), beta).unwrap();
        let n = 10_000;
        let scan = (0..n)
            .map(|i| i as f64 / n as f64)
            .filter(|x| ground_density(h.slope_at(*x), beta) >= target)
            .fold(0.0, f64::max);
        assert!((z - scan).abs() < 2.0 / n as f64);
    }

    #[test]
    fn sigma_examples() {
        let s = sigma_diag(1e9, &FieldLaw::zero(), 1.0).unwrap();
        assert!((s - 1.0).abs() < 1e-8);
        let beta: f64 = 1.3;
        let gf = 0.7;
        let p = (2.0 * (beta * gf).cosh()).ln();
        let s = sigma_diag(p / beta, &FieldLaw::point(gf), beta).unwrap();
        assert!((s - (0.6 - (1.25f64).ln() / LN_2)).abs() < 1e-14);
        let hf = 0.9;
        let sig = sigma_diag(hf, &FieldLaw::point(gf), beta).unwrap();
        let (ys, _) = crate::numeric::golden_max(
            |y| beta * hf * gamma(y).unwrap() + (1.0 - y) * p,
            0.0,
            1.0,
            1e-12,
        );
        assert!((ys - sig).abs() < 1e-8);
    }

    #[test]
    fn at_line_examples() {
        let h = sk();
        let b = at_line(&h, 1e-4).unwrap().finite().unwrap();
        assert!((b - 1.0).abs() < 1e-3);
        let b = at_line(&h, 1e2).unwrap();
        assert!(b.to_f64() > 10.0);
        let rem = build_concave_hull(&DistributionFn::rem());
        assert!(at_line(&rem, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn beta_c_decreasing_in_slope(s in 0.05f64..3.0, d in 0.01f64..1.0, h in 0.0f64..3.0) {
            let law = FieldLaw::point(h);
            prop_assert!(beta_c(s + d, &law).unwrap() < beta_c(s, &law).unwrap());
        }

        #[test]
        fn beta_c_rem_decreasing(h in 0.0f64..10.0, d in 0.01f64..1.0) {
            prop_assert!(beta_c_rem(h + d).unwrap() < beta_c_rem(h).unwrap());
        }

        #[test]
        fn y_increasing_in_h(h in 0.01f64..3.0, d in 0.01f64..1.0, beta in 0.3f64..3.0) {
            let hull = sk();
            prop_assert!(y_maximizer(&hull, h + d, beta).unwrap() >= y_maximizer(&hull, h, beta).unwrap());
        }

        #[test]
        fn z_non_increasing_in_gamma(g in 0.0f64..3.0, d in 0.0f64..1.0, beta in 0.3f64..3.0) {
            let hull = sk();
            let a = z_maximizer(&hull, &FieldLaw::point(g), beta).unwrap();
            let b = z_maximizer(&hull, &FieldLaw::point(g + d), beta).unwrap();
            prop_assert!(b <= a + 1e-12);
        }
    }

    #[test]
    fn at_line_non_decreasing() {
        let hull = sk();
        let mut prev = 0.0;
        for i in 0..12 {
            let h = 0.01 * 1.6f64.powi(i);
            let b = at_line(&hull, h).unwrap().to_f64();
            assert!(b >= prev);
            prev = b;
        }
    }
}
