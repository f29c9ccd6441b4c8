//! Limiting pressures, maximizers, phases and magnetizations.

use std::f64::consts::LN_2;

use crate::error::{domain, smooth_required, Error, Result};
use crate::hull::{build_concave_hull, cut_distribution, ConcaveHull};
use crate::model::{
    DistributionFn, FieldLaw, HierarchicalOverlap, Longitudinal, ModelSpec, Phase, PressureResult,
};
use crate::numeric::{golden_max, integrate, INTEGRATION_ATOL};
use crate::scalar::{gamma, ln_2cosh, ln_cosh, paramagnet_pressure, sk_slope};
use crate::solve::{
    beta_c, beta_c_rem, freezing_slope, level_crossing, sigma_diag, y_maximizer, z_maximizer,
};

/// φ^{(y,z)} as a function of the local hull slope: the h = 0 density.
pub fn ground_density(slope: f64, beta: f64) -> f64 {
    if beta * beta * slope > 2.0 * LN_2 {
        beta * (2.0 * LN_2 * slope).sqrt()
    } else {
        0.5 * beta * beta * slope + LN_2
    }
}

fn paramagnet_result(beta: f64) -> PressureResult {
    debug_assert!(beta == 0.0);
    PressureResult {
        phi: LN_2,
        y_star: 0.0,
        z_star: 1.0,
        phase: Phase::UnfrozenClassical,
        m_z: 0.0,
        m_x: 0.0,
        approximate: false,
    }
}

/// Density φ(β, h, x) of the iid-field model, with β_c cached per hull segment.
#[derive(Debug, Clone)]
pub struct DensityHandle {
    hull: ConcaveHull,
    law: FieldLaw,
    segment_beta_c: Vec<Option<f64>>,
}

impl DensityHandle {
    pub fn new(hull: ConcaveHull, law: FieldLaw) -> Self {
        let segment_beta_c = match &hull {
            ConcaveHull::Piecewise(p) => p.slopes().iter().map(|s| beta_c(*s, &law).ok()).collect(),
            ConcaveHull::Smooth(_) => Vec::new(),
        };
        Self {
            hull,
            law,
            segment_beta_c,
        }
    }

    pub fn hull(&self) -> &ConcaveHull {
        &self.hull
    }

    pub fn law(&self) -> &FieldLaw {
        &self.law
    }

    fn beta_c_at_slope(&self, slope: f64) -> Option<f64> {
        if let ConcaveHull::Piecewise(p) = &self.hull {
            if let Some(i) = p.slopes().iter().position(|s| *s == slope) {
                return self.segment_beta_c[i];
            }
        }
        beta_c(slope, &self.law).ok()
    }

    /// φ as a function of the slope ā(x).
    pub fn density_at_slope(&self, slope: f64, beta: f64) -> f64 {
        let law = &self.law;
        if slope <= 0.0 || slope <= freezing_slope(law, beta) {
            return LN_2 + 0.5 * slope * beta * beta + law.expect(|h| ln_cosh(beta * h));
        }
        match self.beta_c_at_slope(slope) {
            Some(bc) => beta * (slope * bc + law.expect(|h| h * (bc * h).tanh())),
            None => LN_2 + 0.5 * slope * beta * beta + law.expect(|h| ln_cosh(beta * h)),
        }
    }

    /// Longitudinal response at slope ā(x): E[tanh(min(β, β_c(x))|h|)].
    fn response_at_slope(&self, slope: f64, beta: f64) -> f64 {
        let b = if slope > 0.0 && slope > freezing_slope(&self.law, beta) {
            self.beta_c_at_slope(slope).unwrap_or(beta).min(beta)
        } else {
            beta
        };
        self.law.expect(|h| (b * h.abs()).tanh())
    }

    /// x_h(β) = sup{x : β > β_c(x)}.
    pub fn frozen_extent(&self, beta: f64) -> f64 {
        if beta == 0.0 {
            return 0.0;
        }
        self.hull
            .threshold_crossing(freezing_slope(&self.law, beta))
    }
}

pub fn density_phi_iid(handle: &DensityHandle, beta: f64, x: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(domain("density_phi_iid", beta, "beta >= 0"));
    }
    let slope = handle.hull.right_derivative(x)?;
    Ok(handle.density_at_slope(slope, beta))
}

/// ∫₀^upto f(ā(x)) dx, exact on piecewise hulls.
fn integrate_over_hull<F: Fn(f64) -> f64>(hull: &ConcaveHull, f: F, upto: f64, split: f64) -> f64 {
    match hull {
        ConcaveHull::Piecewise(p) => p
            .segments()
            .iter()
            .filter(|s| s.start < upto)
            .map(|s| (s.end.min(upto) - s.start) * f(s.slope()))
            .sum(),
        ConcaveHull::Smooth(_) => integrate(
            |x| f(hull.slope_at(x)),
            0.0,
            upto,
            &[split],
            INTEGRATION_ATOL,
        ),
    }
}

fn iid_law(spec: &ModelSpec) -> Result<&FieldLaw> {
    match &spec.longitudinal {
        Longitudinal::Iid { law } => Ok(law),
        Longitudinal::Hierarchical { .. } => Err(Error::Unsupported(
            "model has a hierarchical field, expected iid".into(),
        )),
    }
}

/// Limiting pressure of the iid-field model: sup over z of ∫₀^z φ + (1-z) p.
pub fn pressure_qcremh(spec: &ModelSpec, beta: f64) -> Result<PressureResult> {
    let law = iid_law(spec)?;
    let handle = DensityHandle::new(build_concave_hull(&spec.distribution), law.clone());
    pressure_iid_with(&handle, &spec.transversal, beta)
}

pub fn pressure_iid_with(
    handle: &DensityHandle,
    b_law: &FieldLaw,
    beta: f64,
) -> Result<PressureResult> {
    if !(beta >= 0.0) {
        return Err(domain("pressure", beta, "beta >= 0"));
    }
    if beta == 0.0 {
        return Ok(paramagnet_result(beta));
    }
    let hull = handle.hull();
    let law = handle.law();
    let p = paramagnet_pressure(law, b_law, beta);
    let density = |s: f64| handle.density_at_slope(s, beta);
    let z = level_crossing(hull, density, p);
    let x_frozen = handle.frozen_extent(beta);
    let phi = integrate_over_hull(hull, density, z, x_frozen) + (1.0 - z) * p;
    let (pm_z, pm_x) = paramagnet_magnetizations(law, b_law, beta);
    let m_z = integrate_over_hull(hull, |s| handle.response_at_slope(s, beta), z, x_frozen)
        + (1.0 - z) * pm_z;
    let m_x = (1.0 - z) * pm_x;
    let phase = if z == 0.0 {
        Phase::QuantumParamagnet
    } else if x_frozen > 0.0 {
        Phase::FrozenGlass
    } else {
        Phase::UnfrozenClassical
    };
    Ok(PressureResult {
        phi,
        y_star: 0.0,
        z_star: z,
        phase,
        m_z,
        m_x,
        approximate: false,
    })
}

/// (E[|h|/ρ tanh βρ], E[|b|/ρ tanh βρ]) with ρ = sqrt(h² + b²).
fn paramagnet_magnetizations(h_law: &FieldLaw, b_law: &FieldLaw, beta: f64) -> (f64, f64) {
    let part = |num: fn(f64, f64) -> f64| {
        h_law.expect(|h| {
            b_law.expect(|b| {
                let rho = h.hypot(b);
                if rho == 0.0 {
                    0.0
                } else {
                    num(h, b) / rho * (beta * rho).tanh()
                }
            })
        })
    };
    (part(|h, _| h.abs()), part(|_, b| b.abs()))
}

/// Closed form for the REM with point-mass fields.
pub fn pressure_qrem(h: f64, gamma_field: f64, beta: f64) -> Result<PressureResult> {
    if !(beta >= 0.0) {
        return Err(domain("pressure_qrem", beta, "beta >= 0"));
    }
    if !(h >= 0.0) {
        return Err(domain("pressure_qrem", h, "h >= 0"));
    }
    if !(gamma_field >= 0.0) {
        return Err(domain("pressure_qrem", gamma_field, "Gamma >= 0"));
    }
    if beta == 0.0 {
        return Ok(paramagnet_result(beta));
    }
    let bc = beta_c_rem(h)?;
    let classical = rem_classical(h, beta, bc);
    let rho = h.hypot(gamma_field);
    let quantum = ln_2cosh(beta * rho);
    Ok(if classical >= quantum {
        PressureResult {
            phi: classical,
            y_star: 0.0,
            z_star: 1.0,
            phase: if beta > bc {
                Phase::FrozenGlass
            } else {
                Phase::UnfrozenClassical
            },
            m_z: (beta.min(bc) * h).tanh(),
            m_x: 0.0,
            approximate: false,
        }
    } else {
        let t = (beta * rho).tanh();
        PressureResult {
            phi: quantum,
            y_star: 0.0,
            z_star: 0.0,
            phase: Phase::QuantumParamagnet,
            m_z: h / rho * t,
            m_x: gamma_field / rho * t,
            approximate: false,
        }
    })
}

/// Φ^REM(β,h).
pub fn rem_classical(h: f64, beta: f64, bc: f64) -> f64 {
    if beta <= bc {
        LN_2 + 0.5 * beta * beta + ln_cosh(beta * h)
    } else {
        beta * (bc + h * (bc * h).tanh())
    }
}

/// m_z of the REM: classical branch below Γ_c(β,h), paramagnet above.
pub fn magnetization_z_iid(h: f64, gamma_field: f64, beta: f64) -> Result<f64> {
    if beta == 0.0 {
        return Ok(0.0);
    }
    let gc = crate::critical::gamma_c_rem(beta, h)?;
    if gamma_field < gc {
        Ok((beta.min(beta_c_rem(h)?) * h).tanh())
    } else {
        let rho = h.hypot(gamma_field);
        Ok(if rho == 0.0 {
            0.0
        } else {
            h / rho * (beta * rho).tanh()
        })
    }
}

/// Classical GREM pressure as the sum of partial pressures over hull segments.
pub fn pressure_grem_classical(a: &DistributionFn, h_law: &FieldLaw, beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(domain("pressure_grem_classical", beta, "beta >= 0"));
    }
    if beta == 0.0 {
        return Ok(LN_2);
    }
    let handle = DensityHandle::new(build_concave_hull(a), h_law.clone());
    let split = handle.frozen_extent(beta);
    let hull = handle.hull();
    Ok(integrate_over_hull(
        hull,
        |s| handle.density_at_slope(s, beta),
        hull.length(),
        split,
    ))
}

/// Partial pressures φ^{(l)} = L_l × density on each hull segment.
pub fn partial_pressures(a: &DistributionFn, h_law: &FieldLaw, beta: f64) -> Result<Vec<f64>> {
    let handle = DensityHandle::new(build_concave_hull(a), h_law.clone());
    let p = handle
        .hull()
        .as_piecewise()
        .ok_or_else(|| Error::Unsupported("partial pressures need a piecewise hull".into()))?;
    Ok(p.segments()
        .iter()
        .map(|s| s.length() * handle.density_at_slope(s.slope(), beta))
        .collect())
}

/// Maximum over hull breakpoints y_k of Σ_{l<=k} φ^{(l)} + (1 - y_k) p.
pub fn pressure_nlevel_quantum(
    a: &DistributionFn,
    h_law: &FieldLaw,
    b_law: &FieldLaw,
    beta: f64,
) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(domain("pressure_nlevel_quantum", beta, "beta >= 0"));
    }
    if beta == 0.0 {
        return Ok(LN_2);
    }
    let hull = build_concave_hull(a);
    let pw = hull.as_piecewise().ok_or_else(|| {
        Error::Unsupported("breakpoint enumeration needs a piecewise hull".into())
    })?;
    let parts = partial_pressures(a, h_law, beta)?;
    let p = paramagnet_pressure(h_law, b_law, beta);
    let mut best = p;
    let mut acc = 0.0;
    for (part, y) in parts.iter().zip(&pw.breakpoints()[1..]) {
        acc += part;
        best = best.max(acc + (1.0 - y) * p);
    }
    Ok(best)
}

/// φ^{(y,z)}(β, x) on the cut hull.
pub fn density_phi_cut(a: &DistributionFn, y: f64, z: f64, beta: f64, x: f64) -> Result<f64> {
    let cut = cut_distribution(a, y, z)?;
    let slope = cut.hull.right_derivative(x)?;
    Ok(ground_density(slope, beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HierForm {
    CutZ,
    CutOne,
    Auto,
}

fn ground_integral(hull: &ConcaveHull, beta: f64, upto: f64) -> f64 {
    match hull {
        ConcaveHull::Smooth(s) => SK_GROUND.with(|cache| {
            let mut cache = cache.borrow_mut();
            if cache.as_ref().is_none_or(|t| t.beta != beta) {
                *cache = Some(SkGroundTable::new(beta));
            }
            let t = cache.as_ref().expect("filled above");
            t.primitive((s.offset + upto).min(1.0)) - t.primitive(s.offset)
        }),
        ConcaveHull::Piecewise(_) => {
            let split = hull.threshold_crossing(2.0 * LN_2 / (beta * beta));
            integrate_over_hull(hull, |s| ground_density(s, beta), upto, split)
        }
    }
}

thread_local! {
    static SK_GROUND: std::cell::RefCell<Option<SkGroundTable>> = const { std::cell::RefCell::new(None) };
}

/// Primitive of x -> ground_density(ā(x), β) for the SK caricature on a
/// fixed knot set: uniform, geometric towards x = 1, plus the freezing point.
struct SkGroundTable {
    beta: f64,
    knots: Vec<f64>,
    cum: Vec<f64>,
}

impl SkGroundTable {
    fn new(beta: f64) -> Self {
        let hull = build_concave_hull(&DistributionFn::Sk);
        let x_beta = hull.threshold_crossing(2.0 * LN_2 / (beta * beta));
        let mut knots: Vec<f64> = (0..=256)
            .map(|i| i as f64 / 256.0 * (1.0 - 1.0 / 256.0))
            .collect();
        knots.extend((9..=52).map(|k| 1.0 - 2f64.powi(-k)));
        knots.push(1.0);
        if x_beta > 0.0 && x_beta < 1.0 {
            knots.push(x_beta);
        }
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let f = |x: f64| ground_density(sk_slope(x), beta);
        let mut cum = vec![0.0];
        for w in knots.windows(2) {
            let piece = integrate(f, w[0], w[1], &[], 1e-14);
            cum.push(cum.last().expect("non-empty") + piece);
        }
        Self { beta, knots, cum }
    }

    fn primitive(&self, x: f64) -> f64 {
        let i = self
            .knots
            .partition_point(|k| *k <= x)
            .clamp(1, self.knots.len() - 1)
            - 1;
        let a = self.knots[i];
        if x <= a {
            return self.cum[i];
        }
        self.cum[i] + integrate(|t| ground_density(sk_slope(t), self.beta), a, x, &[], 1e-14)
    }
}

/// sup over z in [y,1] with the singly-cut hull A^{(y,1)}: returns (value, z).
fn inner_cut_one(a: &DistributionFn, y: f64, beta: f64, p: f64) -> Result<(f64, f64)> {
    let cut = cut_distribution(a, y, 1.0)?;
    let hull = &cut.hull;
    let len = level_crossing(hull, |s| ground_density(s, beta), p);
    let value = ground_integral(hull, beta, len) + (hull.length() - len) * p;
    Ok((value, y + len))
}

/// sup over z in [y,1] using the doubly-cut hulls A^{(y,z)}.
fn inner_cut_z(a: &DistributionFn, y: f64, beta: f64, p: f64) -> Result<(f64, f64)> {
    let eval = |z: f64| -> f64 {
        match cut_distribution(a, y, z) {
            Ok(cut) => ground_integral(&cut.hull, beta, cut.length()) + (1.0 - z) * p,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let mut best = (eval(y), y);
    match a {
        DistributionFn::Step { points, .. } => {
            for &z in points.iter().filter(|x| **x > y) {
                let v = eval(z);
                if v > best.0 {
                    best = (v, z);
                }
            }
        }
        DistributionFn::Sk => {
            let (z, v) = golden_max(eval, y, 1.0, 1e-11);
            if v > best.0 {
                best = (v, z);
            }
        }
        DistributionFn::Sampled { grid } => {
            let mut knots = vec![y];
            knots.extend(grid.iter().map(|g| g.0).filter(|x| *x > y));
            for w in knots.windows(2) {
                let (z, v) = golden_max(eval, w[0], w[1], 1e-11);
                if v > best.0 {
                    best = (v, z);
                }
            }
        }
    }
    Ok(best)
}

/// Hierarchical-field pressure: sup over 0 <= y <= z <= 1 of
/// βη(y) + ∫₀^{z-y} φ^{(y,·)} + (1-z) p.
pub fn pressure_hier(spec: &ModelSpec, beta: f64, form: HierForm) -> Result<PressureResult> {
    let overlap = match &spec.longitudinal {
        Longitudinal::Hierarchical { overlap } => overlap,
        Longitudinal::Iid { .. } => {
            return Err(Error::Unsupported(
                "model has an iid field, expected hierarchical".into(),
            ))
        }
    };
    if !(beta >= 0.0) {
        return Err(domain("pressure_hier", beta, "beta >= 0"));
    }
    if beta == 0.0 {
        return Ok(paramagnet_result(beta));
    }
    let a = &spec.distribution;
    let b_law = &spec.transversal;
    let p = paramagnet_pressure(&FieldLaw::zero(), b_law, beta);
    let inner = |y: f64| -> Result<(f64, f64)> {
        match form {
            HierForm::CutZ => inner_cut_z(a, y, beta, p),
            HierForm::CutOne | HierForm::Auto => inner_cut_one(a, y, beta, p),
        }
    };
    let mut approximate = false;
    // (total, y, z)
    let best = match overlap {
        HierarchicalOverlap::StepEta { points, values } => {
            let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
            let starts = std::iter::once(0.0).chain(points[..points.len() - 1].iter().copied());
            for (y, eta) in starts.zip(values) {
                let (v, z) = inner(y)?;
                let total = beta * eta + v;
                if total > best.0 {
                    best = (total, y, z);
                }
            }
            best
        }
        HierarchicalOverlap::MagneticEta { h } => {
            let h = *h;
            if h == 0.0 {
                let (v, z) = inner(0.0)?;
                (v, 0.0, z)
            } else {
                approximate = !matches!(a, DistributionFn::Sk);
                let n = if approximate { 400 } else { 64 };
                magnetic_outer(
                    |y| inner(y).map(|(v, z)| (beta * h * gamma(y).unwrap_or(1.0) + v, z)),
                    n,
                )?
            }
        }
    };
    let (phi, y, z) = best;
    let cut = cut_distribution(a, y, 1.0)?;
    let frozen = cut.hull.length() > 0.0 && beta * beta * cut.hull.start_slope() > 2.0 * LN_2;
    let phase = if z <= y {
        Phase::QuantumParamagnet
    } else if frozen {
        Phase::FrozenGlass
    } else {
        Phase::UnfrozenClassical
    };
    let m_x = (1.0 - z) * b_law.expect(|b| (beta * b.abs()).tanh());
    Ok(PressureResult {
        phi,
        y_star: y,
        z_star: z,
        phase,
        m_z: gamma(y)?,
        m_x,
        approximate,
    })
}

/// Outer maximization over y = u² with a grid scan in u and golden-section
/// refinement around the best grid cells.
fn magnetic_outer<F: Fn(f64) -> Result<(f64, f64)>>(g: F, n: usize) -> Result<(f64, f64, f64)> {
    let us: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let mut vals = Vec::with_capacity(us.len());
    for &u in &us {
        vals.push(g(u * u)?.0);
    }
    let mut order: Vec<usize> = (0..us.len()).collect();
    order.sort_by(|i, j| vals[*j].total_cmp(&vals[*i]));
    let mut best = (vals[order[0]], us[order[0]] * us[order[0]]);
    for &i in order.iter().take(3) {
        let lo = us[i.saturating_sub(1)];
        let hi = us[(i + 1).min(n)];
        let (u, v) = golden_max(
            |u| g(u * u).map(|r| r.0).unwrap_or(f64::NEG_INFINITY),
            lo,
            hi,
            1e-10,
        );
        if v > best.0 {
            best = (v, u * u);
        }
    }
    let (v, z) = g(best.1)?;
    Ok((v, best.1, z))
}

/// Closed form for a smooth concave A with a magnetic hierarchical field of
/// strength h and point-mass transversal field Γ.
pub fn pressure_hier_closed(
    h: f64,
    gamma_field: f64,
    beta: f64,
    hull: &ConcaveHull,
) -> Result<PressureResult> {
    if !hull.is_smooth() {
        return Err(smooth_required());
    }
    if !(beta > 0.0) {
        return Err(domain("pressure_hier_closed", beta, "beta > 0"));
    }
    if !(gamma_field >= 0.0) {
        return Err(domain("pressure_hier_closed", gamma_field, "Gamma >= 0"));
    }
    let b_law = FieldLaw::point(gamma_field);
    let p = ln_2cosh(beta * gamma_field);
    let tx = (beta * gamma_field).tanh();
    let y = y_maximizer(hull, h, beta)?;
    let phi_y = ground_density(hull.slope_at(y), beta);
    let x_beta = hull.threshold_crossing(2.0 * LN_2 / (beta * beta));
    if p < phi_y {
        let z = z_maximizer(hull, &b_law, beta)?.max(y);
        let body = integrate(
            |x| ground_density(hull.slope_at(x), beta),
            y,
            z,
            &[x_beta],
            INTEGRATION_ATOL,
        );
        let phase = if y < x_beta.min(z) {
            Phase::FrozenGlass
        } else {
            Phase::UnfrozenClassical
        };
        Ok(PressureResult {
            phi: beta * h * gamma(y)? + body + (1.0 - z) * p,
            y_star: y,
            z_star: z,
            phase,
            m_z: gamma(y)?,
            m_x: (1.0 - z) * tx,
            approximate: false,
        })
    } else {
        let s = sigma_diag(h, &b_law, beta)?;
        Ok(PressureResult {
            phi: beta * h * gamma(s)? + (1.0 - s) * p,
            y_star: s,
            z_star: s,
            phase: Phase::QuantumParamagnet,
            m_z: gamma(s)?,
            m_x: (1.0 - s) * tx,
            approximate: false,
        })
    }
}

/// Dispatch on the longitudinal mode. Smooth A with a magnetic field and a
/// point-mass transversal field goes through the closed form.
pub fn pressure(spec: &ModelSpec, beta: f64) -> Result<PressureResult> {
    match &spec.longitudinal {
        Longitudinal::Iid { .. } => pressure_qcremh(spec, beta),
        Longitudinal::Hierarchical {
            overlap: HierarchicalOverlap::MagneticEta { h },
        } if beta > 0.0 && *h > 0.0 && spec.distribution == DistributionFn::Sk => {
            if let FieldLaw::PointMass { value } = spec.transversal {
                pressure_hier_closed(
                    *h,
                    value.abs(),
                    beta,
                    &build_concave_hull(&spec.distribution),
                )
            } else {
                pressure_hier(spec, beta, HierForm::Auto)
            }
        }
        Longitudinal::Hierarchical { .. } => pressure_hier(spec, beta, HierForm::Auto),
    }
}
