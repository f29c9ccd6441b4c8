//! The three subcommands. Each builds a table in a fixed row order.

use rayon::prelude::*;

use gremphase_core::critical::{
    at_line_shift_curve, exponent_fit, gamma_c_hier, gamma_c_rem, gamma_c_secondary, ExponentFit,
};
use gremphase_core::pressure::{pressure, pressure_grem_classical};
use gremphase_core::solve::at_line;
use gremphase_core::verify::{
    classical_pressure_exact, occupation_entropy_check, quantum_pressure_ed, sample_realization,
    variational_oracle, EdOptions, FieldMode, LdPoint,
};
use gremphase_core::{
    build_concave_hull, ExtendedReal, FieldLaw, HierarchicalOverlap, Longitudinal, ModelSpec,
    PressureResult,
};

use crate::{Axis, Campaign, Cell, CliError, Line, RunManifest, Table};

pub const PRESSURE_HEADER: [&str; 9] = [
    "beta", "gamma", "h", "phi", "y_star", "z_star", "phase", "m_x", "m_z",
];
pub const CRITICAL_HEADER: [&str; 6] = ["line", "kind", "beta", "h", "value", "shift"];
pub const VERIFY_HEADER: [&str; 11] = [
    "campaign",
    "kind",
    "n",
    "seed",
    "beta",
    "value",
    "std_error",
    "reference",
    "abs_delta",
    "count",
    "pass",
];

pub const ED_TREND_TOL: f64 = 0.1;
pub const CLASSICAL_TREND_TOL: f64 = 0.08;
pub const ORACLE_TOL: f64 = 1e-6;
pub const OCCUPATION_TOL: f64 = 0.1;

fn required<'a>(axis: &'a Option<Axis>, name: &str) -> Result<&'a Axis, CliError> {
    axis.as_ref()
        .ok_or_else(|| CliError::spec(format!("--{name} is required")))
}

fn values(axis: &Option<Axis>) -> Vec<Option<f64>> {
    match axis {
        Some(a) => a.values().into_iter().map(Some).collect(),
        None => vec![None],
    }
}

/// Replaces the fields named by the grid axes with point masses.
pub fn with_point(
    spec: &ModelSpec,
    gamma: Option<f64>,
    h: Option<f64>,
) -> Result<ModelSpec, CliError> {
    let mut s = spec.clone();
    if let Some(g) = gamma {
        s.transversal = FieldLaw::point(g);
    }
    if let Some(h) = h {
        s.longitudinal = match &s.longitudinal {
            Longitudinal::Iid { .. } => Longitudinal::Iid {
                law: FieldLaw::point(h),
            },
            Longitudinal::Hierarchical {
                overlap: HierarchicalOverlap::MagneticEta { .. },
            } => Longitudinal::Hierarchical {
                overlap: HierarchicalOverlap::MagneticEta { h },
            },
            Longitudinal::Hierarchical { .. } => {
                return Err(CliError::spec(
                    "longitudinal.overlap: --h cannot override a step_eta field",
                ))
            }
        };
    }
    Ok(s)
}

fn shown_gamma(spec: &ModelSpec) -> Option<f64> {
    match spec.transversal {
        FieldLaw::PointMass { value } => Some(value),
        _ => None,
    }
}

fn shown_h(spec: &ModelSpec) -> Option<f64> {
    match &spec.longitudinal {
        Longitudinal::Iid {
            law: FieldLaw::PointMass { value },
        } => Some(*value),
        Longitudinal::Hierarchical {
            overlap: HierarchicalOverlap::MagneticEta { h },
        } => Some(*h),
        _ => None,
    }
}

fn field_mode(spec: &ModelSpec) -> FieldMode {
    match spec.longitudinal {
        Longitudinal::Iid { .. } => FieldMode::Iid,
        Longitudinal::Hierarchical { .. } => FieldMode::Hier,
    }
}

/// Runs `f` over the items in parallel and returns results in input order,
/// stopping at the first error in that order.
fn ordered<T: Sync, R: Send, F>(items: &[T], f: F) -> Result<Vec<R>, CliError>
where
    F: Fn(&T) -> Result<R, CliError> + Sync,
{
    items
        .par_iter()
        .map(&f)
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn cmd_pressure(m: &RunManifest) -> Result<Table, CliError> {
    let spec = m.load_spec()?;
    let betas = required(&m.beta, "beta")?.values();
    let mut points = Vec::new();
    for &b in &betas {
        for g in values(&m.gamma) {
            for h in values(&m.h) {
                points.push((b, with_point(&spec, g, h)?));
            }
        }
    }
    let results: Vec<PressureResult> =
        ordered(&points, |(b, s)| pressure(s, *b).map_err(CliError::from))?;
    let mut t = Table::new(PRESSURE_HEADER.to_vec());
    let mut approximate = 0;
    for ((b, s), r) in points.iter().zip(results) {
        approximate += r.approximate as usize;
        t.push(vec![
            Cell::Num(*b),
            Cell::opt(shown_gamma(s)),
            Cell::opt(shown_h(s)),
            Cell::Num(r.phi),
            Cell::Num(r.y_star),
            Cell::Num(r.z_star),
            Cell::text(r.phase.as_str()),
            Cell::Num(r.m_x),
            Cell::Num(r.m_z),
        ]);
    }
    if approximate > 0 {
        eprintln!("gremphase: {approximate} point(s) used a grid search for the overlap maximizer");
    }
    Ok(t)
}

fn fit_row(name: &str, beta: Option<f64>, fit: &ExponentFit) -> Vec<Cell> {
    vec![
        Cell::text(name),
        Cell::text("fit"),
        Cell::opt(beta),
        Cell::Empty,
        Cell::Num(fit.exponent),
        Cell::Num(fit.r2),
    ]
}

pub fn cmd_critical(m: &RunManifest, line: Line, fit: bool) -> Result<Table, CliError> {
    let mut t = Table::new(CRITICAL_HEADER.to_vec());
    let sample = |name: &str, beta: Option<f64>, h: Option<f64>, value: f64, shift: Option<f64>| {
        vec![
            Cell::text(name),
            Cell::text("sample"),
            Cell::opt(beta),
            Cell::opt(h),
            Cell::Num(value),
            Cell::opt(shift),
        ]
    };
    if fit && matches!(line, Line::GammaRem | Line::GammaSecondary) {
        return Err(CliError::spec(
            "--fit is available for atLine and gammaHier",
        ));
    }
    match line {
        Line::AtLine => {
            let spec = m.load_spec()?;
            let hull = build_concave_hull(&spec.distribution);
            let h_axis = required(&m.h, "h")?;
            let hs = h_axis.values();
            let shift = at_line_shift_curve(&hull, &hs)?;
            let temps: Vec<f64> = ordered(&hs, |h| {
                Ok(match at_line(&hull, *h)? {
                    ExtendedReal::Finite(b) => 1.0 / b,
                    ExtendedReal::Infinite => 0.0,
                })
            })?;
            for ((h, temp), (_, s)) in hs.iter().zip(temps).zip(&shift) {
                t.push(sample("atLine", None, Some(*h), temp, Some(*s)));
            }
            if fit {
                let f = exponent_fit(&shift, (h_axis.lo, h_axis.hi))?;
                t.push(fit_row("atLine", None, &f));
            }
        }
        Line::GammaRem => {
            let betas = required(&m.beta, "beta")?.values();
            let hs = required(&m.h, "h")?.values();
            let pts: Vec<(f64, f64)> = betas
                .iter()
                .flat_map(|b| hs.iter().map(move |h| (*b, *h)))
                .collect();
            let vals = ordered(&pts, |(b, h)| Ok(gamma_c_rem(*b, *h)?))?;
            for ((b, h), v) in pts.iter().zip(vals) {
                t.push(sample("gammaRem", Some(*b), Some(*h), v, None));
            }
        }
        Line::GammaHier => {
            let spec = m.load_spec()?;
            let hull = build_concave_hull(&spec.distribution);
            let betas = required(&m.beta, "beta")?.values();
            let h_axis = required(&m.h, "h")?;
            let hs = h_axis.values();
            for b in betas {
                let g0 = gamma_c_hier(&hull, b, 0.0)?;
                let vals = ordered(&hs, |h| Ok(gamma_c_hier(&hull, b, *h)?))?;
                let curve: Vec<(f64, f64)> =
                    hs.iter().zip(&vals).map(|(h, v)| (*h, g0 - v)).collect();
                for (h, v) in hs.iter().zip(&vals) {
                    t.push(sample("gammaHier", Some(b), Some(*h), *v, Some(g0 - v)));
                }
                if fit {
                    let f = exponent_fit(&curve, (h_axis.lo, h_axis.hi))?;
                    t.push(fit_row("gammaHier", Some(b), &f));
                }
            }
        }
        Line::GammaSecondary => {
            let spec = m.load_spec()?;
            let hull = build_concave_hull(&spec.distribution);
            let betas = required(&m.beta, "beta")?.values();
            let vals = ordered(&betas, |b| Ok(gamma_c_secondary(&hull, *b)?))?;
            for (b, v) in betas.iter().zip(vals) {
                t.push(sample("gammaSecondary", Some(*b), None, v, None));
            }
        }
    }
    Ok(t)
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

struct VerifyRow {
    kind: &'static str,
    n: Option<usize>,
    seed: Option<u64>,
    beta: Option<f64>,
    value: Option<f64>,
    std_error: Option<f64>,
    reference: Option<f64>,
    count: Option<u64>,
    pass: Option<bool>,
}

impl VerifyRow {
    fn new(kind: &'static str) -> Self {
        Self {
            kind,
            n: None,
            seed: None,
            beta: None,
            value: None,
            std_error: None,
            reference: None,
            count: None,
            pass: None,
        }
    }

    fn cells(&self, campaign: &str) -> Vec<Cell> {
        let delta = match (self.value, self.reference) {
            (Some(v), Some(r)) if r.is_finite() => Some((v - r).abs()),
            _ => None,
        };
        vec![
            Cell::text(campaign),
            Cell::text(self.kind),
            self.n.map_or(Cell::Empty, |n| Cell::Int(n as u64)),
            self.seed.map_or(Cell::Empty, Cell::Int),
            Cell::opt(self.beta),
            Cell::opt(self.value),
            Cell::opt(self.std_error),
            Cell::opt(self.reference),
            Cell::opt(delta),
            self.count.map_or(Cell::Empty, Cell::Int),
            self.pass.map_or(Cell::Empty, Cell::Bool),
        ]
    }
}

fn campaign_name(c: Campaign) -> &'static str {
    match c {
        Campaign::EdTrend => "edTrend",
        Campaign::ClassicalTrend => "classicalTrend",
        Campaign::OracleEquiv => "oracleEquiv",
        Campaign::Occupation => "occupation",
    }
}

/// Finite-N ensembles at each size against the limit; passes when the last
/// size is within `tol` and the distance never grows with N.
fn trend(
    spec: &ModelSpec,
    beta: f64,
    sizes: &[usize],
    seeds: usize,
    tol: f64,
    quantum: bool,
    rows: &mut Vec<VerifyRow>,
) -> Result<bool, CliError> {
    let limit = pressure(spec, beta)?.phi;
    let mode = field_mode(spec);
    let jobs: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|n| (0..seeds as u64).map(move |s| (*n, s)))
        .collect();
    let phis = ordered(&jobs, |(n, seed)| {
        let r = sample_realization(spec, *n, *seed)?;
        Ok(if quantum {
            quantum_pressure_ed(&r, beta, mode, &EdOptions::default())?.phi
        } else {
            classical_pressure_exact(&r, beta, mode)?
        })
    })?;
    let mut deltas = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let chunk = &phis[i * seeds..(i + 1) * seeds];
        for (seed, phi) in chunk.iter().enumerate() {
            rows.push(VerifyRow {
                n: Some(n),
                seed: Some(seed as u64),
                beta: Some(beta),
                value: Some(*phi),
                reference: Some(limit),
                ..VerifyRow::new("seed")
            });
        }
        let (mean, se) = mean_se(chunk);
        deltas.push((mean - limit).abs());
        rows.push(VerifyRow {
            n: Some(n),
            beta: Some(beta),
            value: Some(mean),
            std_error: Some(se),
            reference: Some(limit),
            ..VerifyRow::new("mean")
        });
    }
    let monotone = deltas.windows(2).all(|w| w[1] <= w[0]);
    let last = *deltas.last().expect("at least one size");
    Ok(monotone && last < tol)
}

pub fn cmd_verify(
    m: &RunManifest,
    campaign: Campaign,
    sizes: &[usize],
    energy: &[f64],
    depth: &[f64],
) -> Result<(Table, bool), CliError> {
    let base = m.load_spec()?;
    let gammas = values(&m.gamma);
    let hs = values(&m.h);
    if gammas.len() > 1 || hs.len() > 1 {
        return Err(CliError::spec(
            "verify takes single values for --gamma and --h",
        ));
    }
    let spec = with_point(&base, gammas[0], hs[0])?;
    let betas = if campaign == Campaign::Occupation {
        Vec::new()
    } else {
        required(&m.beta, "beta")?.values()
    };
    let name = campaign_name(campaign);
    let mut rows = Vec::new();
    let mut pass = true;
    match campaign {
        Campaign::EdTrend | Campaign::ClassicalTrend => {
            let quantum = campaign == Campaign::EdTrend;
            let (default_sizes, default_seeds, tol): (&[usize], usize, f64) = if quantum {
                (&[6, 8, 10, 12], 3, ED_TREND_TOL)
            } else {
                (&[12, 14, 16, 18, 20], 5, CLASSICAL_TREND_TOL)
            };
            let sizes = if sizes.is_empty() {
                default_sizes
            } else {
                sizes
            };
            let seeds = m.seeds.unwrap_or(default_seeds).max(1);
            let spec = if quantum {
                spec
            } else {
                ModelSpec {
                    transversal: FieldLaw::zero(),
                    ..spec
                }
            };
            for b in betas {
                let ok = trend(&spec, b, sizes, seeds, tol, quantum, &mut rows)?;
                rows.push(VerifyRow {
                    beta: Some(b),
                    pass: Some(ok),
                    ..VerifyRow::new("verdict")
                });
                pass &= ok;
            }
        }
        Campaign::OracleEquiv => {
            let law = match &spec.longitudinal {
                Longitudinal::Iid { law } => law.clone(),
                Longitudinal::Hierarchical { .. } => {
                    return Err(CliError {
                        code: crate::EXIT_CAPABILITY,
                        message: "oracleEquiv needs an iid longitudinal field".into(),
                    })
                }
            };
            let pairs = ordered(&betas, |b| {
                Ok((
                    variational_oracle(&spec.distribution, &law, *b)?,
                    pressure_grem_classical(&spec.distribution, &law, *b)?,
                ))
            })?;
            let mut worst: f64 = 0.0;
            for (b, (o, f)) in betas.iter().zip(pairs) {
                let ok = (o - f).abs() < ORACLE_TOL;
                worst = worst.max((o - f).abs());
                rows.push(VerifyRow {
                    beta: Some(*b),
                    value: Some(o),
                    reference: Some(f),
                    pass: Some(ok),
                    ..VerifyRow::new("point")
                });
            }
            pass = worst < ORACLE_TOL;
            rows.push(VerifyRow {
                value: Some(worst),
                pass: Some(pass),
                ..VerifyRow::new("verdict")
            });
        }
        Campaign::Occupation => {
            if energy.is_empty() || energy.len() != depth.len() {
                return Err(CliError::spec(
                    "occupation needs --energy and --depth with one value per level",
                ));
            }
            let point = LdPoint {
                e: energy.to_vec(),
                y: depth.to_vec(),
            };
            let sizes = if sizes.is_empty() { &[20][..] } else { sizes };
            let seeds = m.seeds.unwrap_or(5).max(1);
            let jobs: Vec<(usize, u64)> = sizes
                .iter()
                .flat_map(|n| (0..seeds as u64).map(move |s| (*n, s)))
                .collect();
            let checks = ordered(&jobs, |(n, seed)| {
                let r = sample_realization(&spec, *n, *seed)?;
                Ok(occupation_entropy_check(&r, &point)?)
            })?;
            for (i, &n) in sizes.iter().enumerate() {
                let chunk = &checks[i * seeds..(i + 1) * seeds];
                let analytic = chunk[0].analytic;
                let feasible = chunk[0].feasible;
                for (seed, c) in chunk.iter().enumerate() {
                    rows.push(VerifyRow {
                        n: Some(n),
                        seed: Some(seed as u64),
                        value: c.empirical,
                        reference: Some(analytic),
                        count: Some(c.count),
                        ..VerifyRow::new("seed")
                    });
                }
                let empirical: Option<Vec<f64>> = chunk.iter().map(|c| c.empirical).collect();
                let ok = if feasible {
                    empirical
                        .as_deref()
                        .is_some_and(|e| (mean_se(e).0 - analytic).abs() < OCCUPATION_TOL)
                } else {
                    chunk.iter().all(|c| c.count == 0)
                };
                let (mean, se) = empirical.as_deref().map(mean_se).unzip();
                rows.push(VerifyRow {
                    n: Some(n),
                    value: mean,
                    std_error: se,
                    reference: Some(analytic),
                    count: Some(chunk.iter().map(|c| c.count).sum()),
                    pass: Some(ok),
                    ..VerifyRow::new(if feasible { "feasible" } else { "infeasible" })
                });
                pass &= ok;
            }
        }
    }
    let mut t = Table::new(VERIFY_HEADER.to_vec());
    for r in &rows {
        t.push(r.cells(name));
    }
    Ok((t, pass))
}
