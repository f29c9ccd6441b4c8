use std::f64::consts::LN_2;

use crate::error::{domain, Error, Result};
use crate::model::{DistributionFn, FieldLaw};
use crate::numeric::{brent, golden_max};
use crate::scalar::{rate_function, ExtendedReal, RateFunctionHandle};

const GRID: usize = 21;
const MAX_LEVELS: usize = 4;
const MAX_CYCLES: usize = 300;

struct Level {
    /// Block length L_k.
    len: f64,
    a: f64,
    /// x_k ln 2.
    budget: f64,
}

struct Problem {
    levels: Vec<Level>,
    rate: RateFunctionHandle,
    beta: f64,
}

impl Problem {
    fn field_cost(&self, l: f64, y: f64) -> f64 {
        match rate_function(&self.rate, y / l) {
            ExtendedReal::Finite(v) => l * v,
            ExtendedReal::Infinite => f64::INFINITY,
        }
    }

    /// (I⁻¹(c), I(I⁻¹(c))) with the inverse capped at E|h|.
    fn inverse_rate(&self, c: f64) -> (f64, f64) {
        let m = self.rate.abs_first();
        if m == 0.0 || c <= 0.0 {
            return (0.0, 0.0);
        }
        if c >= self.rate.boundary_value() {
            return (m, self.rate.boundary_value());
        }
        let f = |z: f64| match rate_function(&self.rate, z) {
            ExtendedReal::Finite(v) => v - c,
            ExtendedReal::Infinite => f64::INFINITY,
        };
        (brent(f, 0.0, m, 1e-14, 1e-16).unwrap_or(m), c)
    }

    /// Objective at the parameters (u_k, s_k): level k spends the share u_k of
    /// its remaining room, a fraction s_k of it on energy.
    fn objective(&self, params: &[f64]) -> f64 {
        let mut used = 0.0;
        let mut gain = 0.0;
        for (k, lv) in self.levels.iter().enumerate() {
            let (u, s) = (params[2 * k], params[2 * k + 1]);
            let room = (lv.budget - used).max(0.0);
            let c = u * room;
            let e = (2.0 * lv.a * s * c).sqrt();
            let share = (1.0 - s) * c / lv.len;
            let (z, rate) = self.inverse_rate(share);
            let y = lv.len * z;
            let cost = e * e / (2.0 * lv.a) + lv.len * rate;
            used += cost;
            gain += self.beta * (e + y);
        }
        LN_2 + gain - used
    }
}

/// Grid candidates (cost, gain) of one level that no cheaper candidate beats.
fn frontier(p: &Problem, lv: &Level, e_max: f64) -> Vec<(f64, f64, f64, f64)> {
    let y_max = lv.len * p.rate.abs_first();
    let mut pts = Vec::with_capacity(GRID * GRID);
    for i in 0..GRID {
        for j in 0..GRID {
            let e = e_max * i as f64 / (GRID - 1) as f64;
            let y = y_max * j as f64 / (GRID - 1) as f64;
            let cost = e * e / (2.0 * lv.a) + p.field_cost(lv.len, y);
            if cost.is_finite() && cost <= lv.budget {
                pts.push((cost, p.beta * (e + y), e, y));
            }
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut out: Vec<(f64, f64, f64, f64)> = Vec::new();
    for q in pts {
        if out.last().is_none_or(|l| q.1 > l.1) {
            out.push(q);
        }
    }
    out
}

fn search(
    fronts: &[Vec<(f64, f64, f64, f64)>],
    levels: &[Level],
    k: usize,
    used: f64,
    gain: f64,
    path: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    if k == levels.len() {
        let v = gain - used;
        if v > best.0 {
            *best = (v, path.clone());
        }
        return;
    }
    for (i, c) in fronts[k].iter().enumerate() {
        if used + c.0 > levels[k].budget {
            break;
        }
        path.push(i);
        search(fronts, levels, k + 1, used + c.0, gain + c.1, path, best);
        path.pop();
    }
}

/// sup over the closed constraint set of β Σ E_k + β Σ y_k + S(E,y), by a
/// coarse grid and cyclic coordinate refinement.
pub fn variational_oracle(a: &DistributionFn, h_law: &FieldLaw, beta: f64) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(domain("variational_oracle", beta, "beta >= 0"));
    }
    let (points, increments) = match a {
        DistributionFn::Step { points, increments } => (points, increments),
        _ => {
            return Err(Error::Unsupported(
                "variational oracle needs a step A".into(),
            ))
        }
    };
    if points.len() > MAX_LEVELS {
        return Err(Error::Resource(format!(
            "{} levels exceed the grid budget of {MAX_LEVELS}",
            points.len()
        )));
    }
    if beta == 0.0 {
        return Ok(LN_2);
    }
    let mut prev = 0.0;
    let levels: Vec<Level> = points
        .iter()
        .zip(increments)
        .map(|(&x, &a)| {
            let l = Level {
                len: x - prev,
                a,
                budget: x * LN_2,
            };
            prev = x;
            l
        })
        .collect();
    let p = Problem {
        levels,
        rate: RateFunctionHandle::new(h_law.clone()),
        beta,
    };
    let alpha = p.levels.iter().map(|l| l.a).fold(0.0, f64::max);
    let e_max = (2.0 * alpha * LN_2).sqrt() + 1.0;

    let fronts: Vec<_> = p.levels.iter().map(|lv| frontier(&p, lv, e_max)).collect();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    search(&fronts, &p.levels, 0, 0.0, 0.0, &mut Vec::new(), &mut best);

    // starting parameters from the best grid path
    let mut params = vec![0.0; 2 * p.levels.len()];
    let mut used = 0.0;
    for (k, lv) in p.levels.iter().enumerate() {
        let (cost, _, e, _) = fronts[k][best.1[k]];
        let room = lv.budget - used;
        params[2 * k] = if room > 0.0 {
            (cost / room).min(1.0)
        } else {
            0.0
        };
        params[2 * k + 1] = if cost > 0.0 {
            (e * e / (2.0 * lv.a) / cost).min(1.0)
        } else {
            1.0
        };
        used += cost;
    }

    let mut value = p.objective(&params);
    for _ in 0..MAX_CYCLES {
        let start = value;
        for i in 0..params.len() {
            let mut trial = params.clone();
            let (x, v) = golden_max(
                |t| {
                    trial[i] = t;
                    p.objective(&trial)
                },
                0.0,
                1.0,
                1e-10,
            );
            if v > value {
                params[i] = x;
                value = v;
            }
        }
        if value - start < 1e-14 {
            break;
        }
    }
    Ok(value.max(LN_2 + best.0))
}
