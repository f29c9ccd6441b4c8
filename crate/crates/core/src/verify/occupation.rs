use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DistributionFn, FieldLaw, Longitudinal};
use crate::scalar::{rate_function, ExtendedReal, RateFunctionHandle};

use super::realization::Realization;

pub(crate) const OCCUPATION_MAX_N: usize = 24;

/// Per-level energy and field depths.
#[derive(Debug, Clone, PartialEq)]
pub struct LdPoint {
    pub e: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationCheck {
    pub count: u64,
    /// (1/N) ln count, none when nothing is occupied.
    pub empirical: Option<f64>,
    /// S(E,y); -inf outside the domain of the rate function.
    pub analytic: f64,
    pub feasible: bool,
}

/// (x_k, a_k) of a step profile.
fn step_levels(a: &DistributionFn) -> Result<Vec<(f64, f64)>> {
    match a {
        DistributionFn::Step { points, increments } => Ok(points
            .iter()
            .copied()
            .zip(increments.iter().copied())
            .collect()),
        _ => Err(Error::Unsupported(
            "occupation numbers need a step A".into(),
        )),
    }
}

/// Cumulative level costs Σ_{j≤k} (E_j²/2a_j + L_j I(y_j/L_j)), +inf when a y is out of range.
fn prefix_costs(
    levels: &[(f64, f64)],
    rate: &RateFunctionHandle,
    point: &LdPoint,
) -> Result<Vec<f64>> {
    if point.e.len() != levels.len() || point.y.len() != levels.len() {
        return Err(Error::Invalid(format!(
            "point has {} / {} coordinates for {} levels",
            point.e.len(),
            point.y.len(),
            levels.len()
        )));
    }
    if point.e.iter().chain(&point.y).any(|v| !(*v >= 0.0)) {
        return Err(Error::Invalid("E and y must be non-negative".into()));
    }
    let mut prev_x = 0.0;
    let mut total = 0.0;
    let mut out = Vec::with_capacity(levels.len());
    for (k, &(x, a)) in levels.iter().enumerate() {
        let l = x - prev_x;
        prev_x = x;
        let field = match rate_function(rate, point.y[k] / l) {
            ExtendedReal::Finite(v) => l * v,
            ExtendedReal::Infinite => f64::INFINITY,
        };
        total += point.e[k] * point.e[k] / (2.0 * a) + field;
        out.push(total);
    }
    Ok(out)
}

/// S(E,y) = ln 2 - Σ_k (E_k²/2a_k + L_k I(y_k/L_k)).
pub fn entropy_s(a: &DistributionFn, h_law: &FieldLaw, point: &LdPoint) -> Result<f64> {
    let levels = step_levels(a)?;
    let costs = prefix_costs(&levels, &RateFunctionHandle::new(h_law.clone()), point)?;
    Ok(LN_2 - costs.last().copied().unwrap_or(0.0))
}

/// Counts σ with √a_k X_k ≤ -√N E_k and block field sum ≤ -N y_k on every level.
pub fn occupation_entropy_check(
    realization: &Realization,
    point: &LdPoint,
) -> Result<OccupationCheck> {
    let n = realization.n;
    if n > OCCUPATION_MAX_N {
        return Err(Error::Resource(format!(
            "N = {n} exceeds {OCCUPATION_MAX_N} for counting"
        )));
    }
    let spec = &realization.spec;
    let law = match &spec.longitudinal {
        Longitudinal::Iid { law } => law,
        Longitudinal::Hierarchical { .. } => {
            return Err(Error::Unsupported(
                "occupation numbers need an iid longitudinal field".into(),
            ))
        }
    };
    let levels = step_levels(&spec.distribution)?;
    let costs = prefix_costs(&levels, &RateFunctionHandle::new(law.clone()), point)?;
    let feasible = costs.iter().zip(&levels).all(|(c, (x, _))| *c < x * LN_2);
    let analytic = LN_2 - costs.last().copied().unwrap_or(0.0);
    if realization.levels.len() != levels.len() {
        return Err(Error::Invalid(
            "realization levels do not match the step profile".into(),
        ));
    }

    let nf = n as f64;
    let mut alive: Vec<bool> = vec![true];
    let mut prev_prefix = 0usize;
    for (k, level) in realization.levels.iter().enumerate() {
        let bits = level.prefix - prev_prefix;
        let lo_bits = bits / 2;
        // low bit t of a prefix index is spin prefix - 1 - t
        let table = |first: usize, width: usize| -> Vec<f64> {
            (0..1usize << width)
                .map(|m| {
                    (0..width)
                        .map(|t| {
                            let w = realization.h[level.prefix - 1 - (first + t)];
                            if (m >> t) & 1 == 0 {
                                w
                            } else {
                                -w
                            }
                        })
                        .sum()
                })
                .collect()
        };
        let lo = table(0, lo_bits);
        let hi = table(lo_bits, bits - lo_bits);
        let x_thr = -nf.sqrt() * point.e[k] / level.weight.sqrt();
        let h_thr = -nf * point.y[k];
        let parent = &alive;
        let next: Vec<bool> = (0..1usize << level.prefix)
            .into_par_iter()
            .map(|idx| {
                let block = idx & ((1usize << bits) - 1);
                parent[idx >> bits]
                    && level.values[idx] <= x_thr
                    && lo[block & ((1usize << lo_bits) - 1)] + hi[block >> lo_bits] <= h_thr
            })
            .collect();
        alive = next;
        prev_prefix = level.prefix;
    }
    let count = alive.par_iter().filter(|a| **a).count() as u64;
    Ok(OccupationCheck {
        count,
        empirical: (count > 0).then(|| (count as f64).ln() / nf),
        analytic,
        feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;
    use crate::verify::sample_realization;

    fn origin() -> LdPoint {
        LdPoint {
            e: vec![0.0],
            y: vec![0.0],
        }
    }

    #[test]
    fn origin_counts_half_the_cube() {
        let r = sample_realization(&ModelSpec::rem(0.0, 0.0), 16, 3).unwrap();
        let c = occupation_entropy_check(&r, &origin()).unwrap();
        assert!(c.feasible);
        assert_eq!(c.analytic, LN_2);
        // field sum 0 <= 0 always; X <= 0 about half the time
        let e = c.empirical.unwrap();
        assert!((e - LN_2).abs() < 0.06, "{e}");
    }

    #[test]
    fn infeasible_point_is_empty() {
        let r = sample_realization(&ModelSpec::rem(1.0, 0.0), 16, 3).unwrap();
        let p = LdPoint {
            e: vec![1.4],
            y: vec![0.0],
        };
        let c = occupation_entropy_check(&r, &p).unwrap();
        assert!(!c.feasible);
        assert!(c.analytic < 0.0);
        assert_eq!(c.count, 0);
        assert_eq!(c.empirical, None);
    }

    #[test]
    fn counting_matches_brute_force() {
        let spec = ModelSpec::new(
            DistributionFn::Step {
                points: vec![0.5, 1.0],
                increments: vec![0.6, 0.4],
            },
            Longitudinal::Iid {
                law: FieldLaw::FiniteMixture {
                    atoms: vec![(0.5, 0.5), (-1.0, 0.5)],
                },
            },
            FieldLaw::zero(),
        );
        let n = 10;
        let r = sample_realization(&spec, n, 8).unwrap();
        let p = LdPoint {
            e: vec![0.05, 0.02],
            y: vec![0.01, 0.03],
        };
        let c = occupation_entropy_check(&r, &p).unwrap();
        let mut brute = 0;
        for s in 0..1u64 << n {
            let ok = r.levels.iter().enumerate().all(|(k, l)| {
                let start = if k == 0 { 0 } else { r.levels[k - 1].prefix };
                let field: f64 = (start..l.prefix).map(|i| r.h[i] * r.spin(s, i)).sum();
                (l.weight * n as f64).sqrt() * l.values[(s >> (n - l.prefix)) as usize]
                    <= -(n as f64) * p.e[k]
                    && field <= -(n as f64) * p.y[k]
            });
            brute += ok as u64;
        }
        assert_eq!(c.count, brute);
        assert!(c.count > 0);
    }

    #[test]
    fn entropy_values() {
        let a = DistributionFn::rem();
        let s = entropy_s(
            &a,
            &FieldLaw::point(1.0),
            &LdPoint {
                e: vec![0.5],
                y: vec![1.0],
            },
        )
        .unwrap();
        assert!((s - (LN_2 - 0.125 - LN_2)).abs() < 1e-12);
        let s = entropy_s(
            &a,
            &FieldLaw::point(1.0),
            &LdPoint {
                e: vec![0.0],
                y: vec![1.5],
            },
        )
        .unwrap();
        assert_eq!(s, f64::NEG_INFINITY);
        assert!(entropy_s(&DistributionFn::Sk, &FieldLaw::zero(), &origin()).is_err());
    }
}
