//! Concave envelopes, cut distributions and freezing thresholds.

use std::f64::consts::LN_2;

use crate::error::{domain, Result};
use crate::model::DistributionFn;
use crate::numeric::brent;
use crate::scalar::{gamma, sk_slope};

/// One linear piece of a piecewise hull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub increment: f64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn slope(&self) -> f64 {
        self.increment / self.length()
    }
}

/// Concave piecewise-linear majorant through a subset of the input points.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseHull {
    xs: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl PiecewiseHull {
    /// Upper hull (monotone chain) of points sorted by abscissa, starting at (0, 0).
    pub fn from_points(points: &[(f64, f64)]) -> Self {
        let mut stack: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for &p in points {
            if let Some(last) = stack.last_mut() {
                if p.0 == last.0 {
                    last.1 = last.1.max(p.1);
                    // the raised point may break concavity behind it
                    let q = stack.pop().unwrap();
                    push_upper(&mut stack, q);
                    continue;
                }
            }
            push_upper(&mut stack, p);
        }
        let xs: Vec<f64> = stack.iter().map(|p| p.0).collect();
        let values: Vec<f64> = stack.iter().map(|p| p.1).collect();
        let slopes = stack
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        Self { xs, values, slopes }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn segments(&self) -> Vec<Segment> {
        (0..self.slopes.len())
            .map(|i| Segment {
                start: self.xs[i],
                end: self.xs[i + 1],
                increment: self.values[i + 1] - self.values[i],
            })
            .collect()
    }

    fn length(&self) -> f64 {
        self.xs[self.xs.len() - 1] - self.xs[0]
    }

    fn value(&self, x: f64) -> f64 {
        crate::model::interpolate(
            &self
                .xs
                .iter()
                .copied()
                .zip(self.values.iter().copied())
                .collect::<Vec<_>>(),
            x,
        )
    }
}

fn push_upper(stack: &mut Vec<(f64, f64)>, p: (f64, f64)) {
    while stack.len() >= 2 {
        let o = stack[stack.len() - 2];
        let a = stack[stack.len() - 1];
        let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
        let scale = ((a.0 - o.0) * (p.1 - o.1)).abs() + ((a.1 - o.1) * (p.0 - o.0)).abs();
        if cross >= -1e-14 * scale {
            stack.pop();
        } else {
            break;
        }
    }
    stack.push(p);
}

/// The SK caricature A = gamma^2 restricted to [offset, offset + length]
/// and shifted to start at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothHull {
    pub offset: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConcaveHull {
    Piecewise(PiecewiseHull),
    Smooth(SmoothHull),
}

impl ConcaveHull {
    pub fn length(&self) -> f64 {
        match self {
            ConcaveHull::Piecewise(p) => p.length(),
            ConcaveHull::Smooth(s) => s.length,
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, ConcaveHull::Smooth(_))
    }

    pub fn as_piecewise(&self) -> Option<&PiecewiseHull> {
        match self {
            ConcaveHull::Piecewise(p) => Some(p),
            ConcaveHull::Smooth(_) => None,
        }
    }

    /// Hull value Ā(x) on [0, length].
    pub fn value(&self, x: f64) -> f64 {
        match self {
            ConcaveHull::Piecewise(p) => p.value(x),
            ConcaveHull::Smooth(s) => {
                let g0 = gamma(s.offset).unwrap_or(1.0);
                let g = gamma((s.offset + x.clamp(0.0, s.length)).min(1.0)).unwrap_or(1.0);
                g * g - g0 * g0
            }
        }
    }

    /// ā(x) for x in [0, length).
    pub fn right_derivative(&self, x: f64) -> Result<f64> {
        let len = self.length();
        if !(x >= 0.0 && x < len) {
            return Err(domain("right_derivative", x, "[0, domain length)"));
        }
        Ok(self.slope_at(x))
    }

    /// ā(x) without the domain check; x at or beyond the end gives the left limit.
    pub(crate) fn slope_at(&self, x: f64) -> f64 {
        match self {
            ConcaveHull::Piecewise(p) => {
                if p.slopes.is_empty() {
                    return 0.0;
                }
                let i = p.xs.partition_point(|b| *b <= x);
                p.slopes[i.clamp(1, p.slopes.len()) - 1]
            }
            ConcaveHull::Smooth(s) => sk_slope((s.offset + x.min(s.length)).min(1.0)),
        }
    }

    /// Left limit of ā at the end of the domain.
    pub fn end_slope(&self) -> f64 {
        match self {
            ConcaveHull::Piecewise(p) => p.slopes.last().copied().unwrap_or(0.0),
            ConcaveHull::Smooth(s) => sk_slope((s.offset + s.length).min(1.0)),
        }
    }

    pub fn start_slope(&self) -> f64 {
        self.slope_at(0.0)
    }

    /// sup{x : ā(x) > thr}, or 0 when the set is empty.
    pub fn threshold_crossing(&self, thr: f64) -> f64 {
        match self {
            ConcaveHull::Piecewise(p) => p
                .segments()
                .iter()
                .take_while(|s| s.slope() > thr)
                .last()
                .map(|s| s.end)
                .unwrap_or(0.0),
            ConcaveHull::Smooth(s) => {
                if s.length <= 0.0 || self.start_slope() <= thr {
                    return 0.0;
                }
                if self.end_slope() > thr {
                    return s.length;
                }
                brent(|x| self.slope_at(x) - thr, 0.0, s.length, 1e-15, 1e-17).unwrap_or(0.0)
            }
        }
    }

    /// Points where ā has kinks or jumps, including both ends.
    pub fn knots(&self) -> Vec<f64> {
        match self {
            ConcaveHull::Piecewise(p) => p.xs.clone(),
            ConcaveHull::Smooth(s) => vec![0.0, s.length],
        }
    }
}

pub fn build_concave_hull(a: &DistributionFn) -> ConcaveHull {
    cut_distribution(a, 0.0, 1.0)
        .expect("full cut is always valid")
        .hull
}

/// A^{(y,z)}(x) = A(x + y) - A(y) on [0, z - y], with its hull.
#[derive(Debug, Clone, PartialEq)]
pub struct CutDistribution {
    pub y: f64,
    pub z: f64,
    base: DistributionFn,
    pub hull: ConcaveHull,
}

impl CutDistribution {
    pub fn length(&self) -> f64 {
        self.z - self.y
    }

    pub fn value(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.length());
        self.base.value(self.y + x) - self.base.value(self.y)
    }

    pub fn total_mass(&self) -> f64 {
        self.value(self.length())
    }
}

pub fn cut_distribution(a: &DistributionFn, y: f64, z: f64) -> Result<CutDistribution> {
    if !(0.0..=1.0).contains(&y) {
        return Err(domain("cut_distribution", y, "0 <= y <= z <= 1"));
    }
    if !(z >= y && z <= 1.0) {
        return Err(domain("cut_distribution", z, "0 <= y <= z <= 1"));
    }
    let hull = match a {
        DistributionFn::Sk => ConcaveHull::Smooth(SmoothHull {
            offset: y,
            length: z - y,
        }),
        DistributionFn::Step { points, .. } => {
            let ay = a.value(y);
            let mut pts = vec![(0.0, 0.0)];
            pts.extend(
                points
                    .iter()
                    .filter(|p| **p > y && **p <= z)
                    .map(|p| (p - y, a.value(*p) - ay)),
            );
            pts.push((z - y, a.value(z) - ay));
            ConcaveHull::Piecewise(PiecewiseHull::from_points(&pts))
        }
        DistributionFn::Sampled { grid } => {
            let ay = a.value(y);
            let mut pts = vec![(0.0, 0.0)];
            pts.extend(
                grid.iter()
                    .filter(|p| p.0 > y && p.0 < z)
                    .map(|p| (p.0 - y, p.1 - ay)),
            );
            pts.push((z - y, a.value(z) - ay));
            ConcaveHull::Piecewise(PiecewiseHull::from_points(&pts))
        }
    };
    Ok(CutDistribution {
        y,
        z,
        base: a.clone(),
        hull,
    })
}

/// x(β) = sup{x : ā(x) > 2 ln 2 / β²}.
pub fn freezing_threshold(hull: &ConcaveHull, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(domain("freezing_threshold", beta, "(0, inf)"));
    }
    Ok(hull.threshold_crossing(2.0 * LN_2 / (beta * beta)))
}
