//! Domain types shared by every module.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::scalar;

pub const DEFAULT_QUADRATURE_NODES: usize = 64;

fn default_nodes() -> usize {
    DEFAULT_QUADRATURE_NODES
}

/// Law of a scalar field weight (longitudinal or transversal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldLaw {
    PointMass {
        value: f64,
    },
    SymmetricTwoPoint {
        magnitude: f64,
    },
    /// Atoms as (value, weight) pairs.
    FiniteMixture {
        atoms: Vec<(f64, f64)>,
    },
    Gaussian {
        mean: f64,
        std: f64,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
}

impl FieldLaw {
    pub fn point(value: f64) -> Self {
        FieldLaw::PointMass { value }
    }

    pub fn zero() -> Self {
        FieldLaw::PointMass { value: 0.0 }
    }

    /// Weighted atoms used for every expectation. Gaussian laws are replaced by
    /// their Gauss-Hermite rule.
    pub fn atoms(&self) -> Arc<[(f64, f64)]> {
        match self {
            FieldLaw::PointMass { value } => Arc::from(vec![(*value, 1.0)]),
            FieldLaw::SymmetricTwoPoint { magnitude } => {
                Arc::from(vec![(*magnitude, 0.5), (-*magnitude, 0.5)])
            }
            FieldLaw::FiniteMixture { atoms } => Arc::from(atoms.clone()),
            FieldLaw::Gaussian { mean, std, nodes } => {
                if *std == 0.0 {
                    return Arc::from(vec![(*mean, 1.0)]);
                }
                let rule = hermite_rule(*nodes);
                let scale = std::f64::consts::SQRT_2 * std;
                let norm = 1.0 / std::f64::consts::PI.sqrt();
                rule.iter()
                    .map(|&(x, w)| (mean + scale * x, w * norm))
                    .collect::<Vec<_>>()
                    .into()
            }
        }
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match self {
            FieldLaw::PointMass { value } => f(*value),
            FieldLaw::SymmetricTwoPoint { magnitude } => 0.5 * (f(*magnitude) + f(-*magnitude)),
            FieldLaw::FiniteMixture { atoms } => atoms.iter().map(|&(v, w)| w * f(v)).sum(),
            FieldLaw::Gaussian { .. } => self.atoms().iter().map(|&(v, w)| w * f(v)).sum(),
        }
    }

    /// E|h|, from the same atoms as every other expectation.
    pub fn abs_first(&self) -> f64 {
        self.expect(f64::abs)
    }

    /// P(h != 0).
    pub fn prob_nonzero(&self) -> f64 {
        match self {
            FieldLaw::Gaussian { std, mean, .. } => {
                if *std > 0.0 || *mean != 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.expect(|v| if v != 0.0 { 1.0 } else { 0.0 }),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.prob_nonzero() == 0.0
    }

    /// Draw one value from two independent uniforms in (0,1].
    pub fn sample(&self, u1: f64, u2: f64) -> f64 {
        match self {
            FieldLaw::PointMass { value } => *value,
            FieldLaw::SymmetricTwoPoint { magnitude } => {
                if u1 < 0.5 {
                    *magnitude
                } else {
                    -*magnitude
                }
            }
            FieldLaw::FiniteMixture { atoms } => {
                let mut acc = 0.0;
                for &(v, w) in atoms {
                    acc += w;
                    if u1 <= acc {
                        return v;
                    }
                }
                atoms.last().map(|a| a.0).unwrap_or(0.0)
            }
            FieldLaw::Gaussian { mean, std, .. } => {
                let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                mean + std * z
            }
        }
    }

    fn violations(&self, name: &str, out: &mut Vec<Violation>) {
        let mut push = |field: String, message: String| out.push(Violation { field, message });
        match self {
            FieldLaw::PointMass { value } => {
                if !value.is_finite() {
                    push(format!("{name}.value"), "value must be finite".into());
                }
            }
            FieldLaw::SymmetricTwoPoint { magnitude } => {
                if !(magnitude.is_finite() && *magnitude >= 0.0) {
                    push(
                        format!("{name}.magnitude"),
                        "magnitude must be finite and >= 0".into(),
                    );
                }
            }
            FieldLaw::FiniteMixture { atoms } => {
                if atoms.is_empty() {
                    push(
                        format!("{name}.atoms"),
                        "mixture needs at least one atom".into(),
                    );
                    return;
                }
                let mut total = 0.0;
                for (i, &(v, w)) in atoms.iter().enumerate() {
                    if !v.is_finite() {
                        push(
                            format!("{name}.atoms[{i}]"),
                            "atom value must be finite".into(),
                        );
                    }
                    if !(w.is_finite() && w >= 0.0) {
                        push(
                            format!("{name}.atoms[{i}]"),
                            "atom weight must be a probability".into(),
                        );
                    }
                    total += w;
                }
                if (total - 1.0).abs() > 1e-12 {
                    push(
                        format!("{name}.atoms"),
                        format!("weight normalization: weights sum to {total}, expected 1"),
                    );
                }
            }
            FieldLaw::Gaussian { mean, std, nodes } => {
                if !mean.is_finite() {
                    push(format!("{name}.mean"), "mean must be finite".into());
                }
                if !(std.is_finite() && *std >= 0.0) {
                    push(format!("{name}.std"), "std must be finite and >= 0".into());
                }
                if *nodes < 2 {
                    push(
                        format!("{name}.nodes"),
                        "quadrature needs at least 2 nodes".into(),
                    );
                }
            }
        }
    }
}

type Rule = Arc<[(f64, f64)]>;

fn hermite_rule(nodes: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(nodes)
        .or_insert_with(|| {
            let rule = gauss_quad::GaussHermite::new(nodes.max(2)).expect("node count >= 2");
            Arc::from(rule.as_node_weight_pairs().to_vec())
        })
        .clone()
}

/// The covariance profile A on [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DistributionFn {
    /// A(x) = sum of increments a_k over points x_k <= x.
    Step {
        points: Vec<f64>,
        increments: Vec<f64>,
    },
    /// A = gamma^2.
    Sk,
    /// Linearly interpolated (x, A(x)) pairs covering [0,1].
    Sampled { grid: Vec<(f64, f64)> },
}

impl DistributionFn {
    pub fn rem() -> Self {
        DistributionFn::Step {
            points: vec![1.0],
            increments: vec![1.0],
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            DistributionFn::Step { points, increments } => points
                .iter()
                .zip(increments)
                .take_while(|(p, _)| **p <= x)
                .map(|(_, a)| a)
                .sum(),
            DistributionFn::Sk => {
                let g = scalar::gamma(x.clamp(0.0, 1.0)).unwrap_or(1.0);
                g * g
            }
            DistributionFn::Sampled { grid } => interpolate(grid, x),
        }
    }

    pub fn is_step(&self) -> bool {
        matches!(self, DistributionFn::Step { .. })
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        let mut push = |field: &str, message: String| {
            out.push(Violation {
                field: field.into(),
                message,
            })
        };
        match self {
            DistributionFn::Step { points, increments } => {
                if points.is_empty() {
                    push(
                        "distribution.points",
                        "step distribution needs at least one point".into(),
                    );
                    return;
                }
                if points.len() != increments.len() {
                    push(
                        "distribution.increments",
                        format!(
                            "{} increments for {} points",
                            increments.len(),
                            points.len()
                        ),
                    );
                }
                if points
                    .iter()
                    .any(|p| !p.is_finite() || *p <= 0.0 || *p > 1.0)
                {
                    push("distribution.points", "points must lie in (0,1]".into());
                }
                if points.windows(2).any(|w| w[0] >= w[1]) {
                    push(
                        "distribution.points",
                        "points must be strictly increasing".into(),
                    );
                }
                if points.last() != Some(&1.0) {
                    push("distribution.points", "last point must be 1".into());
                }
                if increments.iter().any(|a| !a.is_finite() || *a < 0.0) {
                    push("distribution.increments", "increments must be >= 0".into());
                }
                let total: f64 = increments.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    push(
                        "distribution.increments",
                        format!("normalization A(1)=1 violated: increments sum to {total}"),
                    );
                }
            }
            DistributionFn::Sk => {}
            DistributionFn::Sampled { grid } => {
                if grid.len() < 2 {
                    push(
                        "distribution.grid",
                        "sampled distribution needs at least two points".into(),
                    );
                    return;
                }
                if grid.iter().any(|(x, a)| !x.is_finite() || !a.is_finite()) {
                    push("distribution.grid", "grid entries must be finite".into());
                }
                if grid.windows(2).any(|w| w[0].0 >= w[1].0) {
                    push(
                        "distribution.grid",
                        "grid abscissae must be strictly increasing".into(),
                    );
                }
                if grid.windows(2).any(|w| w[0].1 > w[1].1) {
                    push("distribution.grid", "A must be non-decreasing".into());
                }
                if grid[0] != (0.0, 0.0) {
                    push("distribution.grid", "grid must start at (0, 0)".into());
                }
                let last = grid[grid.len() - 1];
                if last.0 != 1.0 || (last.1 - 1.0).abs() > 1e-12 {
                    push(
                        "distribution.grid",
                        "normalization A(1)=1 violated: grid must end at (1, 1)".into(),
                    );
                }
                if grid.iter().any(|(_, a)| *a < 0.0 || *a > 1.0 + 1e-12) {
                    push("distribution.grid", "values must lie in [0,1]".into());
                }
            }
        }
    }
}

pub(crate) fn interpolate(grid: &[(f64, f64)], x: f64) -> f64 {
    if x <= grid[0].0 {
        return grid[0].1;
    }
    let last = grid[grid.len() - 1];
    if x >= last.0 {
        return last.1;
    }
    let i = grid.partition_point(|p| p.0 <= x);
    let (x0, a0) = grid[i - 1];
    let (x1, a1) = grid[i];
    a0 + (a1 - a0) * (x - x0) / (x1 - x0)
}

/// Overlap function of a hierarchical longitudinal field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HierarchicalOverlap {
    /// eta(x) = values[k] on [points[k-1], points[k]) with points[-1] = 0 and
    /// the last point equal to 1 (eta(1) = last value).
    StepEta { points: Vec<f64>, values: Vec<f64> },
    /// eta = h * gamma.
    MagneticEta { h: f64 },
}

impl HierarchicalOverlap {
    pub fn eta(&self, x: f64) -> f64 {
        match self {
            HierarchicalOverlap::StepEta { points, values } => {
                let k = points.partition_point(|p| *p <= x);
                values[k.min(values.len() - 1)]
            }
            HierarchicalOverlap::MagneticEta { h } => {
                h * scalar::gamma(x.clamp(0.0, 1.0)).unwrap_or(1.0)
            }
        }
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        let mut push = |field: &str, message: String| {
            out.push(Violation {
                field: field.into(),
                message,
            })
        };
        match self {
            HierarchicalOverlap::StepEta { points, values } => {
                if points.is_empty() || points.len() != values.len() {
                    push(
                        "longitudinal.overlap",
                        "step eta needs equally many points and values (>= 1)".into(),
                    );
                    return;
                }
                if points
                    .iter()
                    .any(|p| !p.is_finite() || *p <= 0.0 || *p > 1.0)
                    || points.windows(2).any(|w| w[0] >= w[1])
                {
                    push(
                        "longitudinal.overlap.points",
                        "points must be strictly increasing in (0,1]".into(),
                    );
                }
                if points.last() != Some(&1.0) {
                    push("longitudinal.overlap.points", "last point must be 1".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    push(
                        "longitudinal.overlap.values",
                        "values must be finite".into(),
                    );
                }
            }
            HierarchicalOverlap::MagneticEta { h } => {
                if !(h.is_finite() && *h >= 0.0) {
                    push(
                        "longitudinal.overlap.h",
                        "strength must be finite and >= 0".into(),
                    );
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Longitudinal {
    Iid { law: FieldLaw },
    Hierarchical { overlap: HierarchicalOverlap },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub distribution: DistributionFn,
    pub longitudinal: Longitudinal,
    pub transversal: FieldLaw,
}

impl ModelSpec {
    pub fn new(
        distribution: DistributionFn,
        longitudinal: Longitudinal,
        transversal: FieldLaw,
    ) -> Self {
        Self {
            distribution,
            longitudinal,
            transversal,
        }
    }

    /// REM with point-mass fields h and Gamma.
    pub fn rem(h: f64, gamma: f64) -> Self {
        Self::new(
            DistributionFn::rem(),
            Longitudinal::Iid {
                law: FieldLaw::point(h),
            },
            FieldLaw::point(gamma),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every violated invariant of `spec`; empty when usable downstream.
pub fn validate(spec: &ModelSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    spec.distribution.violations(&mut out);
    match &spec.longitudinal {
        Longitudinal::Iid { law } => law.violations("longitudinal.law", &mut out),
        Longitudinal::Hierarchical { overlap } => overlap.violations(&mut out),
    }
    spec.transversal.violations("transversal", &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    UnfrozenClassical,
    FrozenGlass,
    QuantumParamagnet,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::UnfrozenClassical => "unfrozen_classical",
            Phase::FrozenGlass => "frozen_glass",
            Phase::QuantumParamagnet => "quantum_paramagnet",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Limiting pressure at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureResult {
    pub phi: f64,
    pub y_star: f64,
    pub z_star: f64,
    pub phase: Phase,
    pub m_z: f64,
    pub m_x: f64,
    /// Set when the maximizer came from a grid search without a guarantee.
    pub approximate: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed_step_is_valid() {
        let spec = ModelSpec::new(
            DistributionFn::Step {
                points: vec![0.5, 1.0],
                increments: vec![0.6, 0.4],
            },
            Longitudinal::Iid {
                law: FieldLaw::zero(),
            },
            FieldLaw::zero(),
        );
        assert!(validate(&spec).is_empty());
    }

    #[test]
    fn unnormalized_step_is_reported() {
        let spec = ModelSpec::new(
            DistributionFn::Step {
                points: vec![0.5, 1.0],
                increments: vec![0.5, 0.4],
            },
            Longitudinal::Iid {
                law: FieldLaw::zero(),
            },
            FieldLaw::zero(),
        );
        let v = validate(&spec);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("A(1)=1"));
    }

    #[test]
    fn mixture_weights_are_checked() {
        let spec = ModelSpec::new(
            DistributionFn::rem(),
            Longitudinal::Iid {
                law: FieldLaw::FiniteMixture {
                    atoms: vec![(1.0, 0.5), (-1.0, 0.6)],
                },
            },
            FieldLaw::zero(),
        );
        let v = validate(&spec);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("weight normalization"));
    }

    #[test]
    fn step_values() {
        let a = DistributionFn::Step {
            points: vec![0.5, 1.0],
            increments: vec![0.6, 0.4],
        };
        assert_eq!(a.value(0.49), 0.0);
        assert_eq!(a.value(0.5), 0.6);
        assert_eq!(a.value(1.0), 1.0);
    }

    #[test]
    fn step_eta_lookup() {
        let eta = HierarchicalOverlap::StepEta {
            points: vec![0.3, 1.0],
            values: vec![2.0, 5.0],
        };
        assert_eq!(eta.eta(0.0), 2.0);
        assert_eq!(eta.eta(0.3), 5.0);
        assert_eq!(eta.eta(1.0), 5.0);
    }

    #[test]
    fn gaussian_atoms_integrate_moments() {
        let law = FieldLaw::Gaussian {
            mean: 0.5,
            std: 2.0,
            nodes: 64,
        };
        let m2 = law.expect(|v| v * v);
        assert!((m2 - 4.25).abs() < 1e-10);
        // E|N(0.5, 4)| = 2*sqrt(2/pi)*exp(-1/32) + 0.5*(1 - 2*Phi(-0.25))
        let exact = 1.645_378_792_894_f64;
        assert!((law.abs_first() - exact).abs() < 1e-2);
    }

    #[test]
    fn json_round_trip() {
        let spec = ModelSpec::new(
            DistributionFn::Sampled {
                grid: vec![(0.0, 0.0), (0.5, 0.3), (1.0, 1.0)],
            },
            Longitudinal::Hierarchical {
                overlap: HierarchicalOverlap::MagneticEta { h: 0.7 },
            },
            FieldLaw::Gaussian {
                mean: 0.0,
                std: 1.0,
                nodes: 32,
            },
        );
        let text = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }
}
