use crate::error::{Error, Result};
use crate::model::{DistributionFn, FieldLaw, HierarchicalOverlap, Longitudinal, ModelSpec};

use super::rng::{normal_stream, uniform_stream};
use super::ResourceLimits;

const FIELD_STREAM: u64 = 1 << 32;
const FLIP_STREAM: u64 = (1 << 32) + 1;

/// One tree level: Gaussians indexed by the first `prefix` spins.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub prefix: usize,
    /// Increment a_k of A carried by this level.
    pub weight: f64,
    pub values: Vec<f64>,
}

/// A sampled finite-N instance. Configuration s encodes spin i (1-based) in
/// bit N - i, with bit 0 meaning +1; s = 0 is the all-plus state.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub n: usize,
    pub seed: u64,
    pub spec: ModelSpec,
    pub levels: Vec<Level>,
    /// iid longitudinal weights h_j (empty for hierarchical fields).
    pub h: Vec<f64>,
    /// Transversal weights b_j.
    pub b: Vec<f64>,
}

impl Realization {
    /// U(σ) = Σ_k sqrt(a_k N) X_k(prefix).
    pub fn energy(&self, s: u64) -> f64 {
        let nf = self.n as f64;
        self.levels
            .iter()
            .map(|l| (l.weight * nf).sqrt() * l.values[(s >> (self.n - l.prefix)) as usize])
            .sum()
    }

    pub fn spin(&self, s: u64, i: usize) -> f64 {
        if (s >> (self.n - 1 - i)) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Every stored number as little-endian bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend((self.n as u64).to_le_bytes());
        out.extend(self.seed.to_le_bytes());
        for l in &self.levels {
            out.extend((l.prefix as u64).to_le_bytes());
            out.extend(l.weight.to_le_bytes());
            l.values.iter().for_each(|v| out.extend(v.to_le_bytes()));
        }
        self.h
            .iter()
            .chain(&self.b)
            .for_each(|v| out.extend(v.to_le_bytes()));
        out
    }
}

/// (x_k, a_k) pairs of the tree. Non-step profiles are resolved on the 1/N grid.
fn tree_levels(a: &DistributionFn, n: usize) -> Vec<(usize, f64)> {
    let raw: Vec<(usize, f64)> = match a {
        DistributionFn::Step { points, increments } => points
            .iter()
            .zip(increments)
            .map(|(x, w)| (((x * n as f64) - 1e-9).ceil().max(1.0) as usize, *w))
            .collect(),
        _ => (1..=n)
            .map(|k| {
                let w = a.value(k as f64 / n as f64) - a.value((k - 1) as f64 / n as f64);
                (k, w)
            })
            .collect(),
    };
    let mut merged: Vec<(usize, f64)> = Vec::new();
    for (p, w) in raw {
        if w <= 0.0 {
            continue;
        }
        match merged.last_mut() {
            Some(last) if last.0 == p => last.1 += w,
            _ => merged.push((p.min(n), w)),
        }
    }
    merged
}

pub fn sample_realization(spec: &ModelSpec, n: usize, seed: u64) -> Result<Realization> {
    sample_realization_with(spec, n, seed, ResourceLimits::from_env())
}

pub(crate) fn sample_realization_with(
    spec: &ModelSpec,
    n: usize,
    seed: u64,
    limits: ResourceLimits,
) -> Result<Realization> {
    if n == 0 || n > 40 {
        return Err(Error::Resource(format!("N = {n} outside 1..=40")));
    }
    let shape = tree_levels(&spec.distribution, n);
    let total: u128 = shape.iter().map(|(p, _)| 1u128 << p).sum();
    if total > limits.max_dim as u128 {
        return Err(Error::Resource(format!(
            "tree needs {total} Gaussians, limit is {} (GREMPHASE_MAX_DIM)",
            limits.max_dim
        )));
    }
    let levels = shape
        .iter()
        .enumerate()
        .map(|(k, &(prefix, weight))| Level {
            prefix,
            weight,
            values: normal_stream(seed, k as u64 + 1, 0, 1usize << prefix),
        })
        .collect();
    let draw = |law: &FieldLaw, stream: u64| -> Vec<f64> {
        uniform_stream(seed, stream, 0, n)
            .into_iter()
            .map(|(u1, u2)| law.sample(u1, u2))
            .collect()
    };
    let h = match &spec.longitudinal {
        Longitudinal::Iid { law } => draw(law, FIELD_STREAM),
        Longitudinal::Hierarchical { .. } => Vec::new(),
    };
    let b = draw(&spec.transversal, FLIP_STREAM);
    Ok(Realization {
        n,
        seed,
        spec: spec.clone(),
        levels,
        h,
        b,
    })
}

fn check_lengths(a: &[i8], b: &[i8]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Invalid(format!(
            "spin vectors of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// q_N = min{i : σ_i != σ'_i}/N (1-based), or 1 if equal.
pub fn lexicographic_overlap(sigma: &[i8], sigma_prime: &[i8]) -> Result<f64> {
    check_lengths(sigma, sigma_prime)?;
    let n = sigma.len();
    Ok(
        match sigma.iter().zip(sigma_prime).position(|(a, b)| a != b) {
            None => 1.0,
            Some(i) => (i + 1) as f64 / n as f64,
        },
    )
}

/// Number of leading agreeing spins over N (1 if equal). The tree
/// covariance is exactly N·A of this quantity.
pub fn shared_prefix_overlap(sigma: &[i8], sigma_prime: &[i8]) -> Result<f64> {
    check_lengths(sigma, sigma_prime)?;
    let n = sigma.len();
    Ok(
        match sigma.iter().zip(sigma_prime).position(|(a, b)| a != b) {
            None => 1.0,
            Some(i) => i as f64 / n as f64,
        },
    )
}

/// Lexicographic overlap of configuration s with the all-plus state, as the
/// 1-based index of the first flipped spin.
pub fn reference_overlap(s: u64, n: usize) -> usize {
    if s == 0 {
        n
    } else {
        let msb = 63 - s.leading_zeros() as usize;
        n - msb
    }
}

/// h(σ) = N η(q_N(σ, σ⁰)) with σ⁰ all plus.
pub fn eval_hier_field(overlap: &HierarchicalOverlap, sigma: &[i8], n: usize) -> Result<f64> {
    let reference = vec![1i8; sigma.len()];
    let q = lexicographic_overlap(sigma, &reference)?;
    Ok(n as f64 * overlap.eta(q))
}
