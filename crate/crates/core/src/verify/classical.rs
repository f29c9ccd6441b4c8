use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Longitudinal;
use crate::numeric::LogSumExp;

use super::realization::{reference_overlap, Realization};
use super::FieldMode;

const CHUNK_BITS: u32 = 16;
pub(crate) const CLASSICAL_MAX_N: usize = 28;

enum FieldTable {
    /// Σ h_j σ_j from the low and high bit halves.
    Split {
        lo_bits: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// N η(i/N) indexed by the first flipped spin i (1-based).
    Hier(Vec<f64>),
}

/// U(s) - h(s) for a realization.
pub(crate) struct Diagonal<'a> {
    r: &'a Realization,
    coefs: Vec<f64>,
    shifts: Vec<usize>,
    field: FieldTable,
}

/// Σ over the given bits of h_{spin(bit)} σ, for every pattern of those bits.
fn half_table(h: &[f64], n: usize, first_bit: usize, bits: usize) -> Vec<f64> {
    let mut table = vec![0.0; 1 << bits];
    for (m, slot) in table.iter_mut().enumerate() {
        *slot = (0..bits)
            .map(|t| {
                let w = h[n - 1 - (first_bit + t)];
                if (m >> t) & 1 == 0 {
                    w
                } else {
                    -w
                }
            })
            .sum();
    }
    table
}

impl<'a> Diagonal<'a> {
    pub(crate) fn new(r: &'a Realization, mode: FieldMode) -> Result<Self> {
        let n = r.n;
        let field = match (mode, &r.spec.longitudinal) {
            (FieldMode::Iid, Longitudinal::Iid { .. }) => {
                let lo_bits = n / 2;
                FieldTable::Split {
                    lo_bits,
                    lo: half_table(&r.h, n, 0, lo_bits),
                    hi: half_table(&r.h, n, lo_bits, n - lo_bits),
                }
            }
            (FieldMode::Hier, Longitudinal::Hierarchical { overlap }) => FieldTable::Hier(
                (0..=n)
                    .map(|i| n as f64 * overlap.eta(i as f64 / n as f64))
                    .collect(),
            ),
            _ => {
                return Err(Error::Invalid(format!(
                    "field mode {mode:?} does not match the longitudinal field of the spec"
                )))
            }
        };
        Ok(Self {
            r,
            coefs: r
                .levels
                .iter()
                .map(|l| (l.weight * n as f64).sqrt())
                .collect(),
            shifts: r.levels.iter().map(|l| n - l.prefix).collect(),
            field,
        })
    }

    #[inline]
    pub(crate) fn value(&self, s: u64) -> f64 {
        let mut u = 0.0;
        for ((l, c), sh) in self.r.levels.iter().zip(&self.coefs).zip(&self.shifts) {
            u += c * l.values[(s >> sh) as usize];
        }
        let h = match &self.field {
            FieldTable::Split { lo_bits, lo, hi } => {
                lo[(s & ((1u64 << lo_bits) - 1)) as usize] + hi[(s >> lo_bits) as usize]
            }
            FieldTable::Hier(t) => t[reference_overlap(s, self.r.n)],
        };
        u - h
    }
}

/// U(σ) - h(σ) for all 2^N configurations.
pub fn diagonal_energies(realization: &Realization, mode: FieldMode) -> Result<Vec<f64>> {
    if realization.n > 24 {
        return Err(Error::Resource(format!(
            "storing 2^{} energies",
            realization.n
        )));
    }
    let d = Diagonal::new(realization, mode)?;
    Ok((0..1u64 << realization.n)
        .into_par_iter()
        .map(|s| d.value(s))
        .collect())
}

/// Φ_N = (1/N) ln Σ_σ exp(-β(U(σ) - h(σ))), streamed over the cube.
pub fn classical_pressure_exact(
    realization: &Realization,
    beta: f64,
    mode: FieldMode,
) -> Result<f64> {
    let n = realization.n;
    if n > CLASSICAL_MAX_N {
        return Err(Error::Resource(format!(
            "N = {n} exceeds {CLASSICAL_MAX_N} for the exact sum"
        )));
    }
    let d = Diagonal::new(realization, mode)?;
    if beta == 0.0 {
        return Ok(LN_2);
    }
    let total = 1u64 << n;
    let chunk = 1u64 << CHUNK_BITS.min(n as u32);
    let parts: Vec<LogSumExp> = (0..total / chunk)
        .into_par_iter()
        .map(|c| {
            let mut acc = LogSumExp::default();
            for s in c * chunk..(c + 1) * chunk {
                acc.push(-beta * d.value(s));
            }
            acc
        })
        .collect();
    let mut acc = LogSumExp::default();
    for p in parts {
        acc.merge(p);
    }
    Ok(acc.value() / n as f64)
}
