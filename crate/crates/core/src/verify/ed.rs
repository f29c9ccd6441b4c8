use std::f64::consts::LN_2;

use faer::{Mat, Side};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, LogSumExp};

use super::classical::diagonal_energies;
use super::realization::Realization;
use super::rng::uniform_stream;
use super::FieldMode;

pub(crate) const DENSE_MAX_N: usize = 12;
pub(crate) const LANCZOS_MAX_N: usize = 20;
const PROBE_STREAM: u64 = 1 << 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdMethod {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdOptions {
    pub probes: usize,
    pub steps: usize,
    /// Seed for the Rademacher probes.
    pub seed: u64,
    /// Relative standard error of the trace above which a warning is raised.
    pub tolerance: f64,
}

impl Default for EdOptions {
    fn default() -> Self {
        Self {
            probes: 30,
            steps: 60,
            seed: 0,
            tolerance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdEstimate {
    pub phi: f64,
    /// Zero for the dense path.
    pub std_error: f64,
    pub method: EdMethod,
    pub warning: Option<String>,
}

/// Φ_N = (1/N) ln Tr exp(-βH) with H = diag(U - h) - Σ_j b_j X_j.
pub fn quantum_pressure_ed(
    realization: &Realization,
    beta: f64,
    mode: FieldMode,
    options: &EdOptions,
) -> Result<EdEstimate> {
    let n = realization.n;
    if n > LANCZOS_MAX_N {
        return Err(Error::Resource(format!(
            "N = {n} exceeds {LANCZOS_MAX_N} for diagonalization"
        )));
    }
    let diag = diagonal_energies(realization, mode)?;
    let method = if n <= DENSE_MAX_N {
        EdMethod::Dense
    } else {
        EdMethod::Lanczos
    };
    if beta == 0.0 {
        return Ok(EdEstimate {
            phi: LN_2,
            std_error: 0.0,
            method,
            warning: None,
        });
    }
    match method {
        EdMethod::Dense => {
            let lambda = dense_spectrum(&diag, &realization.b, n);
            Ok(EdEstimate {
                phi: log_sum_exp(lambda.iter().map(|l| -beta * l)) / n as f64,
                std_error: 0.0,
                method,
                warning: None,
            })
        }
        EdMethod::Lanczos => slq(&diag, &realization.b, n, beta, options),
    }
}

fn dense_spectrum(diag: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let d = diag.len();
    let mut h = Mat::<f64>::zeros(d, d);
    for (s, &v) in diag.iter().enumerate() {
        h.write(s, s, v);
        for bit in 0..n {
            let w = b[n - 1 - bit];
            if w != 0.0 {
                h.write(s ^ (1 << bit), s, -w);
            }
        }
    }
    h.selfadjoint_eigenvalues(Side::Lower)
}

fn apply(diag: &[f64], b: &[f64], n: usize, v: &[f64], out: &mut [f64]) {
    out.par_iter_mut().enumerate().for_each(|(s, o)| {
        let mut acc = diag[s] * v[s];
        for bit in 0..n {
            acc -= b[n - 1 - bit] * v[s ^ (1 << bit)];
        }
        *o = acc;
    });
}

/// ln(z^T exp(-βH) z) for one probe by Lanczos quadrature.
fn probe_log_trace(diag: &[f64], b: &[f64], n: usize, beta: f64, z: Vec<f64>, steps: usize) -> f64 {
    let d = z.len();
    let norm2: f64 = z.iter().map(|x| x * x).sum();
    let inv = 1.0 / norm2.sqrt();
    let mut q: Vec<f64> = z.iter().map(|x| x * inv).collect();
    let mut q_prev = vec![0.0; d];
    let mut w = vec![0.0; d];
    let mut alpha = Vec::with_capacity(steps);
    let mut beta_off: Vec<f64> = Vec::with_capacity(steps);
    for j in 0..steps.min(d) {
        apply(diag, b, n, &q, &mut w);
        let a: f64 = w.par_iter().zip(&q).map(|(x, y)| x * y).sum();
        alpha.push(a);
        let bprev = if j > 0 { beta_off[j - 1] } else { 0.0 };
        w.par_iter_mut()
            .zip(&q)
            .zip(&q_prev)
            .for_each(|((wi, qi), pi)| *wi -= a * qi + bprev * pi);
        let bn = w.par_iter().map(|x| x * x).sum::<f64>().sqrt();
        if j + 1 == steps.min(d) || bn < 1e-12 * a.abs().max(1.0) {
            break;
        }
        beta_off.push(bn);
        std::mem::swap(&mut q_prev, &mut q);
        q.par_iter_mut().zip(&w).for_each(|(qi, wi)| *qi = wi / bn);
    }
    let m = alpha.len();
    let mut t = Mat::<f64>::zeros(m, m);
    for i in 0..m {
        t.write(i, i, alpha[i]);
        if i + 1 < m {
            t.write(i + 1, i, beta_off[i]);
            t.write(i, i + 1, beta_off[i]);
        }
    }
    let eig = t.selfadjoint_eigendecomposition(Side::Lower);
    let theta = eig.s().column_vector();
    let u = eig.u();
    let mut acc = LogSumExp::default();
    for i in 0..m {
        let tau = u.read(0, i);
        if tau != 0.0 {
            acc.push(2.0 * tau.abs().ln() - beta * theta.read(i));
        }
    }
    norm2.ln() + acc.value()
}

fn slq(diag: &[f64], b: &[f64], n: usize, beta: f64, options: &EdOptions) -> Result<EdEstimate> {
    if options.probes < 2 || options.steps == 0 {
        return Err(Error::Invalid(
            "stochastic trace needs at least 2 probes and 1 step".into(),
        ));
    }
    let d = diag.len();
    let logs: Vec<f64> = (0..options.probes)
        .map(|p| {
            let z = uniform_stream(options.seed, PROBE_STREAM + p as u64, 0, d)
                .into_iter()
                .map(|(u, _)| if u < 0.5 { 1.0 } else { -1.0 })
                .collect();
            probe_log_trace(diag, b, n, beta, z, options.steps)
        })
        .collect();
    let k = logs.len() as f64;
    let log_mean = log_sum_exp(logs.iter().copied()) - k.ln();
    let ratios: Vec<f64> = logs.iter().map(|l| (l - log_mean).exp()).collect();
    let var = ratios.iter().map(|r| (r - 1.0).powi(2)).sum::<f64>() / (k - 1.0);
    let rel_se = (var / k).sqrt();
    let warning = (rel_se > options.tolerance).then(|| {
        format!(
            "relative standard error {rel_se:.3e} of the trace exceeds {:.3e}",
            options.tolerance
        )
    });
    Ok(EdEstimate {
        phi: log_mean / n as f64,
        std_error: rel_se / n as f64,
        method: EdMethod::Lanczos,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DistributionFn, FieldLaw, Longitudinal, ModelSpec};
    use crate::scalar::ln_2cosh;
    use crate::verify::{classical_pressure_exact, sample_realization, Level};

    fn flat(n: usize, h: f64, g: f64) -> Realization {
        Realization {
            n,
            seed: 0,
            spec: ModelSpec::rem(h, g),
            levels: vec![Level {
                prefix: n,
                weight: 1.0,
                values: vec![0.0; 1 << n],
            }],
            h: vec![h; n],
            b: vec![g; n],
        }
    }

    #[test]
    fn single_spin() {
        for beta in [0.3, 1.0, 4.0] {
            let e = quantum_pressure_ed(
                &flat(1, 0.0, 0.7),
                beta,
                FieldMode::Iid,
                &EdOptions::default(),
            )
            .unwrap();
            assert!((e.phi - ln_2cosh(beta * 0.7)).abs() < 1e-12);
        }
    }

    #[test]
    fn product_state_two_spins() {
        let (h, g, beta) = (0.4, 0.9, 1.3);
        let e = quantum_pressure_ed(&flat(2, h, g), beta, FieldMode::Iid, &EdOptions::default())
            .unwrap();
        let exact = ln_2cosh(beta * (h * h + g * g).sqrt());
        assert!((e.phi - exact).abs() < 1e-10);
        assert_eq!(e.method, EdMethod::Dense);
    }

    #[test]
    fn diagonal_consistency_and_gauge() {
        let r = sample_realization(&ModelSpec::rem(0.3, 0.0), 8, 5).unwrap();
        let ed = quantum_pressure_ed(&r, 0.8, FieldMode::Iid, &EdOptions::default()).unwrap();
        let cl = classical_pressure_exact(&r, 0.8, FieldMode::Iid).unwrap();
        assert!((ed.phi - cl).abs() < 1e-9);
        let mut q = sample_realization(&ModelSpec::rem(0.3, 0.5), 8, 5).unwrap();
        let a = quantum_pressure_ed(&q, 0.8, FieldMode::Iid, &EdOptions::default())
            .unwrap()
            .phi;
        q.b[3] = -q.b[3];
        let b = quantum_pressure_ed(&q, 0.8, FieldMode::Iid, &EdOptions::default())
            .unwrap()
            .phi;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn lanczos_tracks_dense() {
        let spec = ModelSpec::new(
            DistributionFn::rem(),
            Longitudinal::Iid {
                law: FieldLaw::point(0.3),
            },
            FieldLaw::point(0.5),
        );
        let r = sample_realization(&spec, 10, 1).unwrap();
        let dense = quantum_pressure_ed(&r, 0.8, FieldMode::Iid, &EdOptions::default()).unwrap();
        let diag = diagonal_energies(&r, FieldMode::Iid).unwrap();
        let est = slq(&diag, &r.b, 10, 0.8, &EdOptions::default()).unwrap();
        assert!(est.std_error > 0.0);
        assert!(
            (est.phi - dense.phi).abs() < 5.0 * est.std_error + 1e-6,
            "{est:?} vs {}",
            dense.phi
        );
        let big = sample_realization(&spec, 13, 1).unwrap();
        let e = quantum_pressure_ed(&big, 0.8, FieldMode::Iid, &EdOptions::default()).unwrap();
        assert_eq!(e.method, EdMethod::Lanczos);
    }
}
