//! Counter-based streams: element i of stream s under seed k depends only on
//! (k, s, i), since every element consumes exactly two 64-bit words.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn stream_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(4 * index as u128);
    rng
}

/// Uniform in (0, 1].
fn open_unit(word: u64) -> f64 {
    ((word >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

/// Pairs of uniforms in (0, 1], elements `start..start+count`.
pub fn uniform_stream(seed: u64, stream: u64, start: u64, count: usize) -> Vec<(f64, f64)> {
    let mut rng = stream_rng(seed, stream, start);
    (0..count)
        .map(|_| {
            let a = open_unit(rng.next_u64());
            let b = open_unit(rng.next_u64());
            (a, b)
        })
        .collect()
}

/// Standard normals by Box-Muller (cosine branch only).
pub fn normal_stream(seed: u64, stream: u64, start: u64, count: usize) -> Vec<f64> {
    uniform_stream(seed, stream, start, count)
        .into_iter()
        .map(|(u1, u2)| (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elements_are_addressable() {
        let all = normal_stream(7, 3, 0, 100);
        let tail = normal_stream(7, 3, 40, 60);
        assert_eq!(&all[40..], &tail[..]);
        assert_ne!(normal_stream(7, 4, 0, 5), normal_stream(7, 3, 0, 5));
        assert_ne!(normal_stream(8, 3, 0, 5), normal_stream(7, 3, 0, 5));
    }

    #[test]
    fn normals_have_unit_variance() {
        let v = normal_stream(1, 1, 0, 200_000);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.01);
    }
}
