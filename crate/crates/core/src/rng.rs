//! Deterministic, splittable random streams and the samplers built on them.
//!
//! A stream is identified by `(master_seed, stream_id)`; Monte Carlo trials
//! each get their own stream so results do not depend on scheduling.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

use crate::error::{Error, Result};
use crate::frame::Subspace;
use crate::linalg::{lowdin_orthonormalize, Matrix};

/// Odd multiplier (2^64 / golden ratio) spreading stream ids before mixing.
const STREAM_MULTIPLIER: u64 = 0x9E37_79B9_7F4A_7C15;
const SPHERE_MAX_ATTEMPTS: usize = 8;
const SPHERE_MIN_NORM: f64 = 1e-150;

/// Single-owner random stream: xoshiro256++ plus a cached polar-method spare.
#[derive(Clone, Debug)]
pub struct RngStream {
    core: Xoshiro256PlusPlus,
    stream_id: u64,
    spare_normal: Option<f64>,
}

/// Stream `stream_id` of the generator family rooted at `master_seed`.
pub fn derive_stream(master_seed: u64, stream_id: u64) -> RngStream {
    let key = master_seed ^ stream_id.wrapping_mul(STREAM_MULTIPLIER);
    let mixed = SplitMix64::seed_from_u64(key).next_u64();
    RngStream {
        core: Xoshiro256PlusPlus::seed_from_u64(mixed),
        stream_id,
        spare_normal: None,
    }
}

impl RngStream {
    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.core.next_u64()
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate by the Marsaglia polar method.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s >= 1.0 || s == 0.0 {
                continue;
            }
            let factor = (-2.0 * s.ln() / s).sqrt();
            self.spare_normal = Some(v * factor);
            return u * factor;
        }
    }
}

/// `rows×cols` matrix of i.i.d. N(0,1) entries, filled row-major.
pub fn gaussian_matrix(stream: &mut RngStream, rows: usize, cols: usize) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDims(format!(
            "gaussian matrix must be non-empty, got {rows}x{cols}"
        )));
    }
    let data = (0..rows * cols).map(|_| stream.standard_normal()).collect();
    Matrix::from_vec(rows, cols, data)
}

fn sphere_draw(stream: &mut RngStream, dim: usize) -> Result<Vec<f64>> {
    for _ in 0..SPHERE_MAX_ATTEMPTS {
        let mut v: Vec<f64> = (0..dim).map(|_| stream.standard_normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < SPHERE_MIN_NORM {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        return Ok(v);
    }
    Err(Error::DegenerateDraw {
        attempts: SPHERE_MAX_ATTEMPTS,
    })
}

/// Uniform point on the unit sphere in ℝ^dim, as a `dim×1` matrix.
pub fn sphere_vector(stream: &mut RngStream, dim: usize) -> Result<Matrix> {
    if dim == 0 {
        return Err(Error::InvalidDims("sphere dimension must be positive".into()));
    }
    Matrix::from_vec(dim, 1, sphere_draw(stream, dim)?)
}

/// Unitarily invariant random `s`-dimensional subspace of ℝ^N.
///
/// Spans `s` independent sphere vectors and orthonormalizes them with the
/// pseudoinverse square root of their frame operator ([`lowdin_orthonormalize`]).
pub fn random_subspace(stream: &mut RngStream, ambient_dim: usize, subspace_dim: usize) -> Result<Subspace> {
    if subspace_dim == 0 || subspace_dim > ambient_dim {
        return Err(Error::InvalidDims(format!(
            "need 1 <= s <= N, got s={subspace_dim}, N={ambient_dim}"
        )));
    }
    let mut retried = false;
    loop {
        let columns = (0..subspace_dim)
            .map(|_| sphere_draw(stream, ambient_dim))
            .collect::<Result<Vec<_>>>()?;
        let vectors = Matrix::from_columns(&columns)?;
        match lowdin_orthonormalize(&vectors) {
            Ok(basis) => return Subspace::new(basis),
            Err(Error::RankDeficient { .. }) if !retried => retried = true,
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orthonormality_defect, projector};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn streams_are_deterministic_and_separated() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 0);
        let mut c = derive_stream(42, 1);
        let xa: Vec<u64> = (0..100).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..100).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..100).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn uniform_goodness_of_fit() {
        let mut s = derive_stream(42, 7);
        let n = 100_000;
        let mut bins = [0u32; 16];
        for _ in 0..n {
            bins[(s.uniform() * 16.0) as usize] += 1;
        }
        let expected = n as f64 / 16.0;
        let stat: f64 = bins
            .iter()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum();
        let p = 1.0 - ChiSquared::new(15.0).unwrap().cdf(stat);
        assert!(p > 0.001, "chi-square {stat}, p = {p}");
    }

    #[test]
    fn gaussian_moments() {
        let mut s = derive_stream(1, 0);
        let m = gaussian_matrix(&mut s, 100_000, 1).unwrap();
        let n = m.rows() as f64;
        let mean = m.as_slice().iter().sum::<f64>() / n;
        let var = m.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((0.97..=1.03).contains(&var), "var {var}");
    }

    #[test]
    fn gaussian_columns_uncorrelated() {
        let mut s = derive_stream(2, 3);
        let m = gaussian_matrix(&mut s, 10_000, 2).unwrap();
        let (x, y) = (m.column(0), m.column(1));
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        let corr = cov / (vx * vy).sqrt();
        assert!(corr.abs() <= 0.05, "corr {corr}");
    }

    #[test]
    fn gaussian_matrix_is_reproducible() {
        let a = gaussian_matrix(&mut derive_stream(9, 9), 7, 5).unwrap();
        let b = gaussian_matrix(&mut derive_stream(9, 9), 7, 5).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert!(gaussian_matrix(&mut derive_stream(9, 9), 0, 5).is_err());
    }

    #[test]
    fn sphere_vectors() {
        let mut s = derive_stream(5, 5);
        for _ in 0..50 {
            let v = sphere_vector(&mut s, 5).unwrap();
            let norm = v.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-14);
        }
        for _ in 0..20 {
            let v = sphere_vector(&mut s, 1).unwrap();
            assert_eq!(v.as_slice()[0].abs(), 1.0);
        }
        assert!(sphere_vector(&mut s, 0).is_err());
    }

    #[test]
    fn sphere_mean_is_near_zero() {
        let mut s = derive_stream(8, 0);
        let mut mean = [0.0; 3];
        let n = 100_000;
        for _ in 0..n {
            let v = sphere_vector(&mut s, 3).unwrap();
            for (m, x) in mean.iter_mut().zip(v.as_slice()) {
                *m += x / n as f64;
            }
        }
        let norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm < 0.02, "mean norm {norm}");
    }

    fn det(m: &Matrix) -> f64 {
        let n = m.rows();
        let mut a: Vec<Vec<f64>> = (0..n).map(|r| m.row(r).to_vec()).collect();
        let mut d = 1.0;
        for c in 0..n {
            let p = (c..n)
                .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
                .unwrap();
            if p != c {
                a.swap(p, c);
                d = -d;
            }
            d *= a[c][c];
            for r in (c + 1)..n {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
        d
    }

    #[test]
    fn full_and_line_subspaces() {
        let mut s = derive_stream(3, 1);
        let full = random_subspace(&mut s, 6, 6).unwrap();
        assert!((det(full.basis()).abs() - 1.0).abs() < 1e-8);
        let line = random_subspace(&mut s, 6, 1).unwrap();
        assert_eq!(line.dim(), 1);
        assert!(orthonormality_defect(line.basis()) < 1e-14);
        assert!(random_subspace(&mut s, 3, 4).is_err());
        assert!(random_subspace(&mut s, 3, 0).is_err());
    }

    #[test]
    fn projector_mean_is_scaled_identity() {
        let (n, k) = (20, 4);
        let draws = 10_000;
        let mut s = derive_stream(2024, 0);
        let mut acc = Matrix::zeros(n, n);
        for _ in 0..draws {
            let sub = random_subspace(&mut s, n, k).unwrap();
            let p = projector(sub.basis());
            for i in 0..n {
                for j in 0..n {
                    acc.set(i, j, acc.get(i, j) + p.get(i, j) / draws as f64);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = acc.get(i, j);
                if i == j {
                    assert!((0.19..=0.21).contains(&v), "diag {v}");
                } else {
                    assert!((-0.01..=0.01).contains(&v), "off-diag {v}");
                }
            }
        }
    }
}
