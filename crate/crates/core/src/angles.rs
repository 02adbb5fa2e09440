//! Hilbert–Schmidt angles between subspaces and equiangularity checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::{FusionFrame, Subspace};
use crate::linalg::cross_gram;

/// Absolute slack on window membership.
pub const WINDOW_SLACK: f64 = 1e-12;

/// `tr[PₐP_b] = ‖UₐᵀU_b‖_F²`.
pub fn hs_inner(a: &Subspace, b: &Subspace) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces live in dimensions {} and {}",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    let c = cross_gram(a.basis(), b.basis())?;
    Ok(c.as_slice().iter().map(|x| x * x).sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct AngleReport {
    /// `K×K` table of `tr[PⱼPₗ]`; the diagonal holds `sⱼ`.
    pub pair_values: Vec<Vec<f64>>,
    pub dims: Vec<usize>,
    pub ambient_dim: usize,
    /// Statistics of `N·tr[PⱼPₗ]/(sⱼsₗ)` over pairs `j < l`.
    pub normalized_min: f64,
    pub normalized_max: f64,
    pub normalized_mean: f64,
    /// Generalized Welch bound; NaN unless the frame is equi-dimensional.
    pub welch: f64,
}

impl AngleReport {
    pub fn count(&self) -> usize {
        self.pair_values.len()
    }

    pub fn normalized(&self, j: usize, l: usize) -> f64 {
        self.ambient_dim as f64 * self.pair_values[j][l] / (self.dims[j] * self.dims[l]) as f64
    }

    /// Largest raw off-diagonal value `max_{j≠l} tr[PⱼPₗ]`.
    pub fn max_off_diagonal(&self) -> f64 {
        let k = self.count();
        let mut m = f64::NEG_INFINITY;
        for j in 0..k {
            for l in (j + 1)..k {
                m = m.max(self.pair_values[j][l]);
            }
        }
        m
    }

    /// `(j, l, tr, normalized)` for every pair `j < l`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        let k = self.count();
        (0..k).flat_map(move |j| {
            ((j + 1)..k).map(move |l| (j, l, self.pair_values[j][l], self.normalized(j, l)))
        })
    }

    /// `Σ_{j,l} wⱼ² wₗ² tr[PⱼPₗ]` over all ordered pairs including the
    /// diagonal; equals `tr(S²)` for the weighted frame operator.
    pub fn weighted_total(&self, weights: &[f64]) -> f64 {
        let mut total = 0.0;
        for (j, row) in self.pair_values.iter().enumerate() {
            for (l, v) in row.iter().enumerate() {
                total += weights[j].powi(2) * weights[l].powi(2) * v;
            }
        }
        total
    }
}

pub fn angle_report(ff: &FusionFrame) -> Result<AngleReport> {
    let k = ff.len();
    if k < 2 {
        return Err(Error::TooFewSubspaces(k));
    }
    let subs = ff.subspaces();
    let n = ff.ambient_dim();
    let mut table = vec![vec![0.0; k]; k];
    for j in 0..k {
        for l in j..k {
            let v = hs_inner(&subs[j], &subs[l])?;
            table[j][l] = v;
            table[l][j] = v;
        }
    }
    let dims: Vec<usize> = subs.iter().map(Subspace::dim).collect();
    let mut report = AngleReport {
        pair_values: table,
        dims,
        ambient_dim: n,
        normalized_min: f64::INFINITY,
        normalized_max: f64::NEG_INFINITY,
        normalized_mean: 0.0,
        welch: ff
            .equi_dimension()
            .map_or(f64::NAN, |s| welch_bound(n, k, s)),
    };
    let normalized: Vec<f64> = report.pairs().map(|p| p.3).collect();
    for &x in &normalized {
        report.normalized_min = report.normalized_min.min(x);
        report.normalized_max = report.normalized_max.max(x);
    }
    report.normalized_mean = normalized.iter().sum::<f64>() / normalized.len() as f64;
    Ok(report)
}

/// Generalized Welch bound `s(Ks − N)/((K − 1)N)`; negative when `Ks < N`.
pub fn welch_bound(ambient_dim: usize, count: usize, subspace_dim: usize) -> f64 {
    let (n, k, s) = (ambient_dim as f64, count as f64, subspace_dim as f64);
    s * (k * s - n) / ((k - 1.0) * n)
}

/// Closed interval `[lo, hi]` for `N·tr[PⱼPₗ]/s²` at distortion `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn contains(&self, x: f64) -> bool {
        self.lo - WINDOW_SLACK <= x && x <= self.hi + WINDOW_SLACK
    }
}

/// `lo = 1/(1+ε) − ε√((1+ε)N/s)`, `hi = 1 + ε(1 + √((1+ε)N/s)) + Nε²/(4s)`.
pub fn equiangular_window(epsilon: f64, ambient_dim: usize, subspace_dim: usize) -> Window {
    let ratio = ambient_dim as f64 / subspace_dim as f64;
    let root = ((1.0 + epsilon) * ratio).sqrt();
    Window {
        lo: 1.0 / (1.0 + epsilon) - epsilon * root,
        hi: 1.0 + epsilon * (1.0 + root) + ratio * epsilon * epsilon / 4.0,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowCheck {
    /// `(j, l, inside)` for every pair `j < l`.
    pub pairs: Vec<(usize, usize, bool)>,
    pub all_pass: bool,
}

pub fn window_check(report: &AngleReport, window: Window) -> WindowCheck {
    let pairs: Vec<_> = report
        .pairs()
        .map(|(j, l, _, x)| (j, l, window.contains(x)))
        .collect();
    let all_pass = pairs.iter().all(|p| p.2);
    WindowCheck { pairs, all_pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::frame_operator;
    use crate::linalg::Matrix;
    use crate::rng::{derive_stream, random_subspace};

    #[test]
    fn hs_inner_hand_cases() {
        let a = Subspace::coordinate(4, &[0, 1]).unwrap();
        let b = Subspace::coordinate(4, &[2, 3]).unwrap();
        assert!((hs_inner(&a, &a).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(hs_inner(&a, &b).unwrap(), 0.0);

        let e1 = Subspace::coordinate(2, &[0]).unwrap();
        let h = 0.5f64.sqrt();
        let diag = Subspace::new(Matrix::from_vec(2, 1, vec![h, h]).unwrap()).unwrap();
        assert!((hs_inner(&e1, &diag).unwrap() - 0.5).abs() < 1e-15);

        let c = Subspace::coordinate(3, &[0]).unwrap();
        assert!(matches!(hs_inner(&a, &c), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn report_on_partition_and_duplicates() {
        let ff = FusionFrame::orthonormal_partition(4, 2).unwrap();
        let r = angle_report(&ff).unwrap();
        assert_eq!(r.pair_values[0][1], 0.0);
        assert_eq!((r.normalized_min, r.normalized_max, r.normalized_mean), (0.0, 0.0, 0.0));
        assert_eq!(r.welch, 0.0);

        let sub = Subspace::coordinate(6, &[1, 4]).unwrap();
        let r = angle_report(&FusionFrame::unit_weights(vec![sub.clone(), sub]).unwrap()).unwrap();
        assert!((r.pair_values[0][1] - 2.0).abs() < 1e-15);
        assert!((r.normalized_mean - 3.0).abs() < 1e-14);
    }

    #[test]
    fn report_needs_two_subspaces() {
        let ff = FusionFrame::unit_weights(vec![Subspace::coordinate(2, &[0]).unwrap()]).unwrap();
        assert!(matches!(angle_report(&ff), Err(Error::TooFewSubspaces(1))));
    }

    #[test]
    fn mixed_dimensions_have_nan_welch() {
        let ff = FusionFrame::unit_weights(vec![
            Subspace::coordinate(4, &[0]).unwrap(),
            Subspace::coordinate(4, &[0, 1]).unwrap(),
        ])
        .unwrap();
        let r = angle_report(&ff).unwrap();
        assert!(r.welch.is_nan());
        // N·tr/(s_j s_l) = 4·1/2
        assert!((r.normalized_mean - 2.0).abs() < 1e-15);
    }

    #[test]
    fn random_mean_near_one() {
        let mut st = derive_stream(64, 4);
        let subs = (0..16).map(|_| random_subspace(&mut st, 64, 4).unwrap()).collect();
        let ff = FusionFrame::unit_weights(subs).unwrap();
        let r = angle_report(&ff).unwrap();
        assert!((0.85..=1.15).contains(&r.normalized_mean), "{}", r.normalized_mean);
        assert!(r.normalized_min <= r.normalized_mean && r.normalized_mean <= r.normalized_max);
        for j in 0..16 {
            assert!((r.pair_values[j][j] - 4.0).abs() < 1e-10);
        }
        let s = frame_operator(&ff);
        let s2 = s.matmul(&s).unwrap().trace();
        assert!((r.weighted_total(ff.weights()) - s2).abs() < 1e-8 * s2);
    }

    #[test]
    fn welch_values() {
        assert_eq!(welch_bound(4, 2, 2), 0.0);
        assert_eq!(welch_bound(6, 4, 3), 1.0);
        assert_eq!(welch_bound(4, 2, 1), -0.5);
    }

    #[test]
    fn window_values() {
        let w = equiangular_window(0.1, 40, 10);
        // 1/1.1 - 0.1·sqrt(4.4) and 1 + 0.1(1 + sqrt(4.4)) + 4·0.01/4
        let root = 4.4f64.sqrt();
        assert!((w.lo - (1.0 / 1.1 - 0.1 * root)).abs() < 1e-15);
        assert!((w.hi - (1.0 + 0.1 * (1.0 + root) + 0.01)).abs() < 1e-15);
        assert!((w.lo - 0.6993).abs() < 5e-5 && (w.hi - 1.3198).abs() < 5e-5);

        let tiny = equiangular_window(1e-12, 7, 7);
        assert!((tiny.lo - (1.0 - 2e-12)).abs() < 1e-15);
        assert!((tiny.hi - (1.0 + 2e-12)).abs() < 1e-15);

        let narrow = equiangular_window(0.1, 10, 10);
        assert!(narrow.lo < 1.0 && 1.0 < narrow.hi);
        assert!(w.lo < narrow.lo && narrow.hi < w.hi);
    }

    #[test]
    fn window_membership() {
        let mut r = angle_report(&FusionFrame::orthonormal_partition(6, 2).unwrap()).unwrap();
        for row in r.pair_values.iter_mut() {
            for v in row.iter_mut() {
                *v = 4.0 / 6.0; // normalized value 1
            }
        }
        let w = Window { lo: 0.9, hi: 1.1 };
        let c = window_check(&r, w);
        assert!(c.all_pass && c.pairs.len() == 3);

        r.pair_values[0][2] = 1.2 * 4.0 / 6.0;
        r.pair_values[2][0] = r.pair_values[0][2];
        let c = window_check(&r, w);
        assert!(!c.all_pass);
        assert_eq!(c.pairs.iter().filter(|p| !p.2).collect::<Vec<_>>(), vec![&(0, 2, false)]);

        assert!(w.contains(1.1 + 0.5e-12) && !w.contains(1.1 + 2e-12));
    }
}
