//! Closed-form failure-probability bounds for near tightness and near
//! equiangularity of random fusion frames.
//!
//! Every bound is a sum of terms `c · a^b · e^x`, evaluated as
//! `c · exp(b·ln a + x)` so that factors like `(1 + 4/δ)^N` never overflow
//! on their own. Values are returned unclamped: anything `>= 1` is a valid
//! but vacuous probability bound (see [`is_vacuous`]). A value whose log
//! exceeds the double range comes back as `+∞`; the log-space companion in
//! [`BoundSet::ln_values`] stays finite.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::angles::{equiangular_window, Window};
use crate::error::{Error, Result};

pub fn is_vacuous(bound: f64) -> bool {
    !(bound < 1.0)
}

/// Equiangularity distortion `ε = (1+δ)³ − 1`.
pub fn equiangular_epsilon(delta: f64) -> f64 {
    (1.0 + delta).powi(3) - 1.0
}

/// Tightness distortion `ε = (1+δ)⁶ − 1`.
pub fn tightness_epsilon(delta: f64) -> f64 {
    (1.0 + delta).powi(6) - 1.0
}

/// Inverse of [`equiangular_epsilon`].
pub fn delta_for_equiangular_epsilon(epsilon: f64) -> f64 {
    (1.0 + epsilon).cbrt() - 1.0
}

/// Inverse of [`tightness_epsilon`].
pub fn delta_for_tightness_epsilon(epsilon: f64) -> f64 {
    (1.0 + epsilon).powf(1.0 / 6.0) - 1.0
}

fn positive_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDelta {
            value: delta,
            range: "(0, inf)",
        })
    }
}

fn unit_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDelta {
            value: delta,
            range: "(0, 1)",
        })
    }
}

fn positive(name: &str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(Error::InvalidDims(format!("{name} must be >= 1")));
    }
    Ok(())
}

fn subspace_fits(s: usize, n: usize) -> Result<()> {
    positive("s", s)?;
    if s > n {
        return Err(Error::InvalidDims(format!("need s <= N, got s={s}, N={n}")));
    }
    Ok(())
}

/// `−nδ²/4 + nδ³/6`
fn upper_tail_exponent(n: usize, delta: f64) -> f64 {
    let n = n as f64;
    -n * delta * delta / 4.0 + n * delta.powi(3) / 6.0
}

/// `−nδ²/4 + nδ³/3`
fn lower_tail_exponent(n: usize, delta: f64) -> f64 {
    let n = n as f64;
    -n * delta * delta / 4.0 + n * delta.powi(3) / 3.0
}

/// `ln(1 + 4/δ)`, the log of the net size per dimension.
fn ln_net_base(delta: f64) -> f64 {
    (4.0 / delta).ln_1p()
}

/// `(1+δ)s/2 − s(s−1)(δ²/2 − δ³/3)/2`
fn ratio_exponent(s: usize, delta: f64) -> f64 {
    let sf = s as f64;
    (1.0 + delta) * sf / 2.0
        - sf * (sf - 1.0) * (delta * delta / 2.0 - delta.powi(3) / 3.0) / 2.0
}

fn ln_sum(terms: &[(f64, f64)]) -> f64 {
    // terms are (coefficient, exponent) with positive coefficients
    let logs: Vec<f64> = terms.iter().map(|(c, x)| c.ln() + x).collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

/// `P(Z ≥ 1+δ) ≤ e^{−Nδ²/4 + Nδ³/6}` for `Z` a chi-square with `N` degrees
/// of freedom divided by `N`.
pub fn chi2_upper_tail(n: usize, delta: f64) -> Result<f64> {
    positive("N", n)?;
    positive_delta(delta)?;
    Ok(upper_tail_exponent(n, delta).exp())
}

/// `P(Z ≤ 1/(1+δ)) ≤ e^{−Nδ²/4 + Nδ³/3}`.
pub fn chi2_lower_tail(n: usize, delta: f64) -> Result<f64> {
    positive("N", n)?;
    positive_delta(delta)?;
    Ok(lower_tail_exponent(n, delta).exp())
}

/// Union bound over `M` columns, both tails: `2M e^{−Nδ²/4 + Nδ³/3}`.
pub fn column_norms_bound(n: usize, m: usize, delta: f64) -> Result<f64> {
    positive("N", n)?;
    positive("M", m)?;
    positive_delta(delta)?;
    Ok(2.0 * m as f64 * lower_tail_exponent(n, delta).exp())
}

/// Size bound `(1 + 4/δ)^s` of a `δ/2`-net on the unit sphere of an
/// `s`-dimensional space.
pub fn net_cardinality(s: usize, delta: f64) -> Result<f64> {
    positive("s", s)?;
    positive_delta(delta)?;
    Ok((s as f64 * ln_net_base(delta)).exp())
}

/// Probability that `s` fixed columns of a normalized Gaussian matrix fail to
/// be `((1+δ)³−1)`-Riesz, both sides: `2(1+4/δ)^s e^{−Nδ²/4 + Nδ³/3}`.
pub fn riesz_subset_failure(s: usize, n: usize, delta: f64) -> Result<f64> {
    riesz_partition_failure(1, s, n, delta)
}

/// Union of [`riesz_subset_failure`] over `K` blocks.
pub fn riesz_partition_failure(k: usize, s: usize, n: usize, delta: f64) -> Result<f64> {
    positive("K", k)?;
    subspace_fits(s, n)?;
    unit_delta(delta)?;
    Ok(2.0 * k as f64 * (s as f64 * ln_net_base(delta) + lower_tail_exponent(n, delta)).exp())
}

/// Failure of the `M` Gaussian rows to frame ℝ^N with bounds
/// `M(1+δ)^{∓3}`: `2(1+4/δ)^N e^{−Mδ²/4 + Mδ³/3}`.
pub fn gaussian_frame_failure(n: usize, m: usize, delta: f64) -> Result<f64> {
    positive("N", n)?;
    positive("M", m)?;
    unit_delta(delta)?;
    Ok(2.0 * (n as f64 * ln_net_base(delta) + lower_tail_exponent(m, delta)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TightnessBound {
    /// Probability that the frame bounds leave `[lower, upper]`.
    pub failure: f64,
    /// `M / (N(1+δ)⁶)`
    pub lower: f64,
    /// `M(1+δ)⁶ / N`
    pub upper: f64,
    /// `(1+δ)⁶ − 1`
    pub epsilon: f64,
}

/// Failure bound for the unit-weight fusion frame of `K` random subspaces of
/// dimension at most `s` with total dimension `M` to have frame bounds
/// within `(M/N)(1+δ)^{∓6}`.
pub fn tightness_failure(n: usize, m: usize, k: usize, s: usize, delta: f64) -> Result<TightnessBound> {
    unit_delta(delta)?;
    subspace_fits(s, n)?;
    positive("K", k)?;
    if m < s {
        return Err(Error::InvalidDims(format!("need M >= s, got M={m}, s={s}")));
    }
    let failure = gaussian_frame_failure(n, m, delta)? + riesz_partition_failure(k, s, n, delta)?;
    let growth = (1.0 + delta).powi(6);
    let mean = m as f64 / n as f64;
    Ok(TightnessBound {
        failure,
        lower: mean / growth,
        upper: mean * growth,
        epsilon: growth - 1.0,
    })
}

fn beta_exponent_common(s: usize, beta: f64) -> f64 {
    let sf = s as f64;
    sf * (sf - 1.0) * beta.ln() / 2.0 + sf / 2.0
}

/// Lower tail of the projected-mass ratio, `0 < β < 1`:
/// `e^{s(s−1)ln β/2 + s/2 + (1−β)s²/(2β)}`.
pub fn beta_lower_tail(s: usize, beta: f64) -> Result<f64> {
    positive("s", s)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidBeta {
            value: beta,
            range: "(0, 1)",
        });
    }
    Ok(beta_lower_exponent(s, beta).exp())
}

fn beta_lower_exponent(s: usize, beta: f64) -> f64 {
    let sf = s as f64;
    beta_exponent_common(s, beta) + (1.0 - beta) * sf * sf / (2.0 * beta)
}

fn beta_upper_exponent(s: usize, beta: f64) -> f64 {
    let sf = s as f64;
    beta_exponent_common(s, beta) + (1.0 - beta) * sf * sf / 2.0
}

/// Upper tail, `β > 1`: `e^{s(s−1)ln β/2 + s/2 + (1−β)s²/2}`.
pub fn beta_upper_tail(s: usize, beta: f64) -> Result<f64> {
    positive("s", s)?;
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::InvalidBeta {
            value: beta,
            range: "(1, inf)",
        });
    }
    Ok(beta_upper_exponent(s, beta).exp())
}

/// One-sided bound `e^{(1+δ)s/2 − s(s−1)(δ²/2−δ³/3)/2}` for the projected
/// mass ratio leaving `[1/(1+δ), 1+δ]`.
pub fn ratio_two_sided(s: usize, delta: f64) -> Result<f64> {
    positive("s", s)?;
    unit_delta(delta)?;
    Ok(ratio_exponent(s, delta).exp())
}

/// `2s · ratio_two_sided(s, δ)`: failure of `(N/s²) Σ‖P_V xᵢ‖²` to stay in
/// `[1/(1+δ), 1+δ]` for `s` uniform unit vectors.
pub fn proj_mass_failure(s: usize, delta: f64) -> Result<f64> {
    Ok(2.0 * s as f64 * ratio_two_sided(s, delta)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairFailure {
    pub r1: f64,
    pub r2: f64,
    /// `(1+δ)³ − 1`
    pub epsilon: f64,
    pub window: Window,
}

impl PairFailure {
    pub fn total(&self) -> f64 {
        self.r1 + self.r2
    }
}

fn pair_dims(n: usize, k: usize, s: usize) -> Result<()> {
    subspace_fits(s, n)?;
    positive("K", k)?;
    if n > k * s {
        return Err(Error::InvalidDims(format!(
            "need N <= K·s, got N={n}, K·s={}",
            k * s
        )));
    }
    Ok(())
}

fn pair_r2_terms(n: usize, k: usize, s: usize, delta: f64) -> [(f64, f64); 3] {
    let m = k * s;
    let ln_base = ln_net_base(delta);
    let chi_n = lower_tail_exponent(n, delta);
    [
        (2.0 * m as f64, chi_n),
        (2.0 * k as f64, s as f64 * ln_base + chi_n),
        (2.0, n as f64 * ln_base + lower_tail_exponent(m, delta)),
    ]
}

/// Failure bound for one fixed pair of random subspaces to have
/// `N·tr[PⱼPₗ]/s²` outside the window at `ε = (1+δ)³ − 1`, with `M = Ks`.
pub fn pair_failure(n: usize, k: usize, s: usize, delta: f64) -> Result<PairFailure> {
    unit_delta(delta)?;
    pair_dims(n, k, s)?;
    let r1 = proj_mass_failure(s, delta)?;
    let r2: f64 = pair_r2_terms(n, k, s, delta)
        .iter()
        .map(|(c, x)| c * x.exp())
        .sum();
    let epsilon = equiangular_epsilon(delta);
    Ok(PairFailure {
        r1,
        r2,
        epsilon,
        window: equiangular_window(epsilon, n, s),
    })
}

/// Union bound `(R₁ + R₂)·K(K−1)/2` over all pairs.
pub fn all_pairs_failure(n: usize, k: usize, s: usize, delta: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::TooFewSubspaces(k));
    }
    let pair = pair_failure(n, k, s, delta)?;
    Ok(pair.total() * pair_count(k))
}

fn pair_count(k: usize) -> f64 {
    (k * (k - 1) / 2) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegimeCondition {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

impl RegimeCondition {
    fn new(lhs: f64, rhs: f64) -> Self {
        RegimeCondition {
            holds: lhs < rhs,
            lhs,
            rhs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticRegime {
    /// `3 ln(K+1)/N + (s/N) ln(1+4/δ) < δ²/4 − δ³/3`
    pub cond1: RegimeCondition,
    /// `(N/(Ks)) ln(1+4/δ) < δ²/4 − δ³/3`
    pub cond2: RegimeCondition,
}

impl AsymptoticRegime {
    pub fn holds(&self) -> bool {
        self.cond1.holds && self.cond2.holds
    }
}

/// Conditions under which the all-pairs bound decays exponentially in `N`.
pub fn asymptotic_regime(n: usize, k: usize, s: usize, delta: f64) -> Result<AsymptoticRegime> {
    subspace_fits(s, n)?;
    positive("K", k)?;
    let rhs = delta * delta / 4.0 - delta.powi(3) / 3.0;
    if !(delta > 0.0 && rhs > 0.0) {
        return Err(Error::InvalidDelta {
            value: delta,
            range: "(0, 0.75)",
        });
    }
    let (nf, kf, sf) = (n as f64, k as f64, s as f64);
    let ln_base = ln_net_base(delta);
    Ok(AsymptoticRegime {
        cond1: RegimeCondition::new(3.0 * (kf + 1.0).ln() / nf + sf / nf * ln_base, rhs),
        cond2: RegimeCondition::new(nf / (kf * sf) * ln_base, rhs),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub s: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub delta: f64,
}

impl BoundParams {
    /// Parameters with `M = K·s`.
    pub fn new(n: usize, s: usize, k: usize, delta: f64) -> Self {
        BoundParams {
            n,
            s,
            k,
            m: k * s,
            delta,
        }
    }
}

/// All bounds evaluated at one parameter point.
///
/// The pair quantities need `N <= K·s` and use `M = K·s`; the all-pairs
/// union needs `K >= 2`; the regime check needs `δ < 0.75`. Whatever does
/// not apply is `None`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundSet {
    pub params: BoundParams,
    pub chi2_upper: f64,
    pub chi2_lower: f64,
    pub column_norms: f64,
    pub net_cardinality: f64,
    pub riesz_subset: f64,
    pub riesz_partition: f64,
    pub gaussian_frame: f64,
    pub tightness_total: f64,
    pub tightness_window: TightnessBound,
    /// `β = 1/(1+δ)`
    pub beta_lower: f64,
    /// `β = 1+δ`
    pub beta_upper: f64,
    pub ratio_two_sided: f64,
    pub proj_mass: f64,
    pub pair_r1: Option<f64>,
    pub pair_r2: Option<f64>,
    pub pair_total: Option<f64>,
    pub all_pairs_total: Option<f64>,
    pub equiangular_epsilon: f64,
    pub equiangular_window: Window,
    pub asymptotic_regime: Option<AsymptoticRegime>,
    /// Natural logs of every probability bound, finite even when the value
    /// itself overflows.
    pub ln_values: BTreeMap<&'static str, f64>,
    pub vacuous: BTreeMap<&'static str, bool>,
}

impl BoundSet {
    pub fn evaluate(p: BoundParams) -> Result<BoundSet> {
        let BoundParams { n, s, k, m, delta } = p;
        unit_delta(delta)?;
        subspace_fits(s, n)?;
        positive("K", k)?;
        let tight = tightness_failure(n, m, k, s, delta)?;

        let pair = if n <= k * s {
            Some(pair_failure(n, k, s, delta)?)
        } else {
            None
        };
        let all_pairs = match pair {
            Some(pf) if k >= 2 => Some(pf.total() * pair_count(k)),
            _ => None,
        };
        let eps = equiangular_epsilon(delta);
        let regime = asymptotic_regime(n, k, s, delta).ok();

        let ln_base = ln_net_base(delta);
        let chi_n = lower_tail_exponent(n, delta);
        let partition = (2.0 * k as f64, s as f64 * ln_base + chi_n);
        let gaussian = (2.0, n as f64 * ln_base + lower_tail_exponent(m, delta));
        let r1 = (2.0 * s as f64, ratio_exponent(s, delta));

        let mut ln_values = BTreeMap::new();
        ln_values.insert("chi2_upper", upper_tail_exponent(n, delta));
        ln_values.insert("chi2_lower", chi_n);
        ln_values.insert("column_norms", ln_sum(&[(2.0 * m as f64, chi_n)]));
        ln_values.insert("net_cardinality", s as f64 * ln_base);
        ln_values.insert("riesz_subset", ln_sum(&[(2.0, partition.1)]));
        ln_values.insert("riesz_partition", ln_sum(&[partition]));
        ln_values.insert("gaussian_frame", ln_sum(&[gaussian]));
        ln_values.insert("tightness_total", ln_sum(&[gaussian, partition]));
        ln_values.insert("beta_lower", beta_lower_exponent(s, 1.0 / (1.0 + delta)));
        ln_values.insert("beta_upper", beta_upper_exponent(s, 1.0 + delta));
        ln_values.insert("ratio_two_sided", r1.1);
        ln_values.insert("proj_mass", ln_sum(&[r1]));
        if pair.is_some() {
            let r2 = pair_r2_terms(n, k, s, delta);
            let mut all = vec![r1];
            all.extend_from_slice(&r2);
            ln_values.insert("pair_r1", ln_sum(&[r1]));
            ln_values.insert("pair_r2", ln_sum(&r2));
            ln_values.insert("pair_total", ln_sum(&all));
            if all_pairs.is_some() {
                ln_values.insert("all_pairs_total", ln_sum(&all) + pair_count(k).ln());
            }
        }

        let mut set = BoundSet {
            params: p,
            chi2_upper: chi2_upper_tail(n, delta)?,
            chi2_lower: chi2_lower_tail(n, delta)?,
            column_norms: column_norms_bound(n, m, delta)?,
            net_cardinality: net_cardinality(s, delta)?,
            riesz_subset: riesz_subset_failure(s, n, delta)?,
            riesz_partition: riesz_partition_failure(k, s, n, delta)?,
            gaussian_frame: gaussian_frame_failure(n, m, delta)?,
            tightness_total: tight.failure,
            tightness_window: tight,
            beta_lower: beta_lower_tail(s, 1.0 / (1.0 + delta))?,
            beta_upper: beta_upper_tail(s, 1.0 + delta)?,
            ratio_two_sided: ratio_two_sided(s, delta)?,
            proj_mass: proj_mass_failure(s, delta)?,
            pair_r1: pair.map(|x| x.r1),
            pair_r2: pair.map(|x| x.r2),
            pair_total: pair.map(|x| x.total()),
            all_pairs_total: all_pairs,
            equiangular_epsilon: eps,
            equiangular_window: equiangular_window(eps, n, s),
            asymptotic_regime: regime,
            ln_values,
            vacuous: BTreeMap::new(),
        };
        set.vacuous = set
            .probabilities()
            .into_iter()
            .map(|(name, v)| (name, is_vacuous(v)))
            .collect();
        Ok(set)
    }

    /// Every probability bound by name (net cardinality excluded).
    pub fn probabilities(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("chi2_upper", self.chi2_upper),
            ("chi2_lower", self.chi2_lower),
            ("column_norms", self.column_norms),
            ("riesz_subset", self.riesz_subset),
            ("riesz_partition", self.riesz_partition),
            ("gaussian_frame", self.gaussian_frame),
            ("tightness_total", self.tightness_total),
            ("beta_lower", self.beta_lower),
            ("beta_upper", self.beta_upper),
            ("ratio_two_sided", self.ratio_two_sided),
            ("proj_mass", self.proj_mass),
        ];
        let optional = [
            ("pair_r1", self.pair_r1),
            ("pair_r2", self.pair_r2),
            ("pair_total", self.pair_total),
            ("all_pairs_total", self.all_pairs_total),
        ];
        out.extend(optional.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
        out
    }
}
