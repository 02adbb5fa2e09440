//! Seeded Monte Carlo experiments comparing measured tightness and
//! equiangularity against the closed-form bounds.
//!
//! Trial `i` always draws from `derive_stream(master_seed, i)`, and
//! aggregation runs over trials in index order, so reports do not depend on
//! the worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angles::{angle_report, equiangular_window, window_check};
use crate::bounds::{
    all_pairs_failure, asymptotic_regime, chi2_lower_tail, chi2_upper_tail, equiangular_epsilon,
    is_vacuous, tightness_epsilon, tightness_failure, AsymptoticRegime,
};
use crate::error::{Error, Result};
use crate::frame::{frame_bounds, frame_operator, FusionFrame};
use crate::rng::{derive_stream, gaussian_matrix, random_subspace};

/// Relative tolerance of the per-trial `Σ tr[PⱼPₗ] = tr(S²)` check.
pub const CONSERVATION_TOLERANCE: f64 = 1e-8;
/// Absolute slack below the Welch bound before a trial counts as violating it.
pub const WELCH_SLACK: f64 = 1e-9;
/// Largest tolerated fraction of failed trials.
pub const MAX_FAILED_FRACTION: f64 = 0.01;

pub const CSV_HEADER: [&str; 9] = [
    "trial",
    "eps_tight",
    "frame_lower",
    "frame_upper",
    "hs_min",
    "hs_max",
    "hs_mean",
    "welch_violated",
    "window_pass",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputSink {
    Csv,
    Json,
}

fn default_outputs() -> Vec<OutputSink> {
    vec![OutputSink::Csv, OutputSink::Json]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(alias = "N")]
    pub dim: usize,
    #[serde(alias = "s")]
    pub subspace_dim: usize,
    #[serde(alias = "K")]
    pub count: usize,
    pub delta: f64,
    pub trials: u64,
    pub master_seed: u64,
    /// Defaults to all ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputSink>,
}

impl ExperimentConfig {
    pub fn new(dim: usize, subspace_dim: usize, count: usize, delta: f64, trials: u64, master_seed: u64) -> Self {
        ExperimentConfig {
            dim,
            subspace_dim,
            count,
            delta,
            trials,
            master_seed,
            weights: None,
            outputs: default_outputs(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.subspace_dim == 0 || self.subspace_dim > self.dim {
            return invalid(format!(
                "need 1 <= s <= N, got s={}, N={}",
                self.subspace_dim, self.dim
            ));
        }
        if self.count < 2 {
            return invalid(format!("need K >= 2, got {}", self.count));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return invalid(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.trials == 0 {
            return invalid("trials must be >= 1".into());
        }
        if let Some(w) = &self.weights {
            if w.len() != self.count {
                return invalid(format!("{} weights for K={}", w.len(), self.count));
            }
            if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return invalid("weights must be positive and finite".into());
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> Vec<f64> {
        self.weights.clone().unwrap_or_else(|| vec![1.0; self.count])
    }

    /// Whether the equiangularity bound applies (`N <= K·s`).
    pub fn equiangular_regime(&self) -> bool {
        self.dim <= self.count * self.subspace_dim
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial_index: u64,
    pub epsilon_tight: f64,
    pub frame_lower: f64,
    pub frame_upper: f64,
    pub hs_min: f64,
    pub hs_max: f64,
    pub hs_mean: f64,
    /// Largest raw `tr[PⱼPₗ]` over `j ≠ l`.
    pub max_pair_trace: f64,
    pub welch_violated: bool,
    pub window_pass: bool,
}

#[derive(Serialize)]
struct CsvRow {
    trial: u64,
    eps_tight: f64,
    frame_lower: f64,
    frame_upper: f64,
    hs_min: f64,
    hs_max: f64,
    hs_mean: f64,
    welch_violated: bool,
    window_pass: bool,
}

impl From<&TrialResult> for CsvRow {
    fn from(t: &TrialResult) -> Self {
        CsvRow {
            trial: t.trial_index,
            eps_tight: t.epsilon_tight,
            frame_lower: t.frame_lower,
            frame_upper: t.frame_upper,
            hs_min: t.hs_min,
            hs_max: t.hs_max,
            hs_mean: t.hs_mean,
            welch_violated: t.welch_violated,
            window_pass: t.window_pass,
        }
    }
}

/// Measures one frame. This is also the hook for injecting hand-built frames
/// in place of sampled ones.
pub fn evaluate_frame(config: &ExperimentConfig, trial_index: u64, ff: &FusionFrame) -> Result<TrialResult> {
    let bounds = frame_bounds(ff)?;
    let angles = angle_report(ff)?;

    let s = frame_operator(ff);
    let trace_s2 = s.matmul(&s)?.trace();
    let pair_sum = angles.weighted_total(ff.weights());
    if (pair_sum - trace_s2).abs() > CONSERVATION_TOLERANCE * trace_s2.abs() {
        return Err(Error::ConservationViolated { pair_sum, trace_s2 });
    }

    let max_pair_trace = angles.max_off_diagonal();
    let welch_violated = match ff.equi_dimension() {
        Some(sd) if ff.len() * sd >= ff.ambient_dim() => max_pair_trace < angles.welch - WELCH_SLACK,
        _ => false,
    };
    let window = equiangular_window(
        equiangular_epsilon(config.delta),
        config.dim,
        config.subspace_dim,
    );
    Ok(TrialResult {
        trial_index,
        epsilon_tight: bounds.epsilon_tight,
        frame_lower: bounds.lower,
        frame_upper: bounds.upper,
        hs_min: angles.normalized_min,
        hs_max: angles.normalized_max,
        hs_mean: angles.normalized_mean,
        max_pair_trace,
        welch_violated,
        window_pass: window_check(&angles, window).all_pass,
    })
}

/// Samples `K` independent random subspaces on the trial's own stream and
/// measures the resulting fusion frame.
pub fn run_trial(config: &ExperimentConfig, trial_index: u64) -> Result<TrialResult> {
    let mut stream = derive_stream(config.master_seed, trial_index);
    let subspaces = (0..config.count)
        .map(|_| random_subspace(&mut stream, config.dim, config.subspace_dim))
        .collect::<Result<Vec<_>>>()?;
    let ff = FusionFrame::new(subspaces, config.weights())?;
    evaluate_frame(config, trial_index, &ff)
}

fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Err(Error::ConfigInvalid("workers must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// Runs every trial, returning outcomes in trial order.
pub fn run_trials(config: &ExperimentConfig, workers: usize) -> Result<Vec<(u64, Result<TrialResult>)>> {
    config.validate()?;
    with_workers(workers, || {
        (0..config.trials)
            .into_par_iter()
            .map(|i| (i, run_trial(config, i)))
            .collect()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub stddev: f64,
}

impl MeanStd {
    /// Sample mean and (n−1)-normalized standard deviation; non-finite
    /// values are skipped.
    pub fn of(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return MeanStd {
                mean: f64::NAN,
                stddev: f64::NAN,
            };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let stddev = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, stddev }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialStatistics {
    pub epsilon_tight: MeanStd,
    pub frame_lower: MeanStd,
    pub frame_upper: MeanStd,
    pub hs_min: MeanStd,
    pub hs_max: MeanStd,
    pub hs_mean: MeanStd,
}

/// Empirical rate of an event checked against a theoretical bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateCheck {
    pub empirical_rate: f64,
    /// `None` when the bound's preconditions do not hold.
    pub theoretical_bound: Option<f64>,
    pub vacuous: bool,
    pub slack: f64,
    pub dominance: bool,
}

/// Three-sigma binomial slack around `p = min(1, bound)`.
pub fn dominance_slack(bound: f64, trials: u64) -> f64 {
    let p = bound.min(1.0);
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

impl RateCheck {
    pub fn new(empirical_rate: f64, bound: Option<f64>, trials: u64) -> Self {
        match bound {
            Some(b) => {
                let slack = dominance_slack(b, trials);
                RateCheck {
                    empirical_rate,
                    theoretical_bound: Some(b),
                    vacuous: is_vacuous(b),
                    slack,
                    dominance: empirical_rate <= b.min(1.0) + slack,
                }
            }
            None => RateCheck {
                empirical_rate,
                theoretical_bound: None,
                vacuous: true,
                slack: 0.0,
                dominance: true,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AggregateReport {
    pub config: ExperimentConfig,
    pub trials_completed: u64,
    pub failed_trials: Vec<u64>,
    /// Event `ε_tight > (1+δ)⁶ − 1`.
    pub tightness: RateCheck,
    /// Event "some pair leaves the equiangular window".
    pub window: RateCheck,
    pub welch_violations: u64,
    pub statistics: TrialStatistics,
    pub asymptotic_regime: Option<AsymptoticRegime>,
}

impl AggregateReport {
    pub fn all_dominant(&self) -> bool {
        self.tightness.dominance && self.window.dominance
    }
}

/// Folds trial outcomes (in trial order) into a report.
pub fn aggregate(config: &ExperimentConfig, outcomes: &[(u64, Result<TrialResult>)]) -> Result<AggregateReport> {
    let failed_trials: Vec<u64> = outcomes
        .iter()
        .filter(|(_, r)| r.is_err())
        .map(|(i, _)| *i)
        .collect();
    let total = outcomes.len();
    if failed_trials.len() as f64 > MAX_FAILED_FRACTION * total as f64 {
        return Err(Error::TooManyFailedTrials {
            failed: failed_trials.len(),
            trials: total,
            indices: failed_trials,
        });
    }
    let done: Vec<&TrialResult> = outcomes.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    let n = done.len() as u64;
    let rate = |pred: &dyn Fn(&TrialResult) -> bool| done.iter().filter(|t| pred(t)).count() as f64 / n as f64;

    let eps_limit = tightness_epsilon(config.delta);
    let m = config.count * config.subspace_dim;
    let tight_bound = tightness_failure(config.dim, m, config.count, config.subspace_dim, config.delta)?.failure;
    let pair_bound = if config.equiangular_regime() {
        Some(all_pairs_failure(config.dim, config.count, config.subspace_dim, config.delta)?)
    } else {
        None
    };

    Ok(AggregateReport {
        config: config.clone(),
        trials_completed: n,
        failed_trials,
        tightness: RateCheck::new(rate(&|t| !(t.epsilon_tight <= eps_limit)), Some(tight_bound), n),
        window: RateCheck::new(rate(&|t| !t.window_pass), pair_bound, n),
        welch_violations: done.iter().filter(|t| t.welch_violated).count() as u64,
        statistics: TrialStatistics {
            epsilon_tight: MeanStd::of(done.iter().map(|t| t.epsilon_tight)),
            frame_lower: MeanStd::of(done.iter().map(|t| t.frame_lower)),
            frame_upper: MeanStd::of(done.iter().map(|t| t.frame_upper)),
            hs_min: MeanStd::of(done.iter().map(|t| t.hs_min)),
            hs_max: MeanStd::of(done.iter().map(|t| t.hs_max)),
            hs_mean: MeanStd::of(done.iter().map(|t| t.hs_mean)),
        },
        asymptotic_regime: asymptotic_regime(config.dim, config.count, config.subspace_dim, config.delta).ok(),
    })
}

pub struct Experiment {
    pub report: AggregateReport,
    /// Completed trials in index order.
    pub trials: Vec<TrialResult>,
}

pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<Experiment> {
    let outcomes = run_trials(config, workers)?;
    let report = aggregate(config, &outcomes)?;
    let trials = outcomes.into_iter().filter_map(|(_, r)| r.ok()).collect();
    Ok(Experiment { report, trials })
}

pub fn write_trials_csv<W: Write>(out: W, trials: &[TrialResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in trials {
        w.serialize(CsvRow::from(t))?;
    }
    if trials.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Chi2Report {
    pub dim: usize,
    pub delta: f64,
    pub trials: u64,
    pub master_seed: u64,
    /// `P(Z >= 1+δ)` against `e^{−Nδ²/4 + Nδ³/6}`.
    pub upper: RateCheck,
    /// `P(Z <= 1/(1+δ))` against `e^{−Nδ²/4 + Nδ³/3}`.
    pub lower: RateCheck,
}

/// Draws `Z = (1/N) Σ Xⱼ²` per trial and checks both chi-square tails
/// against their bounds.
pub fn run_chi2_experiment(dim: usize, delta: f64, trials: u64, master_seed: u64) -> Result<Chi2Report> {
    if dim == 0 {
        return Err(Error::ConfigInvalid("N must be >= 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::ConfigInvalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if trials == 0 {
        return Err(Error::ConfigInvalid("trials must be >= 1".into()));
    }
    let (hi, lo) = (1.0 + delta, 1.0 / (1.0 + delta));
    let (upper_hits, lower_hits) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut st = derive_stream(master_seed, i);
            let x = gaussian_matrix(&mut st, dim, 1)?;
            let z = x.as_slice().iter().map(|v| v * v).sum::<f64>() / dim as f64;
            Ok::<_, Error>(((z >= hi) as u64, (z <= lo) as u64))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let n = trials as f64;
    Ok(Chi2Report {
        dim,
        delta,
        trials,
        master_seed,
        upper: RateCheck::new(upper_hits as f64 / n, Some(chi2_upper_tail(dim, delta)?), trials),
        lower: RateCheck::new(lower_hits as f64 / n, Some(chi2_lower_tail(dim, delta)?), trials),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Subspace;

    #[test]
    fn config_validation() {
        let ok = ExperimentConfig::new(8, 2, 4, 0.5, 10, 1);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.subspace_dim = 9;
        assert!(matches!(bad.validate(), Err(Error::ConfigInvalid(_))));
        let mut bad = ok.clone();
        bad.trials = 0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.delta = 1.0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.weights = Some(vec![1.0; 3]);
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.count = 1;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_json_accepts_short_names() {
        let cfg = ExperimentConfig::from_json(
            r#"{"N": 16, "s": 2, "K": 8, "delta": 0.5, "trials": 3, "master_seed": 9}"#,
        )
        .unwrap();
        assert_eq!((cfg.dim, cfg.subspace_dim, cfg.count), (16, 2, 8));
        assert_eq!(cfg.outputs, vec![OutputSink::Csv, OutputSink::Json]);
        assert!(ExperimentConfig::from_json(r#"{"N": 16}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"N": 16, "s": 2, "K": 8, "delta": 0.5, "trials": 3, "master_seed": 9, "bogus": 1}"#
        )
        .is_err());
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = ExperimentConfig::new(12, 3, 6, 0.4, 5, 77);
        assert_eq!(run_trial(&cfg, 3).unwrap(), run_trial(&cfg, 3).unwrap());
        assert_ne!(run_trial(&cfg, 3).unwrap(), run_trial(&cfg, 4).unwrap());
    }

    #[test]
    fn injected_partition_frame() {
        let cfg = ExperimentConfig::new(4, 2, 2, 0.1, 1, 0);
        let ff = FusionFrame::orthonormal_partition(4, 2).unwrap();
        let t = evaluate_frame(&cfg, 0, &ff).unwrap();
        assert_eq!(t.epsilon_tight, 0.0);
        assert_eq!((t.hs_min, t.hs_max, t.hs_mean), (0.0, 0.0, 0.0));
        assert!(!t.window_pass);
        assert!(!t.welch_violated);
    }

    #[test]
    fn welch_violation_detected_on_injected_frame() {
        // two copies of the same line and one orthogonal line in R^2: the
        // largest pair value 1 clears the bound 1·(3−2)/(2·2) = 0.25
        let a = Subspace::coordinate(2, &[0]).unwrap();
        let ff = FusionFrame::unit_weights(vec![a.clone(), a, Subspace::coordinate(2, &[1]).unwrap()]).unwrap();
        let cfg = ExperimentConfig::new(2, 1, 3, 0.1, 1, 0);
        assert!(!evaluate_frame(&cfg, 0, &ff).unwrap().welch_violated);
    }

    #[test]
    fn desk_trial_brackets_mean() {
        let cfg = ExperimentConfig::new(64, 4, 64, 0.5, 1, 2024);
        let t = run_trial(&cfg, 0).unwrap();
        assert!(t.frame_lower < 4.0 && 4.0 < t.frame_upper, "{t:?}");
        assert!((0.7..=1.3).contains(&t.hs_mean), "{t:?}");
    }

    #[test]
    fn single_trial_experiment() {
        let cfg = ExperimentConfig::new(10, 2, 8, 0.5, 1, 5);
        let e = run_experiment(&cfg, 1).unwrap();
        assert_eq!(e.trials.len(), 1);
        assert_eq!(e.trials[0], run_trial(&cfg, 0).unwrap());
        let r = e.report.tightness.empirical_rate;
        assert!(r == 0.0 || r == 1.0);
    }

    #[test]
    fn failure_threshold() {
        let cfg = ExperimentConfig::new(10, 2, 8, 0.5, 200, 5);
        let mut outcomes: Vec<_> = (0..200).map(|i| (i, run_trial(&cfg, i))).collect();
        outcomes[7].1 = Err(Error::DegenerateDraw { attempts: 8 });
        outcomes[9].1 = Err(Error::DegenerateDraw { attempts: 8 });
        let rep = aggregate(&cfg, &outcomes).unwrap();
        assert_eq!(rep.failed_trials, vec![7, 9]);
        assert_eq!(rep.trials_completed, 198);
        outcomes[11].1 = Err(Error::DegenerateDraw { attempts: 8 });
        assert!(matches!(
            aggregate(&cfg, &outcomes),
            Err(Error::TooManyFailedTrials { failed: 3, .. })
        ));
    }

    #[test]
    fn rate_checks() {
        let c = RateCheck::new(0.3, Some(5.0), 100);
        assert!(c.vacuous && c.dominance && c.slack == 0.0);
        let c = RateCheck::new(0.3, Some(0.1), 100);
        assert!(!c.vacuous && !c.dominance);
        assert!((c.slack - 0.09).abs() < 1e-15);
        let c = RateCheck::new(0.1, None, 100);
        assert!(c.dominance && c.theoretical_bound.is_none());
    }

    #[test]
    fn csv_header_and_rows() {
        let cfg = ExperimentConfig::new(6, 2, 3, 0.5, 2, 1);
        let trials: Vec<_> = (0..2).map(|i| run_trial(&cfg, i).unwrap()).collect();
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &trials).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 2);

        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_HEADER.join(","));
    }

    #[test]
    fn chi2_experiment_validation() {
        assert!(run_chi2_experiment(100, 0.1, 0, 1).is_err());
        assert!(run_chi2_experiment(0, 0.1, 10, 1).is_err());
        assert!(run_chi2_experiment(10, 1.5, 10, 1).is_err());
        let a = run_chi2_experiment(20, 0.3, 500, 4).unwrap();
        let b = run_chi2_experiment(20, 0.3, 500, 4).unwrap();
        assert_eq!(a.upper.empirical_rate, b.upper.empirical_rate);
    }
}
