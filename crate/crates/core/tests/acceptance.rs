//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use fusion_frames::angles::{angle_report, hs_inner, welch_bound};
use fusion_frames::bounds::{
    all_pairs_failure, asymptotic_regime, chi2_lower_tail, chi2_upper_tail, gaussian_frame_failure, pair_failure,
    proj_mass_failure, riesz_partition_failure, tightness_failure,
};
use fusion_frames::frame::{frame_bounds, frame_operator, FusionFrame};
use fusion_frames::linalg::{pinv_sqrt_apply, projector, qr_orthonormalize};
use fusion_frames::montecarlo::{run_chi2_experiment, run_trials, ExperimentConfig, TrialResult};
use fusion_frames::rng::{derive_stream, gaussian_matrix, random_subspace};
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn trial_results(cfg: &ExperimentConfig, workers: usize) -> Vec<TrialResult> {
    run_trials(cfg, workers)
        .unwrap()
        .into_iter()
        .map(|(i, r)| r.unwrap_or_else(|e| panic!("trial {i}: {e}")))
        .collect()
}

fn parseval_fixed_point() -> Outcome {
    for n in [4, 16, 64] {
        let ff = FusionFrame::orthonormal_partition(n, 1).map_err(|e| e.to_string())?;
        let b = frame_bounds(&ff).map_err(|e| e.to_string())?;
        check(b.epsilon_tight.abs() <= 1e-10, || format!("N={n}: eps_tight {}", b.epsilon_tight))?;
        let r = angle_report(&ff).map_err(|e| e.to_string())?;
        let worst = r.pairs().map(|p| p.2.abs()).fold(0.0, f64::max);
        check(worst <= 1e-12, || format!("N={n}: pair value {worst}"))?;
    }
    Ok("N in {4,16,64}: eps_tight 0, pair values 0".into())
}

fn trace_conservation() -> Outcome {
    let (n, s, k) = (32, 4, 16);
    let mut worst = (0.0f64, 0.0f64);
    for i in 0..100 {
        let mut st = derive_stream(2024, i);
        let subs = (0..k).map(|_| random_subspace(&mut st, n, s).unwrap()).collect();
        let ff = FusionFrame::unit_weights(subs).unwrap();
        let op = frame_operator(&ff);
        let t = op.trace();
        let t2 = op.matmul(&op).unwrap().trace();
        let pairs = angle_report(&ff).unwrap().weighted_total(ff.weights());
        let e1 = (t - 64.0).abs() / 64.0;
        let e2 = (pairs - t2).abs() / t2;
        check(e1 <= 1e-10, || format!("frame {i}: trace {t}"))?;
        check(e2 <= 1e-8, || format!("frame {i}: pair sum {pairs} vs tr(S^2) {t2}"))?;
        worst = (worst.0.max(e1), worst.1.max(e2));
    }
    Ok(format!("100 frames; max rel err trace {:.1e}, pair sum {:.1e}", worst.0, worst.1))
}

fn mean_angle_identity() -> Outcome {
    let cfg = ExperimentConfig::new(64, 4, 8, 0.5, 2000, 31337);
    let trials = trial_results(&cfg, num_workers());
    let means: Vec<f64> = trials.iter().map(|t| t.hs_mean).collect();
    let n = means.len() as f64;
    let grand = means.iter().sum::<f64>() / n;
    let sd = (means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let sigma = sd / n.sqrt();
    check((0.97..=1.03).contains(&grand), || format!("grand mean {grand}, sigma {sigma:.2e}"))?;
    Ok(format!("grand mean {grand:.5} (sigma {sigma:.1e}) in [0.97, 1.03]"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

fn tightness_trend() -> Outcome {
    let medians: Vec<f64> = [32, 128, 512]
        .iter()
        .map(|&k| {
            let cfg = ExperimentConfig::new(32, 2, k, 0.5, 200, 77 + k as u64);
            median(trial_results(&cfg, num_workers()).iter().map(|t| t.epsilon_tight).collect())
        })
        .collect();
    check(medians[0] > medians[1] && medians[1] > medians[2], || format!("medians {medians:?}"))?;
    Ok(format!(
        "median eps_tight K=32: {:.4}, K=128: {:.4}, K=512: {:.4}",
        medians[0], medians[1], medians[2]
    ))
}

fn chi_square_dominance() -> Outcome {
    let n = 100;
    let dist = ChiSquared::new(n as f64).unwrap();
    let mut parts = Vec::new();
    for delta in [0.1, 0.3, 0.5] {
        let r = run_chi2_experiment(n, delta, 100_000, 4242).map_err(|e| e.to_string())?;
        check(r.upper.dominance && r.lower.dominance, || format!("delta {delta}: {r:?}"))?;
        let exact_upper = dist.sf(n as f64 * (1.0 + delta));
        let exact_lower = dist.cdf(n as f64 / (1.0 + delta));
        let (bu, bl) = (chi2_upper_tail(n, delta).unwrap(), chi2_lower_tail(n, delta).unwrap());
        check(bu > exact_upper && bl > exact_lower, || {
            format!("delta {delta}: bounds {bu}, {bl} vs exact {exact_upper}, {exact_lower}")
        })?;
        parts.push(format!(
            "d={delta}: up {:.4}<={bu:.4}, lo {:.4}<={bl:.4}",
            r.upper.empirical_rate, r.lower.empirical_rate
        ));
    }
    Ok(parts.join("; "))
}

fn welch_floor() -> Outcome {
    let cfg = ExperimentConfig::new(16, 2, 16, 0.5, 1000, 616);
    let floor = welch_bound(16, 16, 2);
    check(floor == 2.0 / 15.0, || format!("welch {floor}"))?;
    let trials = trial_results(&cfg, num_workers());
    let lowest = trials.iter().map(|t| t.max_pair_trace).fold(f64::INFINITY, f64::min);
    check(trials.iter().all(|t| !t.welch_violated), || "welch_violated set".into())?;
    check(lowest >= floor - 1e-9, || format!("min over trials of max pair value {lowest}"))?;
    Ok(format!("1000 trials; smallest max pair value {lowest:.4} >= {floor:.4}"))
}

fn oracle_equivalence() -> Outcome {
    let mut worst_hs = 0.0f64;
    for i in 0..50u64 {
        let mut st = derive_stream(55, i);
        let n = 2 + (i as usize % 31);
        let sa = 1 + i as usize % n;
        let sb = 1 + (i as usize * 7) % n;
        let a = random_subspace(&mut st, n, sa).unwrap();
        let b = random_subspace(&mut st, n, sb).unwrap();
        let fast = hs_inner(&a, &b).unwrap();
        let slow = projector(a.basis()).matmul(&projector(b.basis())).unwrap().trace();
        worst_hs = worst_hs.max((fast - slow).abs());
    }
    check(worst_hs <= 1e-10, || format!("hs_inner deviation {worst_hs}"))?;
    let mut worst_span = 0.0f64;
    for i in 0..50u64 {
        let mut st = derive_stream(56, i);
        let n = 2 + (i as usize % 31);
        let s = 1 + (i as usize * 5) % n;
        let x = gaussian_matrix(&mut st, n, s).unwrap();
        let p = projector(&pinv_sqrt_apply(&x).unwrap());
        let q = projector(&qr_orthonormalize(&x).unwrap());
        worst_span = worst_span.max(p.max_abs_diff(&q));
    }
    check(worst_span <= 1e-9, || format!("projector deviation {worst_span}"))?;
    Ok(format!("50 pairs max dev {worst_hs:.1e}; 50 spans max dev {worst_span:.1e}"))
}

fn formula_identities() -> Outcome {
    let mut points = 0;
    for n in [8usize, 16, 32, 64, 128] {
        for k in [2usize, 4, 16, 64] {
            for s in [1usize, 2, 4, 8, 16] {
                if s > n || n > k * s {
                    continue;
                }
                for delta in [0.05, 0.2, 0.4, 0.6, 0.9] {
                    let pf = pair_failure(n, k, s, delta).unwrap();
                    let pm = proj_mass_failure(s, delta).unwrap();
                    check(pf.r1.to_bits() == pm.to_bits(), || format!("r1 {} vs {pm} at {n},{k},{s},{delta}", pf.r1))?;
                    let m = k * s;
                    let t = tightness_failure(n, m, k, s, delta).unwrap().failure;
                    let sum = gaussian_frame_failure(n, m, delta).unwrap()
                        + riesz_partition_failure(k, s, n, delta).unwrap();
                    check(t.to_bits() == sum.to_bits(), || format!("tightness {t} vs {sum}"))?;
                    let all = all_pairs_failure(n, k, s, delta).unwrap();
                    let expect = pf.total() * (k * (k - 1) / 2) as f64;
                    check(all.to_bits() == expect.to_bits(), || format!("all pairs {all} vs {expect}"))?;
                    points += 1;
                }
            }
        }
    }
    check(points >= 100, || format!("grid has only {points} points"))?;
    Ok(format!("{points} grid points bit-exact"))
}

fn regime_sanity() -> Outcome {
    let mut count = 0;
    for n in [1usize, 10, 100, 1000] {
        for k in [1usize, 10, 1000] {
            for i in 1..75 {
                let delta = i as f64 / 100.0;
                let r = asymptotic_regime(n, k, n, delta).map_err(|e| e.to_string())?;
                check(!r.cond1.holds, || format!("cond1 holds at N=s={n}, K={k}, delta={delta}"))?;
                count += 1;
            }
        }
    }
    for k in [1_000_000usize, 10_000_000, 1_000_000_000] {
        let r = asymptotic_regime(100, k, 10, 0.2).unwrap();
        check(r.cond2.holds, || format!("cond2 fails at K={k}: {:?}", r.cond2))?;
    }
    Ok(format!("cond1 false at s=N on {count} points; cond2 true for K>=1e6"))
}

fn parallel_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"N": 16, "s": 2, "K": 16, "delta": 0.5, "trials": 300, "master_seed": 99}"#,
    )
    .unwrap();
    let mut csvs = Vec::new();
    for w in ["1", "8"] {
        let out = dir.path().join(format!("w{w}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_fusion-frames"))
            .args(["montecarlo", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--workers", w])
            .output()
            .unwrap();
        check(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        csvs.push(std::fs::read(&out).unwrap());
    }
    check(csvs[0] == csvs[1], || "CSV differs between 1 and 8 workers".into())?;
    Ok(format!("300-trial CSV identical for 1 and 8 workers ({} bytes)", csvs[0].len()))
}

fn num_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Parseval fixed point", parseval_fixed_point),
        ("trace conservation", trace_conservation),
        ("mean-angle identity", mean_angle_identity),
        ("tightness concentration trend", tightness_trend),
        ("chi-square tail dominance", chi_square_dominance),
        ("Welch floor", welch_floor),
        ("oracle equivalence", oracle_equivalence),
        ("formula identities", formula_identities),
        ("asymptotic-regime sanity", regime_sanity),
        ("reproducibility under parallelism", parallel_reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} [{secs:.2}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs:.2}s]: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
