//! Command-line front end. `run` is the whole program; `main.rs` only wires
//! it to the process streams and exit code.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::angles::{angle_report, equiangular_window, welch_bound, window_check, AngleReport};
use crate::bounds::{equiangular_epsilon, BoundParams, BoundSet};
use crate::error::{Error, Result};
use crate::frame::{frame_bounds, FrameBoundsReport, FusionFrame};
use crate::montecarlo::{run_experiment, write_trials_csv, ExperimentConfig, OutputSink};
use crate::rng::{derive_stream, random_subspace};

/// Pair tables above this many subspaces are omitted unless `--full-table`.
pub const PAIR_TABLE_LIMIT: usize = 64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "fusion-frames", version, about = "Random fusion frames: sample, analyze, bound, simulate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample K random s-dimensional subspaces of R^N and write them as frame JSON.
    Sample {
        #[arg(long = "dim")]
        dim: usize,
        #[arg(long = "subspace-dim")]
        subspace_dim: usize,
        #[arg(long = "count")]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Frame bounds and pairwise angle statistics of a saved frame.
    Analyze {
        frame: PathBuf,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Include the pair table even when K exceeds 64.
        #[arg(long)]
        full_table: bool,
        /// Also check every pair against the equiangular window at this delta.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Evaluate every closed-form failure bound at one parameter point.
    Bounds {
        #[arg(long = "dim")]
        dim: usize,
        #[arg(long = "subspace-dim")]
        subspace_dim: usize,
        #[arg(long = "count")]
        count: usize,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        /// Total dimension M; defaults to K·s.
        #[arg(long = "big-m")]
        big_m: Option<usize>,
    },
    /// Run a seeded Monte Carlo experiment from a JSON config.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Print the generalized Welch bound s(Ks-N)/((K-1)N).
    Welch {
        #[arg(long = "dim")]
        dim: usize,
        #[arg(long = "count")]
        count: usize,
        #[arg(long = "subspace-dim")]
        subspace_dim: usize,
    },
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let rendered = e.render().to_string();
                    let first = rendered.lines().next().unwrap_or("invalid arguments");
                    let first = first.strip_prefix("error: ").unwrap_or(first);
                    let _ = writeln!(stderr, "error[Usage]: {first}");
                    let _ = write!(stderr, "{rendered}");
                    EXIT_VALIDATION
                }
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        // reader went away (`| head`); nothing left to report
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {e}", e.tag());
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Sample {
            dim,
            subspace_dim,
            count,
            seed,
            out,
        } => {
            let ff = sample_frame(dim, subspace_dim, count, seed)?;
            ff.save(&out)?;
            writeln!(
                stdout,
                "{} (N={dim}, s={subspace_dim}, K={count}, seed={seed})",
                out.display()
            )?;
        }
        Command::Analyze {
            frame,
            report,
            full_table,
            delta,
        } => {
            let ff = FusionFrame::load(&frame)?;
            let text = serde_json::to_string_pretty(&analyze(&ff, full_table, delta)?)?;
            match report {
                Some(path) => fs::write(path, text + "\n")?,
                None => writeln!(stdout, "{text}")?,
            }
        }
        Command::Bounds {
            dim,
            subspace_dim,
            count,
            delta,
            big_m,
        } => {
            let mut params = BoundParams::new(dim, subspace_dim, count, delta);
            if let Some(m) = big_m {
                params.m = m;
            }
            let set = BoundSet::evaluate(params)?;
            writeln!(stdout, "{}", serde_json::to_string_pretty(&set)?)?;
        }
        Command::Montecarlo {
            config,
            out,
            workers,
        } => {
            let text = fs::read_to_string(&config)?;
            let cfg = ExperimentConfig::from_json(&text)?;
            let experiment = run_experiment(&cfg, workers)?;
            if cfg.outputs.contains(&OutputSink::Csv) {
                write_csv(&out, &experiment.trials)?;
            }
            if cfg.outputs.contains(&OutputSink::Json) {
                writeln!(stdout, "{}", serde_json::to_string_pretty(&experiment.report)?)?;
            }
        }
        Command::Welch {
            dim,
            count,
            subspace_dim,
        } => {
            if count < 2 || subspace_dim == 0 || subspace_dim > dim {
                return Err(Error::InvalidDims(format!(
                    "need K >= 2 and 1 <= s <= N, got N={dim}, K={count}, s={subspace_dim}"
                )));
            }
            writeln!(stdout, "{}", significant(welch_bound(dim, count, subspace_dim), 12))?;
        }
    }
    Ok(())
}

fn write_csv(path: &Path, trials: &[crate::montecarlo::TrialResult]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_trials_csv(&mut w, trials)?;
    w.flush()?;
    Ok(())
}

/// `x` rounded to `digits` significant digits, printed without trailing zeros.
pub fn significant(x: f64, digits: usize) -> String {
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x);
    if rounded == 0.0 {
        return "0".into();
    }
    rounded.to_string()
}

/// The frame the `sample` subcommand writes: `K` draws of
/// [`random_subspace`] on stream 0 of `seed`, unit weights.
pub fn sample_frame(dim: usize, subspace_dim: usize, count: usize, seed: u64) -> Result<FusionFrame> {
    if subspace_dim == 0 || subspace_dim > dim || count == 0 {
        return Err(Error::InvalidDims(format!(
            "need 1 <= subspace-dim <= dim and count >= 1, got dim={dim}, subspace-dim={subspace_dim}, count={count}"
        )));
    }
    let mut stream = derive_stream(seed, 0);
    let subspaces = (0..count)
        .map(|_| random_subspace(&mut stream, dim, subspace_dim))
        .collect::<Result<Vec<_>>>()?;
    FusionFrame::unit_weights(subspaces)
}

#[derive(Debug, Serialize)]
pub struct FrameSummary {
    pub dim: usize,
    pub count: usize,
    pub subspace_dims: Vec<usize>,
    pub equi_dimension: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct AngleSummary {
    pub normalized_min: f64,
    pub normalized_max: f64,
    pub normalized_mean: f64,
    pub max_pair_trace: f64,
    /// Present only for equi-dimensional frames.
    pub welch: Option<f64>,
    pub pair_values: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize)]
pub struct WindowSummary {
    pub delta: f64,
    pub epsilon: f64,
    pub lo: f64,
    pub hi: f64,
    pub all_pass: bool,
    pub failing_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub frame: FrameSummary,
    pub frame_bounds: FrameBoundsReport,
    /// Absent for single-subspace frames.
    pub angles: Option<AngleSummary>,
    pub window: Option<WindowSummary>,
}

pub fn analyze(ff: &FusionFrame, full_table: bool, delta: Option<f64>) -> Result<AnalysisReport> {
    let bounds = frame_bounds(ff)?;
    let report: Option<AngleReport> = if ff.len() >= 2 { Some(angle_report(ff)?) } else { None };
    let window = match (delta, &report) {
        (Some(d), Some(r)) => {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::InvalidDelta {
                    value: d,
                    range: "(0, 1)",
                });
            }
            let s = ff.equi_dimension().ok_or_else(|| {
                Error::InvalidDims("window check needs an equi-dimensional frame".into())
            })?;
            let epsilon = equiangular_epsilon(d);
            let w = equiangular_window(epsilon, ff.ambient_dim(), s);
            let check = window_check(r, w);
            Some(WindowSummary {
                delta: d,
                epsilon,
                lo: w.lo,
                hi: w.hi,
                all_pass: check.all_pass,
                failing_pairs: check.pairs.iter().filter(|p| !p.2).map(|p| (p.0, p.1)).collect(),
            })
        }
        _ => None,
    };
    let angles = report.map(|r| AngleSummary {
        normalized_min: r.normalized_min,
        normalized_max: r.normalized_max,
        normalized_mean: r.normalized_mean,
        max_pair_trace: r.max_off_diagonal(),
        welch: (!r.welch.is_nan()).then_some(r.welch),
        pair_values: (full_table || r.count() <= PAIR_TABLE_LIMIT).then(|| r.pair_values.clone()),
    });
    Ok(AnalysisReport {
        frame: FrameSummary {
            dim: ff.ambient_dim(),
            count: ff.len(),
            subspace_dims: ff.subspaces().iter().map(|s| s.dim()).collect(),
            equi_dimension: ff.equi_dimension(),
        },
        frame_bounds: bounds,
        angles,
        window,
    })
}
