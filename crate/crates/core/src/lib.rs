//! Random fusion frames.
//!
//! Samples independent, unitarily invariant random subspaces of ℝ^N, measures
//! how close the resulting fusion frame is to tight and to equiangular,
//! evaluates the closed-form concentration bounds for both properties, and
//! checks those bounds against seeded Monte Carlo runs.
//!
//! Modules, bottom up:
//! - [`linalg`]: dense matrices, Gram matrices, orthonormalization, Jacobi eigensolver
//! - [`rng`]: splittable seeded streams, Gaussian and sphere samplers, random subspaces
//! - [`frame`]: subspaces, fusion frames, frame operator and bounds, frame JSON
//! - [`angles`]: Hilbert–Schmidt angles, Welch bound, equiangular window
//! - [`bounds`]: closed-form failure probabilities
//! - [`montecarlo`]: experiment runner and aggregation
//! - [`cli`]: the `fusion-frames` command line

pub mod angles;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod frame;
pub mod linalg;
pub mod montecarlo;
pub mod rng;

pub use angles::{angle_report, equiangular_window, hs_inner, welch_bound, window_check, AngleReport, Window};
pub use bounds::{BoundParams, BoundSet};
pub use error::{Error, Result};
pub use frame::{
    build_fusion_frame_from_gaussian, frame_bounds, frame_operator, riesz_bounds, FrameBoundsReport,
    FusionFrame, Subspace,
};
pub use linalg::{gram, pinv_sqrt_apply, qr_orthonormalize, sym_eigen, Matrix, SymEigen};
pub use montecarlo::{run_chi2_experiment, run_experiment, run_trial, AggregateReport, ExperimentConfig, TrialResult};
pub use rng::{derive_stream, gaussian_matrix, random_subspace, sphere_vector, RngStream};
