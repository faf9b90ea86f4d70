//! Time-since-infection dependent recovery and death distributions from
//! aggregate epidemic series.
//!
//! The pipeline: smooth the reported incidence with a Nadaraya-Watson
//! estimator ([`smoother`]), convolve candidate gamma kernels with it to
//! predict new recoveries or deaths, and pick the kernel minimizing the sum
//! of squared errors over a constrained (shape, scale) mesh ([`fitter`]).
//! Fitted kernels feed constant-rate comparisons ([`baseline`]), reproduction
//! numbers and herd-immunity thresholds ([`epimetrics`]). [`simulator`]
//! integrates both model variants forward to produce synthetic data.
//!
//! ```
//! use epidelay::gammadist::GammaParams;
//! use epidelay::epimetrics::herd_immunity_threshold;
//!
//! let kernel = GammaParams::new(4.7, 4.5).unwrap();
//! assert!((kernel.mean() - 21.15).abs() < 1e-12);
//! assert!((herd_immunity_threshold(18.0).unwrap() - 0.9444).abs() < 1e-4);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod cli;
pub mod epimetrics;
pub mod error;
pub mod fitter;
pub mod gammadist;
pub mod simulator;
pub mod smoother;
pub mod timeseries;

pub use error::{Error, Result};
pub use fitter::{fit, FitConfig, FitResult, Target};
pub use gammadist::GammaParams;
pub use smoother::KernelSmoother;
pub use timeseries::{EpiDataset, SeriesLabel, TimeSeries, TimeUnit};
