//! Synthetic benchmarks, bootstrap intervals and command-line helpers for
//! the `rsklpr` estimators.

// `!(a > b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod config;
pub mod error;
pub mod io;
pub mod metrics;
pub mod suites;
pub mod synth;

pub use bootstrap::{bootstrap_ci, BootstrapCi};
pub use config::BenchConfig;
pub use error::{BenchError, Result};
pub use metrics::rmse;
pub use suites::{run_suite, Cell, Report, Suite, SuiteOutput};
pub use synth::{generate_synthetic, Curve, NoiseFamily, NoiseSpec, Synthetic, SyntheticSpec};
