//! Partition-function multifractal analysis of positive series, surrogate
//! ensembles, finite-size calibration and the decomposition of the
//! singularity width into finite-size, PDF and nonlinear components.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod decomposition;
pub mod ensemble;
pub mod error;
pub mod fourier;
pub mod fse;
pub mod rng;
pub mod series;
pub mod stats;
pub mod surrogates;
pub mod synthetic;

pub use analysis::{analyze, delta_alpha, partition_function, AnalysisConfig, SingularitySpectrum};
pub use decomposition::{decompose, family_sweep, ComponentReport, DecomposeConfig, Family, SweepTable};
pub use ensemble::Estimate;
pub use error::{Error, Result};
pub use fse::{fse_predict, fse_scan, FseScanConfig, FseTable};
pub use rng::{derive_seed, seeded, SeededRng};
pub use series::{Series, SeriesKind};
pub use surrogates::{DistributionSpec, IaaftOptions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
