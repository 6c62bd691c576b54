//! Plug-in estimation of density level sets with kernel density estimators:
//! higher-order kernels, synthetic density models, set metrics, lower-bound
//! hypothesis families and an experiment harness.

pub mod densities;
pub mod error;
pub mod grid;
pub mod harness;
pub mod kde;
pub mod kernels;
pub mod levelset;
pub mod lowerbound;
pub mod metrics;
pub mod quadrature;

pub use densities::{gamma_exponent_empirical, DensityModel, GammaFit, HolderParams, Sample};
pub use error::{Error, Result};
pub use grid::{BoxDomain, Grid};
pub use harness::{run_concentration_experiment, run_rate_experiment, ExperimentConfig, RateFit};
pub use kde::{bandwidth, offset, DensityEstimate, HRule, KdeEstimator, LemmaConstants, OffsetRule, ScheduleSpec};
pub use kernels::{legendre_kernel, product_kernel, validate_kernel, Kernel1D, KernelD, KernelValidityReport};
pub use levelset::{plugin_estimate, rasterize, GridRaster, SetPredicate};
pub use lowerbound::{LowerBoundFamily, POmegaDensity};
pub use metrics::{LevelDef, MetricReport};
