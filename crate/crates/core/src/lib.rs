//! Kernel and semi-parametric asset pricing.
//!
//! The crate fits characteristic lines (asset excess return on market
//! excess return), security market lines and three-factor models both as
//! ordinary least squares regressions and as Nadaraya-Watson kernel
//! regressions with cross-validated bandwidths. Local linear derivative
//! estimates turn the kernel fits into semi-parametric betas and alphas, and
//! a wild-bootstrap test decides whether the linear specification can be
//! rejected.
//!
//! Data-parallel loops run on rayon when the `parallel` feature (default) is
//! enabled; outputs are identical for every thread count.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandwidth;
pub mod cli;
pub mod data_io;
pub mod error;
pub mod exec;
pub mod kernel;
pub mod linearity;
pub mod pricing;
pub mod regression;
pub mod reporting;
pub mod semiparam;
pub mod simplex;
pub mod stats;

pub use bandwidth::{
    cv_score, optimize_bandwidth, optimize_bandwidth_matrix, silverman_rot, BandwidthSearchConfig,
    BandwidthSelection, CvScore,
};
pub use error::{Error, Result};
pub use kernel::{gaussian_kernel, nw_weights, product_kernel, BandwidthMatrix, WeightVector};
pub use linearity::{wild_bootstrap_test, LinearityTestConfig, LinearityTestResult};
pub use regression::{
    confidence_band, local_linear_fit, local_poly_fit, nw_fit, nw_predict, ols_fit, KernelFit,
    LinearFit, LocalPolyEstimate,
};
pub use semiparam::{ff3_semi_params, semi_alpha, semi_beta, SemiParamMeasures};
