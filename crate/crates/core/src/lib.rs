//! Standardized precipitation indices for monthly rainfall.
//!
//! Two indices are provided:
//!
//! * the classic SPI, a Gamma fit by Thom's method of moments on moving-total
//!   rainfall (MTR) with a point mass for dry windows, mapped through the
//!   standard normal quantile;
//! * the autoregressive ARSPI, where MTR follows a spike-and-slab log-normal
//!   AR(1) model whose parameters are estimated by adaptive Metropolis-within-Gibbs
//!   and whose CDF is read off a posterior-predictive sample.
//!
//! The [`analysis`] module classifies index values, compares the two indices and
//! extracts drought events with their return periods.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod distributions;
pub mod error;
pub mod index;
pub mod ingest;
pub mod mcmc;
pub mod model;
pub mod predictive;
pub mod rng;
pub mod spi;

mod fmt;

pub use analysis::{
    classify, extract_events, mismatch, return_period, Category, Characteristic, DroughtEvent, MismatchKind,
    MismatchReport, ReturnPeriod,
};
pub use distributions::GammaParams;
pub use error::{Error, Result};
pub use fmt::format_f64;
pub use index::{IndexKind, IndexRecord, IndexSeries};
pub use ingest::{acf, moving_total, pacf, parse_precip_csv, AcfResult, MtrSeries, PrecipSeries, YearMonth};
pub use mcmc::{dic, psrf, run_chains, DicResult, McmcConfig, Param, PosteriorDraws};
pub use model::{
    log_likelihood, log_posterior, log_prior, pi_path, simulate_series, ArspiParams, Pi0, PiPath, PriorConfig,
};
pub use predictive::{arspi_series, empirical_cdf, predictive_draws, PredictiveConfig, PredictiveSample};
pub use rng::Rng;
pub use spi::{adjusted_cdf, fit_gamma_mom, spi_series, spi_series_by_month, GammaFit};
