//! Spike-and-slab log-normal AR(1) model for moving-total rainfall.
//!
//! For each window `t`:
//!
//! ```text
//! Z_t ~ Bernoulli(π_t),   logit π_t = α + φ logit π_{t−1}
//! r_t = Z_t + (1 − Z_t) y_t
//! ln y_t | r_{t−1} ~ N(β1 + β2 ln r_{t−1}, σ²)
//! ```
//!
//! Dry windows carry the encoded value 1, so `ln r_{t−1} = 0` after a dry
//! window. The likelihood conditions on the first window.
//!
//! Hierarchical prior:
//!
//! ```text
//! β1 ~ N(0, σβ²)          β2 ~ U(−1, 1)
//! α  ~ N(0, 0.25)         φ  ~ U(−1, 1)
//! σ  ~ InvGamma(ν/2, ν/2) ν  ~ Exp(0.1)
//! σβ ~ InvGamma(ν1, ν2)   ν1, ν2 ~ Exp(0.1)
//! ```
//!
//! Inverse-Gamma is parameterized by shape and rate, Exp by rate, and the
//! 0.25 of the α prior is a variance (configurable via [`PriorConfig`]).

use std::fmt;
use std::io::{Read, Write};

use crate::distributions::{ln_gamma, logistic, logit, normal_logpdf, softplus};
use crate::error::{Error, Result};
use crate::fmt::format_f64;
use crate::ingest::{MtrSeries, YearMonth};
use crate::rng::Rng;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EXP_PRIOR_RATE: f64 = 0.1;

/// Model parameters plus hyperparameters, in CSV column order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArspiParams {
    pub beta1: f64,
    pub beta2: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub phi: f64,
    pub nu: f64,
    pub sigma_beta: f64,
    pub nu1: f64,
    pub nu2: f64,
}

pub const PARAM_NAMES: [&str; 9] = ["beta1", "beta2", "sigma", "alpha", "phi", "nu", "sigma_beta", "nu1", "nu2"];

impl ArspiParams {
    /// Core parameters with hyperparameters at their prior means
    /// (ν = ν1 = ν2 = 10, σβ = ν2 / (ν1 − 1)).
    pub fn new(beta1: f64, beta2: f64, sigma: f64, alpha: f64, phi: f64) -> Self {
        Self { beta1, beta2, sigma, alpha, phi, nu: 10.0, sigma_beta: 10.0 / 9.0, nu1: 10.0, nu2: 10.0 }
    }

    pub fn to_array(&self) -> [f64; 9] {
        [self.beta1, self.beta2, self.sigma, self.alpha, self.phi, self.nu, self.sigma_beta, self.nu1, self.nu2]
    }

    pub fn from_array(a: [f64; 9]) -> Self {
        Self {
            beta1: a[0],
            beta2: a[1],
            sigma: a[2],
            alpha: a[3],
            phi: a[4],
            nu: a[5],
            sigma_beta: a[6],
            nu1: a[7],
            nu2: a[8],
        }
    }

    pub fn in_support(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
            && self.beta2.abs() < 1.0
            && self.phi.abs() < 1.0
            && [self.sigma, self.nu, self.sigma_beta, self.nu1, self.nu2].iter().all(|&v| v > 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_support() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("need |beta2| < 1, |phi| < 1 and positive sigma/hyperparameters: {self}")))
        }
    }

    /// Fixed point of the logit recursion, `α / (1 − φ)`.
    pub fn stationary_logit(&self) -> f64 {
        self.alpha / (1.0 - self.phi)
    }

    pub fn stationary_pi(&self) -> f64 {
        logistic(self.stationary_logit())
    }

    /// `beta1,beta2,sigma,alpha,phi,nu,sigma_beta,nu1,nu2`
    pub fn csv_header() -> String {
        PARAM_NAMES.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.to_array().iter().map(|v| format_f64(*v)).collect::<Vec<_>>().join(",")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::csv_header())?;
        writeln!(w, "{}", self.csv_row())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::MalformedRow { row: 1, reason: e.to_string() })?.clone();
        if header.iter().collect::<Vec<_>>() != PARAM_NAMES {
            return Err(Error::MalformedRow { row: 1, reason: format!("expected header `{}`", Self::csv_header()) });
        }
        let rec = rdr
            .records()
            .next()
            .ok_or(Error::EmptyInput)?
            .map_err(|e| Error::MalformedRow { row: 2, reason: e.to_string() })?;
        let mut a = [0.0; 9];
        for (i, f) in rec.iter().enumerate().take(9) {
            a[i] = f.parse().map_err(|_| Error::MalformedRow { row: 2, reason: format!("bad value `{f}`") })?;
        }
        let p = Self::from_array(a);
        p.validate()?;
        Ok(p)
    }
}

impl fmt::Display for ArspiParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = PARAM_NAMES.iter().zip(self.to_array()).map(|(n, v)| format!("{n}={v}")).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Starting dry probability for the logit recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pi0 {
    Fixed(f64),
    /// The recursion's fixed point under the parameters being evaluated.
    Stationary,
}

impl Pi0 {
    /// Empirical dry fraction when it lies strictly inside (0, 1), the
    /// stationary value otherwise.
    pub fn for_series(mtr: &MtrSeries) -> Self {
        let f = mtr.dry_fraction();
        if f > 0.0 && f < 1.0 {
            Pi0::Fixed(f)
        } else {
            Pi0::Stationary
        }
    }

    pub fn logit_for(&self, p: &ArspiParams) -> f64 {
        match *self {
            Pi0::Fixed(q) => logit(q),
            Pi0::Stationary => p.stationary_logit(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Pi0::Fixed(q) if !(q > 0.0 && q < 1.0) => Err(Error::Domain(format!("pi0 = {q} outside (0, 1)"))),
            _ => Ok(()),
        }
    }
}

/// Dry probabilities `π_t`, one per window, with `π_0` the supplied start.
#[derive(Debug, Clone, PartialEq)]
pub struct PiPath {
    logits: Vec<f64>,
}

impl PiPath {
    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn values(&self) -> Vec<f64> {
        self.logits.iter().map(|&x| logistic(x)).collect()
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }
}

pub fn pi_path(p: &ArspiParams, length: usize, pi0: f64) -> Result<PiPath> {
    Pi0::Fixed(pi0).validate()?;
    if length == 0 {
        return Err(Error::Domain("pi path length must be at least 1".into()));
    }
    Ok(PiPath { logits: logit_path(p.alpha, p.phi, logit(pi0), length) })
}

fn logit_path(alpha: f64, phi: f64, start: f64, length: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(length);
    let mut x = start;
    out.push(x);
    for _ in 1..length {
        x = alpha + phi * x;
        out.push(x);
    }
    out
}

/// Closed form of the logit recursion after `t` steps.
pub fn logit_at(alpha: f64, phi: f64, start: f64, t: usize) -> f64 {
    let fixed = alpha / (1.0 - phi);
    fixed + phi.powi(t as i32) * (start - fixed)
}

/// Likelihood-ready view of an MTR series.
#[derive(Debug, Clone)]
pub struct SeriesData {
    dry: Vec<bool>,
    /// `ln` of the encoded value (0 for dry windows).
    log_encoded: Vec<f64>,
}

impl SeriesData {
    pub fn new(mtr: &MtrSeries) -> Self {
        Self::from_raw(mtr.values(), mtr.dry_mask())
    }

    pub fn from_raw(values: &[f64], dry: &[bool]) -> Self {
        let log_encoded = values.iter().zip(dry).map(|(&v, &d)| if d { 0.0 } else { v.ln() }).collect();
        Self { dry: dry.to_vec(), log_encoded }
    }

    pub fn from_encoded(encoded: &[f64], dry: &[bool]) -> Self {
        Self { dry: dry.to_vec(), log_encoded: encoded.iter().map(|v| v.ln()).collect() }
    }

    pub fn len(&self) -> usize {
        self.dry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dry.is_empty()
    }

    /// Sum of the Bernoulli terms for `t = 1..T`.
    pub fn spike_loglik(&self, alpha: f64, phi: f64, start_logit: f64) -> Result<f64> {
        let mut x = start_logit;
        let mut total = 0.0;
        for t in 1..self.dry.len() {
            x = alpha + phi * x;
            let term = if self.dry[t] { -softplus(-x) } else { -softplus(x) };
            if !term.is_finite() {
                return Err(Error::NonFiniteLikelihood { t });
            }
            total += term;
        }
        Ok(total)
    }

    /// Sum of the log-normal terms over wet windows `t = 1..T`.
    pub fn slab_loglik(&self, beta1: f64, beta2: f64, sigma: f64) -> Result<f64> {
        let ln_sigma = sigma.ln();
        let mut total = 0.0;
        for t in 1..self.dry.len() {
            if self.dry[t] {
                continue;
            }
            let ly = self.log_encoded[t];
            let z = (ly - beta1 - beta2 * self.log_encoded[t - 1]) / sigma;
            let term = -0.5 * z * z - ln_sigma - LN_SQRT_2PI - ly;
            if !term.is_finite() {
                return Err(Error::NonFiniteLikelihood { t });
            }
            total += term;
        }
        Ok(total)
    }

    pub fn log_likelihood(&self, p: &ArspiParams, pi0: Pi0) -> Result<f64> {
        Ok(self.spike_loglik(p.alpha, p.phi, pi0.logit_for(p))? + self.slab_loglik(p.beta1, p.beta2, p.sigma)?)
    }
}

/// Conditional log-likelihood given the first window.
pub fn log_likelihood(p: &ArspiParams, mtr: &MtrSeries, pi0: Pi0) -> Result<f64> {
    if mtr.len() < 2 {
        return Err(Error::DegenerateSeries);
    }
    p.validate()?;
    pi0.validate()?;
    SeriesData::new(mtr).log_likelihood(p, pi0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    /// Variance of the normal prior on α.
    pub alpha_variance: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { alpha_variance: 0.25 }
    }
}

pub fn inv_gamma_logpdf(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - rate / x
}

fn exp_logpdf(x: f64, rate: f64) -> f64 {
    rate.ln() - rate * x
}

/// Log density of each prior term, in [`PARAM_NAMES`] order.
pub fn log_prior_terms(p: &ArspiParams, cfg: &PriorConfig) -> [f64; 9] {
    let uniform = |v: f64| if v.abs() < 1.0 { -std::f64::consts::LN_2 } else { f64::NEG_INFINITY };
    let positive = |v: f64, f: &dyn Fn(f64) -> f64| if v > 0.0 { f(v) } else { f64::NEG_INFINITY };
    [
        if p.sigma_beta > 0.0 { normal_logpdf(p.beta1, 0.0, p.sigma_beta) } else { f64::NEG_INFINITY },
        uniform(p.beta2),
        positive(p.sigma, &|s| {
            if p.nu > 0.0 {
                inv_gamma_logpdf(s, p.nu / 2.0, p.nu / 2.0)
            } else {
                f64::NEG_INFINITY
            }
        }),
        normal_logpdf(p.alpha, 0.0, cfg.alpha_variance.sqrt()),
        uniform(p.phi),
        positive(p.nu, &|v| exp_logpdf(v, EXP_PRIOR_RATE)),
        positive(p.sigma_beta, &|s| {
            if p.nu1 > 0.0 && p.nu2 > 0.0 {
                inv_gamma_logpdf(s, p.nu1, p.nu2)
            } else {
                f64::NEG_INFINITY
            }
        }),
        positive(p.nu1, &|v| exp_logpdf(v, EXP_PRIOR_RATE)),
        positive(p.nu2, &|v| exp_logpdf(v, EXP_PRIOR_RATE)),
    ]
}

/// Joint log prior under a given configuration; −∞ outside the support.
pub fn log_prior_with(p: &ArspiParams, cfg: &PriorConfig) -> f64 {
    if !p.in_support() {
        return f64::NEG_INFINITY;
    }
    let total: f64 = log_prior_terms(p, cfg).iter().sum();
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

pub fn log_prior(p: &ArspiParams) -> f64 {
    log_prior_with(p, &PriorConfig::default())
}

/// Unnormalized log posterior.
pub fn log_posterior(p: &ArspiParams, mtr: &MtrSeries, pi0: Pi0) -> Result<f64> {
    let lp = log_prior(p);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(lp + log_likelihood(p, mtr, pi0)?)
}

/// Draws `length` windows forward from the model, starting after an encoded
/// value `r0` and a dry probability `pi0`.
///
/// The result has window 1 and a calendar starting at year 1, January; use
/// [`MtrSeries::from_totals`] on its values to re-anchor.
pub fn simulate_series(p: &ArspiParams, length: usize, pi0: f64, r0: f64, rng: &mut Rng) -> Result<MtrSeries> {
    p.validate()?;
    Pi0::Fixed(pi0).validate()?;
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Domain(format!("r0 must be positive, got {r0}")));
    }
    if length == 0 {
        return Err(Error::Domain("simulation length must be at least 1".into()));
    }
    let mut x = logit(pi0);
    let mut prev_log = r0.ln();
    let mut values = Vec::with_capacity(length);
    for _ in 0..length {
        x = p.alpha + p.phi * x;
        if rng.draw_bernoulli(logistic(x))? {
            values.push(0.0);
            prev_log = 0.0;
        } else {
            let y = rng.draw_lognormal(p.beta1 + p.beta2 * prev_log, p.sigma)?;
            values.push(y);
            prev_log = y.ln();
        }
    }
    MtrSeries::from_totals(1, 0, YearMonth { year: 1, month: 1 }, values)
}
