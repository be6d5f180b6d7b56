//! Single-site adaptive random-walk Metropolis.
//!
//! Each sweep updates one coordinate at a time with a Gaussian proposal.
//! During burn-in the log proposal scale of every coordinate moves by a
//! Robbins–Monro step toward the target acceptance rate after each batch of
//! `adaptation_window` sweeps; scales are frozen afterwards.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Unnormalized log density over unconstrained coordinates.
///
/// `Cache` lets a target reuse partial results when only one coordinate
/// changed; targets with nothing to reuse can use `()`.
pub trait Target {
    type Cache: Clone;

    fn dim(&self) -> usize;

    /// Log density (−∞ outside the support) and its cache.
    fn evaluate(&self, x: &[f64]) -> (f64, Self::Cache);

    /// Re-evaluation after coordinate `changed` moved.
    fn evaluate_coordinate(&self, x: &[f64], changed: usize, cache: &Self::Cache) -> (f64, Self::Cache) {
        let _ = (changed, cache);
        self.evaluate(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSettings {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub target_acceptance: f64,
    pub adaptation_window: usize,
    pub initial_scales: Vec<f64>,
}

impl SamplerSettings {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.thin == 0 {
            return bad("thin must be at least 1");
        }
        if self.burn_in >= self.iterations {
            return bad("burn-in must be smaller than the number of iterations");
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return bad("target acceptance must lie in (0, 1)");
        }
        if self.adaptation_window == 0 {
            return bad("adaptation window must be at least 1");
        }
        if self.initial_scales.len() != dim || self.initial_scales.iter().any(|s| !(*s > 0.0)) {
            return bad("one positive initial proposal scale per coordinate is required");
        }
        Ok(())
    }

    /// `floor((iterations − burn_in) / thin)`.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    /// Retained states, one per kept iteration.
    pub states: Vec<Vec<f64>>,
    /// 1-based iteration number of each retained state.
    pub iterations: Vec<usize>,
    pub log_density: Vec<f64>,
    /// Post-burn-in acceptance rate per coordinate.
    pub acceptance: Vec<f64>,
    /// Proposal scales after adaptation.
    pub scales: Vec<f64>,
}

pub fn run_chain<T: Target>(target: &T, x0: &[f64], settings: &SamplerSettings, rng: &mut Rng) -> Result<ChainOutput> {
    let dim = target.dim();
    settings.validate(dim)?;
    if x0.len() != dim {
        return Err(Error::InvalidConfig(format!("initial point has {} coordinates, target has {dim}", x0.len())));
    }
    let mut x = x0.to_vec();
    let (mut current, mut cache) = target.evaluate(&x);
    if !current.is_finite() {
        return Err(Error::InvalidConfig("log density is not finite at the initial point".into()));
    }

    let mut log_scales: Vec<f64> = settings.initial_scales.iter().map(|s| s.ln()).collect();
    let mut batch_accepts = vec![0usize; dim];
    let mut batch_index = 0usize;
    let mut post_accepts = vec![0usize; dim];

    let retained = settings.retained();
    let mut out = ChainOutput {
        states: Vec::with_capacity(retained),
        iterations: Vec::with_capacity(retained),
        log_density: Vec::with_capacity(retained),
        acceptance: vec![0.0; dim],
        scales: Vec::new(),
    };

    for iter in 0..settings.iterations {
        let burning = iter < settings.burn_in;
        for j in 0..dim {
            let old = x[j];
            x[j] = old + log_scales[j].exp() * rng.standard_normal();
            let (proposed, new_cache) = target.evaluate_coordinate(&x, j, &cache);
            let log_ratio = proposed - current;
            let accept = proposed.is_finite() && (log_ratio >= 0.0 || rng.draw_uniform().ln() < log_ratio);
            if accept {
                current = proposed;
                cache = new_cache;
                if burning {
                    batch_accepts[j] += 1;
                } else {
                    post_accepts[j] += 1;
                }
            } else {
                x[j] = old;
            }
        }

        if burning && (iter + 1) % settings.adaptation_window == 0 {
            batch_index += 1;
            let step = 1.0 / (batch_index as f64).sqrt();
            for j in 0..dim {
                let rate = batch_accepts[j] as f64 / settings.adaptation_window as f64;
                log_scales[j] += step * (rate - settings.target_acceptance);
                batch_accepts[j] = 0;
            }
        }

        if !burning && (iter - settings.burn_in + 1).is_multiple_of(settings.thin) {
            out.states.push(x.clone());
            out.iterations.push(iter + 1);
            out.log_density.push(current);
        }
    }

    let kept = (settings.iterations - settings.burn_in) as f64;
    out.acceptance = post_accepts.iter().map(|&a| a as f64 / kept).collect();
    out.scales = log_scales.iter().map(|l| l.exp()).collect();
    Ok(out)
}
