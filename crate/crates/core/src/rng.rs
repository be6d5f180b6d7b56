//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed; independent
//! workers share the seed and take distinct ChaCha stream ids:
//!
//! * chain `c` of a sampler run uses stream `c`;
//! * the predictive sample at time point `t` uses stream `2^32 + t`.
//!
//! Identical `(seed, stream)` pairs always reproduce identical variates.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::distributions::GammaParams;
use crate::error::{Error, Result};

const TIME_POINT_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn for_chain(seed: u64, chain: usize) -> Self {
        Self::with_stream(seed, chain as u64)
    }

    pub fn for_time_point(seed: u64, t: usize) -> Self {
        Self::with_stream(seed, TIME_POINT_STREAM_BASE + t as u64)
    }

    /// Uniform on `[0, 1)`.
    pub fn draw_uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn draw_normal(&mut self, mean: f64, sd: f64) -> Result<f64> {
        if !(sd >= 0.0) || !sd.is_finite() || !mean.is_finite() {
            return Err(Error::Domain(format!("normal(mean {mean}, sd {sd})")));
        }
        Ok(mean + sd * self.standard_normal())
    }

    pub fn draw_lognormal(&mut self, location: f64, scale: f64) -> Result<f64> {
        if !(scale > 0.0) {
            return Err(Error::Domain(format!("log-normal scale must be > 0, got {scale}")));
        }
        Ok(self.draw_normal(location, scale)?.exp())
    }

    pub fn draw_gamma(&mut self, p: &GammaParams) -> f64 {
        // GammaParams already guarantees a valid shape and scale.
        Gamma::new(p.shape(), p.scale()).expect("validated Gamma parameters").sample(&mut self.inner)
    }

    pub fn draw_bernoulli(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("Bernoulli probability {p} outside [0, 1]")));
        }
        Ok(self.draw_uniform() < p)
    }
}
