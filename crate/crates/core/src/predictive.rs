//! Posterior-predictive draws of the moving total and the ARSPI transform.

use crate::distributions::{logistic, std_normal_quantile};
use crate::error::{Error, Result};
use crate::index::{record, IndexKind, IndexSeries};
use crate::ingest::MtrSeries;
use crate::mcmc::PosteriorDraws;
use crate::model::{logit_at, ArspiParams, Pi0};
use crate::rng::Rng;

pub const DEFAULT_SAMPLE_SIZE: usize = 45_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictiveConfig {
    pub m: usize,
    pub seed: u64,
}

impl Default for PredictiveConfig {
    fn default() -> Self {
        Self { m: DEFAULT_SAMPLE_SIZE, seed: 2019 }
    }
}

impl PredictiveConfig {
    /// Clamp applied to the empirical CDF before the normal quantile.
    pub fn epsilon(&self) -> f64 {
        0.5 / self.m as f64
    }
}

/// Predictive draws at one time point, dry draws encoded as 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSample {
    pub time_index: usize,
    pub draws: Vec<f64>,
}

/// Posterior draws to use for an `m`-sized sample: an equally spaced
/// subsample in (chain, iteration) order, or all of them cycled when `m`
/// exceeds what is available.
fn select(draws: &PosteriorDraws, m: usize) -> Result<Vec<ArspiParams>> {
    let all: Vec<&ArspiParams> = draws.iter().collect();
    let n = all.len();
    if n == 0 {
        return Err(Error::EmptyPosterior);
    }
    if m == 0 {
        return Err(Error::InvalidConfig("predictive sample size must be at least 1".into()));
    }
    Ok((0..m).map(|i| if m <= n { *all[i * n / m] } else { *all[i % n] }).collect())
}

/// Per-draw quantities that do not depend on `t`.
struct Prepared {
    params: Vec<ArspiParams>,
    start_logits: Vec<f64>,
}

fn prepare(draws: &PosteriorDraws, mtr: &MtrSeries, m: usize) -> Result<Prepared> {
    let params = select(draws, m)?;
    let pi0 = Pi0::for_series(mtr);
    let start_logits = params.iter().map(|p| pi0.logit_for(p)).collect();
    Ok(Prepared { params, start_logits })
}

fn sample_at(prep: &Prepared, mtr: &MtrSeries, t: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    let prev_log = mtr.encoded()[t - 1].ln();
    prep.params
        .iter()
        .zip(&prep.start_logits)
        .map(|(p, &start)| {
            let pi = logistic(logit_at(p.alpha, p.phi, start, t));
            if rng.draw_bernoulli(pi)? {
                Ok(1.0)
            } else {
                rng.draw_lognormal(p.beta1 + p.beta2 * prev_log, p.sigma)
            }
        })
        .collect()
}

fn check_time(mtr: &MtrSeries, t: usize) -> Result<()> {
    if t == 0 || t >= mtr.len() {
        return Err(Error::IndexOutOfRange { index: t, len: mtr.len() });
    }
    Ok(())
}

/// One-step-ahead predictive sample at window `t` (0-based, `t ≥ 1`),
/// conditioned on the observed window `t − 1`.
pub fn predictive_draws(
    draws: &PosteriorDraws,
    mtr: &MtrSeries,
    t: usize,
    m: usize,
    rng: &mut Rng,
) -> Result<PredictiveSample> {
    check_time(mtr, t)?;
    let prep = prepare(draws, mtr, m)?;
    Ok(PredictiveSample { time_index: t, draws: sample_at(&prep, mtr, t, rng)? })
}

/// Fraction of draws `≤ x`.
pub fn empirical_cdf(sample: &PredictiveSample, x: f64) -> f64 {
    if sample.draws.is_empty() {
        return 0.0;
    }
    sample.draws.iter().filter(|&&d| d <= x).count() as f64 / sample.draws.len() as f64
}

fn arspi_value(sample: &PredictiveSample, observed: f64, eps: f64) -> Result<f64> {
    std_normal_quantile(empirical_cdf(sample, observed).clamp(eps, 1.0 - eps))
}

/// ARSPI for every window after the first. Window `t` uses its own RNG
/// stream derived from `cfg.seed`, so the result does not depend on how the
/// work is split across threads.
pub fn arspi_series(draws: &PosteriorDraws, mtr: &MtrSeries, cfg: &PredictiveConfig) -> Result<IndexSeries> {
    if mtr.len() < 2 {
        return Err(Error::DegenerateSeries);
    }
    let prep = prepare(draws, mtr, cfg.m)?;
    let eps = cfg.epsilon();
    let times: Vec<usize> = (1..mtr.len()).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(times.len());
    let chunk = times.len().div_ceil(workers);

    let values: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = times
            .chunks(chunk)
            .map(|ts| {
                let prep = &prep;
                scope.spawn(move || {
                    ts.iter()
                        .map(|&t| {
                            let mut rng = Rng::for_time_point(cfg.seed, t);
                            let sample = PredictiveSample { time_index: t, draws: sample_at(prep, mtr, t, &mut rng)? };
                            arspi_value(&sample, mtr.encoded()[t], eps)
                        })
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("predictive worker panicked")).collect()
    });

    let mut records = Vec::with_capacity(times.len());
    for (ts, vs) in times.chunks(chunk).zip(values) {
        for (&t, v) in ts.iter().zip(vs?) {
            records.push(record(mtr, t, v)?);
        }
    }
    Ok(IndexSeries::new(IndexKind::Arspi, mtr.window(), records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::YearMonth;
    use crate::mcmc::ChainDraws;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn posterior(params: Vec<ArspiParams>) -> PosteriorDraws {
        let n = params.len();
        PosteriorDraws {
            chains: vec![ChainDraws {
                params,
                iterations: (1..=n).collect(),
                log_posterior: vec![0.0; n],
                acceptance: vec![],
            }],
        }
    }

    fn series(values: Vec<f64>) -> MtrSeries {
        MtrSeries::from_totals(3, 2, YearMonth::new(1921, 3).unwrap(), values).unwrap()
    }

    #[test]
    fn degenerate_posterior_gives_point_mass() {
        let p = ArspiParams::new(0.7, 0.0, 1e-6, -30.0, 0.0);
        let s =
            predictive_draws(&posterior(vec![p]), &series(vec![3.0, 4.0, 0.0]), 2, 1_000, &mut Rng::new(1)).unwrap();
        assert_eq!(s.draws.len(), 1_000);
        for d in &s.draws {
            assert!((d / 0.7f64.exp() - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn sample_mean_matches_total_expectation() {
        let mut rng = Rng::new(11);
        let params: Vec<ArspiParams> = (0..500)
            .map(|_| {
                ArspiParams::new(
                    0.2 + 0.1 * rng.standard_normal(),
                    0.5 + 0.05 * rng.standard_normal(),
                    0.3 + 0.02 * rng.standard_normal(),
                    -1.0 + 0.2 * rng.standard_normal(),
                    0.4 + 0.05 * rng.standard_normal(),
                )
            })
            .collect();
        let mtr = series(vec![2.0, 0.0, 5.0, 3.0, 4.0]);
        let draws = posterior(params.clone());
        let t = 3;
        let m = 200_000;
        let s = predictive_draws(&draws, &mtr, t, m, &mut Rng::new(12)).unwrap();

        let prev = mtr.encoded()[t - 1];
        let start = crate::distributions::logit(0.2);
        let expected: Vec<f64> = (0..m)
            .map(|i| {
                let p = &params[i % params.len()];
                let pi = logistic(logit_at(p.alpha, p.phi, start, t));
                (p.beta1 + 0.5 * p.sigma * p.sigma).exp() * prev.powf(p.beta2) * (1.0 - pi) + pi
            })
            .collect();
        let oracle = expected.iter().sum::<f64>() / m as f64;
        let mean = s.draws.iter().sum::<f64>() / m as f64;
        let var = s.draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        let se = (var / m as f64).sqrt();
        assert!((mean - oracle).abs() < 3.0 * se, "{mean} vs {oracle} (se {se})");
    }

    #[test]
    fn empirical_cdf_counts() {
        let s = PredictiveSample { time_index: 1, draws: vec![1.0, 2.0, 3.0] };
        assert!((empirical_cdf(&s, 2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(empirical_cdf(&s, 0.5), 0.0);
        assert_eq!(empirical_cdf(&s, 3.5), 1.0);
        assert_eq!(empirical_cdf(&s, 3.0), 1.0);
    }

    #[test]
    fn median_observation_maps_near_zero() {
        let p = ArspiParams::new(0.5, 0.3, 0.4, -2.0, 0.2);
        let mtr = series(vec![2.0, 3.0]);
        let mut s = predictive_draws(&posterior(vec![p]), &mtr, 1, 45_000, &mut Rng::new(3)).unwrap();
        s.draws.sort_by(f64::total_cmp);
        let median = s.draws[s.draws.len() / 2];
        let v = arspi_value(&s, median, 0.5 / 45_000.0).unwrap();
        assert!(v.abs() < 0.02, "{v}");
    }

    #[test]
    fn series_shape_bounds_and_determinism() {
        let mut rng = Rng::new(4);
        let params: Vec<ArspiParams> =
            (0..300).map(|_| ArspiParams::new(0.3 + 0.05 * rng.standard_normal(), 0.4, 0.5, -1.5, 0.3)).collect();
        let draws = posterior(params);
        let values: Vec<f64> =
            (0..60).map(|i| if i % 7 == 0 { 0.0 } else { 1.0 + (i as f64 * 0.37).sin().abs() * 3.0 }).collect();
        let mtr = series(values);
        let cfg = PredictiveConfig { m: 2_000, seed: 9 };
        let a = arspi_series(&draws, &mtr, &cfg).unwrap();
        assert_eq!(a.len(), mtr.len() - 1);
        assert_eq!(a.records()[0].t, 1);
        assert_eq!(a.records()[0].month, mtr.month_at(1));
        let bound = std_normal_quantile(1.0 - cfg.epsilon()).unwrap();
        for r in a.records() {
            assert!(r.value.is_finite() && r.value.abs() <= bound + 1e-12);
        }
        assert_eq!(a, arspi_series(&draws, &mtr, &cfg).unwrap());
        assert_ne!(a, arspi_series(&draws, &mtr, &PredictiveConfig { seed: 10, ..cfg }).unwrap());

        // each window's value equals a standalone draw on its own stream
        let t = 17;
        let mut r = Rng::for_time_point(cfg.seed, t);
        let s = predictive_draws(&draws, &mtr, t, cfg.m, &mut r).unwrap();
        let v = arspi_value(&s, mtr.encoded()[t], cfg.epsilon()).unwrap();
        assert_eq!(a.records()[t - 1].value, v);
    }

    #[test]
    fn subsampling_and_cycling() {
        let ps: Vec<ArspiParams> = (0..10).map(|i| ArspiParams::new(i as f64, 0.0, 1.0, 0.0, 0.0)).collect();
        let d = posterior(ps);
        let sub: Vec<f64> = select(&d, 5).unwrap().iter().map(|p| p.beta1).collect();
        assert_eq!(sub, [0.0, 2.0, 4.0, 6.0, 8.0]);
        let cyc: Vec<f64> = select(&d, 12).unwrap().iter().map(|p| p.beta1).collect();
        assert_eq!(&cyc[10..], &[0.0, 1.0]);
    }

    #[test]
    fn errors() {
        let p = ArspiParams::new(0.0, 0.0, 1.0, 0.0, 0.0);
        let mtr = series(vec![1.0, 2.0, 3.0]);
        let mut rng = Rng::new(1);
        assert_eq!(
            predictive_draws(&posterior(vec![p]), &mtr, 0, 10, &mut rng),
            Err(Error::IndexOutOfRange { index: 0, len: 3 })
        );
        assert_eq!(
            predictive_draws(&posterior(vec![p]), &mtr, 3, 10, &mut rng),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        );
        assert_eq!(predictive_draws(&posterior(vec![]), &mtr, 1, 10, &mut rng), Err(Error::EmptyPosterior));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn larger_observation_never_lowers_arspi(seed in 0u64..1_000, lo in 0.1f64..5.0, bump in 0.0f64..5.0) {
            let p = ArspiParams::new(0.5, 0.3, 0.6, -1.0, 0.2);
            let mtr = series(vec![2.0, 1.0]);
            let s = predictive_draws(&posterior(vec![p]), &mtr, 1, 500, &mut Rng::new(seed)).unwrap();
            let eps = 0.5 / 500.0;
            prop_assert!(arspi_value(&s, lo + bump, eps).unwrap() >= arspi_value(&s, lo, eps).unwrap());
        }

        #[test]
        fn empirical_cdf_nondecreasing(draws in proptest::collection::vec(0.01f64..100.0, 1..50), mut probes in proptest::collection::vec(0.0f64..120.0, 2..30)) {
            probes.sort_by(f64::total_cmp);
            let s = PredictiveSample { time_index: 1, draws };
            let vals: Vec<f64> = probes.iter().map(|&x| empirical_cdf(&s, x)).collect();
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
