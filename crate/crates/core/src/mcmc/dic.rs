use super::PosteriorDraws;
use crate::error::{Error, Result};
use crate::ingest::MtrSeries;
use crate::model::{Pi0, SeriesData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DicResult {
    /// Posterior mean deviance.
    pub d_bar: f64,
    /// Deviance at the posterior mean.
    pub d_at_mean: f64,
    /// Effective number of parameters, `d_bar − d_at_mean`.
    pub p_d: f64,
    pub dic: f64,
}

impl DicResult {
    pub fn from_deviances(deviances: &[f64], d_at_mean: f64) -> Result<Self> {
        if deviances.is_empty() {
            return Err(Error::EmptyPosterior);
        }
        let d_bar = deviances.iter().sum::<f64>() / deviances.len() as f64;
        let p_d = d_bar - d_at_mean;
        Ok(Self { d_bar, d_at_mean, p_d, dic: d_bar + p_d })
    }
}

/// Deviance information criterion with the deviance `−2 ln L` of the
/// conditional likelihood and the posterior mean taken in parameter space.
pub fn dic(draws: &PosteriorDraws, mtr: &MtrSeries, pi0: Pi0) -> Result<DicResult> {
    if draws.total() == 0 {
        return Err(Error::EmptyPosterior);
    }
    if mtr.len() < 2 {
        return Err(Error::DegenerateSeries);
    }
    let data = SeriesData::new(mtr);
    let deviances = draws.iter().map(|p| Ok(-2.0 * data.log_likelihood(p, pi0)?)).collect::<Result<Vec<f64>>>()?;
    let mean = draws.mean()?;
    DicResult::from_deviances(&deviances, -2.0 * data.log_likelihood(&mean, pi0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::YearMonth;
    use crate::mcmc::sampler::{run_chain, SamplerSettings, Target};
    use crate::mcmc::ChainDraws;
    use crate::model::ArspiParams;
    use crate::rng::Rng;

    #[test]
    fn single_draw_has_zero_complexity() {
        let m = MtrSeries::from_totals(1, 0, YearMonth::new(1900, 1).unwrap(), vec![1.0, 2.0, 0.0, 3.0]).unwrap();
        let p = ArspiParams::new(0.2, 0.5, 0.6, -1.0, 0.1);
        let draws = PosteriorDraws {
            chains: vec![ChainDraws {
                params: vec![p],
                iterations: vec![1],
                log_posterior: vec![0.0],
                acceptance: vec![],
            }],
        };
        let r = dic(&draws, &m, Pi0::Fixed(0.25)).unwrap();
        assert_eq!(r.p_d, 0.0);
        assert_eq!(r.dic, r.d_bar);
    }

    #[test]
    fn empty_posterior_is_an_error() {
        let m = MtrSeries::from_totals(1, 0, YearMonth::new(1900, 1).unwrap(), vec![1.0, 2.0]).unwrap();
        assert_eq!(dic(&PosteriorDraws { chains: vec![] }, &m, Pi0::Stationary), Err(Error::EmptyPosterior));
        assert_eq!(DicResult::from_deviances(&[], 0.0), Err(Error::EmptyPosterior));
    }

    struct NormalMean {
        data: Vec<f64>,
    }

    impl NormalMean {
        fn loglik(&self, mu: f64) -> f64 {
            self.data.iter().map(|y| -0.5 * (y - mu).powi(2) - 0.918_938_533_204_672_8).sum()
        }
    }

    impl Target for NormalMean {
        type Cache = ();
        fn dim(&self) -> usize {
            1
        }
        fn evaluate(&self, x: &[f64]) -> (f64, ()) {
            (self.loglik(x[0]), ())
        }
    }

    #[test]
    fn conjugate_normal_mean_has_one_effective_parameter() {
        let mut rng = Rng::new(21);
        let target = NormalMean { data: (0..2_000).map(|_| 1.5 + rng.standard_normal()).collect() };
        let settings = SamplerSettings {
            iterations: 42_000,
            burn_in: 2_000,
            thin: 2,
            target_acceptance: 0.44,
            adaptation_window: 50,
            initial_scales: vec![0.1],
        };
        let out = run_chain(&target, &[0.0], &settings, &mut rng).unwrap();
        let mus: Vec<f64> = out.states.iter().map(|s| s[0]).collect();
        let dev: Vec<f64> = mus.iter().map(|&m| -2.0 * target.loglik(m)).collect();
        let mean = mus.iter().sum::<f64>() / mus.len() as f64;
        let r = DicResult::from_deviances(&dev, -2.0 * target.loglik(mean)).unwrap();
        assert!((0.8..=1.2).contains(&r.p_d), "p_D = {}", r.p_d);
        assert!((r.dic - (r.d_bar + r.p_d)).abs() < 1e-9);
    }
}
