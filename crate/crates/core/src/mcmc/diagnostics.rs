use super::{Param, PosteriorDraws};
use crate::error::{Error, Result};

const MIN_DRAWS: usize = 10;

/// Gelman–Rubin potential scale reduction factor. Chains are truncated to
/// the shortest one.
pub fn psrf_from_chains(chains: &[Vec<f64>]) -> Result<f64> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::InsufficientChains);
    }
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < MIN_DRAWS {
        return Err(Error::InsufficientDraws(n));
    }
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| c[..n].iter().sum::<f64>() / nf).collect();
    let within: f64 = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c[..n].iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m as f64;
    let grand = means.iter().sum::<f64>() / m as f64;
    let between = nf / (m as f64 - 1.0) * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
    if within == 0.0 {
        return Ok(if between == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let pooled = (nf - 1.0) / nf * within + between / nf;
    Ok((pooled / within).sqrt())
}

pub fn psrf(draws: &PosteriorDraws, param: Param) -> Result<f64> {
    let chains: Vec<Vec<f64>> = draws.chains.iter().map(|c| c.values(param)).collect();
    psrf_from_chains(&chains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn normal_chain(rng: &mut Rng, n: usize, offset: f64) -> Vec<f64> {
        (0..n).map(|_| offset + rng.standard_normal()).collect()
    }

    #[test]
    fn iid_chains_are_converged() {
        let mut rng = Rng::new(5);
        let chains: Vec<Vec<f64>> = (0..3).map(|_| normal_chain(&mut rng, 5_000, 0.0)).collect();
        let r = psrf_from_chains(&chains).unwrap();
        assert!((0.99..=1.02).contains(&r), "{r}");
    }

    #[test]
    fn offset_chains_diverge() {
        let mut rng = Rng::new(6);
        let chains = vec![normal_chain(&mut rng, 1_000, 0.0), normal_chain(&mut rng, 1_000, 10.0)];
        assert!(psrf_from_chains(&chains).unwrap() > 2.0);
    }

    #[test]
    fn preconditions() {
        let mut rng = Rng::new(7);
        assert_eq!(psrf_from_chains(&[normal_chain(&mut rng, 100, 0.0)]), Err(Error::InsufficientChains));
        assert_eq!(
            psrf_from_chains(&[normal_chain(&mut rng, 100, 0.0), normal_chain(&mut rng, 5, 0.0)]),
            Err(Error::InsufficientDraws(5))
        );
        assert_eq!(psrf_from_chains(&[vec![1.0; 20], vec![1.0; 20]]).unwrap(), 1.0);
    }
}
