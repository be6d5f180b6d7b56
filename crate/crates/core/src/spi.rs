//! Classic SPI: Gamma fit on wet moving totals plus a point mass for dry windows.

use crate::distributions::{gamma_cdf, std_normal_quantile, GammaParams};
use crate::error::{Error, Result};
use crate::index::{record, IndexKind, IndexSeries};
use crate::ingest::MtrSeries;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFit {
    pub params: GammaParams,
    /// `ln(mean) - mean(ln)` over wet values.
    pub b_statistic: f64,
    /// Probability of a dry window.
    pub zero_prob: f64,
    pub n_wet: usize,
    pub n_total: usize,
}

/// Thom's closed-form shape estimate from `B = ln ȳ − mean(ln y)`.
pub fn thom_shape(b: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * b / 3.0).sqrt()) / (4.0 * b)
}

fn fit_wet_values(wet: &[f64], n_total: usize) -> Result<GammaFit> {
    if wet.is_empty() {
        return Err(Error::AllDry);
    }
    if wet.iter().all(|&v| v == wet[0]) {
        return Err(Error::DegenerateWet);
    }
    let m = wet.len() as f64;
    let mean = wet.iter().sum::<f64>() / m;
    let mean_log = wet.iter().map(|v| v.ln()).sum::<f64>() / m;
    let b = mean.ln() - mean_log;
    if !(b > 0.0) {
        return Err(Error::DegenerateWet);
    }
    let shape = thom_shape(b);
    Ok(GammaFit {
        params: GammaParams::new(shape, mean / shape)?,
        b_statistic: b,
        zero_prob: (n_total - wet.len()) as f64 / n_total as f64,
        n_wet: wet.len(),
        n_total,
    })
}

/// Method-of-moments Gamma fit over the wet windows.
pub fn fit_gamma_mom(mtr: &MtrSeries) -> Result<GammaFit> {
    fit_wet_values(&mtr.wet_values(), mtr.len())
}

/// `G(y) = π` at zero and `π + (1 − π) F(y)` above it.
pub fn adjusted_cdf(y: f64, fit: &GammaFit) -> f64 {
    if y <= 0.0 {
        fit.zero_prob
    } else {
        fit.zero_prob + (1.0 - fit.zero_prob) * gamma_cdf(y, &fit.params)
    }
}

fn spi_value(y: f64, fit: &GammaFit) -> Result<f64> {
    let eps = 0.5 / fit.n_total as f64;
    std_normal_quantile(adjusted_cdf(y, fit).clamp(eps, 1.0 - eps))
}

/// One SPI value per window from a single Gamma fit across all windows.
///
/// CDF values are clamped to `[1/(2n), 1 − 1/(2n)]` before the normal
/// quantile so the extremes stay finite.
pub fn spi_series(mtr: &MtrSeries) -> Result<IndexSeries> {
    let fit = fit_gamma_mom(mtr)?;
    let records = mtr
        .values()
        .iter()
        .enumerate()
        .map(|(t, &y)| record(mtr, t, spi_value(y, &fit)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexSeries::new(IndexKind::Spi, mtr.window(), records))
}

/// SPI with a separate Gamma fit per calendar month of the window's end.
pub fn spi_series_by_month(mtr: &MtrSeries) -> Result<IndexSeries> {
    let mut values = vec![f64::NAN; mtr.len()];
    for month in 1..=12u8 {
        let idx: Vec<usize> = (0..mtr.len()).filter(|&t| mtr.month_at(t).month == month).collect();
        if idx.is_empty() {
            continue;
        }
        let wet: Vec<f64> = idx.iter().map(|&t| mtr.values()[t]).filter(|&v| v > 0.0).collect();
        let fit = fit_wet_values(&wet, idx.len())?;
        for &t in &idx {
            values[t] = spi_value(mtr.values()[t], &fit)?;
        }
    }
    let records = values.into_iter().enumerate().map(|(t, v)| record(mtr, t, v)).collect::<Result<Vec<_>>>()?;
    Ok(IndexSeries::new(IndexKind::Spi, mtr.window(), records))
}
