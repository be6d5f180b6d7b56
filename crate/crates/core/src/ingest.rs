//! Monthly precipitation input, moving totals and correlograms.

use std::fmt;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::fmt::format_f64;

/// Calendar month, `month` in 1..=12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Domain(format!("month {month} outside 1..=12")));
        }
        Ok(Self { year, month })
    }

    /// Months since year 0, January.
    pub fn ordinal(&self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_ordinal(ord: i64) -> Self {
        Self { year: ord.div_euclid(12) as i32, month: (ord.rem_euclid(12) + 1) as u8 }
    }

    pub fn offset(&self, months: usize) -> Self {
        Self::from_ordinal(self.ordinal() + months as i64)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// Gap-free monthly precipitation depths (inches) anchored at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecipSeries {
    start: YearMonth,
    values: Vec<f64>,
}

impl PrecipSeries {
    pub fn new(start: YearMonth, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain(format!("precipitation at index {i} is negative or not finite")));
        }
        Ok(Self { start, values })
    }

    pub fn start(&self) -> YearMonth {
        self.start
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn month_at(&self, i: usize) -> YearMonth {
        self.start.offset(i)
    }

    /// Same calendar, every depth multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.start, self.values.iter().map(|v| v * factor).collect())
    }
}

fn field(rec: &csv::StringRecord, i: usize, row: usize) -> Result<&str> {
    rec.get(i)
        .map(str::trim)
        .ok_or_else(|| Error::MalformedRow { row, reason: format!("expected 3 fields, found {}", rec.len()) })
}

/// Parses `year,month,precip` CSV. Row numbers in errors count the header as row 1.
pub fn parse_precip_csv<R: Read>(reader: R) -> Result<PrecipSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(Error::EmptyInput),
        Some(h) => h.map_err(|e| Error::MalformedRow { row: 1, reason: e.to_string() })?,
    };
    let names: Vec<&str> = header.iter().collect();
    if names != ["year", "month", "precip"] {
        return Err(Error::MalformedRow {
            row: 1,
            reason: format!("expected header `year,month,precip`, found `{}`", names.join(",")),
        });
    }

    let mut start = None;
    let mut prev: Option<YearMonth> = None;
    let mut values = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::MalformedRow { row, reason: e.to_string() })?;
        if rec.len() != 3 {
            return Err(Error::MalformedRow { row, reason: format!("expected 3 fields, found {}", rec.len()) });
        }
        let bad = |what: &str, s: &str| Error::MalformedRow { row, reason: format!("bad {what} `{s}`") };
        let ys = field(&rec, 0, row)?;
        let ms = field(&rec, 1, row)?;
        let ps = field(&rec, 2, row)?;
        let year: i32 = ys.parse().map_err(|_| bad("year", ys))?;
        let month: u8 = ms.parse().map_err(|_| bad("month", ms))?;
        let ym = YearMonth::new(year, month).map_err(|_| bad("month", ms))?;
        let p: f64 = ps.parse().map_err(|_| bad("precipitation", ps))?;
        if !p.is_finite() {
            return Err(bad("precipitation", ps));
        }
        if p < 0.0 {
            return Err(Error::NegativeValue { row });
        }
        if let Some(prev) = prev {
            let step = ym.ordinal() - prev.ordinal();
            match step {
                1 => {}
                0 => return Err(Error::DuplicateMonth { row }),
                s if s < 0 => return Err(Error::OutOfOrder { row }),
                _ => return Err(Error::CalendarGap { row }),
            }
        } else {
            start = Some(ym);
        }
        prev = Some(ym);
        values.push(p);
    }
    match start {
        None => Err(Error::EmptyInput),
        Some(start) => PrecipSeries::new(start, values),
    }
}

/// Moving-total rainfall over a window of `window` months.
///
/// Dry windows (raw total exactly zero) are flagged in `dry_mask` and carry
/// the value 1 in `encoded`, so their logarithm is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MtrSeries {
    window: usize,
    origin_index: usize,
    start: YearMonth,
    values: Vec<f64>,
    dry_mask: Vec<bool>,
    encoded: Vec<f64>,
}

impl MtrSeries {
    /// Builds a series from raw totals. `start` is the calendar month of the
    /// first window's last month; `origin_index` its position in the parent
    /// monthly series.
    pub fn from_totals(window: usize, origin_index: usize, start: YearMonth, values: Vec<f64>) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidWindow(window));
        }
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain(format!("moving total at index {i} is negative or not finite")));
        }
        let dry_mask: Vec<bool> = values.iter().map(|&v| v == 0.0).collect();
        let encoded = values.iter().map(|&v| if v == 0.0 { 1.0 } else { v }).collect();
        Ok(Self { window, origin_index, start, values, dry_mask, encoded })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn origin_index(&self) -> usize {
        self.origin_index
    }

    pub fn start(&self) -> YearMonth {
        self.start
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dry_mask(&self) -> &[bool] {
        &self.dry_mask
    }

    pub fn encoded(&self) -> &[f64] {
        &self.encoded
    }

    pub fn month_at(&self, i: usize) -> YearMonth {
        self.start.offset(i)
    }

    pub fn dry_count(&self) -> usize {
        self.dry_mask.iter().filter(|&&d| d).count()
    }

    pub fn dry_fraction(&self) -> f64 {
        self.dry_count() as f64 / self.len() as f64
    }

    /// Raw totals of the wet windows only.
    pub fn wet_values(&self) -> Vec<f64> {
        self.values.iter().copied().filter(|&v| v > 0.0).collect()
    }

    /// Writes `t,year,month,mtr`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t", "year", "month", "mtr"])?;
        for (t, v) in self.values.iter().enumerate() {
            let ym = self.month_at(t);
            wtr.write_record([t.to_string(), ym.year.to_string(), ym.month.to_string(), format_f64(*v)])?;
        }
        wtr.flush()
    }
}

/// Reads the `t,year,month,mtr` layout produced by [`MtrSeries::write_csv`].
pub fn parse_mtr_csv<R: Read>(reader: R, window: usize) -> Result<MtrSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::MalformedRow { row: 1, reason: e.to_string() })?.clone();
    if header.iter().collect::<Vec<_>>() != ["t", "year", "month", "mtr"] {
        return Err(Error::MalformedRow { row: 1, reason: "expected header `t,year,month,mtr`".into() });
    }
    let mut start = None;
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::MalformedRow { row, reason: e.to_string() })?;
        let bad = || Error::MalformedRow { row, reason: "unparseable field".into() };
        let t: usize = rec[0].parse().map_err(|_| bad())?;
        if t != i {
            return Err(Error::CalendarGap { row });
        }
        let ym = YearMonth::new(rec[1].parse().map_err(|_| bad())?, rec[2].parse().map_err(|_| bad())?)?;
        match start {
            None => start = Some(ym),
            Some(s) if s.offset(i) != ym => return Err(Error::CalendarGap { row }),
            _ => {}
        }
        let v: f64 = rec[3].parse().map_err(|_| bad())?;
        if v < 0.0 {
            return Err(Error::NegativeValue { row });
        }
        values.push(v);
    }
    let start = start.ok_or(Error::EmptyInput)?;
    MtrSeries::from_totals(window, window.saturating_sub(1), start, values)
}

/// `r_t = Σ X_i` over the `window` months ending at `t`; incomplete leading
/// windows are dropped.
pub fn moving_total(series: &PrecipSeries, window: usize) -> Result<MtrSeries> {
    if window == 0 {
        return Err(Error::InvalidWindow(window));
    }
    let n = series.len();
    if window > n {
        return Err(Error::WindowTooLong { window, len: n });
    }
    // Summed directly per window so that an all-zero window totals exactly 0.
    let totals = series.values().windows(window).map(|w| w.iter().sum()).collect();
    MtrSeries::from_totals(window, window - 1, series.month_at(window - 1), totals)
}

/// Sample autocorrelation or partial autocorrelation, lags `0..=max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfResult {
    pub coefficients: Vec<f64>,
    /// Half-width of the ±1.96/√n band.
    pub confidence_band: f64,
}

impl AcfResult {
    pub fn max_lag(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Writes `lag,coefficient,band`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["lag", "coefficient", "band"])?;
        for (lag, c) in self.coefficients.iter().enumerate() {
            wtr.write_record([lag.to_string(), format_f64(*c), format_f64(self.confidence_band)])?;
        }
        wtr.flush()
    }
}

fn check_correlogram_input(values: &[f64], max_lag: usize) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::DegenerateSeries);
    }
    if max_lag >= values.len() {
        return Err(Error::Domain(format!("max_lag {max_lag} must be below series length {}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn autocorrelations(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let c0 = centered.iter().map(|d| d * d).sum::<f64>() / n;
    if !(c0 > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    let mut rho = Vec::with_capacity(max_lag + 1);
    rho.push(1.0);
    for k in 1..=max_lag {
        let ck = centered.iter().zip(&centered[k..]).map(|(a, b)| a * b).sum::<f64>() / n;
        rho.push(ck / c0);
    }
    Ok(rho)
}

/// Biased (n-denominator) sample ACF.
pub fn acf(values: &[f64], max_lag: usize) -> Result<AcfResult> {
    check_correlogram_input(values, max_lag)?;
    Ok(AcfResult {
        coefficients: autocorrelations(values, max_lag)?,
        confidence_band: 1.96 / (values.len() as f64).sqrt(),
    })
}

/// Sample PACF by the Durbin–Levinson recursion. Lag 0 is reported as 1.
pub fn pacf(values: &[f64], max_lag: usize) -> Result<AcfResult> {
    check_correlogram_input(values, max_lag)?;
    let rho = autocorrelations(values, max_lag)?;
    let mut out = vec![1.0];
    let mut prev: Vec<f64> = Vec::new();
    for k in 1..=max_lag {
        let (num, den) = prev
            .iter()
            .enumerate()
            .fold((rho[k], 1.0), |(num, den), (j, p)| (num - p * rho[k - 1 - j], den - p * rho[j + 1]));
        let phi_kk = if den.abs() < f64::EPSILON { 0.0 } else { num / den };
        let mut next = Vec::with_capacity(k);
        for j in 0..k - 1 {
            next.push(prev[j] - phi_kk * prev[k - 2 - j]);
        }
        next.push(phi_kk);
        out.push(phi_kk);
        prev = next;
    }
    Ok(AcfResult { coefficients: out, confidence_band: 1.96 / (values.len() as f64).sqrt() })
}
