//! Drought categories, SPI/ARSPI disagreement and drought-event statistics.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fmt::format_f64;
use crate::index::IndexSeries;
use crate::ingest::YearMonth;

/// Drought/wetness class of an index value, ordered from wettest to driest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    ExtremeWet,
    SevereWet,
    ModerateWet,
    MildWet,
    MildDrought,
    ModerateDrought,
    SevereDrought,
    ExtremeDrought,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::ExtremeWet,
        Category::SevereWet,
        Category::ModerateWet,
        Category::MildWet,
        Category::MildDrought,
        Category::ModerateDrought,
        Category::SevereDrought,
        Category::ExtremeDrought,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::ExtremeWet => "extreme_wet",
            Category::SevereWet => "severe_wet",
            Category::ModerateWet => "moderate_wet",
            Category::MildWet => "mild_wet",
            Category::MildDrought => "mild_drought",
            Category::ModerateDrought => "moderate_drought",
            Category::SevereDrought => "severe_drought",
            Category::ExtremeDrought => "extreme_drought",
        }
    }

    /// Nominal standard-normal probability mass of the class.
    pub fn nominal_probability(&self) -> f64 {
        match self {
            Category::ExtremeWet | Category::ExtremeDrought => 0.023,
            Category::SevereWet | Category::SevereDrought => 0.044,
            Category::ModerateWet | Category::ModerateDrought => 0.092,
            Category::MildWet | Category::MildDrought => 0.341,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown category `{s}`")))
    }
}

/// Maps an index value to its class.
///
/// Wet classes are `[lower, upper)` and drought classes `(lower, upper]`,
/// except that 0 is mild wet: 2.0 is extreme wet, -2.0 extreme drought,
/// 1.0 moderate wet and -1.0 moderate drought.
pub fn classify(value: f64) -> Result<Category> {
    if !value.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(if value >= 2.0 {
        Category::ExtremeWet
    } else if value >= 1.5 {
        Category::SevereWet
    } else if value >= 1.0 {
        Category::ModerateWet
    } else if value >= 0.0 {
        Category::MildWet
    } else if value > -1.0 {
        Category::MildDrought
    } else if value > -1.5 {
        Category::ModerateDrought
    } else if value > -2.0 {
        Category::SevereDrought
    } else {
        Category::ExtremeDrought
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MismatchKind {
    /// ARSPI wet (> 0) while SPI is severe or extreme drought (< -1.5).
    Type1,
    /// ARSPI severe or extreme drought (< -1.5) while SPI is wet (> 0).
    Type2,
}

impl MismatchKind {
    pub fn of(spi: f64, arspi: f64) -> Option<Self> {
        if arspi > 0.0 && spi < -1.5 {
            Some(MismatchKind::Type1)
        } else if arspi < -1.5 && spi > 0.0 {
            Some(MismatchKind::Type2)
        } else {
            None
        }
    }

    fn label(&self) -> &'static str {
        match self {
            MismatchKind::Type1 => "1",
            MismatchKind::Type2 => "2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchPoint {
    /// ARSPI record's MTR index.
    pub t: usize,
    pub month: YearMonth,
    pub spi: f64,
    pub arspi: f64,
    pub mtr: f64,
    pub kind: MismatchKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchReport {
    pub window: usize,
    pub aligned_len: usize,
    pub points: Vec<MismatchPoint>,
}

impl MismatchReport {
    pub fn count(&self, kind: MismatchKind) -> usize {
        self.points.iter().filter(|p| p.kind == kind).count()
    }

    pub fn rate(&self, kind: MismatchKind) -> f64 {
        self.count(kind) as f64 / self.aligned_len as f64
    }

    pub fn total_rate(&self) -> f64 {
        self.points.len() as f64 / self.aligned_len as f64
    }

    pub fn indices(&self, kind: MismatchKind) -> Vec<usize> {
        self.points.iter().filter(|p| p.kind == kind).map(|p| p.t).collect()
    }

    /// Writes `t,year,month,spi,arspi,type`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t", "year", "month", "spi", "arspi", "type"])?;
        for p in &self.points {
            wtr.write_record([
                p.t.to_string(),
                p.month.year.to_string(),
                p.month.month.to_string(),
                format_f64(p.spi),
                format_f64(p.arspi),
                p.kind.label().to_string(),
            ])?;
        }
        wtr.flush()
    }
}

/// Compares the two indices on their common calendar months.
pub fn mismatch(spi: &IndexSeries, arspi: &IndexSeries) -> Result<MismatchReport> {
    let by_month: HashMap<YearMonth, f64> = spi.records().iter().map(|r| (r.month, r.value)).collect();
    let mut aligned_len = 0;
    let mut points = Vec::new();
    for r in arspi.records() {
        let Some(&s) = by_month.get(&r.month) else { continue };
        aligned_len += 1;
        if let Some(kind) = MismatchKind::of(s, r.value) {
            points.push(MismatchPoint { t: r.t, month: r.month, spi: s, arspi: r.value, mtr: r.mtr, kind });
        }
    }
    if aligned_len == 0 {
        return Err(Error::Alignment);
    }
    Ok(MismatchReport { window: arspi.window(), aligned_len, points })
}

/// A maximal run of index values below a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DroughtEvent {
    pub start_index: usize,
    pub end_index: usize,
    pub duration: usize,
    /// Negated sum of the index over the event.
    pub severity: f64,
    /// Negated minimum of the index over the event.
    pub peak: f64,
}

impl DroughtEvent {
    pub fn characteristic(&self, c: Characteristic) -> f64 {
        match c {
            Characteristic::Duration => self.duration as f64,
            Characteristic::Severity => self.severity,
            Characteristic::Peak => self.peak,
        }
    }
}

/// Runs strictly below `threshold`, positions relative to `values`.
pub fn extract_events_from_values(values: &[f64], threshold: f64) -> Vec<DroughtEvent> {
    let mut events = Vec::new();
    let mut i = 0;
    while i < values.len() {
        if values[i] < threshold {
            let start = i;
            while i < values.len() && values[i] < threshold {
                i += 1;
            }
            let run = &values[start..i];
            events.push(DroughtEvent {
                start_index: start,
                end_index: i - 1,
                duration: run.len(),
                severity: -run.iter().sum::<f64>(),
                peak: -run.iter().copied().fold(f64::INFINITY, f64::min),
            });
        } else {
            i += 1;
        }
    }
    events
}

/// Drought events of an index series; start/end are the records' `t` values.
pub fn extract_events(index: &IndexSeries, threshold: f64) -> Vec<DroughtEvent> {
    let values: Vec<f64> = index.records().iter().map(|r| r.value).collect();
    let recs = index.records();
    extract_events_from_values(&values, threshold)
        .into_iter()
        .map(|e| DroughtEvent { start_index: recs[e.start_index].t, end_index: recs[e.end_index].t, ..e })
        .collect()
}

/// Writes `start_t,end_t,duration,severity,peak`.
pub fn write_events_csv<W: Write>(events: &[DroughtEvent], w: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["start_t", "end_t", "duration", "severity", "peak"])?;
    for e in events {
        wtr.write_record([
            e.start_index.to_string(),
            e.end_index.to_string(),
            e.duration.to_string(),
            format_f64(e.severity),
            format_f64(e.peak),
        ])?;
    }
    wtr.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Characteristic {
    Duration,
    Severity,
    Peak,
}

impl Characteristic {
    pub const ALL: [Characteristic; 3] = [Characteristic::Duration, Characteristic::Severity, Characteristic::Peak];

    pub fn as_str(&self) -> &'static str {
        match self {
            Characteristic::Duration => "duration",
            Characteristic::Severity => "severity",
            Characteristic::Peak => "peak",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReturnPeriod {
    Years(f64),
    /// No event exceeds the level.
    Infinite,
}

impl ReturnPeriod {
    pub fn years(&self) -> f64 {
        match self {
            ReturnPeriod::Years(y) => *y,
            ReturnPeriod::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for ReturnPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReturnPeriod::Years(y) => f.write_str(&format_f64(*y)),
            ReturnPeriod::Infinite => f.write_str("inf"),
        }
    }
}

/// `T = (N/n) / P(C > c)` with `P` the empirical survival fraction.
pub fn return_period(
    events: &[DroughtEvent],
    characteristic: Characteristic,
    level: f64,
    series_years: f64,
) -> Result<ReturnPeriod> {
    if events.is_empty() {
        return Err(Error::NoEvents);
    }
    let n = events.len() as f64;
    let exceed = events.iter().filter(|e| e.characteristic(characteristic) > level).count();
    if exceed == 0 {
        return Ok(ReturnPeriod::Infinite);
    }
    Ok(ReturnPeriod::Years(series_years / n / (exceed as f64 / n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::std_normal_cdf;
    use crate::index::{IndexKind, IndexRecord};
    use crate::rng::Rng;
    use proptest::prelude::*;

    #[test]
    fn classify_examples() {
        assert_eq!(classify(-1.7).unwrap(), Category::SevereDrought);
        assert_eq!(classify(2.0).unwrap(), Category::ExtremeWet);
        assert_eq!(classify(0.0).unwrap(), Category::MildWet);
        assert_eq!(classify(-2.0).unwrap(), Category::ExtremeDrought);
        assert_eq!(classify(-1.0).unwrap(), Category::ModerateDrought);
        assert_eq!(classify(1.0).unwrap(), Category::ModerateWet);
        assert_eq!(classify(1.5).unwrap(), Category::SevereWet);
        assert_eq!(classify(-1.5).unwrap(), Category::SevereDrought);
        assert_eq!(classify(-0.3).unwrap(), Category::MildDrought);
        assert_eq!(classify(f64::NAN), Err(Error::NonFinite));
        assert_eq!(classify(f64::INFINITY), Err(Error::NonFinite));
    }

    #[test]
    fn category_names_round_trip() {
        for c in Category::ALL {
            assert_eq!(c.as_str().parse::<Category>().unwrap(), c);
        }
        assert!("wet".parse::<Category>().is_err());
    }

    #[test]
    fn nominal_masses_sum_to_one_and_match_normal() {
        let total: f64 = Category::ALL.iter().map(|c| c.nominal_probability()).sum();
        assert!((total - 1.0).abs() < 1e-3);
        assert!((std_normal_cdf(-2.0) - 0.023).abs() < 5e-4);
        assert!((std_normal_cdf(-1.5) - std_normal_cdf(-2.0) - 0.044).abs() < 5e-4);
        assert!((std_normal_cdf(-1.0) - std_normal_cdf(-1.5) - 0.092).abs() < 5e-4);
        assert!((0.5 - std_normal_cdf(-1.0) - 0.341).abs() < 5e-4);
    }

    #[test]
    fn category_occupancy_on_normal_draws() {
        let mut rng = Rng::new(1);
        let mut counts: HashMap<Category, usize> = HashMap::new();
        let n = 1_000_000;
        for _ in 0..n {
            *counts.entry(classify(rng.standard_normal()).unwrap()).or_default() += 1;
        }
        for c in Category::ALL {
            let f = counts[&c] as f64 / n as f64;
            assert!((f - c.nominal_probability()).abs() <= 0.003, "{c}: {f}");
        }
    }

    fn series(kind: IndexKind, start: YearMonth, values: &[f64]) -> IndexSeries {
        let records = values
            .iter()
            .enumerate()
            .map(|(i, &v)| IndexRecord {
                t: i + 1,
                month: start.offset(i),
                mtr: 1.0,
                value: v,
                category: classify(v).unwrap(),
            })
            .collect();
        IndexSeries::new(kind, 3, records)
    }

    #[test]
    fn mismatch_types() {
        assert_eq!(MismatchKind::of(-1.6, 0.5), Some(MismatchKind::Type1));
        assert_eq!(MismatchKind::of(0.2, -1.6), Some(MismatchKind::Type2));
        assert_eq!(MismatchKind::of(-1.6, -1.6), None);
        assert_eq!(MismatchKind::of(-1.5, 0.5), None);
        assert_eq!(MismatchKind::of(0.0, -1.6), None);
    }

    #[test]
    fn mismatch_report_rates() {
        let ym = YearMonth::new(1900, 1).unwrap();
        let spi = series(IndexKind::Spi, ym, &[-1.6, 0.2, -1.6, 0.1]);
        let ar = series(IndexKind::Arspi, ym, &[0.5, -1.6, -1.6, 0.3]);
        let rep = mismatch(&spi, &ar).unwrap();
        assert_eq!(rep.aligned_len, 4);
        assert_eq!(rep.count(MismatchKind::Type1), 1);
        assert_eq!(rep.count(MismatchKind::Type2), 1);
        assert_eq!(rep.rate(MismatchKind::Type1), 0.25);
        assert_eq!(rep.indices(MismatchKind::Type2), vec![2]);

        let same = mismatch(&spi, &series(IndexKind::Arspi, ym, &[-1.6, 0.2, -1.6, 0.1])).unwrap();
        assert!(same.points.is_empty());

        let far = series(IndexKind::Arspi, YearMonth::new(2000, 1).unwrap(), &[0.5]);
        assert_eq!(mismatch(&spi, &far), Err(Error::Alignment));
    }

    #[test]
    fn mismatch_aligns_on_calendar() {
        let spi = series(IndexKind::Spi, YearMonth::new(1900, 1).unwrap(), &[0.1, -1.6, 0.2]);
        let ar = series(IndexKind::Arspi, YearMonth::new(1900, 2).unwrap(), &[0.5, 0.5, 0.5]);
        let rep = mismatch(&spi, &ar).unwrap();
        assert_eq!(rep.aligned_len, 2);
        assert_eq!(rep.count(MismatchKind::Type1), 1);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,year,month,spi,arspi,type\n1,1900,2,-1.6,0.5,1\n");
    }

    #[test]
    fn event_examples() {
        let ev = extract_events_from_values(&[-0.5, -1.2, -0.3, 0.4], 0.0);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].duration, 3);
        assert!((ev[0].severity - 2.0).abs() < 1e-12);
        assert!((ev[0].peak - 1.2).abs() < 1e-12);
        assert!(extract_events_from_values(&[0.1, 2.0, 0.0], 0.0).is_empty());
        let ev = extract_events_from_values(&[-1.0, 1.0, -1.0], 0.0);
        assert_eq!(ev.len(), 2);
        assert!(ev.iter().all(|e| e.duration == 1));
    }

    #[test]
    fn events_use_record_t() {
        let s = series(IndexKind::Arspi, YearMonth::new(1900, 1).unwrap(), &[0.5, -1.0, -2.0, 0.5]);
        let ev = extract_events(&s, 0.0);
        assert_eq!((ev[0].start_index, ev[0].end_index), (2, 3));
        let mut buf = Vec::new();
        write_events_csv(&ev, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "start_t,end_t,duration,severity,peak\n2,3,2,3,2\n");
    }

    fn ev(d: usize, s: f64) -> DroughtEvent {
        DroughtEvent { start_index: 0, end_index: d - 1, duration: d, severity: s, peak: s }
    }

    #[test]
    fn return_period_examples() {
        let events: Vec<DroughtEvent> = (0..33).map(|i| ev(1, if i < 16 { 1.0 } else { 3.0 })).collect();
        // 32 events over 96 years, half of them above the level
        let half: Vec<DroughtEvent> = (0..32).map(|i| ev(1, if i < 16 { 1.0 } else { 3.0 })).collect();
        let t = return_period(&half, Characteristic::Severity, 2.0, 96.0).unwrap();
        assert_eq!(t, ReturnPeriod::Years(6.0));
        let t = return_period(&events, Characteristic::Severity, 0.5, 99.0).unwrap();
        assert_eq!(t, ReturnPeriod::Years(3.0));
        let t = return_period(&events, Characteristic::Severity, 5.0, 99.0).unwrap();
        assert_eq!(t, ReturnPeriod::Infinite);
        assert_eq!(t.to_string(), "inf");
        assert_eq!(return_period(&[], Characteristic::Peak, 0.0, 10.0), Err(Error::NoEvents));
    }

    proptest! {
        #[test]
        fn classify_is_monotone(a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(classify(hi).unwrap() <= classify(lo).unwrap());
        }

        #[test]
        fn events_partition_time_axis(xs in prop::collection::vec(-3.0f64..3.0, 0..60), thr in -1.5f64..0.5) {
            let events = extract_events_from_values(&xs, thr);
            let mut covered = vec![false; xs.len()];
            let mut last_end: Option<usize> = None;
            for e in &events {
                prop_assert_eq!(e.duration, e.end_index - e.start_index + 1);
                if let Some(le) = last_end {
                    prop_assert!(e.start_index > le + 1, "events must be separated by a gap");
                }
                last_end = Some(e.end_index);
                covered[e.start_index..=e.end_index].fill(true);
                prop_assert!(e.peak <= e.severity + 1e-12 || thr > 0.0);
                if thr <= 0.0 {
                    prop_assert!(e.severity >= 0.0);
                }
            }
            for (i, &x) in xs.iter().enumerate() {
                prop_assert_eq!(covered[i], x < thr);
            }
        }

        #[test]
        fn return_period_grows_with_level(
            sev in prop::collection::vec(0.0f64..10.0, 1..30),
            c1 in 0.0f64..10.0,
            c2 in 0.0f64..10.0,
        ) {
            let events: Vec<DroughtEvent> = sev.iter().map(|&s| ev(1, s)).collect();
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            let a = return_period(&events, Characteristic::Severity, lo, 50.0).unwrap().years();
            let b = return_period(&events, Characteristic::Severity, hi, 50.0).unwrap().years();
            prop_assert!(a <= b);
        }
    }
}
