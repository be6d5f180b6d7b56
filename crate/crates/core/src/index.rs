use std::io::{Read, Write};

use crate::analysis::{classify, Category};
use crate::error::{Error, Result};
use crate::fmt::format_f64;
use crate::ingest::{MtrSeries, YearMonth};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    Spi,
    Arspi,
}

impl IndexKind {
    /// Name of the value column in CSV output.
    pub fn column(&self) -> &'static str {
        match self {
            IndexKind::Spi => "index",
            IndexKind::Arspi => "arspi",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexRecord {
    /// Position in the MTR series.
    pub t: usize,
    pub month: YearMonth,
    /// Raw moving total (0 for dry windows).
    pub mtr: f64,
    pub value: f64,
    pub category: Category,
}

pub(crate) fn record(mtr: &MtrSeries, t: usize, value: f64) -> Result<IndexRecord> {
    Ok(IndexRecord { t, month: mtr.month_at(t), mtr: mtr.values()[t], value, category: classify(value)? })
}

/// Per-window SPI or ARSPI values.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    kind: IndexKind,
    window: usize,
    records: Vec<IndexRecord>,
}

impl IndexSeries {
    pub fn new(kind: IndexKind, window: usize, records: Vec<IndexRecord>) -> Self {
        Self { kind, window, records }
    }

    pub fn kind(&self) -> IndexKind {
        self.kind
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn records(&self) -> &[IndexRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.value).collect()
    }

    pub fn min(&self) -> f64 {
        self.records.iter().map(|r| r.value).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.records.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Length of the series in years.
    pub fn years(&self) -> f64 {
        self.records.len() as f64 / 12.0
    }

    /// Writes `t,year,month,mtr,<index|arspi>,category`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t", "year", "month", "mtr", self.kind.column(), "category"])?;
        for r in &self.records {
            wtr.write_record([
                r.t.to_string(),
                r.month.year.to_string(),
                r.month.month.to_string(),
                format_f64(r.mtr),
                format_f64(r.value),
                r.category.as_str().to_string(),
            ])?;
        }
        wtr.flush()
    }

    /// Reads a series written by [`IndexSeries::write_csv`]; the value column
    /// name decides the kind.
    pub fn read_csv<R: Read>(reader: R, window: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::MalformedRow { row: 1, reason: e.to_string() })?.clone();
        let cols: Vec<&str> = header.iter().collect();
        let kind = match cols.as_slice() {
            ["t", "year", "month", "mtr", "index", "category"] => IndexKind::Spi,
            ["t", "year", "month", "mtr", "arspi", "category"] => IndexKind::Arspi,
            _ => {
                return Err(Error::MalformedRow {
                    row: 1,
                    reason: format!("unexpected index header `{}`", cols.join(",")),
                })
            }
        };
        let mut records = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(|e| Error::MalformedRow { row, reason: e.to_string() })?;
            let bad = |what: &str| Error::MalformedRow { row, reason: format!("bad {what}") };
            let value: f64 = rec[4].parse().map_err(|_| bad("index value"))?;
            records.push(IndexRecord {
                t: rec[0].parse().map_err(|_| bad("t"))?,
                month: YearMonth::new(
                    rec[1].parse().map_err(|_| bad("year"))?,
                    rec[2].parse().map_err(|_| bad("month"))?,
                )
                .map_err(|_| bad("month"))?,
                mtr: rec[3].parse().map_err(|_| bad("mtr"))?,
                value,
                category: classify(value).map_err(|_| bad("index value"))?,
            });
        }
        Ok(Self { kind, window, records })
    }
}
