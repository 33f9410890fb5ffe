//! Data ingestion, the built-in six-node benchmark, and result files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::scoring::PredictiveSample;
use crate::stochvol::ForecastDay;

/// Dated `T × p` return matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnsSeries {
    pub dates: Vec<String>,
    pub tickers: Vec<String>,
    /// One row per date.
    pub y: Vec<Vec<f64>>,
}

impl ReturnsSeries {
    pub fn new(dates: Vec<String>, tickers: Vec<String>, y: Vec<Vec<f64>>) -> Result<Self> {
        if dates.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: dates.len(),
                found: y.len(),
            });
        }
        let p = tickers.len();
        for row in &y {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse("returns must be finite".into()));
            }
        }
        if y.len() < 2 {
            return Err(Error::Parse(format!(
                "need at least 2 complete rows of returns, found {}",
                y.len()
            )));
        }
        Ok(ReturnsSeries { dates, tickers, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn p(&self) -> usize {
        self.tickers.len()
    }

    pub fn index_of(&self, date: &str) -> Option<usize> {
        self.dates.iter().position(|d| d == date)
    }

    /// Rows `0..end` as a new series (no length check).
    pub fn prefix(&self, end: usize) -> ReturnsSeries {
        ReturnsSeries {
            dates: self.dates[..end].to_vec(),
            tickers: self.tickers.clone(),
            y: self.y[..end].to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["date".to_string()];
        header.extend(self.tickers.iter().cloned());
        w.write_record(&header)?;
        for (d, row) in self.dates.iter().zip(&self.y) {
            let mut rec = vec![d.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IngestMode {
    Prices,
    Returns,
}

impl std::str::FromStr for IngestMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prices" => Ok(IngestMode::Prices),
            "returns" => Ok(IngestMode::Returns),
            other => Err(Error::Config(format!("unknown ingest mode `{other}`"))),
        }
    }
}

/// Result of [`ingest`], with the number of rows dropped for missing cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Ingested {
    pub series: ReturnsSeries,
    pub dropped_rows: usize,
}

fn parse_cell(cell: &str, line: usize) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse `{cell}` as a number")))
}

/// Reads a `date,<ticker>,...` CSV. In price mode consecutive complete rows
/// are turned into log-returns.
pub fn ingest<R: Read>(input: R, mode: IngestMode) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || header.get(0).map(str::trim) != Some("date") {
        return Err(Error::Parse("header must be `date,<ticker1>,...`".into()));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut dates: Vec<String> = Vec::new();
    let mut rows = Vec::new();
    let mut dropped = 0usize;
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = idx + 2;
        let date = rec.get(0).unwrap_or("").trim().to_string();
        if date.is_empty() {
            return Err(Error::Parse(format!("line {line}: missing date")));
        }
        let mut values = Vec::with_capacity(tickers.len());
        let mut complete = true;
        for cell in rec.iter().skip(1) {
            match parse_cell(cell, line)? {
                Some(v) => values.push(v),
                None => complete = false,
            }
        }
        if let Some(prev) = dates.last() {
            if date.as_str() <= prev.as_str() {
                return Err(Error::Parse(format!("line {line}: dates must be strictly increasing")));
            }
        }
        if complete {
            dates.push(date);
            rows.push(values);
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} row(s) with missing values");
    }
    let (dates, y) = match mode {
        IngestMode::Returns => (dates, rows),
        IngestMode::Prices => {
            for row in &rows {
                if row.iter().any(|&v| v <= 0.0) {
                    return Err(Error::Parse("prices must be positive".into()));
                }
            }
            let y = rows
                .windows(2)
                .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (b / a).ln()).collect())
                .collect();
            (dates.into_iter().skip(1).collect(), y)
        }
    };
    Ok(Ingested {
        series: ReturnsSeries::new(dates, tickers, y)?,
        dropped_rows: dropped,
    })
}

pub fn ingest_path(path: &Path, mode: IngestMode) -> Result<Ingested> {
    ingest(File::open(path)?, mode)
}

/// The tridiagonal-plus-corner covariance `A` of the six-node cycle benchmark.
pub fn wangli6_covariance() -> SymMatrix {
    let mut a = SymMatrix::identity(6);
    for i in 0..5 {
        a.set(i, i + 1, 0.5);
    }
    a.set(0, 5, 0.4);
    a
}

/// `U = n A⁻¹` with `n = 18`.
pub fn builtin_wangli6() -> (SymMatrix, f64) {
    let n = 18.0;
    let u = wangli6_covariance()
        .inverse()
        .expect("benchmark covariance is positive definite")
        .scaled(n);
    (u, n)
}

/// Reference edge inclusion probabilities for the six-node benchmark. The
/// source table is asymmetric at (3,5), 0.0098 above the diagonal and 0.098
/// below; the symmetric value 0.098 is used.
pub fn wangli6_target() -> SymMatrix {
    let upper = [
        [1.0, 0.969, 0.106, 0.085, 0.113, 0.85],
        [0.0, 1.0, 0.98, 0.098, 0.081, 0.115],
        [0.0, 0.0, 1.0, 0.982, 0.098, 0.086],
        [0.0, 0.0, 0.0, 1.0, 0.98, 0.106],
        [0.0, 0.0, 0.0, 0.0, 1.0, 0.97],
        [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ];
    SymMatrix::from_fn(6, |i, j| upper[i][j])
}

/// Scatter matrix `Σ w_t Y_t Y_t′` of rows of `y`.
pub fn scatter(y: &[Vec<f64>], weights: Option<&[f64]>) -> SymMatrix {
    let p = y.first().map_or(0, Vec::len);
    let mut u = SymMatrix::zeros(p);
    for (t, row) in y.iter().enumerate() {
        u.add_outer(row, weights.map_or(1.0, |w| w[t]));
    }
    u
}

pub fn write_matrix(path: &Path, m: &SymMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    m.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<SymMatrix> {
    SymMatrix::read_csv(File::open(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Draw matrix with a ticker header, one draw per row.
pub fn write_draws<W: Write>(out: W, tickers: &[String], draws: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(tickers)?;
    for d in draws {
        w.serialize(d)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_draws<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_reader(input);
    let tickers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut draws = Vec::new();
    for rec in rdr.deserialize() {
        let row: Vec<f64> = rec?;
        draws.push(row);
    }
    Ok((tickers, draws))
}

fn pred_file(dir: &Path, date: &str) -> Result<std::path::PathBuf> {
    if date.is_empty() || date.contains(['/', '\\']) || date.starts_with('.') {
        return Err(Error::Config(format!("date `{date}` cannot be used in a file name")));
    }
    Ok(dir.join(format!("pred_{date}.csv")))
}

/// Writes `pred_<date>.csv` per day and `xvol.csv` (`date,x_next_mean`).
pub fn write_predictions(dir: &Path, tickers: &[String], days: &[ForecastDay]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut xvol = csv::Writer::from_path(dir.join("xvol.csv"))?;
    xvol.write_record(["date", "x_next_mean"])?;
    for d in days {
        let f = BufWriter::new(File::create(pred_file(dir, &d.date)?)?);
        write_draws(f, tickers, &d.draws)?;
        xvol.serialize((&d.date, d.x_next_mean))?;
    }
    xvol.flush()?;
    Ok(())
}

/// Reads a directory written by [`write_predictions`], in `xvol.csv` order.
pub fn read_predictions(dir: &Path) -> Result<(Vec<String>, Vec<PredictiveSample>)> {
    let mut rdr = csv::Reader::from_path(dir.join("xvol.csv"))?;
    let mut tickers: Option<Vec<String>> = None;
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let (date, _): (String, f64) = rec?;
        let (t, draws) = read_draws(File::open(pred_file(dir, &date)?)?)?;
        match &tickers {
            Some(prev) if prev != &t => {
                return Err(Error::LabelMismatch(format!("tickers differ in pred_{date}.csv")));
            }
            None => tickers = Some(t),
            _ => {}
        }
        out.push(PredictiveSample { label: date, draws });
    }
    Ok((tickers.unwrap_or_default(), out))
}
