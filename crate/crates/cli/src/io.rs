//! Two-column CSV signals: `time_s,accel_ms2`.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use shockwave::Signal;

pub const TIME_COLUMN: &str = "time_s";
pub const ACCEL_COLUMN: &str = "accel_ms2";

/// Largest tolerated relative deviation of a time step from the median step.
pub const MAX_JITTER: f64 = 1e-6;

/// Fixed 17-significant-digit rendering used in every output file.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn read_signal(path: &Path, sample_rate: Option<f64>) -> Result<Signal> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_signal(file, sample_rate).with_context(|| format!("reading {}", path.display()))
}

/// Parses a signal CSV. The sample interval is the median time step unless
/// `sample_rate` overrides it; steps deviating from the median by more than
/// [`MAX_JITTER`] relative are rejected.
pub fn parse_signal<R: Read>(input: R, sample_rate: Option<f64>) -> Result<Signal> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().context("line 1: missing header")?.clone();
    if headers.len() != 2 || &headers[0] != TIME_COLUMN || &headers[1] != ACCEL_COLUMN {
        bail!("line 1: expected header `{TIME_COLUMN},{ACCEL_COLUMN}`, found `{}`", headers.iter().collect::<Vec<_>>().join(","));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| anyhow!("malformed CSV: {e}"))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            bail!("line {line}: expected 2 fields, found {}", record.len());
        }
        let parse = |i: usize| -> Result<f64> {
            let v: f64 = record[i]
                .parse()
                .map_err(|_| anyhow!("line {line}: `{}` is not a number", &record[i]))?;
            if !v.is_finite() {
                bail!("line {line}: value is not finite");
            }
            Ok(v)
        };
        times.push((parse(0)?, line));
        values.push(parse(1)?);
    }
    if values.is_empty() {
        bail!("no samples");
    }
    if values.len() < 2 {
        bail!("need at least 2 samples, found 1");
    }

    let steps: Vec<f64> = times.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let dt = match sample_rate {
        Some(fs) => {
            if !(fs.is_finite() && fs > 0.0) {
                bail!("sample rate must be positive, got {fs}");
            }
            1.0 / fs
        }
        None => {
            let mut sorted = steps.clone();
            sorted.sort_by(f64::total_cmp);
            let median = sorted[sorted.len() / 2];
            if !(median > 0.0) {
                bail!("timestamps must increase");
            }
            for (k, &s) in steps.iter().enumerate() {
                if (s - median).abs() > MAX_JITTER * median {
                    bail!(
                        "line {}: non-uniform time step {s} s (median {median} s)",
                        times[k + 1].1
                    );
                }
            }
            median
        }
    };
    Signal::new(times[0].0, dt, values).map_err(|e| anyhow!("{e}"))
}

/// Writes `time_s` followed by one column per entry of `columns`.
pub fn write_columns<W: Write>(out: W, time: &[f64], columns: &[(&str, &[f64])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![TIME_COLUMN];
    header.extend(columns.iter().map(|c| c.0));
    w.write_record(&header)?;
    for (k, &t) in time.iter().enumerate() {
        let mut row = vec![fmt_f64(t)];
        row.extend(columns.iter().map(|c| fmt_f64(c.1[k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_signal<W: Write>(out: W, s: &Signal) -> Result<()> {
    let time: Vec<f64> = (0..s.len()).map(|k| s.time(k)).collect();
    write_columns(out, &time, &[(ACCEL_COLUMN, &s.samples)])
}

/// Generic table with a free-form header, all cells numeric.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}
