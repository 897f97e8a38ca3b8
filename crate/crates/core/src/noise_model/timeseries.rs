use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const TIMESERIES_HEADER: [&str; 2] = ["time_s", "field_v_per_m"];

/// Uniformly sampled field record; sample k is at t = k / sample_rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    sample_rate: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(sample_rate: f64, values: Vec<f64>) -> Self {
        Self { sample_rate, values }
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
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

    pub fn duration(&self) -> f64 {
        self.values.len() as f64 / self.sample_rate
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.sample_rate
    }
}

pub fn write_timeseries_csv<W: Write>(ts: &TimeSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIMESERIES_HEADER).map_err(csv_io)?;
    for (k, v) in ts.values.iter().enumerate() {
        w.write_record([ts.time(k).to_string(), v.to_string()]).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a two-column record and infers the sample rate from the first two
/// timestamps; the grid must be uniform to 1e-6 relative.
pub fn read_timeseries_csv<R: Read>(input: R) -> Result<TimeSeries> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_parse)?.clone();
    if headers.iter().collect::<Vec<_>>() != TIMESERIES_HEADER {
        return Err(Error::Parse(format!(
            "expected header {}, found {}",
            TIMESERIES_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_parse)?;
        let field = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Parse(format!("row {}: missing column {i}", line + 2)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)))
        };
        times.push(field(0)?);
        values.push(field(1)?);
    }
    if times.len() < 2 {
        return Err(Error::InsufficientData("time series needs at least 2 samples".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::Parse("timestamps must increase".into()));
    }
    for (k, &t) in times.iter().enumerate() {
        let expected = times[0] + k as f64 * dt;
        if (t - expected).abs() > 1e-6 * dt.max(expected.abs()) {
            return Err(Error::Parse(format!("non-uniform sampling at row {}", k + 2)));
        }
    }
    Ok(TimeSeries::new(1.0 / dt, values))
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn csv_parse(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
