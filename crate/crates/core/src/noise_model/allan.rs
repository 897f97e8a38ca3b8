use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllanPoint {
    /// averaging time actually used, m / fs
    pub tau: f64,
    pub deviation: f64,
    /// averaging factor in samples
    pub m: usize,
}

/// Overlapping Allan deviation of uniformly sampled values at the requested
/// averaging times. Each τ is rounded to a whole number of samples.
///
/// σ²(τ) = ⟨(ȳ_{j+m} − ȳ_j)²⟩ / 2 over all overlapping windows, with ȳ_j
/// the mean of m consecutive samples starting at j.
pub fn overlapping_allan_deviation(values: &[f64], sample_rate: f64, taus: &[f64]) -> Result<Vec<AllanPoint>> {
    let n = values.len();
    let duration = n as f64 / sample_rate;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut s = 0.0;
    for &v in values {
        s += v;
        prefix.push(s);
    }

    taus.iter()
        .map(|&tau| {
            if !(tau > 0.0) {
                return Err(Error::Domain(format!("averaging time must be > 0, got {tau}")));
            }
            if tau > duration / 4.0 {
                return Err(Error::InsufficientData(format!(
                    "averaging time {tau} s exceeds a quarter of the {duration} s record"
                )));
            }
            let m = ((tau * sample_rate).round() as usize).max(1);
            let count = n + 1 - 2 * m;
            let mf = m as f64;
            let mut sum = 0.0;
            for j in 0..count {
                let a = (prefix[j + m] - prefix[j]) / mf;
                let b = (prefix[j + 2 * m] - prefix[j + m]) / mf;
                sum += (b - a) * (b - a);
            }
            Ok(AllanPoint {
                tau: mf / sample_rate,
                deviation: (sum / (2.0 * count as f64)).sqrt(),
                m,
            })
        })
        .collect()
}
