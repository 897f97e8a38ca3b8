use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// One-sided PSD estimate on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub frequencies: Vec<f64>,
    pub psd: Vec<f64>,
    pub segments: usize,
}

/// Welch estimate: Hann window, 50 % overlap, per-segment mean removed,
/// one-sided density normalization (units²/Hz).
pub fn welch_psd(values: &[f64], sample_rate: f64, segment_len: usize) -> Result<PsdEstimate> {
    if segment_len < 8 {
        return Err(Error::Domain(format!("segment length must be >= 8, got {segment_len}")));
    }
    if values.len() < segment_len {
        return Err(Error::InsufficientData(format!(
            "{} samples is shorter than one segment of {segment_len}",
            values.len()
        )));
    }
    let hop = segment_len / 2;
    let window: Vec<f64> = (0..segment_len)
        .map(|i| {
            let s = (std::f64::consts::PI * i as f64 / segment_len as f64).sin();
            s * s
        })
        .collect();
    let w2: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment_len);

    let bins = segment_len / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let mut segments = 0;
    let mut start = 0;
    while start + segment_len <= values.len() {
        let seg = &values[start..start + segment_len];
        let mean = seg.iter().sum::<f64>() / segment_len as f64;
        for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex64::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }

    let norm = 1.0 / (sample_rate * w2 * segments as f64);
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (segment_len % 2 == 0 && k == bins - 1) { 1.0 } else { 2.0 };
            a * norm * one_sided
        })
        .collect();
    let frequencies = (0..bins).map(|k| k as f64 * sample_rate / segment_len as f64).collect();
    Ok(PsdEstimate {
        frequencies,
        psd,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_power_is_recovered() {
        // ∫ PSD df = a²/2 for a sine of amplitude a
        let fs = 100.0;
        let a = 0.3;
        let x: Vec<f64> = (0..8192)
            .map(|i| a * (2.0 * std::f64::consts::PI * 12.5 * i as f64 / fs).sin())
            .collect();
        let est = welch_psd(&x, fs, 512).unwrap();
        let df = fs / 512.0;
        let power: f64 = est.psd.iter().sum::<f64>() * df;
        // Hann equivalent noise bandwidth is 1.5 bins
        assert!((power - a * a / 2.0).abs() / (a * a / 2.0) < 0.02, "{power}");
        assert_eq!(est.segments, 31);
    }

    #[test]
    fn short_input_is_rejected() {
        assert!(welch_psd(&[0.0; 100], 1.0, 256).is_err());
    }
}
