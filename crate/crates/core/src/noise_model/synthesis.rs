use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{differential_psd, SampleNoiseModel, TimeSeries};
use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 1 << 10;

/// Seeded differential-field time series with one-sided PSD
/// 2 S_E(f) (1 − C(d)).
///
/// White Gaussian spectral amplitudes are scaled bin by bin so that the
/// expected one-sided periodogram equals the target; the DC bin is zeroed
/// (zero-mean output) and the spectrum is Hermitian so the inverse FFT is
/// real.
pub fn synthesize_timeseries(
    sample: &SampleNoiseModel,
    baseline: f64,
    duration: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<TimeSeries> {
    if !(sample_rate > 0.0) || !(duration > 0.0) {
        return Err(Error::Domain("duration and sample rate must be > 0".into()));
    }
    let n = (duration * sample_rate).round() as usize;
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "synthesis needs at least {MIN_SAMPLES} samples, duration × rate gives {n}"
        )));
    }
    if sample.amplitude() == 0.0 {
        return Ok(TimeSeries::new(sample_rate, vec![0.0; n]));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    let df = sample_rate / n as f64;
    let half = n / 2;
    for k in 1..=half {
        let f = k as f64 * df;
        let psd = differential_psd(sample, f, baseline)?;
        // one-sided periodogram P_k = 2|X_k|²/(fs N), Nyquist bin not doubled
        if n % 2 == 0 && k == half {
            let scale = (psd * sample_rate * n as f64).sqrt();
            spectrum[k] = Complex64::new(scale * normal(), 0.0);
        } else {
            let scale = (psd * sample_rate * n as f64 / 4.0).sqrt();
            let x = Complex64::new(scale * normal(), scale * normal());
            spectrum[k] = x;
            spectrum[n - k] = x.conj();
        }
    }

    let fft = FftPlanner::new().plan_fft_inverse(n);
    fft.process(&mut spectrum);
    let values = spectrum.iter().map(|c| c.re / n as f64).collect();
    Ok(TimeSeries::new(sample_rate, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise_model::CorrelationShape;

    #[test]
    fn zero_amplitude_gives_zeros() {
        let m = SampleNoiseModel::new(0.0, 1.0, 0.0, CorrelationShape::None).unwrap();
        let ts = synthesize_timeseries(&m, 3.45e-6, 20.0, 100.0, 1).unwrap();
        assert_eq!(ts.len(), 2000);
        assert!(ts.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_short_is_rejected() {
        let m = SampleNoiseModel::new(1.0, 1.0, 0.0, CorrelationShape::None).unwrap();
        assert!(synthesize_timeseries(&m, 1e-6, 1.0, 100.0, 1).is_err());
    }

    #[test]
    fn zero_mean_and_deterministic() {
        let m = SampleNoiseModel::new(1e-8, 1.0, 0.0, CorrelationShape::None).unwrap();
        let a = synthesize_timeseries(&m, 3.45e-6, 40.0, 64.0, 9).unwrap();
        let b = synthesize_timeseries(&m, 3.45e-6, 40.0, 64.0, 9).unwrap();
        assert_eq!(a, b);
        let mean = a.values().iter().sum::<f64>() / a.len() as f64;
        assert!(mean.abs() < 1e-15);
    }

    #[test]
    fn white_level_matches_target() {
        let m = SampleNoiseModel::new(4e-8, 0.0, 0.0, CorrelationShape::None).unwrap();
        let target = 2.0 * 4e-8;
        let mut mean = 0.0;
        for seed in 0..8 {
            let ts = synthesize_timeseries(&m, 3.45e-6, 256.0, 64.0, seed).unwrap();
            let est = crate::noise_model::welch_psd(ts.values(), 64.0, 1024).unwrap();
            mean += est.psd[10..500].iter().sum::<f64>() / 490.0 / 8.0;
        }
        assert!((mean / target - 1.0).abs() < 0.02, "{}", mean / target);
    }
}
