//! Classical lock-in demodulation of per-shot field estimates.
//!
//! Each shot is multiplied by the known reference sign at its timestamp and
//! the products are averaged. With phase cycling the sensor response is
//! inverted on alternate shots (c_k = (−1)^k) and the reference carries the
//! same factor, so anything that does not flip with the sensor (a readout
//! offset, slow drift of the detection threshold) is cancelled pairwise.

use std::f64::consts::{FRAC_2_PI, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::noise_model::{synthesize_timeseries, SampleNoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceShape {
    /// sign(sin(2π f0 t + θ)); demodulated gain for a sine tone is 2/π
    Square,
    /// sin(2π f0 t + θ); demodulated gain is 1/2
    Sine,
}

impl ReferenceShape {
    /// Mean of reference × tone for a unit-amplitude tone in phase.
    pub fn gain(self) -> f64 {
        match self {
            ReferenceShape::Square => FRAC_2_PI,
            ReferenceShape::Sine => 0.5,
        }
    }

    fn value(self, arg: f64) -> f64 {
        match self {
            ReferenceShape::Square => {
                let s = arg.sin();
                if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            ReferenceShape::Sine => arg.sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpec {
    pub f0: f64,
    pub phase: f64,
    pub shape: ReferenceShape,
    pub phase_cycling: bool,
    /// Explicit per-shot reference values; replaces the generated pattern.
    pub pattern: Option<Vec<f64>>,
}

impl ReferenceSpec {
    pub fn square(f0: f64, phase_cycling: bool) -> Self {
        Self {
            f0,
            phase: 0.0,
            shape: ReferenceShape::Square,
            phase_cycling,
            pattern: None,
        }
    }

    fn values(&self, times: &[f64]) -> Result<Vec<f64>> {
        if let Some(p) = &self.pattern {
            if p.len() != times.len() {
                return Err(Error::Input(format!(
                    "reference has {} entries but the shot stream has {}",
                    p.len(),
                    times.len()
                )));
            }
            return Ok(p.clone());
        }
        Ok(times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let r = self.shape.value(2.0 * PI * self.f0 * t + self.phase);
                if self.phase_cycling && k % 2 == 1 {
                    -r
                } else {
                    r
                }
            })
            .collect())
    }
}

/// Per-shot field estimates (V/m) with their timestamps (s).
#[derive(Debug, Clone, PartialEq)]
pub struct ShotStream {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockinEstimate {
    /// mean of reference × shot value
    pub estimate: f64,
    /// estimate divided by the reference gain
    pub amplitude: f64,
    /// standard error from the scatter of per-cycle demodulated means
    pub std_error: f64,
    pub snr: f64,
    pub cycles: usize,
    pub shots: usize,
}

pub fn lockin_demodulate(stream: &ShotStream, reference: &ReferenceSpec) -> Result<LockinEstimate> {
    let n = stream.values.len();
    if stream.times.len() != n {
        return Err(Error::Input(format!(
            "{} timestamps for {} shot values",
            stream.times.len(),
            n
        )));
    }
    if !(reference.f0 > 0.0) {
        return Err(Error::Domain(format!("f0 must be > 0, got {}", reference.f0)));
    }
    if n < 2 {
        return Err(Error::InsufficientData("lock-in needs at least 2 shots".into()));
    }
    let t0 = stream.times[0];
    let dt = (stream.times[n - 1] - t0) / (n - 1) as f64;
    let span = stream.times[n - 1] - t0 + dt;
    let cycles = (span * reference.f0 * (1.0 + 1e-12)).floor() as usize;
    if cycles < 2 {
        return Err(Error::InsufficientData(format!(
            "stream covers {:.3} cycles of f0; at least 2 are needed",
            span * reference.f0
        )));
    }
    let r = reference.values(&stream.times)?;

    let mut sum = 0.0;
    let mut block_sum = vec![0.0; cycles];
    let mut block_count = vec![0usize; cycles];
    for ((&t, &x), &rk) in stream.times.iter().zip(&stream.values).zip(&r) {
        let y = rk * x;
        sum += y;
        let b = (((t - t0) * reference.f0 + 1e-9).floor() as usize).min(cycles - 1);
        block_sum[b] += y;
        block_count[b] += 1;
    }
    let estimate = sum / n as f64;
    let means: Vec<f64> = block_sum
        .iter()
        .zip(&block_count)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let b = means.len() as f64;
    let mean_of_means = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - mean_of_means).powi(2)).sum::<f64>() / (b - 1.0).max(1.0);
    let std_error = (var / b).sqrt();
    Ok(LockinEstimate {
        estimate,
        amplitude: estimate / reference.shape.gain(),
        std_error,
        snr: estimate.abs() / std_error,
        cycles,
        shots: n,
    })
}

/// Recipe for a synthetic shot stream: a tone a·sin(2π f0 t) seen through
/// the sensor, optional sample noise, white sensor noise and a constant
/// readout offset.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub amplitude: f64,
    pub f0: f64,
    pub shot_rate: f64,
    pub duration: f64,
    pub offset: f64,
    pub phase_cycling: bool,
    /// one-sided white sensor ASD (V·m⁻¹/√Hz)
    pub sensor_asd: f64,
    /// sample noise model and ion baseline (m)
    pub sample: Option<(SampleNoiseModel, f64)>,
    pub seed: u64,
}

pub fn modulated_shot_stream(spec: &StreamSpec) -> Result<ShotStream> {
    if !(spec.shot_rate > 0.0 && spec.duration > 0.0) {
        return Err(Error::Domain("shot rate and duration must be > 0".into()));
    }
    let n = (spec.duration * spec.shot_rate).round() as usize;
    let times: Vec<f64> = (0..n).map(|k| k as f64 / spec.shot_rate).collect();
    let sample = match &spec.sample {
        Some((model, d)) if model.amplitude() > 0.0 => {
            Some(synthesize_timeseries(model, *d, spec.duration, spec.shot_rate, spec.seed)?)
        }
        _ => None,
    };
    let sigma = spec.sensor_asd * (spec.shot_rate / 2.0).sqrt();
    let white = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);

    let values = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut field = spec.amplitude * (2.0 * PI * spec.f0 * t).sin();
            if let Some(s) = &sample {
                field += s.values()[k];
            }
            let c = if spec.phase_cycling && k % 2 == 1 { -1.0 } else { 1.0 };
            let readout = if sigma > 0.0 { white.sample(&mut rng) } else { 0.0 };
            c * field + readout + spec.offset
        })
        .collect();
    Ok(ShotStream { times, values })
}
