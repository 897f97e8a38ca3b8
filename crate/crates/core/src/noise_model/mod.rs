//! Sensor and sample noise.
//!
//! Sample noise is a single-point field PSD S_E(f) = A / f^α with a
//! frequency-independent spatial correlation C(d) between the two ion
//! positions. The gradiometer sees S_diff = 2 S_E (1 − C); the total
//! differential ASD adds the sensor floor in quadrature.

mod allan;
mod synthesis;
mod timeseries;
mod welch;

pub use allan::{overlapping_allan_deviation, AllanPoint};
pub use synthesis::synthesize_timeseries;
pub use timeseries::{read_timeseries_csv, write_timeseries_csv, TimeSeries, TIMESERIES_HEADER};
pub use welch::{welch_psd, PsdEstimate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// s_sample ≤ GATE_RATIO · s_sens keeps the integration-time penalty below
/// 20 %.
pub const GATE_RATIO: f64 = 0.45;

/// Slow-down factor at the gate, 1 + 0.45².
pub const GATE_MAX_SLOWDOWN: f64 = 1.0 + GATE_RATIO * GATE_RATIO;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorMode {
    Ac,
    Dc,
}

/// Noise-equivalent field ASDs of the electrometer protocol, V·m⁻¹/√Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSensitivity {
    pub s_dc: f64,
    pub s_ac: f64,
    /// demodulation frequency (Hz)
    pub f0: f64,
}

impl SensorSensitivity {
    pub fn new(s_dc: f64, s_ac: f64, f0: f64) -> Result<Self> {
        for (name, v) in [("s_dc", s_dc), ("s_ac", s_ac), ("f0", f0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(Self { s_dc, s_ac, f0 })
    }

    pub fn asd(&self, mode: SensorMode) -> f64 {
        match mode {
            SensorMode::Ac => self.s_ac,
            SensorMode::Dc => self.s_dc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationShape {
    Exponential,
    Gaussian,
    None,
}

/// Sample field noise: S_E(f) = amplitude / f^alpha (V²m⁻²/Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleNoiseModel {
    amplitude: f64,
    alpha: f64,
    correlation_length: f64,
    shape: CorrelationShape,
}

impl SampleNoiseModel {
    pub fn new(amplitude: f64, alpha: f64, correlation_length: f64, shape: CorrelationShape) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::Domain(format!("noise amplitude must be >= 0, got {amplitude}")));
        }
        if !(0.0..=3.0).contains(&alpha) {
            return Err(Error::Domain(format!("spectral exponent must be in [0, 3], got {alpha}")));
        }
        if shape != CorrelationShape::None && !(correlation_length > 0.0) {
            return Err(Error::Domain(format!(
                "correlation length must be > 0, got {correlation_length}"
            )));
        }
        Ok(Self {
            amplitude,
            alpha,
            correlation_length,
            shape,
        })
    }

    /// No sample noise at all.
    pub fn quiet() -> Self {
        Self {
            amplitude: 0.0,
            alpha: 1.0,
            correlation_length: 0.0,
            shape: CorrelationShape::None,
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn correlation_length(&self) -> f64 {
        self.correlation_length
    }

    pub fn shape(&self) -> CorrelationShape {
        self.shape
    }

    /// S_E(f), single point.
    pub fn single_point_psd(&self, f: f64) -> f64 {
        self.amplitude * f.powf(-self.alpha)
    }

    /// Spatial correlation C(d) between points a baseline d apart.
    pub fn correlation(&self, d: f64) -> f64 {
        let l = self.correlation_length;
        match self.shape {
            CorrelationShape::Exponential => (-d / l).exp(),
            CorrelationShape::Gaussian => (-d * d / (2.0 * l * l)).exp(),
            CorrelationShape::None => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    pub sensor: SensorSensitivity,
    pub sample: SampleNoiseModel,
    pub mode: SensorMode,
}

impl NoiseBudget {
    pub fn sensor_asd(&self) -> f64 {
        self.sensor.asd(self.mode)
    }

    /// Frequency at which the sample noise is combined with the sensor floor:
    /// f0 for lock-in operation, 1/(2 T_live) for echo (DC) operation.
    pub fn evaluation_frequency(&self, t_live: f64) -> f64 {
        match self.mode {
            SensorMode::Ac => self.sensor.f0,
            SensorMode::Dc => 1.0 / (2.0 * t_live),
        }
    }

    /// s_sample = √S_diff at (f, d).
    pub fn sample_asd(&self, f: f64, d: f64) -> Result<f64> {
        Ok(differential_psd(&self.sample, f, d)?.sqrt())
    }

    /// Largest sample ASD that passes the feasibility gate.
    pub fn gate_threshold(&self) -> f64 {
        GATE_RATIO * self.sensor_asd()
    }
}

fn check_frequency(f: f64) -> Result<()> {
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::Domain(format!("frequency must be > 0, got {f}")));
    }
    Ok(())
}

/// S_diff(f) = 2 S_E(f) [1 − C(d)], V²m⁻²/Hz.
pub fn differential_psd(sample: &SampleNoiseModel, f: f64, d: f64) -> Result<f64> {
    check_frequency(f)?;
    Ok(2.0 * sample.single_point_psd(f) * (1.0 - sample.correlation(d)))
}

/// s_tot = √(s_sens² + s_sample²), V·m⁻¹/√Hz.
pub fn total_asd(budget: &NoiseBudget, f: f64, d: f64) -> Result<f64> {
    let s_sens = budget.sensor_asd();
    let s_sample = budget.sample_asd(f, d)?;
    Ok(s_sens.hypot(s_sample))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slowdown {
    /// τ/τ₀ = 1 + (s_sample/s_sens)²
    pub factor: f64,
    pub s_sample: f64,
    pub s_sens: f64,
    pub gate_pass: bool,
}

/// Integration-time penalty of the sample noise relative to the
/// sensor-limited case.
pub fn slowdown_factor(budget: &NoiseBudget, f: f64, d: f64) -> Result<Slowdown> {
    let s_sens = budget.sensor_asd();
    let s_sample = budget.sample_asd(f, d)?;
    Ok(slowdown_from_asds(s_sample, s_sens))
}

pub fn slowdown_from_asds(s_sample: f64, s_sens: f64) -> Slowdown {
    let r = s_sample / s_sens;
    let factor = 1.0 + r * r;
    Slowdown {
        factor,
        s_sample,
        s_sens,
        gate_pass: factor <= GATE_MAX_SLOWDOWN,
    }
}

/// Least-squares slope of log10(y) against log10(x) over points with
/// x, y > 0.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.log10(), b.log10()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData("slope fit needs two positive points".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("slope fit needs distinct abscissae".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sensor() -> SensorSensitivity {
        SensorSensitivity::new(1.97e-3, 0.96e-3, 5.8).unwrap()
    }

    #[test]
    fn long_correlation_cancels_sample_noise() {
        let m = SampleNoiseModel::new(1e-6, 1.0, 1.0, CorrelationShape::Exponential).unwrap();
        let psd = differential_psd(&m, 5.8, 3.45e-6).unwrap();
        assert!(psd < 1e-5 * 2.0 * m.single_point_psd(5.8));
    }

    #[test]
    fn uncorrelated_is_root_two_larger() {
        let m = SampleNoiseModel::new(3e-7, 1.0, 0.0, CorrelationShape::None).unwrap();
        let ratio = differential_psd(&m, 2.0, 3.45e-6).unwrap().sqrt() / m.single_point_psd(2.0).sqrt();
        assert_relative_eq!(ratio, 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn exponential_at_one_correlation_length() {
        let m = SampleNoiseModel::new(2e-7, 0.0, 5e-6, CorrelationShape::Exponential).unwrap();
        assert_relative_eq!(
            differential_psd(&m, 1.0, 5e-6).unwrap(),
            2.0 * 2e-7 * (1.0 - (-1f64).exp()),
            max_relative = 1e-14
        );
        let g = SampleNoiseModel::new(2e-7, 0.0, 5e-6, CorrelationShape::Gaussian).unwrap();
        assert_relative_eq!(g.correlation(5e-6), (-0.5f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn total_without_sample_is_sensor() {
        let b = NoiseBudget {
            sensor: sensor(),
            sample: SampleNoiseModel::quiet(),
            mode: SensorMode::Ac,
        };
        assert_eq!(total_asd(&b, 5.8, 3.45e-6).unwrap(), 0.96e-3);
        assert!(total_asd(&b, 0.0, 3.45e-6).is_err());
    }

    #[test]
    fn slowdown_examples() {
        assert_eq!(slowdown_from_asds(1.0, 1.0).factor, 2.0);
        let s = slowdown_from_asds(0.45 * 0.96e-3, 0.96e-3);
        assert_relative_eq!(s.factor, 1.2025, max_relative = 1e-14);
        assert!(s.gate_pass);
        assert!(!slowdown_from_asds(0.46, 1.0).gate_pass);
        let dc = NoiseBudget {
            sensor: sensor(),
            sample: SampleNoiseModel::quiet(),
            mode: SensorMode::Dc,
        };
        assert!((dc.gate_threshold() - 0.88e-3).abs() / 0.88e-3 < 0.01);
    }

    #[test]
    fn dc_mode_evaluates_at_half_inverse_live_time() {
        let b = NoiseBudget {
            sensor: sensor(),
            sample: SampleNoiseModel::quiet(),
            mode: SensorMode::Dc,
        };
        assert_relative_eq!(b.evaluation_frequency(0.172), 1.0 / 0.344);
        let ac = NoiseBudget { mode: SensorMode::Ac, ..b };
        assert_eq!(ac.evaluation_frequency(0.172), 5.8);
    }

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = (1..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-1.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 1.5).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(SampleNoiseModel::new(-1.0, 1.0, 1.0, CorrelationShape::None).is_err());
        assert!(SampleNoiseModel::new(1.0, 3.5, 1.0, CorrelationShape::None).is_err());
        assert!(SampleNoiseModel::new(1.0, 1.0, 0.0, CorrelationShape::Gaussian).is_err());
        assert!(SensorSensitivity::new(0.0, 1.0, 1.0).is_err());
    }
}
