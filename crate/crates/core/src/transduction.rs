//! Analytic field-to-phase transduction of the spin-dependent-force sequence.
//!
//! The interrogation Hamiltonians are
//!
//! ```text
//! H_SDF(t) = ħ g (a e^{iδt} + a† e^{-iδt}) ŝ
//! H_ext    = (e ΔE_x / √2) x0 (a + a†)
//! ```
//!
//! Both are linear in a, a†, so the second-order Magnus expansion is exact.
//! The relative phase φ of |↓↑⟩ with respect to |↑↓⟩ is φ = G_E ΔE_x with
//!
//! ```text
//! G_E = (√2 e g x0 / ħ) (sin δT / δ² − T cos δT / δ)
//! ```
//!
//! which at loop closure δT = 2πN equals −2πN √2 e g x0 / (ħ δ²). The sign
//! is kept; readout depends only on |φ|.

use std::f64::consts::{PI, SQRT_2};

use crate::constants::{ELEMENTARY_CHARGE, HBAR};
use crate::error::{Error, Result};
use crate::ion_crystal::TwoIonCrystal;

/// Eigenvalue of the differential spin operator ŝ on |↑↓⟩; |↓↑⟩ carries the
/// negative value and |↑↑⟩, |↓↓⟩ carry zero. With ±½ the branch separation
/// Δs = 1 reproduces G_E above.
pub const SPIN_DIFFERENTIAL_EIGENVALUE: f64 = 0.5;

/// Spin-dependent-force interrogation parameters.
///
/// The closure error ε = δT − 2πN is always derived from (δ, T, N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfSequence {
    g: f64,
    delta: f64,
    duration: f64,
    loops: u32,
    nbar: f64,
}

impl SdfSequence {
    /// `g`, `delta` in rad/s, `duration` T in s.
    pub fn new(g: f64, delta: f64, duration: f64, loops: u32, nbar: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::Domain(format!("interrogation time must be > 0, got {duration}")));
        }
        if loops < 1 {
            return Err(Error::Domain("loop count N must be >= 1".into()));
        }
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::Domain(format!("thermal occupation must be >= 0, got {nbar}")));
        }
        if !g.is_finite() || !delta.is_finite() {
            return Err(Error::Domain("g and δ must be finite".into()));
        }
        Ok(Self {
            g,
            delta,
            duration,
            loops,
            nbar,
        })
    }

    /// Sequence with T chosen so that δT = 2πN + ε.
    pub fn with_closure_error(g: f64, delta: f64, loops: u32, epsilon: f64, nbar: f64) -> Result<Self> {
        if delta == 0.0 {
            return Err(Error::Domain("detuning δ must be nonzero".into()));
        }
        let duration = (2.0 * PI * loops as f64 + epsilon) / delta;
        Self::new(g, delta, duration, loops, nbar)
    }

    /// Closed-loop sequence, δT = 2πN.
    pub fn closed(g: f64, delta: f64, loops: u32, nbar: f64) -> Result<Self> {
        Self::with_closure_error(g, delta, loops, 0.0, nbar)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn loops(&self) -> u32 {
        self.loops
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    /// ε = δT − 2πN (rad)
    pub fn closure_error(&self) -> f64 {
        self.delta * self.duration - 2.0 * PI * self.loops as f64
    }
}

/// Phase per unit differential field, rad/(V/m). Signed.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TransductionGain(f64);

impl TransductionGain {
    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn magnitude(&self) -> f64 {
        self.0.abs()
    }
}

/// Prefactor √2 e g x0 / ħ (1/(V/m·s²) after multiplying by the time kernel).
fn gain_prefactor(g: f64, crystal: &TwoIonCrystal) -> f64 {
    SQRT_2 * ELEMENTARY_CHARGE * g * crystal.x0() / HBAR
}

pub fn gain(seq: &SdfSequence, crystal: &TwoIonCrystal) -> Result<TransductionGain> {
    let delta = seq.delta;
    if delta == 0.0 {
        return Err(Error::Domain(
            "G_E is singular at δ = 0 (resonant drive is not modeled)".into(),
        ));
    }
    let t = seq.duration;
    let kernel = (delta * t).sin() / (delta * delta) - t * (delta * t).cos() / delta;
    Ok(TransductionGain(gain_prefactor(seq.g, crystal) * kernel))
}

/// Closed-loop limit 2πN √2 e g x0 / (ħ δ²), as a magnitude.
pub fn closed_loop_gain_magnitude(g: f64, delta: f64, loops: u32, crystal: &TwoIonCrystal) -> f64 {
    (2.0 * PI * loops as f64 * gain_prefactor(g, crystal) / (delta * delta)).abs()
}

/// φ = G_E ΔE_x
pub fn phase_from_field(gain: TransductionGain, delta_ex: f64) -> f64 {
    gain.0 * delta_ex
}

/// Contrast factor exp[−(2n̄+1)(gε/δ)²] from an imperfect loop closure.
pub fn contrast(seq: &SdfSequence) -> Result<f64> {
    if seq.delta == 0.0 {
        return Err(Error::Domain("contrast needs δ != 0".into()));
    }
    let x = seq.g * seq.closure_error() / seq.delta;
    Ok((-(2.0 * seq.nbar + 1.0) * x * x).exp())
}
