use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::transduction::SPIN_DIFFERENTIAL_EIGENVALUE;

/// Two-qubit basis state. ↓ is the qubit ground state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    DownDown = 0,
    DownUp = 1,
    UpDown = 2,
    UpUp = 3,
}

impl Spin {
    pub const ALL: [Spin; 4] = [Spin::DownDown, Spin::DownUp, Spin::UpDown, Spin::UpUp];

    /// Eigenvalue of the differential spin operator ŝ.
    pub fn differential_eigenvalue(self) -> f64 {
        match self {
            Spin::UpDown => SPIN_DIFFERENTIAL_EIGENVALUE,
            Spin::DownUp => -SPIN_DIFFERENTIAL_EIGENVALUE,
            Spin::DownDown | Spin::UpUp => 0.0,
        }
    }
}

pub const DEFAULT_N_MAX: usize = 24;
pub const MIN_N_MAX: usize = 8;

/// Amplitudes over {↓↓, ↓↑, ↑↓, ↑↑} ⊗ {|0⟩ … |n_max⟩}, spin-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolState {
    n_max: usize,
    amplitudes: Vec<Complex64>,
}

impl ProtocolState {
    /// |↓↓⟩|n⟩
    pub fn fock(n_max: usize, n: usize) -> Result<Self> {
        if n_max < MIN_N_MAX {
            return Err(Error::Domain(format!("n_max must be >= {MIN_N_MAX}, got {n_max}")));
        }
        if n > n_max {
            return Err(Error::Domain(format!("Fock level {n} exceeds n_max={n_max}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 4 * (n_max + 1)];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Ok(Self { n_max, amplitudes })
    }

    /// |↓↓⟩|0⟩
    pub fn ground(n_max: usize) -> Result<Self> {
        Self::fock(n_max, 0)
    }

    pub fn from_amplitudes(n_max: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 4 * (n_max + 1) {
            return Err(Error::Domain(format!(
                "expected {} amplitudes for n_max={n_max}, got {}",
                4 * (n_max + 1),
                amplitudes.len()
            )));
        }
        Ok(Self { n_max, amplitudes })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim_motion(&self) -> usize {
        self.n_max + 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn branch(&self, spin: Spin) -> &[Complex64] {
        let d = self.dim_motion();
        &self.amplitudes[spin as usize * d..(spin as usize + 1) * d]
    }

    pub fn branch_mut(&mut self, spin: Spin) -> &mut [Complex64] {
        let d = self.dim_motion();
        &mut self.amplitudes[spin as usize * d..(spin as usize + 1) * d]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn spin_population(&self, spin: Spin) -> f64 {
        self.branch(spin).iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest population fraction, over the occupied spin branches, held in
    /// the top two Fock levels.
    pub fn top_level_leakage(&self) -> f64 {
        Spin::ALL
            .iter()
            .filter_map(|&s| branch_leakage(self.branch(s)))
            .fold(0.0, f64::max)
    }

    /// Same state in a larger Fock space.
    pub fn embed(&self, n_max: usize) -> Result<Self> {
        if n_max < self.n_max {
            return Err(Error::Domain("cannot embed into a smaller Fock space".into()));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); 4 * (n_max + 1)];
        for s in Spin::ALL {
            let src = self.branch(s);
            let off = s as usize * (n_max + 1);
            out[off..off + src.len()].copy_from_slice(src);
        }
        Ok(Self {
            n_max,
            amplitudes: out,
        })
    }

    /// Largest amplitude difference to another state of the same shape.
    pub fn max_abs_diff(&self, other: &ProtocolState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn branch_leakage(branch: &[Complex64]) -> Option<f64> {
    let total: f64 = branch.iter().map(|c| c.norm_sqr()).sum();
    if total <= 1e-300 {
        return None;
    }
    let n = branch.len();
    let top: f64 = branch[n - 2..].iter().map(|c| c.norm_sqr()).sum();
    Some(top / total)
}
