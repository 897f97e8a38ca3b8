//! Time-ordered propagation of one spin branch in the truncated Fock space.
//!
//! Within a spin branch of eigenvalue s the generator is
//! H(t)/ħ = f(t) a† + f*(t) a with f(t) = g s e^{-iδt} + F. Every step is an
//! exponential of a truncated generator c a† + c* a, evaluated as
//! R_θ exp(−i h |c| X) R_θ† with X = a + a† diagonalized once and
//! R_θ = e^{iθ n̂}. No coherent-state algebra is used.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::protocol_sim::state::branch_leakage;

/// Step rule for the piecewise propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// One exponential per step, generator frozen at the step midpoint.
    Midpoint,
    /// Fourth-order commutator-free scheme: two exponentials per step built
    /// from the generator at the two Gauss–Legendre nodes.
    CommutatorFree4,
}

/// Diagonalized truncated position operator X = a + a†.
#[derive(Debug, Clone)]
pub struct Propagator {
    dim: usize,
    eigenvalues: Vec<f64>,
    // row-major: eigenvectors[i * dim + k] = V_{ik}
    eigenvectors: Vec<f64>,
}

impl Propagator {
    pub fn new(dim: usize) -> Self {
        let mut x = DMatrix::<f64>::zeros(dim, dim);
        for n in 1..dim {
            let v = (n as f64).sqrt();
            x[(n - 1, n)] = v;
            x[(n, n - 1)] = v;
        }
        let eig = SymmetricEigen::new(x);
        let mut eigenvectors = vec![0.0; dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                eigenvectors[i * dim + k] = eig.eigenvectors[(i, k)];
            }
        }
        Self {
            dim,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// ψ ← exp(−i h (c a† + c* a)) ψ
    pub fn apply(&self, psi: &mut [Complex64], c: Complex64, h: f64, scratch: &mut Vec<Complex64>) {
        let d = self.dim;
        let (r, theta) = c.to_polar();
        if r == 0.0 {
            return;
        }
        // R_θ† : multiply |n⟩ by e^{-iθn}
        let step = Complex64::from_polar(1.0, -theta);
        let mut rot = Complex64::new(1.0, 0.0);
        for amp in psi.iter_mut() {
            *amp *= rot;
            rot *= step;
        }
        // Vᵀ ψ
        scratch.clear();
        scratch.resize(d, Complex64::new(0.0, 0.0));
        for i in 0..d {
            let row = &self.eigenvectors[i * d..(i + 1) * d];
            let a = psi[i];
            for (s, v) in scratch.iter_mut().zip(row) {
                *s += a * v;
            }
        }
        for (s, lam) in scratch.iter_mut().zip(&self.eigenvalues) {
            *s *= Complex64::from_polar(1.0, -h * r * lam);
        }
        // V (...)
        for i in 0..d {
            let row = &self.eigenvectors[i * d..(i + 1) * d];
            psi[i] = scratch.iter().zip(row).map(|(s, v)| s * v).sum();
        }
        // R_θ
        let step = Complex64::from_polar(1.0, theta);
        let mut rot = Complex64::new(1.0, 0.0);
        for amp in psi.iter_mut() {
            *amp *= rot;
            rot *= step;
        }
    }
}

/// Drive coefficient f(t) of the branch generator.
#[derive(Debug, Clone, Copy)]
pub struct BranchDrive {
    /// g·s (rad/s)
    pub sdf_amplitude: f64,
    /// δ (rad/s)
    pub detuning: f64,
    /// F = e ΔE x0 / (√2 ħ) (rad/s)
    pub external: f64,
}

impl BranchDrive {
    pub fn at(&self, t: f64) -> Complex64 {
        Complex64::from_polar(self.sdf_amplitude, -self.detuning * t) + self.external
    }
}

const SQRT3_6: f64 = 0.288_675_134_594_812_9; // √3/6
const CF4_A1: f64 = (3.0 - 2.0 * 1.732_050_807_568_877_2) / 12.0;
const CF4_A2: f64 = (3.0 + 2.0 * 1.732_050_807_568_877_2) / 12.0;

/// Propagate one branch over [0, duration] with `steps` equal steps,
/// checking top-level leakage after every step.
pub fn propagate_branch(
    prop: &Propagator,
    psi: &mut [Complex64],
    drive: &BranchDrive,
    duration: f64,
    steps: usize,
    integrator: Integrator,
    leakage_threshold: f64,
) -> Result<()> {
    let h = duration / steps as f64;
    let mut scratch = Vec::with_capacity(prop.dim());
    for k in 0..steps {
        let t = k as f64 * h;
        match integrator {
            Integrator::Midpoint => {
                prop.apply(psi, drive.at(t + 0.5 * h), h, &mut scratch);
            }
            Integrator::CommutatorFree4 => {
                let f1 = drive.at(t + (0.5 - SQRT3_6) * h);
                let f2 = drive.at(t + (0.5 + SQRT3_6) * h);
                prop.apply(psi, f1 * CF4_A2 + f2 * CF4_A1, h, &mut scratch);
                prop.apply(psi, f1 * CF4_A1 + f2 * CF4_A2, h, &mut scratch);
            }
        }
        if let Some(leak) = branch_leakage(psi) {
            if leak > leakage_threshold {
                let n_max = prop.dim() - 1;
                return Err(Error::Truncation {
                    n_max,
                    required_n_max: (2 * n_max).max(n_max + 16),
                    leakage: leak,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn propagator_is_unitary() {
        let prop = Propagator::new(20);
        let mut psi = vec![Complex64::new(0.0, 0.0); 20];
        psi[0] = Complex64::new(0.6, 0.0);
        psi[1] = Complex64::new(0.0, 0.8);
        let mut scratch = Vec::new();
        for k in 0..1000 {
            prop.apply(&mut psi, Complex64::from_polar(0.3, k as f64 * 0.1), 0.01, &mut scratch);
        }
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        // 1000 exponentials, round-off only
        assert!((norm - 1.0).abs() < 1e-11, "{}", norm - 1.0);
    }

    #[test]
    fn small_displacement_populates_first_level() {
        // exp(−i β (a + a†))|0⟩ ≈ |0⟩ − iβ|1⟩ for small β
        let prop = Propagator::new(16);
        let mut psi = vec![Complex64::new(0.0, 0.0); 16];
        psi[0] = Complex64::new(1.0, 0.0);
        let mut scratch = Vec::new();
        prop.apply(&mut psi, Complex64::new(1.0, 0.0), 1e-4, &mut scratch);
        assert!((psi[1] - Complex64::new(0.0, -1e-4)).norm() < 1e-10);
    }
}
