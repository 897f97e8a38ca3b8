//! Numerical simulation of the full measurement sequence on
//! {two qubits} ⊗ {truncated stretch-mode Fock space}.
//!
//! 1. start in |↓↓⟩|n⟩
//! 2. ideal Mølmer–Sørensen map to (|↑↓⟩ + |↓↑⟩)/√2
//! 3. time-ordered evolution under H_SDF(t) + H_ext
//! 4. inverse MS map, fluorescence readout of P(↓↓)
//!
//! The evolution never uses the closed-form displacement result; it is the
//! independent oracle for [`crate::transduction`].

mod integrator;
mod state;

pub use integrator::{BranchDrive, Integrator, Propagator};
pub use state::{ProtocolState, Spin, DEFAULT_N_MAX, MIN_N_MAX};

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constants::{ELEMENTARY_CHARGE, HBAR};
use crate::error::{Error, Result};
use crate::ion_crystal::TwoIonCrystal;
use crate::transduction::SdfSequence;

const PRECONDITION_TOL: f64 = 1e-12;

/// Largest Fock truncation the automatic escalation will try.
pub const MAX_N_MAX: usize = 256;

/// Spin-space MS map. Columns are the images of ↓↓, ↓↑, ↑↓, ↑↑.
///
/// ↓↓ → (↑↓ + ↓↑)/√2, ↑↑ → (↑↓ − ↓↑)/√2, ↑↓ → (↓↓ + ↑↑)/√2,
/// ↓↑ → (↓↓ − ↑↑)/√2. Real orthogonal, so the inverse is the transpose.
const MS: [[f64; 4]; 4] = [
    // rows: ↓↓, ↓↑, ↑↓, ↑↑
    [0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0],
    [FRAC_1_SQRT_2, 0.0, 0.0, -FRAC_1_SQRT_2],
    [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2],
    [0.0, -FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0],
];

fn apply_spin_map(state: &ProtocolState, transpose: bool) -> ProtocolState {
    let d = state.dim_motion();
    let mut out = vec![Complex64::new(0.0, 0.0); 4 * d];
    for (row, out_chunk) in out.chunks_mut(d).enumerate() {
        for col in 0..4 {
            let u = if transpose { MS[col][row] } else { MS[row][col] };
            if u == 0.0 {
                continue;
            }
            let src = state.branch(Spin::ALL[col]);
            for (o, s) in out_chunk.iter_mut().zip(src) {
                *o += s * u;
            }
        }
    }
    ProtocolState::from_amplitudes(state.n_max(), out).expect("shape preserved")
}

/// Apply the ideal MS map to a state whose spin part is |↓↓⟩.
pub fn prepare_bell(state: &ProtocolState) -> Result<ProtocolState> {
    let stray: f64 = [Spin::DownUp, Spin::UpDown, Spin::UpUp]
        .iter()
        .map(|&s| state.spin_population(s))
        .sum();
    if stray > PRECONDITION_TOL {
        return Err(Error::Precondition(format!(
            "Bell preparation expects the spins in |↓↓⟩ (population {stray:.3e} elsewhere)"
        )));
    }
    Ok(apply_ms(state))
}

pub fn apply_ms(state: &ProtocolState) -> ProtocolState {
    apply_spin_map(state, false)
}

pub fn apply_ms_inverse(state: &ProtocolState) -> ProtocolState {
    apply_spin_map(state, true)
}

/// Options for [`evolve_sdf`].
#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// First step count tried; doubled until converged.
    pub initial_steps: usize,
    /// Convergence threshold on the largest amplitude change under halving.
    pub tolerance: f64,
    pub max_steps: usize,
    pub integrator: Integrator,
    /// Population fraction allowed in the two highest Fock levels.
    pub leakage_threshold: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            initial_steps: 64,
            tolerance: 1e-8,
            max_steps: 1 << 22,
            integrator: Integrator::CommutatorFree4,
            leakage_threshold: 1e-6,
        }
    }
}

/// Evolved state and the step count that met the convergence check.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: ProtocolState,
    pub steps: usize,
    /// Largest amplitude change between the last two step counts.
    pub halving_change: f64,
}

/// External force rate F = e ΔE_x x0 / (√2 ħ), rad/s.
pub fn external_drive_rate(crystal: &TwoIonCrystal, delta_ex: f64) -> f64 {
    ELEMENTARY_CHARGE * delta_ex * crystal.x0() / (SQRT_2 * HBAR)
}

fn evolve_fixed(
    state: &ProtocolState,
    seq: &SdfSequence,
    external: f64,
    prop: &Propagator,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<ProtocolState> {
    let mut out = state.clone();
    for spin in Spin::ALL {
        if state.spin_population(spin) == 0.0 {
            continue;
        }
        let drive = BranchDrive {
            sdf_amplitude: seq.g() * spin.differential_eigenvalue(),
            detuning: seq.delta(),
            external,
        };
        integrator::propagate_branch(
            prop,
            out.branch_mut(spin),
            &drive,
            seq.duration(),
            steps,
            opts.integrator,
            opts.leakage_threshold,
        )?;
    }
    Ok(out)
}

/// Evolve under H_SDF(t) + H_ext for the sequence duration T.
///
/// The step count starts at `opts.initial_steps` and doubles until the final
/// amplitudes change by less than `opts.tolerance`.
pub fn evolve_sdf(
    state: &ProtocolState,
    seq: &SdfSequence,
    crystal: &TwoIonCrystal,
    delta_ex: f64,
    opts: &EvolveOptions,
) -> Result<Evolution> {
    let prop = Propagator::new(state.dim_motion());
    let external = external_drive_rate(crystal, delta_ex);
    let mut steps = opts.initial_steps.max(1);
    let mut coarse = evolve_fixed(state, seq, external, &prop, steps, opts)?;
    loop {
        if 2 * steps > opts.max_steps {
            return Err(Error::NotConverged {
                max_steps: opts.max_steps,
                change: f64::NAN,
            });
        }
        let fine = evolve_fixed(state, seq, external, &prop, 2 * steps, opts)?;
        let change = fine.max_abs_diff(&coarse);
        steps *= 2;
        if change < opts.tolerance {
            return Ok(Evolution {
                state: fine,
                steps,
                halving_change: change,
            });
        }
        coarse = fine;
    }
}

/// Result of [`interrogate`].
#[derive(Debug, Clone)]
pub struct Interrogation {
    pub state: ProtocolState,
    pub steps: usize,
    pub n_max: usize,
}

/// Prepare |↓↓⟩|n⟩, apply the MS map and evolve, escalating the Fock
/// truncation (starting from `n_max`) whenever leakage is detected.
pub fn interrogate(
    seq: &SdfSequence,
    crystal: &TwoIonCrystal,
    delta_ex: f64,
    initial_fock: usize,
    n_max: usize,
    opts: &EvolveOptions,
) -> Result<Interrogation> {
    let mut n_max = n_max.max(MIN_N_MAX).max(initial_fock + 8);
    loop {
        let start = prepare_bell(&ProtocolState::fock(n_max, initial_fock)?)?;
        match evolve_sdf(&start, seq, crystal, delta_ex, opts) {
            Ok(ev) => {
                return Ok(Interrogation {
                    state: ev.state,
                    steps: ev.steps,
                    n_max,
                })
            }
            Err(Error::Truncation { required_n_max, .. }) if required_n_max <= MAX_N_MAX => {
                n_max = required_n_max;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Overlap ⟨χ↑↓|χ↓↑⟩ of the normalized conditional motional states. Its
/// argument is the relative phase φ of |↓↑⟩ with respect to |↑↓⟩ and its
/// modulus is the fringe visibility.
pub fn branch_overlap(state: &ProtocolState) -> Result<Complex64> {
    let a = state.branch(Spin::UpDown);
    let b = state.branch(Spin::DownUp);
    let na = state.spin_population(Spin::UpDown);
    let nb = state.spin_population(Spin::DownUp);
    if na < 1e-300 || nb < 1e-300 {
        return Err(Error::Precondition(
            "relative phase needs both |↑↓⟩ and |↓↑⟩ populated".into(),
        ));
    }
    let s: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    Ok(s / (na * nb).sqrt())
}

/// φ = arg⟨χ↑↓|χ↓↑⟩
pub fn relative_phase(state: &ProtocolState) -> Result<f64> {
    Ok(branch_overlap(state)?.arg())
}

/// Boltzmann weights of a thermal state, truncated once the cumulative
/// probability reaches `cumulative` and renormalized.
pub fn thermal_weights(nbar: f64, cumulative: f64) -> Vec<f64> {
    if nbar <= 0.0 {
        return vec![1.0];
    }
    let ratio = nbar / (nbar + 1.0);
    let mut weights = Vec::new();
    let mut p = 1.0 / (nbar + 1.0);
    let mut total = 0.0;
    while total < cumulative {
        weights.push(p);
        total += p;
        p *= ratio;
    }
    weights.iter_mut().for_each(|w| *w /= total);
    weights
}

pub const THERMAL_CUMULATIVE: f64 = 0.999;

/// Thermally averaged branch overlap Σ_n p_n ⟨χ↑↓|χ↓↑⟩_n, with each initial
/// Fock state evolved independently.
#[derive(Debug, Clone)]
pub struct ThermalOverlap {
    pub overlap: Complex64,
    pub weights: Vec<f64>,
    pub per_fock: Vec<Complex64>,
}

impl ThermalOverlap {
    /// |overlap|, the visibility of the readout fringe.
    pub fn visibility(&self) -> f64 {
        self.overlap.norm()
    }

    /// |overlap|². This is the quantity the analytic contrast factor
    /// exp[−(2n̄+1)(gε/δ)²] describes under the ŝ = ±½ convention.
    pub fn contrast(&self) -> f64 {
        self.overlap.norm_sqr()
    }
}

pub fn thermal_overlap(
    seq: &SdfSequence,
    crystal: &TwoIonCrystal,
    delta_ex: f64,
    n_max: usize,
    opts: &EvolveOptions,
) -> Result<ThermalOverlap> {
    let weights = thermal_weights(seq.nbar(), THERMAL_CUMULATIVE);
    let mut per_fock = Vec::with_capacity(weights.len());
    let mut overlap = Complex64::new(0.0, 0.0);
    for (n, w) in weights.iter().enumerate() {
        let run = interrogate(seq, crystal, delta_ex, n, n_max, opts)?;
        let o = branch_overlap(&run.state)?;
        overlap += o * w;
        per_fock.push(o);
    }
    Ok(ThermalOverlap {
        overlap,
        weights,
        per_fock,
    })
}

/// Thermally averaged readout of one interrogation.
#[derive(Debug, Clone)]
pub struct ThermalReadout {
    /// Σ_n p_n P_n(↓↓)
    pub p_bright: f64,
    /// Σ_n p_n ⟨χ↑↓|χ↓↑⟩_n
    pub overlap: Complex64,
    /// largest truncation used by any Fock component
    pub n_max: usize,
    /// steps per branch at the finest Fock component
    pub steps: usize,
}

/// Evolve every thermally populated Fock component (in parallel) and
/// average the bright probability at the given bias.
pub fn thermal_readout(
    seq: &SdfSequence,
    crystal: &TwoIonCrystal,
    delta_ex: f64,
    n_max: usize,
    bias: f64,
    opts: &EvolveOptions,
) -> Result<ThermalReadout> {
    let weights = thermal_weights(seq.nbar(), THERMAL_CUMULATIVE);
    let runs: Vec<(f64, Complex64, usize, usize)> = (0..weights.len())
        .into_par_iter()
        .map(|n| {
            let run = interrogate(seq, crystal, delta_ex, n, n_max, opts)?;
            Ok((
                bright_probability(&run.state, bias),
                branch_overlap(&run.state)?,
                run.n_max,
                run.steps,
            ))
        })
        .collect::<Result<_>>()?;
    let mut out = ThermalReadout {
        p_bright: 0.0,
        overlap: Complex64::new(0.0, 0.0),
        n_max: 0,
        steps: 0,
    };
    for (w, (p, o, n, steps)) in weights.iter().zip(runs) {
        out.p_bright += w * p;
        out.overlap += o * w;
        out.n_max = out.n_max.max(n);
        out.steps = out.steps.max(steps);
    }
    out.p_bright = out.p_bright.clamp(0.0, 1.0);
    Ok(out)
}

/// Readout outcome of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// fluorescing, |↓↓⟩
    Bright,
    Dark,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotResult {
    pub outcome: Outcome,
    pub p_bright: f64,
}

/// P(↓↓) after a bias rotation e^{i·bias} on |↓↑⟩ and the inverse MS map.
/// For a closed loop this is cos²((φ + bias)/2).
pub fn bright_probability(state: &ProtocolState, bias: f64) -> f64 {
    let mut biased = state.clone();
    let rot = Complex64::from_polar(1.0, bias);
    biased.branch_mut(Spin::DownUp).iter_mut().for_each(|c| *c *= rot);
    let analyzed = apply_ms_inverse(&biased);
    analyzed.spin_population(Spin::DownDown).clamp(0.0, 1.0)
}

fn sample(p_bright: f64, rng: &mut impl Rng) -> ShotResult {
    let outcome = if rng.random::<f64>() < p_bright {
        Outcome::Bright
    } else {
        Outcome::Dark
    };
    ShotResult { outcome, p_bright }
}

/// Analysis pulse, then one projective readout drawn from a generator seeded
/// with `rng_seed`.
pub fn analyze_and_measure(state: &ProtocolState, bias: f64, rng_seed: u64) -> ShotResult {
    let p = bright_probability(state, bias);
    sample(p, &mut ChaCha8Rng::seed_from_u64(rng_seed))
}

/// `shots` independent readouts at a fixed bright probability.
pub fn sample_shots(p_bright: f64, shots: usize, seed: u64) -> Vec<ShotResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..shots).map(|_| sample(p_bright, &mut rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    pub phi_hat: f64,
    pub std_error: f64,
    pub shots: usize,
}

/// Invert the fringe P = cos²((φ + bias)/2) from the bright fraction.
///
/// The branch φ + bias ∈ [0, π] is taken, so `bias` should put the working
/// point near mid-fringe (π/2).
pub fn estimate_phase(shots: &[ShotResult], bias: f64) -> Result<PhaseEstimate> {
    let m = shots.len();
    if m == 0 {
        return Err(Error::UnidentifiablePhase("no shots".into()));
    }
    let bright = shots.iter().filter(|s| s.outcome == Outcome::Bright).count();
    if bright == 0 || bright == m {
        return Err(Error::UnidentifiablePhase(format!(
            "{bright}/{m} bright shots: fringe slope unresolvable"
        )));
    }
    let p = bright as f64 / m as f64;
    let total = (2.0 * p - 1.0).acos();
    let slope = 0.5 * total.sin();
    Ok(PhaseEstimate {
        phi_hat: total - bias,
        std_error: (p * (1.0 - p) / m as f64).sqrt() / slope,
        shots: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn bell_preparation() {
        let s = ProtocolState::ground(DEFAULT_N_MAX).unwrap();
        let bell = prepare_bell(&s).unwrap();
        assert!((bell.spin_population(Spin::UpDown) - 0.5).abs() < 1e-15);
        assert!((bell.spin_population(Spin::DownUp) - 0.5).abs() < 1e-15);
        assert!((bell.norm() - 1.0).abs() < 1e-12);
        assert!((bell.branch(Spin::UpDown)[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((bell.branch(Spin::DownUp)[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        let back = apply_ms_inverse(&bell);
        assert!(back.max_abs_diff(&s) < 1e-12);
    }

    #[test]
    fn bell_precondition() {
        let s = prepare_bell(&ProtocolState::ground(10).unwrap()).unwrap();
        assert!(matches!(prepare_bell(&s), Err(Error::Precondition(_))));
    }

    /// Ideal post-interrogation state (|↑↓⟩ + e^{iφ}|↓↑⟩)/√2 |0⟩.
    fn ideal(phi: f64) -> ProtocolState {
        let mut s = prepare_bell(&ProtocolState::ground(10).unwrap()).unwrap();
        s.branch_mut(Spin::DownUp)[0] *= Complex64::from_polar(1.0, phi);
        s
    }

    #[test]
    fn readout_fringe() {
        assert!((bright_probability(&ideal(0.0), 0.0) - 1.0).abs() < 1e-15);
        assert!(bright_probability(&ideal(PI), 0.0) < 1e-15);
        let analyzed = apply_ms_inverse(&ideal(PI));
        assert!((analyzed.spin_population(Spin::UpUp) - 1.0).abs() < 1e-15);
        for phi in [0.3, 1.0, 2.5] {
            assert!((bright_probability(&ideal(phi), 0.0) - (phi / 2.0).cos().powi(2)).abs() < 1e-14);
        }
        assert!((relative_phase(&ideal(0.7)).unwrap() - 0.7).abs() < 1e-14);
    }

    #[test]
    fn always_bright_at_zero_phase() {
        for seed in 0..50 {
            assert_eq!(analyze_and_measure(&ideal(0.0), 0.0, seed).outcome, Outcome::Bright);
        }
    }

    #[test]
    fn degenerate_fringe_is_unidentifiable() {
        let shots = sample_shots(1.0, 500, 3);
        assert!(matches!(estimate_phase(&shots, 0.0), Err(Error::UnidentifiablePhase(_))));
        let shots = sample_shots(0.0, 500, 3);
        assert!(matches!(estimate_phase(&shots, 0.0), Err(Error::UnidentifiablePhase(_))));
    }

    #[test]
    fn thermal_weights_cover_requested_mass() {
        assert_eq!(thermal_weights(0.0, 0.999), vec![1.0]);
        let w = thermal_weights(2.0, 0.999);
        assert_eq!(w.len(), 18);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shots_are_reproducible() {
        assert_eq!(sample_shots(0.4, 1000, 11), sample_shots(0.4, 1000, 11));
        assert_ne!(sample_shots(0.4, 1000, 11), sample_shots(0.4, 1000, 12));
    }

    #[test]
    fn thermal_readout_of_closed_loop_without_field() {
        let crystal = TwoIonCrystal::new(crate::ion_crystal::IonSpecies::yb171(), 2.0 * PI * 1e6).unwrap();
        let seq = SdfSequence::closed(2.0 * PI * 2e3, 2.0 * PI * 10e3, 1, 0.5).unwrap();
        let r = thermal_readout(&seq, &crystal, 0.0, DEFAULT_N_MAX, PI / 3.0, &EvolveOptions::default()).unwrap();
        assert!((r.p_bright - (PI / 6.0).cos().powi(2)).abs() < 1e-7, "{}", r.p_bright);
        assert!((r.overlap.norm() - 1.0).abs() < 1e-7);
    }
}
