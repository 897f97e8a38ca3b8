//! End-to-end feasibility arithmetic: SNR against wall-clock time,
//! integration-time targets, shot budgets, throughput, lock-in
//! demodulation and parameter sweeps.

mod lockin;
mod sweep;

pub use lockin::{
    lockin_demodulate, modulated_shot_stream, LockinEstimate, ReferenceShape, ReferenceSpec, ShotStream,
    StreamSpec,
};
pub use sweep::{sweep, GeometryFactor, SweepAxis, SweepGrid, SweepOptions, SweepRow, DEFAULT_POINT_CAP};

use crate::electrostatics::{
    c_eff, delta_ex, delta_ex_with_geometry_factor, rms_signal, DipoleMoment, GradiometerGeometry,
    InterfaceModel, OrientationPolicy,
};
use crate::error::{Error, Result};
use crate::ion_crystal::TwoIonCrystal;
use crate::noise_model::{slowdown_from_asds, NoiseBudget, Slowdown};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingPlan {
    t_live: f64,
    t_dead: f64,
    f0: f64,
}

impl AveragingPlan {
    pub fn new(t_live: f64, t_dead: f64, f0: f64) -> Result<Self> {
        if !(t_live > 0.0) {
            return Err(Error::Domain(format!("T_live must be > 0, got {t_live}")));
        }
        if !(t_dead >= 0.0) {
            return Err(Error::Domain(format!("T_dead must be >= 0, got {t_dead}")));
        }
        if !(f0 > 0.0) {
            return Err(Error::Domain(format!("f0 must be > 0, got {f0}")));
        }
        Ok(Self { t_live, t_dead, f0 })
    }

    /// Plan with the dead time implied by a duty cycle D ∈ (0, 1].
    pub fn from_duty_cycle(t_live: f64, duty_cycle: f64, f0: f64) -> Result<Self> {
        if !(duty_cycle > 0.0 && duty_cycle <= 1.0) {
            return Err(Error::Domain(format!("duty cycle must be in (0, 1], got {duty_cycle}")));
        }
        Self::new(t_live, t_live * (1.0 / duty_cycle - 1.0), f0)
    }

    pub fn t_live(&self) -> f64 {
        self.t_live
    }

    pub fn t_dead(&self) -> f64 {
        self.t_dead
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn shot_period(&self) -> f64 {
        self.t_live + self.t_dead
    }

    pub fn duty_cycle(&self) -> f64 {
        self.t_live / self.shot_period()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotBudget {
    pub shots: u64,
    pub live_time: f64,
    pub warning: Option<String>,
}

/// M = ⌊T_tot / (T_live + T_dead)⌋ and the total live time M·T_live.
pub fn shot_budget(plan: &AveragingPlan, t_tot: f64) -> Result<ShotBudget> {
    if !(t_tot > 0.0) {
        return Err(Error::Domain(format!("T_tot must be > 0, got {t_tot}")));
    }
    // tolerate representation error when T_tot is an exact multiple
    let ratio = t_tot / plan.shot_period();
    let shots = (ratio * (1.0 + 1e-12)).floor() as u64;
    let warning = (shots == 0).then(|| {
        format!(
            "T_tot = {t_tot} s is shorter than one shot period ({} s)",
            plan.shot_period()
        )
    });
    Ok(ShotBudget {
        shots,
        live_time: shots as f64 * plan.t_live,
        warning,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityScenario {
    pub geometry: GradiometerGeometry,
    pub dipole: DipoleMoment,
    pub interface: InterfaceModel,
    pub crystal: TwoIonCrystal,
    pub budget: NoiseBudget,
    pub plan: AveragingPlan,
    pub orientation: OrientationPolicy,
    pub snr_target: f64,
    /// Differential sample ASD used in place of the PSD model when set.
    pub sample_asd_override: Option<f64>,
}

/// Everything derived from one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub delta_ex_max: f64,
    pub signal_rms: f64,
    pub eta: f64,
    pub c_eff: f64,
    pub evaluation_frequency: f64,
    pub s_sens: f64,
    pub s_sample: f64,
    pub s_tot: f64,
    pub snr_1s: f64,
    /// None when the signal is zero
    pub integration_time: Option<f64>,
    pub slowdown: Slowdown,
}

impl FeasibilityScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.snr_target > 0.0) {
            return Err(Error::Domain(format!("SNR target must be > 0, got {}", self.snr_target)));
        }
        if let Some(s) = self.sample_asd_override {
            if !(s >= 0.0) {
                return Err(Error::Domain(format!("sample ASD must be >= 0, got {s}")));
            }
        }
        Ok(())
    }

    pub fn delta_ex_max(&self) -> Result<f64> {
        delta_ex(&self.geometry, &self.dipole, &self.interface)
    }

    pub fn signal_rms(&self) -> Result<f64> {
        rms_signal(self.delta_ex_max()?.abs(), self.orientation)
    }

    pub fn evaluation_frequency(&self) -> f64 {
        self.budget.evaluation_frequency(self.plan.t_live)
    }

    pub fn sample_asd(&self) -> Result<f64> {
        match self.sample_asd_override {
            Some(s) => Ok(s),
            None => self.budget.sample_asd(self.evaluation_frequency(), self.geometry.baseline()),
        }
    }

    /// s_tot = √(s_sens² + s_sample²)
    pub fn total_asd(&self) -> Result<f64> {
        Ok(self.budget.sensor_asd().hypot(self.sample_asd()?))
    }

    pub fn slowdown(&self) -> Result<Slowdown> {
        Ok(slowdown_from_asds(self.sample_asd()?, self.budget.sensor_asd()))
    }

    pub fn evaluate(&self) -> Result<Evaluation> {
        self.validate()?;
        let signal = self.signal_rms()?;
        self.evaluate_with_signal(signal, self.delta_ex_max()?, c_eff(self.geometry.aspect()))
    }

    fn evaluate_with_signal(&self, signal_rms: f64, delta_ex_max: f64, c: f64) -> Result<Evaluation> {
        let s_sens = self.budget.sensor_asd();
        let s_sample = self.sample_asd()?;
        let s_tot = s_sens.hypot(s_sample);
        let d = self.plan.duty_cycle();
        let integration_time =
            (signal_rms > 0.0).then(|| (self.snr_target * s_tot / signal_rms).powi(2) / d);
        Ok(Evaluation {
            delta_ex_max,
            signal_rms,
            eta: self.interface.eta(),
            c_eff: c,
            evaluation_frequency: self.evaluation_frequency(),
            s_sens,
            s_sample,
            s_tot,
            snr_1s: signal_rms / s_tot * d.sqrt(),
            integration_time,
            slowdown: slowdown_from_asds(s_sample, s_sens),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr {
    pub value: f64,
    pub zero_signal: bool,
}

/// SNR = (ΔE_sig,RMS / s_tot) · √(D · T_tot)
pub fn snr(scenario: &FeasibilityScenario, t_tot: f64) -> Result<Snr> {
    if !(t_tot > 0.0) {
        return Err(Error::Domain(format!("T_tot must be > 0, got {t_tot}")));
    }
    scenario.validate()?;
    let signal = scenario.signal_rms()?;
    let s_tot = scenario.total_asd()?;
    Ok(Snr {
        value: signal / s_tot * (scenario.plan.duty_cycle() * t_tot).sqrt(),
        zero_signal: signal == 0.0,
    })
}

/// τ = (SNR_target · s_tot / ΔE_sig,RMS)² / D
pub fn integration_time(scenario: &FeasibilityScenario) -> Result<f64> {
    scenario
        .evaluate()?
        .integration_time
        .ok_or_else(|| Error::Infeasible("signal is zero; no finite integration time reaches the SNR target".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leverage {
    pub baseline: f64,
    pub signal_rms: f64,
    pub integration_time: f64,
    /// τ(new d) / τ(scenario d)
    pub tau_ratio: f64,
}

/// Integration time at a new baseline with the geometry factor held at its
/// value for the scenario's own baseline, so the signal scales linearly in d
/// and τ as d⁻². This is the small-d/h leverage estimate; the full closed
/// form also changes c_eff.
pub fn baseline_leverage(scenario: &FeasibilityScenario, new_baseline: f64) -> Result<Leverage> {
    let base_tau = integration_time(scenario)?;
    let p = scenario
        .dipole
        .normal_component()
        .ok_or_else(|| Error::Domain("baseline leverage needs a surface-normal dipole".into()))?;
    let c = c_eff(scenario.geometry.aspect());
    let geometry = GradiometerGeometry::new(scenario.geometry.height(), new_baseline)?;
    let max = delta_ex_with_geometry_factor(&geometry, p, scenario.interface.eta(), c);
    let moved = FeasibilityScenario {
        geometry,
        ..scenario.clone()
    };
    let signal = rms_signal(max.abs(), scenario.orientation)?;
    let tau = moved
        .evaluate_with_signal(signal, max, c)?
        .integration_time
        .ok_or_else(|| Error::Infeasible("signal is zero at the new baseline".into()))?;
    Ok(Leverage {
        baseline: new_baseline,
        signal_rms: signal,
        integration_time: tau,
        tau_ratio: tau / base_tau,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputBudget {
    pub t_setup: f64,
    pub t_align: f64,
    pub t_cal: f64,
    pub n_avg: u32,
    /// instrument time available per calendar day (s)
    pub operating_time_per_day: f64,
}

impl ThroughputBudget {
    pub fn new(t_setup: f64, t_align: f64, t_cal: f64, n_avg: u32) -> Result<Self> {
        for (name, v) in [("T_setup", t_setup), ("T_align", t_align), ("T_cal", t_cal)] {
            if !(v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        if n_avg < 1 {
            return Err(Error::Domain("N_avg must be >= 1".into()));
        }
        Ok(Self {
            t_setup,
            t_align,
            t_cal,
            n_avg,
            operating_time_per_day: SECONDS_PER_DAY,
        })
    }

    pub fn with_operating_time(mut self, seconds_per_day: f64) -> Result<Self> {
        if !(seconds_per_day > 0.0 && seconds_per_day <= SECONDS_PER_DAY) {
            return Err(Error::Domain(format!(
                "operating time per day must be in (0, 86400] s, got {seconds_per_day}"
            )));
        }
        self.operating_time_per_day = seconds_per_day;
        Ok(self)
    }

    pub fn overhead(&self) -> f64 {
        self.t_setup + self.t_align + self.t_cal
    }

    /// T_site = T_setup + T_align + T_cal + N_avg · τ
    pub fn site_time(&self, tau: f64) -> f64 {
        self.overhead() + self.n_avg as f64 * tau
    }

    pub fn sites_per_day(&self, tau: f64) -> f64 {
        self.operating_time_per_day / self.site_time(tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub integration_time: f64,
    pub site_time: f64,
    pub sites_per_day: f64,
}

pub fn throughput(scenario: &FeasibilityScenario, overheads: &ThroughputBudget) -> Result<Throughput> {
    let tau = integration_time(scenario)?;
    Ok(Throughput {
        integration_time: tau,
        site_time: overheads.site_time(tau),
        sites_per_day: overheads.sites_per_day(tau),
    })
}
