//! TOML scenario files.
//!
//! Every key carries its unit in the name. Unknown keys are rejected, and
//! missing keys take the defaults below. `normalized()` emits the complete
//! document, which parses back to an equal scenario.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constants::MICROMETER;
use crate::electrostatics::{DipoleMoment, GradiometerGeometry, InterfaceModel, OrientationPolicy};
use crate::error::{Error, Result};
use crate::feasibility::{
    AveragingPlan, FeasibilityScenario, GeometryFactor, ReferenceShape, SweepAxis, SweepGrid, SweepOptions,
    ThroughputBudget,
};
use crate::ion_crystal::{IonSpecies, TwoIonCrystal};
use crate::noise_model::{CorrelationShape, NoiseBudget, SampleNoiseModel, SensorMode, SensorSensitivity};
use crate::protocol_sim::{EvolveOptions, DEFAULT_N_MAX};
use crate::transduction::SdfSequence;

/// Scenario at the published operating point.
pub const PUBLISHED: &str = include_str!("../../scenarios/published.toml");

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub geometry: Geometry,
    pub dipole: Dipole,
    pub interface: Interface,
    pub crystal: Crystal,
    pub sensor: Sensor,
    pub sample: Sample,
    pub plan: Plan,
    pub throughput: Throughput,
    pub sdf: Sdf,
    pub noise: Noise,
    pub sweep: Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    pub h_um: f64,
    /// ion baseline; the crystal's equilibrium separation when absent
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_um: Option<f64>,
}

impl Default for Geometry {
    fn default() -> Self {
        Self { h_um: 10.0, d_um: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dipole {
    pub delta_p_debye: f64,
    pub orientation_policy: OrientationPolicy,
}

impl Default for Dipole {
    fn default() -> Self {
        Self {
            delta_p_debye: 20.0,
            orientation_policy: OrientationPolicy::IsotropicRms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterfaceKind {
    Vacuum,
    PlanarDielectric,
    MetalUnderlayer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Interface {
    pub model: InterfaceKind,
    /// used by the planar-dielectric model only
    pub epsilon_r: f64,
}

impl Default for Interface {
    fn default() -> Self {
        Self {
            model: InterfaceKind::PlanarDielectric,
            epsilon_r: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Yb171,
    Ca40,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Crystal {
    pub species: Species,
    /// single-ion secular frequency ω_x/2π
    pub omega_x_hz: f64,
}

impl Default for Crystal {
    fn default() -> Self {
        Self {
            species: Species::Yb171,
            omega_x_hz: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sensor {
    pub mode: SensorMode,
    pub s_ac_mv_per_m_rthz: f64,
    pub s_dc_mv_per_m_rthz: f64,
    pub f0_hz: f64,
}

impl Default for Sensor {
    fn default() -> Self {
        Self {
            mode: SensorMode::Ac,
            s_ac_mv_per_m_rthz: 0.96,
            s_dc_mv_per_m_rthz: 1.97,
            f0_hz: 5.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sample {
    /// single-point PSD at 1 Hz
    pub amplitude_v2_per_m2_hz: f64,
    pub alpha: f64,
    pub correlation_length_um: f64,
    pub shape: CorrelationShape,
    /// differential sample ASD used directly instead of the PSD model
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_sample_mv_per_m_rthz: Option<f64>,
}

impl Default for Sample {
    fn default() -> Self {
        Self {
            amplitude_v2_per_m2_hz: 0.0,
            alpha: 1.0,
            correlation_length_um: 0.0,
            shape: CorrelationShape::None,
            s_sample_mv_per_m_rthz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Plan {
    pub t_live_ms: f64,
    pub t_dead_ms: f64,
    pub t_tot_s: f64,
    pub snr_target: f64,
}

impl Default for Plan {
    fn default() -> Self {
        Self {
            t_live_ms: 172.0,
            t_dead_ms: 0.0,
            t_tot_s: 40.0,
            snr_target: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Throughput {
    pub t_setup_min: f64,
    pub t_align_min: f64,
    pub t_cal_min: f64,
    pub n_avg: u32,
    pub operating_hours_per_day: f64,
}

impl Default for Throughput {
    fn default() -> Self {
        Self {
            t_setup_min: 20.0,
            t_align_min: 10.0,
            t_cal_min: 15.0,
            n_avg: 1,
            operating_hours_per_day: 24.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sdf {
    /// g/2π
    pub g_khz: f64,
    /// δ/2π
    pub delta_khz: f64,
    pub loops: u32,
    pub closure_error_rad: f64,
    pub nbar: f64,
    pub n_max: usize,
    pub shots: usize,
    pub bias_rad: f64,
    /// field driving the simulation; the scenario's ΔE_x,max when absent
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_e_v_per_m: Option<f64>,
}

impl Default for Sdf {
    fn default() -> Self {
        Self {
            g_khz: 2.0,
            delta_khz: 10.0,
            loops: 4,
            closure_error_rad: 0.0,
            nbar: 0.0,
            n_max: DEFAULT_N_MAX,
            shots: 1000,
            bias_rad: FRAC_PI_2,
            delta_e_v_per_m: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    Square,
    Sine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub welch_segment: usize,
    pub allan_taus_s: Vec<f64>,
    pub demod_tone_v_per_m: f64,
    pub demod_offset_v_per_m: f64,
    pub phase_cycling: bool,
    pub reference: ReferenceKind,
}

impl Default for Noise {
    fn default() -> Self {
        Self {
            duration_s: 600.0,
            sample_rate_hz: 100.0,
            welch_segment: 1024,
            allan_taus_s: vec![0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0],
            demod_tone_v_per_m: 1e-3,
            demod_offset_v_per_m: 0.0,
            phase_cycling: true,
            reference: ReferenceKind::Square,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryFactorKind {
    #[default]
    Exact,
    FrozenAtBase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub key: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub point_cap: usize,
    pub geometry_factor: GeometryFactorKind,
    pub axes: Vec<AxisSpec>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            point_cap: crate::feasibility::DEFAULT_POINT_CAP,
            geometry_factor: GeometryFactorKind::Exact,
            axes: Vec::new(),
        }
    }
}

fn single_line(s: &str) -> String {
    s.split('\n').map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" | ")
}

impl ScenarioFile {
    /// Parse a scenario document. A document without any keys is a usage
    /// error.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(single_line(&e.to_string())))?;
        if table.is_empty() {
            return Err(Error::Usage("scenario file is empty".into()));
        }
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let s: ScenarioFile = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(single_line(&e.to_string())))?;
        Ok(s)
    }

    pub fn published() -> Self {
        Self::parse(PUBLISHED).expect("bundled scenario parses")
    }

    /// Apply `section.key=value` overrides. Values are read as TOML and
    /// fall back to a bare string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut table = toml::Table::try_from(self).map_err(|e| Error::Parse(e.to_string()))?;
        for o in overrides {
            let o = o.as_ref();
            let (path, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("override '{o}' is not KEY=VALUE")))?;
            let (section, key) = path
                .trim()
                .split_once('.')
                .ok_or_else(|| Error::Usage(format!("override key '{path}' is not section.key")))?;
            let value = parse_value(raw.trim());
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let sec = entry
                .as_table_mut()
                .ok_or_else(|| Error::Parse(format!("'{section}' is not a section")))?;
            sec.insert(key.to_string(), value);
        }
        Self::from_table(table).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("after overrides: {m}")),
            other => other,
        })
    }

    /// Complete TOML document with every key present.
    pub fn normalized(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 of the normalized document, hex encoded.
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.normalized().as_bytes()))
    }

    pub fn crystal(&self) -> Result<TwoIonCrystal> {
        let species = match self.crystal.species {
            Species::Yb171 => IonSpecies::yb171(),
            Species::Ca40 => IonSpecies::ca40(),
        };
        TwoIonCrystal::new(species, 2.0 * PI * self.crystal.omega_x_hz)
    }

    pub fn interface_model(&self) -> Result<InterfaceModel> {
        Ok(match self.interface.model {
            InterfaceKind::Vacuum => InterfaceModel::Vacuum,
            InterfaceKind::PlanarDielectric => InterfaceModel::planar_dielectric(self.interface.epsilon_r)?,
            InterfaceKind::MetalUnderlayer => InterfaceModel::MetalUnderlayer,
        })
    }

    pub fn sample_model(&self) -> Result<SampleNoiseModel> {
        SampleNoiseModel::new(
            self.sample.amplitude_v2_per_m2_hz,
            self.sample.alpha,
            self.sample.correlation_length_um * MICROMETER,
            self.sample.shape,
        )
    }

    pub fn feasibility(&self) -> Result<FeasibilityScenario> {
        let crystal = self.crystal()?;
        let d = match self.geometry.d_um {
            Some(d) => d * MICROMETER,
            None => crystal.equilibrium_separation(),
        };
        let sensor = SensorSensitivity::new(
            self.sensor.s_dc_mv_per_m_rthz * 1e-3,
            self.sensor.s_ac_mv_per_m_rthz * 1e-3,
            self.sensor.f0_hz,
        )?;
        let scenario = FeasibilityScenario {
            geometry: GradiometerGeometry::new(self.geometry.h_um * MICROMETER, d)?,
            dipole: DipoleMoment::normal_debye(self.dipole.delta_p_debye)?,
            interface: self.interface_model()?,
            crystal,
            budget: NoiseBudget {
                sensor,
                sample: self.sample_model()?,
                mode: self.sensor.mode,
            },
            plan: AveragingPlan::new(self.plan.t_live_ms * 1e-3, self.plan.t_dead_ms * 1e-3, self.sensor.f0_hz)?,
            orientation: self.dipole.orientation_policy,
            snr_target: self.plan.snr_target,
            sample_asd_override: self.sample.s_sample_mv_per_m_rthz.map(|s| s * 1e-3),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn throughput_budget(&self) -> Result<ThroughputBudget> {
        let t = &self.throughput;
        ThroughputBudget::new(t.t_setup_min * 60.0, t.t_align_min * 60.0, t.t_cal_min * 60.0, t.n_avg)?
            .with_operating_time(t.operating_hours_per_day * 3600.0)
    }

    pub fn sdf_sequence(&self) -> Result<SdfSequence> {
        let s = &self.sdf;
        SdfSequence::with_closure_error(
            2.0 * PI * s.g_khz * 1e3,
            2.0 * PI * s.delta_khz * 1e3,
            s.loops,
            s.closure_error_rad,
            s.nbar,
        )
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions::default()
    }

    pub fn reference_shape(&self) -> ReferenceShape {
        match self.noise.reference {
            ReferenceKind::Square => ReferenceShape::Square,
            ReferenceKind::Sine => ReferenceShape::Sine,
        }
    }

    pub fn sweep_grids(&self) -> Result<Vec<SweepGrid>> {
        self.sweep
            .axes
            .iter()
            .map(|a| {
                Ok(SweepGrid {
                    axis: a.key.parse::<SweepAxis>()?,
                    values: a.values.clone(),
                })
            })
            .collect()
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            point_cap: self.sweep.point_cap,
            geometry_factor: match self.sweep.geometry_factor {
                GeometryFactorKind::Exact => GeometryFactor::Exact,
                GeometryFactorKind::FrozenAtBase => GeometryFactor::FrozenAtBase,
            },
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Parse an axis given on the command line as `key=v1,v2,...`.
pub fn parse_axis(spec: &str) -> Result<AxisSpec> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("axis '{spec}' is not KEY=V1,V2,...")))?;
    let key = key.trim();
    key.parse::<SweepAxis>()?;
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("axis {key}: '{}': {e}", v.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AxisSpec {
        key: key.to_string(),
        values,
    })
}
