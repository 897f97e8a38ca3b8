use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::{Evaluation, FeasibilityScenario};
use crate::electrostatics::{c_eff, delta_ex_with_geometry_factor, rms_signal, GradiometerGeometry, InterfaceModel};
use crate::error::{Error, Result};

pub const DEFAULT_POINT_CAP: usize = 10_000;

/// Scenario quantity varied along one sweep axis. Values are given in the
/// unit named by the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    HeightUm,
    BaselineUm,
    DipoleDebye,
    EpsilonR,
    SampleAsdMvPerMRtHz,
    SnrTarget,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] = [
        SweepAxis::HeightUm,
        SweepAxis::BaselineUm,
        SweepAxis::DipoleDebye,
        SweepAxis::EpsilonR,
        SweepAxis::SampleAsdMvPerMRtHz,
        SweepAxis::SnrTarget,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::HeightUm => "h_um",
            SweepAxis::BaselineUm => "d_um",
            SweepAxis::DipoleDebye => "delta_p_debye",
            SweepAxis::EpsilonR => "epsilon_r",
            SweepAxis::SampleAsdMvPerMRtHz => "s_sample_mv_per_m_rthz",
            SweepAxis::SnrTarget => "snr_target",
        }
    }

    fn apply(self, scenario: &mut FeasibilityScenario, value: f64) -> Result<()> {
        match self {
            SweepAxis::HeightUm => {
                scenario.geometry = GradiometerGeometry::from_micrometers(value, scenario.geometry.baseline() * 1e6)?;
            }
            SweepAxis::BaselineUm => {
                scenario.geometry = GradiometerGeometry::from_micrometers(scenario.geometry.height() * 1e6, value)?;
            }
            SweepAxis::DipoleDebye => {
                scenario.dipole = crate::electrostatics::DipoleMoment::new(
                    value * crate::constants::DEBYE,
                    scenario.dipole.orientation(),
                )?;
            }
            SweepAxis::EpsilonR => scenario.interface = InterfaceModel::planar_dielectric(value)?,
            SweepAxis::SampleAsdMvPerMRtHz => scenario.sample_asd_override = Some(value * 1e-3),
            SweepAxis::SnrTarget => scenario.snr_target = value,
        }
        Ok(())
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.key() == s)
            .ok_or_else(|| {
                let keys: Vec<_> = SweepAxis::ALL.iter().map(|a| a.key()).collect();
                Error::Input(format!("unknown sweep axis '{s}' (expected one of {})", keys.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// How the geometry factor c_eff is treated across grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeometryFactor {
    /// c_eff(d/h) at each point (full closed form)
    #[default]
    Exact,
    /// c_eff held at the base scenario's d/h (linear-in-d leverage model)
    FrozenAtBase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub point_cap: usize,
    pub geometry_factor: GeometryFactor,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            point_cap: DEFAULT_POINT_CAP,
            geometry_factor: GeometryFactor::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// one value per axis, in axis order
    pub coordinates: Vec<f64>,
    pub evaluation: Evaluation,
}

/// Evaluate the scenario at every point of the Cartesian product of the
/// grids. Rows come out in lexicographic order with the first axis varying
/// slowest, independent of how the points are scheduled.
pub fn sweep(base: &FeasibilityScenario, axes: &[SweepGrid], options: &SweepOptions) -> Result<Vec<SweepRow>> {
    for (i, a) in axes.iter().enumerate() {
        if a.values.is_empty() {
            return Err(Error::Input(format!("sweep axis {} has no values", a.axis)));
        }
        if axes[..i].iter().any(|b| b.axis == a.axis) {
            return Err(Error::Input(format!("sweep axis {} given twice", a.axis)));
        }
    }
    let count = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.values.len()))
        .unwrap_or(usize::MAX);
    if count > options.point_cap {
        return Err(Error::CapExceeded {
            count,
            cap: options.point_cap,
        });
    }
    let base_c = c_eff(base.geometry.aspect());

    (0..count)
        .into_par_iter()
        .map(|index| {
            let mut coordinates = vec![0.0; axes.len()];
            let mut rem = index;
            for (slot, a) in coordinates.iter_mut().zip(axes).rev() {
                *slot = a.values[rem % a.values.len()];
                rem /= a.values.len();
            }
            let mut scenario = base.clone();
            for (a, &v) in axes.iter().zip(&coordinates) {
                a.axis.apply(&mut scenario, v)?;
            }
            scenario.validate()?;
            let evaluation = match options.geometry_factor {
                GeometryFactor::Exact => scenario.evaluate()?,
                GeometryFactor::FrozenAtBase => {
                    let p = scenario.dipole.normal_component().ok_or_else(|| {
                        Error::Domain("frozen geometry factor needs a surface-normal dipole".into())
                    })?;
                    let max = delta_ex_with_geometry_factor(&scenario.geometry, p, scenario.interface.eta(), base_c);
                    let signal = rms_signal(max.abs(), scenario.orientation)?;
                    scenario.evaluate_with_signal(signal, max, base_c)?
                }
            };
            Ok(SweepRow {
                coordinates,
                evaluation,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::tests::published_scenario;
    use crate::noise_model::SensorMode;
    use approx::assert_relative_eq;

    #[test]
    fn single_point_equals_direct_evaluation() {
        let s = published_scenario(SensorMode::Ac);
        let rows = sweep(
            &s,
            &[SweepGrid {
                axis: SweepAxis::HeightUm,
                values: vec![10.0],
            }],
            &SweepOptions::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].evaluation, s.evaluate().unwrap());
    }

    #[test]
    fn lexicographic_order() {
        let s = published_scenario(SensorMode::Ac);
        let rows = sweep(
            &s,
            &[
                SweepGrid {
                    axis: SweepAxis::HeightUm,
                    values: vec![10.0, 20.0, 30.0],
                },
                SweepGrid {
                    axis: SweepAxis::SnrTarget,
                    values: vec![1.0, 10.0],
                },
            ],
            &SweepOptions::default(),
        )
        .unwrap();
        let coords: Vec<_> = rows.iter().map(|r| r.coordinates.clone()).collect();
        assert_eq!(
            coords,
            vec![
                vec![10.0, 1.0],
                vec![10.0, 10.0],
                vec![20.0, 1.0],
                vec![20.0, 10.0],
                vec![30.0, 1.0],
                vec![30.0, 10.0]
            ]
        );
    }

    #[test]
    fn height_sweep_signal_ratio() {
        let s = published_scenario(SensorMode::Ac);
        let rows = sweep(
            &s,
            &[SweepGrid {
                axis: SweepAxis::HeightUm,
                values: vec![10.0, 30.0],
            }],
            &SweepOptions::default(),
        )
        .unwrap();
        let ratio = rows[0].evaluation.signal_rms / rows[1].evaluation.signal_rms;
        let expected = 81.0 * c_eff(0.345) / c_eff(0.115);
        assert_relative_eq!(ratio, expected, max_relative = 1e-12);
    }

    #[test]
    fn baseline_sweep_with_frozen_factor_gives_square_law() {
        let s = published_scenario(SensorMode::Ac);
        let grid = [SweepGrid {
            axis: SweepAxis::BaselineUm,
            values: vec![3.45, 10.0],
        }];
        let frozen = sweep(
            &s,
            &grid,
            &SweepOptions {
                geometry_factor: GeometryFactor::FrozenAtBase,
                ..Default::default()
            },
        )
        .unwrap();
        let tau = |r: &SweepRow| r.evaluation.integration_time.unwrap();
        assert_relative_eq!(tau(&frozen[1]) / tau(&frozen[0]), (0.345f64).powi(2), max_relative = 1e-12);
        let exact = sweep(&s, &grid, &SweepOptions::default()).unwrap();
        let r = tau(&exact[1]) / tau(&exact[0]);
        assert!(r > 0.3 && r < 0.33, "{r}");
    }

    #[test]
    fn cap_refusal_reports_count() {
        let s = published_scenario(SensorMode::Ac);
        let grid = SweepGrid {
            axis: SweepAxis::HeightUm,
            values: (1..=200).map(|v| 10.0 + v as f64).collect(),
        };
        let grid2 = SweepGrid {
            axis: SweepAxis::DipoleDebye,
            values: (1..=60).map(|v| v as f64).collect(),
        };
        match sweep(&s, &[grid, grid2], &SweepOptions::default()) {
            Err(Error::CapExceeded { count, cap }) => {
                assert_eq!(count, 12_000);
                assert_eq!(cap, DEFAULT_POINT_CAP);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn axis_keys_parse() {
        for a in SweepAxis::ALL {
            assert_eq!(a.key().parse::<SweepAxis>().unwrap(), a);
        }
        assert!("h".parse::<SweepAxis>().is_err());
    }
}
