//! Point-dipole electrostatics for the two-ion gradiometer.
//!
//! Coordinates: ẑ is the sample surface normal (sample near z = 0), x̂ is the
//! trap axis. The sensor and reference ions sit at (±d/2, 0, h) and the
//! gradiometer reads ΔE_x = E_x(+d/2, 0, h) − E_x(−d/2, 0, h).
//!
//! All quantities are strict SI internally. Debye and micrometers only appear
//! in the explicit boundary constructors.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::constants::{ANGSTROM, COULOMB_K, DEBYE, ELEMENTARY_CHARGE, MICROMETER};
use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

const UNIT_NORM_TOL: f64 = 1e-12;

/// Electric dipole moment with an explicit orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleMoment {
    magnitude: f64,
    orientation: Vec3,
}

impl DipoleMoment {
    /// `magnitude` in C·m; `orientation` is normalized if it is within
    /// rounding of unit length, otherwise rejected.
    pub fn new(magnitude: f64, orientation: Vec3) -> Result<Self> {
        if !(magnitude >= 0.0) || !magnitude.is_finite() {
            return Err(Error::Domain(format!(
                "dipole magnitude must be finite and >= 0, got {magnitude}"
            )));
        }
        let norm = orientation.norm();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::Domain(format!(
                "dipole orientation must be a unit vector, |n| = {norm}"
            )));
        }
        Ok(Self {
            magnitude,
            orientation: orientation / norm,
        })
    }

    /// Dipole along +ẑ (normal to the sample surface).
    pub fn normal(magnitude: f64) -> Result<Self> {
        Self::new(magnitude, Vec3::z())
    }

    pub fn normal_debye(debye: f64) -> Result<Self> {
        Self::normal(debye * DEBYE)
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn magnitude_debye(&self) -> f64 {
        self.magnitude / DEBYE
    }

    pub fn orientation(&self) -> Vec3 {
        self.orientation
    }

    pub fn vector(&self) -> Vec3 {
        self.orientation * self.magnitude
    }

    /// Signed projection on ẑ if the dipole is normal to the surface.
    pub(crate) fn normal_component(&self) -> Option<f64> {
        let tangential = (self.orientation.x.powi(2) + self.orientation.y.powi(2)).sqrt();
        (tangential <= UNIT_NORM_TOL).then(|| self.magnitude * self.orientation.z.signum())
    }
}

/// Ion height above the sample and lateral ion–ion baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradiometerGeometry {
    h: f64,
    d: f64,
}

impl GradiometerGeometry {
    pub fn new(h: f64, d: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("height h must be > 0, got {h}")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Domain(format!("baseline d must be > 0, got {d}")));
        }
        Ok(Self { h, d })
    }

    pub fn from_micrometers(h_um: f64, d_um: f64) -> Result<Self> {
        Self::new(h_um * MICROMETER, d_um * MICROMETER)
    }

    pub fn height(&self) -> f64 {
        self.h
    }

    pub fn baseline(&self) -> f64 {
        self.d
    }

    /// d/h
    pub fn aspect(&self) -> f64 {
        self.d / self.h
    }

    pub fn sensor_position(&self) -> Vec3 {
        Vec3::new(self.d / 2.0, 0.0, self.h)
    }

    pub fn reference_position(&self) -> Vec3 {
        Vec3::new(-self.d / 2.0, 0.0, self.h)
    }
}

/// Dielectric environment between the buried dipole and the ions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfaceModel {
    Vacuum,
    PlanarDielectric { epsilon_r: f64 },
    MetalUnderlayer,
}

impl InterfaceModel {
    pub fn planar_dielectric(epsilon_r: f64) -> Result<Self> {
        if !(epsilon_r >= 1.0) || !epsilon_r.is_finite() {
            return Err(Error::Domain(format!(
                "relative permittivity must be >= 1, got {epsilon_r}"
            )));
        }
        Ok(Self::PlanarDielectric { epsilon_r })
    }

    /// Multiplicative transmission factor η for the normal-dipole field.
    pub fn eta(&self) -> f64 {
        match *self {
            InterfaceModel::Vacuum => 1.0,
            InterfaceModel::PlanarDielectric { epsilon_r } => 2.0 / (epsilon_r + 1.0),
            // image-dipole doubling; geometry is left unchanged
            InterfaceModel::MetalUnderlayer => 2.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InterfaceModel::Vacuum => "vacuum",
            InterfaceModel::PlanarDielectric { .. } => "planar-dielectric",
            InterfaceModel::MetalUnderlayer => "metal-underlayer",
        }
    }
}

/// How the receptor orientation enters the detected field component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationPolicy {
    FixedNormal,
    IsotropicRms,
}

/// Dipole moment (Debye) of a charge `charge_fraction`·e displaced by
/// `displacement_angstrom`.
pub fn debye_from_charge_displacement(charge_fraction: f64, displacement_angstrom: f64) -> Result<f64> {
    if !(displacement_angstrom >= 0.0) {
        return Err(Error::Domain(format!(
            "displacement must be >= 0 Å, got {displacement_angstrom}"
        )));
    }
    Ok(charge_fraction * ELEMENTARY_CHARGE * displacement_angstrom * ANGSTROM / DEBYE)
}

/// Geometry factor c_eff(u) = 3 / (1 + (u/2)²)^{5/2} with u = d/h.
pub fn c_eff(u: f64) -> f64 {
    3.0 / (1.0 + (u / 2.0).powi(2)).powf(2.5)
}

/// Lateral differential field ΔE_x (V/m) of a surface-normal dipole.
///
/// Only the normal orientation has a closed form; tilted dipoles must go
/// through [`delta_ex_by_differencing`].
pub fn delta_ex(
    geometry: &GradiometerGeometry,
    dipole: &DipoleMoment,
    interface: &InterfaceModel,
) -> Result<f64> {
    let p = dipole.normal_component().ok_or_else(|| {
        Error::Domain(
            "closed-form ΔE_x covers only surface-normal dipoles; use delta_ex_by_differencing \
             for arbitrary orientations"
                .into(),
        )
    })?;
    let (h, d) = (geometry.h, geometry.d);
    let free = COULOMB_K * p * 3.0 * h * d / (h * h + (d / 2.0).powi(2)).powf(2.5);
    Ok(interface.eta() * free)
}

/// ΔE_x written as η·(p/4πε₀)·d·h⁻⁴·c_eff, with the geometry factor supplied
/// by the caller. With `c = c_eff(d/h)` this equals [`delta_ex`]; holding `c`
/// fixed gives the linear-in-d baseline-leverage approximation.
pub fn delta_ex_with_geometry_factor(
    geometry: &GradiometerGeometry,
    dipole_magnitude: f64,
    eta: f64,
    c: f64,
) -> f64 {
    eta * COULOMB_K * dipole_magnitude * geometry.d * geometry.h.powi(-4) * c
}

/// Field (V/m) at `field_point` of a point dipole located at `source`.
pub fn dipole_field_at_point(dipole: &DipoleMoment, source: Vec3, field_point: Vec3) -> Result<Vec3> {
    let r = field_point - source;
    let dist = r.norm();
    if dist == 0.0 {
        return Err(Error::Domain("field point coincides with the dipole".into()));
    }
    let r_hat = r / dist;
    let p = dipole.vector();
    Ok((3.0 * p.dot(&r_hat) * r_hat - p) * (COULOMB_K / dist.powi(3)))
}

/// Free-space ΔE_x for any orientation, by evaluating the full field at both
/// ion positions for a dipole at the origin.
pub fn delta_ex_by_differencing(geometry: &GradiometerGeometry, dipole: &DipoleMoment) -> Result<f64> {
    let origin = Vec3::zeros();
    let sensor = dipole_field_at_point(dipole, origin, geometry.sensor_position())?;
    let reference = dipole_field_at_point(dipole, origin, geometry.reference_position())?;
    Ok(sensor.x - reference.x)
}

/// Detected RMS signal for the given orientation policy.
pub fn rms_signal(delta_ex_max: f64, policy: OrientationPolicy) -> Result<f64> {
    if !(delta_ex_max >= 0.0) {
        return Err(Error::Domain(format!(
            "ΔE_max must be >= 0, got {delta_ex_max}"
        )));
    }
    Ok(match policy {
        OrientationPolicy::FixedNormal => delta_ex_max,
        OrientationPolicy::IsotropicRms => delta_ex_max / 3f64.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn baseline() -> GradiometerGeometry {
        GradiometerGeometry::from_micrometers(10.0, 3.45).unwrap()
    }

    #[test]
    fn debye_examples() {
        assert_relative_eq!(debye_from_charge_displacement(1.0, 4.0).unwrap(), 19.2128, epsilon = 1e-3);
        assert_relative_eq!(debye_from_charge_displacement(1.0, 5.0).unwrap(), 24.016, epsilon = 1e-3);
        assert_eq!(debye_from_charge_displacement(0.0, 7.3).unwrap(), 0.0);
        assert!(debye_from_charge_displacement(1.0, -1.0).is_err());
    }

    #[test]
    fn c_eff_examples() {
        assert_eq!(c_eff(0.0), 3.0);
        assert!((c_eff(0.345) - 2.79).abs() < 0.005);
        assert_relative_eq!(c_eff(2.0), 3.0 / 2f64.powf(2.5), max_relative = 1e-15);
        assert!(c_eff(0.5) < c_eff(0.4));
    }

    #[test]
    fn delta_ex_published_values() {
        let p = DipoleMoment::normal_debye(20.0).unwrap();
        let vac = delta_ex(&baseline(), &p, &InterfaceModel::Vacuum).unwrap();
        assert!((vac - 5.77e-4).abs() / 5.77e-4 < 2e-3, "{vac}");
        let ice = delta_ex(&baseline(), &p, &InterfaceModel::planar_dielectric(3.0).unwrap()).unwrap();
        assert!((ice - 2.88e-4).abs() / 2.88e-4 < 2e-3, "{ice}");
        let zero = DipoleMoment::normal(0.0).unwrap();
        assert_eq!(delta_ex(&baseline(), &zero, &InterfaceModel::Vacuum).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_matches_geometry_factor_form() {
        let g = baseline();
        let p = DipoleMoment::normal_debye(20.0).unwrap();
        let a = delta_ex(&g, &p, &InterfaceModel::Vacuum).unwrap();
        let b = delta_ex_with_geometry_factor(&g, p.magnitude(), 1.0, c_eff(g.aspect()));
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn tilted_dipole_rejected_by_closed_form() {
        let tilted = DipoleMoment::new(1e-29, Vec3::new(1.0, 0.0, 1.0).normalize()).unwrap();
        let err = delta_ex(&baseline(), &tilted, &InterfaceModel::Vacuum).unwrap_err();
        assert!(err.to_string().contains("delta_ex_by_differencing"));
        assert!(delta_ex_by_differencing(&baseline(), &tilted).is_ok());
    }

    #[test]
    fn on_axis_field() {
        let p = DipoleMoment::normal(1e-29).unwrap();
        let r = 5e-6;
        let e = dipole_field_at_point(&p, Vec3::zeros(), Vec3::new(0.0, 0.0, r)).unwrap();
        assert_relative_eq!(e.z, 2.0 * COULOMB_K * 1e-29 / r.powi(3), max_relative = 1e-14);
        assert_eq!(e.x, 0.0);
        assert_eq!(e.y, 0.0);
        let zero = DipoleMoment::normal(0.0).unwrap();
        assert_eq!(dipole_field_at_point(&zero, Vec3::zeros(), Vec3::x()).unwrap(), Vec3::zeros());
        assert!(dipole_field_at_point(&p, Vec3::x(), Vec3::x()).is_err());
    }

    #[test]
    fn eta_values_and_ordering() {
        assert_eq!(InterfaceModel::Vacuum.eta(), 1.0);
        assert_eq!(InterfaceModel::planar_dielectric(3.0).unwrap().eta(), 0.5);
        assert_eq!(InterfaceModel::MetalUnderlayer.eta(), 2.0);
        assert!(InterfaceModel::planar_dielectric(0.5).is_err());
        for er in [1.001, 2.0, 3.0, 80.0] {
            let eta = InterfaceModel::planar_dielectric(er).unwrap().eta();
            assert!(eta < InterfaceModel::Vacuum.eta());
            assert!(InterfaceModel::Vacuum.eta() < InterfaceModel::MetalUnderlayer.eta());
        }
    }

    #[test]
    fn rms_policies() {
        assert!((rms_signal(2.68e-4, OrientationPolicy::IsotropicRms).unwrap() - 1.55e-4).abs() < 0.005e-4);
        assert_eq!(rms_signal(3.3e-4, OrientationPolicy::FixedNormal).unwrap(), 3.3e-4);
        let v = rms_signal(6.96e-6 * 0.5, OrientationPolicy::IsotropicRms).unwrap();
        assert!((v - 2.0e-6).abs() < 0.05e-6, "{v}");
        assert!(rms_signal(-1.0, OrientationPolicy::FixedNormal).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(GradiometerGeometry::new(0.0, 1.0).is_err());
        assert!(GradiometerGeometry::new(1.0, -1.0).is_err());
        let g = baseline();
        let half = g.baseline() / 2.0;
        assert_eq!(g.sensor_position(), Vec3::new(half, 0.0, g.height()));
        assert_eq!(g.reference_position(), Vec3::new(-half, 0.0, g.height()));
        assert!((half - 1.725e-6).abs() < 1e-18);
    }
}
