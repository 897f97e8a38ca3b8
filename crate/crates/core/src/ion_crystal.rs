//! Two-ion crystal mechanics: equilibrium spacing and the axial stretch mode.

use std::f64::consts::PI;

use crate::constants::{ATOMIC_MASS_UNIT, ELECTRON_MASS_U, ELEMENTARY_CHARGE, EPSILON_0, HBAR};
use crate::error::{Error, Result};

/// Ion species: mass in kg and charge in units of e.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSpecies {
    mass: f64,
    charge: u32,
}

impl IonSpecies {
    pub fn new(mass: f64, charge: u32) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Domain(format!("ion mass must be > 0, got {mass}")));
        }
        if charge < 1 {
            return Err(Error::Domain("ion charge must be >= 1 e".into()));
        }
        Ok(Self { mass, charge })
    }

    /// Singly or multiply ionized atom of neutral atomic mass `atomic_mass_u`;
    /// the missing electrons are subtracted.
    pub fn from_atomic_mass(atomic_mass_u: f64, charge: u32) -> Result<Self> {
        Self::new(
            (atomic_mass_u - charge as f64 * ELECTRON_MASS_U) * ATOMIC_MASS_UNIT,
            charge,
        )
    }

    /// ¹⁷¹Yb⁺
    pub fn yb171() -> Self {
        Self::from_atomic_mass(170.936_325_8, 1).expect("valid species")
    }

    /// ⁴⁰Ca⁺
    pub fn ca40() -> Self {
        Self::from_atomic_mass(39.962_590_863, 1).expect("valid species")
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge(&self) -> u32 {
        self.charge
    }
}

/// Equal-mass two-ion crystal in a harmonic axial potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoIonCrystal {
    species: IonSpecies,
    omega_x: f64,
    d_eq: f64,
    omega_stretch: f64,
    x0: f64,
}

impl TwoIonCrystal {
    pub fn new(species: IonSpecies, omega_x: f64) -> Result<Self> {
        let d_eq = equilibrium_separation(&species, omega_x)?;
        let omega_stretch = 3f64.sqrt() * omega_x;
        let x0 = (HBAR / (2.0 * species.mass * omega_stretch)).sqrt();
        Ok(Self {
            species,
            omega_x,
            d_eq,
            omega_stretch,
            x0,
        })
    }

    pub fn species(&self) -> &IonSpecies {
        &self.species
    }

    /// Axial trap angular frequency (rad/s).
    pub fn omega_x(&self) -> f64 {
        self.omega_x
    }

    pub fn equilibrium_separation(&self) -> f64 {
        self.d_eq
    }

    pub fn omega_stretch(&self) -> f64 {
        self.omega_stretch
    }

    /// Stretch-mode ground-state extent √(ħ / 2 m ω_stretch).
    pub fn x0(&self) -> f64 {
        self.x0
    }
}

/// d_eq = (Z²e² / (2πε₀ m ω_x²))^{1/3}
pub fn equilibrium_separation(species: &IonSpecies, omega_x: f64) -> Result<f64> {
    if !(omega_x > 0.0 && omega_x.is_finite()) {
        return Err(Error::Domain(format!(
            "trap frequency must be > 0, got {omega_x}"
        )));
    }
    let q = species.charge as f64 * ELEMENTARY_CHARGE;
    Ok((q * q / (2.0 * PI * EPSILON_0 * species.mass * omega_x * omega_x)).cbrt())
}

/// (ω_stretch, x0) of the crystal.
pub fn stretch_mode(crystal: &TwoIonCrystal) -> (f64, f64) {
    (crystal.omega_stretch, crystal.x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const MHZ: f64 = 2.0 * PI * 1e6;

    #[test]
    fn quadrupling_frequency() {
        let s = IonSpecies::yb171();
        let a = equilibrium_separation(&s, MHZ).unwrap();
        let b = equilibrium_separation(&s, 4.0 * MHZ).unwrap();
        assert_relative_eq!(a / b, 4f64.powf(2.0 / 3.0), max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(equilibrium_separation(&IonSpecies::yb171(), 0.0).is_err());
        assert!(equilibrium_separation(&IonSpecies::yb171(), -1.0).is_err());
        assert!(IonSpecies::new(-1.0, 1).is_err());
        assert!(IonSpecies::new(1e-25, 0).is_err());
    }

    #[test]
    fn stretch_frequency() {
        let c = TwoIonCrystal::new(IonSpecies::yb171(), MHZ).unwrap();
        let (w, x0) = stretch_mode(&c);
        assert_relative_eq!(w / (2.0 * PI), 1.732_050_8e6, max_relative = 1e-7);
        assert_relative_eq!(x0 * x0 * 2.0 * c.species().mass() * w, HBAR, max_relative = 1e-14);
    }

    #[test]
    fn x0_mass_scaling() {
        let heavy = IonSpecies::new(2e-25, 1).unwrap();
        let light = IonSpecies::new(1e-25, 1).unwrap();
        let a = TwoIonCrystal::new(heavy, MHZ).unwrap().x0();
        let b = TwoIonCrystal::new(light, MHZ).unwrap().x0();
        assert_relative_eq!(b / a, 2f64.sqrt(), max_relative = 1e-14);
    }
}
