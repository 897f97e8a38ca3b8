//! CODATA 2018 physical constants in SI units.
//!
//! Every module reads its constants from here; nothing else in the crate
//! hard-codes a physical constant.

/// Vacuum permittivity ε₀ (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Elementary charge e (C), exact.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Reduced Planck constant ħ (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One Debye in C·m: 10⁻²¹ / c.
pub const DEBYE: f64 = 1e-21 / SPEED_OF_LIGHT;

/// Atomic mass constant (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Electron mass in atomic mass units.
pub const ELECTRON_MASS_U: f64 = 5.485_799_090_65e-4;

/// Coulomb constant 1/(4πε₀) (N·m²/C²).
pub const COULOMB_K: f64 = 1.0 / (4.0 * std::f64::consts::PI * EPSILON_0);

/// One ångström in meters.
pub const ANGSTROM: f64 = 1e-10;

/// One micrometer in meters.
pub const MICROMETER: f64 = 1e-6;

/// Immutable bundle of the constants above, for callers that prefer to pass
/// the constant set explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub epsilon_0: f64,
    pub elementary_charge: f64,
    pub hbar: f64,
    pub debye: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        epsilon_0: EPSILON_0,
        elementary_charge: ELEMENTARY_CHARGE,
        hbar: HBAR,
        debye: DEBYE,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn debye_matches_reference_value() {
        assert!((DEBYE - 3.33564e-30).abs() / 3.33564e-30 < 1e-5);
    }
}
