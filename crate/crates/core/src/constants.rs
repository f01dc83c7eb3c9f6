//! Physical constants (CODATA 2018 exact/recommended values).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Conversion from MHz (ordinary frequency) to rad/s.
pub const TWO_PI_MHZ: f64 = 2.0 * std::f64::consts::PI * 1.0e6;

/// Conversion from kHz (ordinary frequency) to rad/s.
pub const TWO_PI_KHZ: f64 = 2.0 * std::f64::consts::PI * 1.0e3;
