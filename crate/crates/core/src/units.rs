//! Physical constants and unit conversions shared across modules.

/// Speed of light in vacuum, nm/ps.
pub const C_NM_PER_PS: f64 = 299_792.458;

/// Speed of light in vacuum, mm/ns.
pub const C_MM_PER_NS: f64 = 299.792_458;

/// fs² → ps².
pub const FS2_TO_PS2: f64 = 1e-6;

/// fs³ → ps³.
pub const FS3_TO_PS3: f64 = 1e-9;

/// Ratio of a Gaussian's full width at half maximum to its standard deviation.
pub fn gaussian_fwhm_per_sigma() -> f64 {
    2.0 * (2.0 * std::f64::consts::LN_2).sqrt()
}
