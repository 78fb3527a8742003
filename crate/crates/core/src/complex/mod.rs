//! Complex two-channel wavelet: a cosine/sine multiplier pair whose
//! coefficient phase encodes the local scale.

mod calibrate;
mod polar;
mod table;
mod wavelet;

pub use calibrate::{
    calibrate_phase_radius, complex_calibration_point, estimate_radius_complex, phase_to_radius,
};
pub use polar::{
    complex_coefficients, pixel_complex_coefficients, polar_coefficients, scale_symbol, wrap_phase,
    PolarCoefficientMap,
};
pub use table::{CalibrationPoint, PhaseRadiusTable, COVERAGE_MARGIN, TABLE_COVERAGE};
pub use wavelet::{adapted_kappa, ComplexWaveletSpec, DEFAULT_KAPPA, DEFAULT_OMEGA0};
