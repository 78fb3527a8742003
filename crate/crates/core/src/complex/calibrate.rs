use ndarray::Array2;
use num_complex::Complex64;

use super::polar::{pixel_complex_coefficients, wrap_phase};
use super::table::{CalibrationPoint, PhaseRadiusTable};
use super::wavelet::ComplexWaveletSpec;
use crate::error::{Error, Result};
use crate::frame::{pixel_coefficients, FilterBank};
use crate::par;
use crate::simdata::GroundTruthScene;

/// Nearest pixel `(row, col)` to a point `(x, y)`.
fn pixel_of(x: f64, y: f64, shape: (usize, usize)) -> (usize, usize) {
    let r = (y.round().max(0.0) as usize).min(shape.0 - 1);
    let c = (x.round().max(0.0) as usize).min(shape.1 - 1);
    (r, c)
}

/// Complex coefficients and primal-frame magnitudes of every scale at one
/// pixel.
fn probe(
    spectrum: &Array2<Complex64>,
    bank: &FilterBank,
    spec: &ComplexWaveletSpec,
    px: (usize, usize),
) -> (Vec<Complex64>, Vec<f64>) {
    let coeffs = pixel_complex_coefficients(spectrum, bank, spec, px);
    let primal = (0..bank.scales())
        .map(|s| pixel_coefficients(spectrum, bank, None, s, px)[0].norm())
        .collect();
    (coeffs, primal)
}

/// Phases, amplitudes and the primal profile at the center of a disk of
/// known radius.
pub fn complex_calibration_point(
    image: &Array2<f64>,
    bank: &FilterBank,
    spec: &ComplexWaveletSpec,
    radius: f64,
    center: (f64, f64),
) -> Result<CalibrationPoint> {
    if image.dim() != bank.shape() {
        return Err(Error::DimensionMismatch {
            expected: bank.shape(),
            got: image.dim(),
        });
    }
    let spectrum = bank.fft().forward_real(image);
    let (coeffs, primal) = probe(
        &spectrum,
        bank,
        spec,
        pixel_of(center.0, center.1, image.dim()),
    );
    Ok(CalibrationPoint {
        radius,
        phases: coeffs.iter().map(|z| wrap_phase(z.arg())).collect(),
        energies: coeffs.iter().map(|z| z.norm()).collect(),
        profile: primal,
    })
}

/// Fits per-scale phase-to-radius tables on single-disk images.
///
/// The unwrapped phase advances by about `omega0` per octave of radius, so
/// neighbouring sweep radii must be closer than half a phase period.
pub fn calibrate_phase_radius(
    sweep: &[(GroundTruthScene, Array2<f64>)],
    spec: &ComplexWaveletSpec,
    bank: &FilterBank,
) -> Result<PhaseRadiusTable> {
    let points = par::map_slice(sweep, |(scene, image)| {
        let disk = scene
            .disks
            .first()
            .ok_or_else(|| Error::Calibration("calibration scene without a disk".into()))?;
        complex_calibration_point(image, bank, spec, disk.radius, (disk.x, disk.y))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    PhaseRadiusTable::fit("beta", 2.0 * std::f64::consts::PI, spec.omega0(), &points)
}

/// Radius for phase `beta` at scale `s`; `profile` holds the primal-frame
/// magnitudes across scales that pick the phase cycle.
pub fn phase_to_radius(
    beta: f64,
    s: usize,
    profile: &[f64],
    table: &PhaseRadiusTable,
) -> Option<f64> {
    table.radius(s, beta, profile)
}

/// Complex-phase radius estimate at `center`: phases of the strong scales
/// lifted by the primal profile and fused by squared amplitude.
pub fn estimate_radius_complex(
    image: &Array2<f64>,
    bank: &FilterBank,
    spec: &ComplexWaveletSpec,
    table: &PhaseRadiusTable,
    center: (f64, f64),
) -> Result<Option<f64>> {
    let p = complex_calibration_point(image, bank, spec, f64::NAN, center)?;
    Ok(table
        .fused_log_radius(&p.phases, &p.energies, &p.profile)
        .map(f64::exp2))
}
