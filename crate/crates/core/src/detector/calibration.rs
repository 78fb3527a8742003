use std::sync::OnceLock;

use ndarray::Array2;

use super::config::DetectorConfig;
use super::pipeline::scale_banks;
use crate::complex::{CalibrationPoint, PhaseRadiusTable};
use crate::error::{Error, Result};
use crate::frame::{pixel_coefficients, FilterBank, MeyerProfile};
use crate::multipliers::{MultiplierBank, ResponsePolynomial, SteeringOperator};
use crate::par;
use crate::simdata::radius_sweep;

/// Image size of the calibration sweep.
pub const CALIBRATION_SIZE: usize = 512;

const SHIPPED: &str = include_str!("../../data/multichannel.csv");

/// Geometric radii from 2 to 64 pixels, eight per octave.
pub fn calibration_radii() -> Vec<f64> {
    (0..=40).map(|i| 2.0 * (i as f64 / 8.0).exp2()).collect()
}

/// Table shipped for the default frame (B-spline family, default
/// window), fitted with [`calibrate_multichannel`] on
/// [`calibration_radii`] at [`CALIBRATION_SIZE`].
pub fn default_calibration() -> PhaseRadiusTable {
    static TABLE: OnceLock<PhaseRadiusTable> = OnceLock::new();
    TABLE
        .get_or_init(|| {
            PhaseRadiusTable::from_csv(SHIPPED).expect("shipped calibration table parses")
        })
        .clone()
}

/// Probes the multichannel response at one pixel of an image: refined
/// scale `t*` and channel energy per scale.
pub struct MultichannelProbe {
    bank: FilterBank,
    op: SteeringOperator,
    banks: Vec<MultiplierBank>,
    bank_of_scale: Vec<usize>,
}

impl MultichannelProbe {
    pub fn new(config: &DetectorConfig, rows: usize, cols: usize) -> Result<Self> {
        let profile = MeyerProfile::new(config.epsilon)?;
        let j = FilterBank::max_scales(rows, cols, &profile);
        let bank = FilterBank::with_shape(rows, cols, j, profile, config.norm)?;
        let (banks, bank_of_scale) = scale_banks(&config.spec, &bank);
        Ok(MultichannelProbe {
            op: SteeringOperator::new(&config.spec),
            bank,
            banks,
            bank_of_scale,
        })
    }

    pub fn point(
        &self,
        image: &Array2<f64>,
        radius: f64,
        center: (f64, f64),
    ) -> Result<CalibrationPoint> {
        if image.dim() != self.bank.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.bank.shape(),
                got: image.dim(),
            });
        }
        let (rows, cols) = image.dim();
        let px = (
            (center.1.round().max(0.0) as usize).min(rows - 1),
            (center.0.round().max(0.0) as usize).min(cols - 1),
        );
        let spectrum = self.bank.fft().forward_real(image);
        let mut phases = Vec::with_capacity(self.bank.scales());
        let mut energies = Vec::with_capacity(self.bank.scales());
        for s in 0..self.bank.scales() {
            let m = &self.banks[self.bank_of_scale[s]];
            let w: Vec<f64> = pixel_coefficients(&spectrum, &self.bank, Some(m), s, px)
                .iter()
                .map(|z| z.re)
                .collect();
            energies.push(w.iter().map(|v| v * v).sum::<f64>().sqrt());
            let (t, _) = ResponsePolynomial::from_channels(&self.op, &w, 0.0)?.argmax();
            phases.push(t);
        }
        Ok(CalibrationPoint {
            radius,
            phases,
            profile: energies.clone(),
            energies,
        })
    }

    /// Radius estimate at `center`, fusing `t*` over the strong scales.
    pub fn estimate(
        &self,
        image: &Array2<f64>,
        table: &PhaseRadiusTable,
        center: (f64, f64),
    ) -> Result<Option<f64>> {
        let p = self.point(image, f64::NAN, center)?;
        Ok(table
            .fused_log_radius(&p.phases, &p.energies, &p.profile)
            .map(f64::exp2))
    }
}

/// Fits the multichannel `(s, t*) -> radius` table on centered noiseless
/// disks of the given radii.
pub fn calibrate_multichannel(
    config: &DetectorConfig,
    size: usize,
    radii: &[f64],
) -> Result<PhaseRadiusTable> {
    let probe = MultichannelProbe::new(config, size, size)?;
    let sweep = radius_sweep(0, radii, size);
    let points = par::map_slice(&sweep, |(scene, image)| {
        let d = scene.disks[0];
        probe.point(image, d.radius, (d.x, d.y))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    // t* advances by about one unit per octave of radius.
    PhaseRadiusTable::fit("t_star", config.spec.sigma(), 1.0, &points)
}
