use ndarray::{Array2, Zip};
use num_complex::Complex64;

use super::wavelet::ComplexWaveletSpec;
use crate::error::{Error, Result};
use crate::frame::FilterBank;
use crate::par;

/// Amplitude and phase of the complex coefficients
/// `A e^{j beta} = <f, psi_sk>` at every pixel of every scale.
#[derive(Debug, Clone)]
pub struct PolarCoefficientMap {
    amplitude: Vec<Array2<f64>>,
    phase: Vec<Array2<f64>>,
}

impl PolarCoefficientMap {
    pub fn scales(&self) -> usize {
        self.amplitude.len()
    }

    pub fn amplitude(&self, scale: usize) -> &Array2<f64> {
        &self.amplitude[scale]
    }

    /// Phase in `[0, 2 pi)`.
    pub fn phase(&self, scale: usize) -> &Array2<f64> {
        &self.phase[scale]
    }

    pub fn coefficient(&self, scale: usize, pixel: (usize, usize)) -> Complex64 {
        Complex64::from_polar(self.amplitude[scale][pixel], self.phase[scale][pixel])
    }

    /// Splits complex rasters into polar form.
    pub fn from_coefficients(coeffs: &[Array2<Complex64>]) -> Self {
        let (amplitude, phase) = coeffs
            .iter()
            .map(|c| {
                let mut a = Array2::zeros(c.dim());
                let mut b = Array2::zeros(c.dim());
                Zip::from(&mut a).and(&mut b).and(c).for_each(|a, b, z| {
                    let (r, t) = z.to_polar();
                    *a = r;
                    *b = wrap_phase(t);
                });
                (a, b)
            })
            .unzip();
        PolarCoefficientMap { amplitude, phase }
    }
}

/// Reduces an angle to `[0, 2 pi)`.
pub fn wrap_phase(t: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let w = t.rem_euclid(tau);
    if w >= tau {
        0.0
    } else {
        w
    }
}

/// Conjugated complex symbol `h(2^s |w|) e^{-j omega0 log2(kappa 2^s |w|)}`
/// of scale `s`. Its inverse transform against the image spectrum yields
/// `<f, psi_sk>`.
pub fn scale_symbol(
    bank: &FilterBank,
    spec: &ComplexWaveletSpec,
    scale: usize,
) -> Array2<Complex64> {
    let dilation = 2f64.powi(scale as i32);
    let mut out = Array2::zeros(bank.shape());
    Zip::from(&mut out)
        .and(bank.mask(scale))
        .and(bank.grid().radius())
        .for_each(|o, &m, &rho| {
            if m != 0.0 && rho > 0.0 {
                *o = Complex64::from_polar(m, -spec.phase(dilation * rho));
            }
        });
    out
}

/// Complex coefficient rasters `<f, psi_sk>` for every scale of `bank`.
pub fn complex_coefficients(
    image: &Array2<f64>,
    bank: &FilterBank,
    spec: &ComplexWaveletSpec,
) -> Result<Vec<Array2<Complex64>>> {
    if image.dim() != bank.shape() {
        return Err(Error::DimensionMismatch {
            expected: bank.shape(),
            got: image.dim(),
        });
    }
    let fft = bank.fft();
    let spectrum = fft.forward_real(image);
    Ok(par::map_range(bank.scales(), |s| {
        let mut data = spectrum.clone();
        data *= &scale_symbol(bank, spec, s);
        fft.inverse(&mut data);
        data
    }))
}

/// Polar form of the complex coefficients of `image`.
pub fn polar_coefficients(
    image: &Array2<f64>,
    bank: &FilterBank,
    spec: &ComplexWaveletSpec,
) -> Result<PolarCoefficientMap> {
    Ok(PolarCoefficientMap::from_coefficients(
        &complex_coefficients(image, bank, spec)?,
    ))
}

/// Complex coefficient of every scale at one pixel, straight from the
/// image spectrum.
pub fn pixel_complex_coefficients(
    spectrum: &Array2<Complex64>,
    bank: &FilterBank,
    spec: &ComplexWaveletSpec,
    pixel: (usize, usize),
) -> Vec<Complex64> {
    let (rows, cols) = spectrum.dim();
    let tw = |n: usize, k: usize| -> Vec<Complex64> {
        (0..n)
            .map(|u| {
                let ph = 2.0 * std::f64::consts::PI * ((u * k) % n) as f64 / n as f64;
                Complex64::from_polar(1.0, ph)
            })
            .collect()
    };
    let (ey, ex) = (tw(rows, pixel.0), tw(cols, pixel.1));
    let norm = 1.0 / (rows * cols) as f64;
    par::map_range(bank.scales(), |s| {
        let sym = scale_symbol(bank, spec, s);
        let mut acc = Complex64::new(0.0, 0.0);
        for ((u, v), z) in spectrum.indexed_iter() {
            acc += z * sym[[u, v]] * ey[u] * ex[v];
        }
        acc * norm
    })
}
