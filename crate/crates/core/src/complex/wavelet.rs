use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::MeyerProfile;
use crate::multipliers::QuadratureFamily;

/// Default oscillation rate in radians per octave.
pub const DEFAULT_OMEGA0: f64 = 4.0 * PI;
/// Default phase origin `2^5 / pi`.
pub const DEFAULT_KAPPA: f64 = 32.0 / PI;

/// Quantum used to canonicalize `log2 kappa` so that equivalent origins
/// evaluate bit-identically.
const OFFSET_QUANTUM: f64 = 1.0 / (1u64 << 40) as f64;

/// One complex radial multiplier `exp(j omega0 log2(kappa |w|))` on top of
/// the tight window:
/// `psi_hat = h(|w|) (cos + j sin)(omega0 log2(kappa |w|))`.
///
/// Origins `kappa` and `kappa 2^(2 pi n / omega0)` describe the same
/// wavelet; the stored origin is reduced modulo one phase period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexWaveletSpec {
    omega0: f64,
    kappa: f64,
    /// `log2 kappa` reduced to `[0, 2 pi / omega0)`.
    offset: f64,
}

impl Default for ComplexWaveletSpec {
    fn default() -> Self {
        Self::new(DEFAULT_OMEGA0, DEFAULT_KAPPA).unwrap()
    }
}

impl ComplexWaveletSpec {
    pub fn new(omega0: f64, kappa: f64) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::invalid(format!(
                "omega0 must be positive, got {omega0}"
            )));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        let period = 2.0 * PI / omega0;
        let mut offset = kappa.log2().rem_euclid(period);
        offset = (offset / OFFSET_QUANTUM).round() * OFFSET_QUANTUM;
        if offset >= period {
            offset = 0.0;
        }
        Ok(ComplexWaveletSpec {
            omega0,
            kappa,
            offset,
        })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Phase period in octaves, `2 pi / omega0`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega0
    }

    /// The cosine/sine multiplier pair as a radial family.
    pub fn family(&self) -> QuadratureFamily {
        QuadratureFamily::cos_sin(self.period(), self.offset)
    }

    /// Phase `omega0 log2(kappa rho)` of the multiplier.
    pub fn phase(&self, rho: f64) -> f64 {
        self.omega0 * (rho.log2() + self.offset)
    }

    /// Fourier profiles `(psi_hat_cos, psi_hat_sin)` at radius `rho`.
    pub fn profiles(&self, window: &MeyerProfile, rho: f64) -> (f64, f64) {
        if rho <= 0.0 {
            return (0.0, 0.0);
        }
        let h = window.eval(rho);
        let (s, c) = self.phase(rho).sin_cos();
        (h * c, h * s)
    }

    /// Origin of the wavelet re-tuned to a measured phase:
    /// `kappa_sk = 2^(beta / omega0) kappa`, with `beta` in `[0, 2 pi)`.
    pub fn adapted_kappa(&self, beta: f64) -> f64 {
        2f64.powf(beta / self.omega0) * self.kappa
    }
}

/// Free-function form of [`ComplexWaveletSpec::adapted_kappa`].
pub fn adapted_kappa(beta: f64, spec: &ComplexWaveletSpec) -> f64 {
    spec.adapted_kappa(beta)
}
