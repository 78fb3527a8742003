//! Continuous-scale response recovered from the channel samples at one pixel.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::spec::TrigMultiplierSpec;
use super::steering::SteeringOperator;
use crate::error::{Error, Result};

/// Dense samples per period used to bracket the maximum.
pub const ARGMAX_SAMPLES: usize = 1024;

/// `r(t)`: response of the template `m(log2|w| + t)` at one pixel, a real
/// trigonometric polynomial of period `sigma`.
///
/// Channel `n` of an undilated analysis samples it at `t = log2 rho_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponsePolynomial {
    /// `q_l` for `l = 0..=L`; negative harmonics are the conjugates.
    coeffs: Vec<Complex64>,
    sigma: f64,
}

impl ResponsePolynomial {
    /// Builds `r` from the channel vector of an analysis whose multipliers
    /// were dilated by `2^log_dilation`.
    pub fn from_channels(
        op: &SteeringOperator,
        channels: &[f64],
        log_dilation: f64,
    ) -> Result<Self> {
        let spec = op.spec();
        if channels.len() != spec.n_max() {
            return Err(Error::DimensionMismatch {
                expected: (spec.n_max(), 1),
                got: (channels.len(), 1),
            });
        }
        let h = op.harmonics(ndarray::ArrayView1::from(channels));
        let l_max = spec.l_max();
        let k = 2.0 * PI / spec.sigma();
        let norm = 1.0 / (spec.n_max() as f64).sqrt();
        let coeffs = (0..=l_max)
            .map(|l| {
                let shift = Complex64::from_polar(1.0, -k * l as f64 * log_dilation);
                h[l_max + l] * norm * shift
            })
            .collect();
        Ok(ResponsePolynomial {
            coeffs,
            sigma: spec.sigma(),
        })
    }

    pub fn for_spec(spec: &TrigMultiplierSpec, channels: &[f64]) -> Result<Self> {
        Self::from_channels(&SteeringOperator::new(spec), channels, 0.0)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        let k = 2.0 * PI / self.sigma;
        let mut acc = self.coeffs[0].re;
        for (l, q) in self.coeffs.iter().enumerate().skip(1) {
            let (s, c) = (k * l as f64 * t).sin_cos();
            acc += 2.0 * (q.re * c - q.im * s);
        }
        acc
    }

    fn derivatives(&self, t: f64) -> (f64, f64) {
        let k = 2.0 * PI / self.sigma;
        let (mut d1, mut d2) = (0.0, 0.0);
        for (l, q) in self.coeffs.iter().enumerate().skip(1) {
            let w = k * l as f64;
            let (s, c) = (w * t).sin_cos();
            d1 += 2.0 * w * (-q.re * s - q.im * c);
            d2 += 2.0 * w * w * (-q.re * c + q.im * s);
        }
        (d1, d2)
    }

    /// Location `t*` in `[0, sigma)` and value of the maximum.
    ///
    /// Dense sampling brackets the peak (ties go to the smallest `t`), a
    /// parabola through the bracket refines it, and a few guarded Newton
    /// steps polish it. An all-zero polynomial returns `(0, 0)`.
    pub fn argmax(&self) -> (f64, f64) {
        if self.is_zero() {
            return (0.0, 0.0);
        }
        let n = ARGMAX_SAMPLES;
        let step = self.sigma / n as f64;
        let samples: Vec<f64> = (0..n).map(|i| self.value(i as f64 * step)).collect();
        let mut best = 0;
        for (i, &v) in samples.iter().enumerate() {
            if v > samples[best] {
                best = i;
            }
        }
        let (ym, y0, yp) = (
            samples[(best + n - 1) % n],
            samples[best],
            samples[(best + 1) % n],
        );
        let t0 = best as f64 * step;
        let denom = ym - 2.0 * y0 + yp;
        let mut t = if denom < 0.0 {
            t0 + 0.5 * step * (ym - yp) / denom
        } else {
            t0
        };
        for _ in 0..4 {
            let (d1, d2) = self.derivatives(t);
            if d2 >= 0.0 {
                break;
            }
            let next = t - d1 / d2;
            if (next - t0).abs() > step {
                break;
            }
            t = next;
        }
        let (t, v) = if self.value(t) >= y0 {
            (t, self.value(t))
        } else {
            (t0, y0)
        };
        (t.rem_euclid(self.sigma), v)
    }
}
