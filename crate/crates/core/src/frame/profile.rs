//! Meyer-type radial window.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default smoothing parameter of the radial window.
pub const DEFAULT_EPSILON: f64 = 0.125;

/// Smooth non-decreasing ramp from 0 (for `gamma < -1`) to pi/2 (for
/// `gamma >= 1`), a degree-7 polynomial in between.
///
/// The polynomial is odd around `gamma = 0` up to the constant, so
/// `smooth_ramp(g) + smooth_ramp(-g) == pi/2`.
pub fn smooth_ramp(gamma: f64) -> f64 {
    if gamma <= -1.0 {
        0.0
    } else if gamma >= 1.0 {
        FRAC_PI_2
    } else {
        let g2 = gamma * gamma;
        // Horner form of -g^7/7 + 3g^5/5 - g^3 + g.
        let odd = gamma * (1.0 + g2 * (-1.0 + g2 * (3.0 / 5.0 + g2 * (-1.0 / 7.0))));
        35.0 * PI / 64.0 * (odd + 16.0 / 35.0)
    }
}

/// The radial Fourier window `h_eps`.
///
/// Supported on `[4^(-1-eps) pi, pi]`, flat at `2^(-1/2)` in the middle,
/// and squared dyadic dilations sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeyerProfile {
    epsilon: f64,
}

impl Default for MeyerProfile {
    fn default() -> Self {
        MeyerProfile {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl MeyerProfile {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid(format!(
                "window smoothing epsilon must lie in (0, 1], got {epsilon}"
            )));
        }
        Ok(MeyerProfile { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Closed support `[lo, hi]` of the window.
    pub fn support(&self) -> (f64, f64) {
        (4f64.powf(-1.0 - self.epsilon) * PI, PI)
    }

    /// The angle `H_eps(x)` fed to the cosine; `x` is in octaves.
    pub fn angle(&self, x: f64) -> f64 {
        let e = self.epsilon;
        smooth_ramp((x + 1.0) / e) - FRAC_PI_2 + smooth_ramp((x - 1.0) / e)
    }

    /// Log-domain coordinate of a radial frequency: `log2(2^(1+eps) rho / pi)`.
    pub fn octave_coordinate(&self, rho: f64) -> f64 {
        (1.0 + self.epsilon) + (rho / PI).log2()
    }

    pub fn eval(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let (lo, hi) = self.support();
        if rho <= lo || rho >= hi {
            return 0.0;
        }
        FRAC_1_SQRT_2 * self.angle(self.octave_coordinate(rho)).cos()
    }

    /// Sum of `h(2^q rho)^2` over all integer `q`.
    pub fn dyadic_energy(&self, rho: f64) -> f64 {
        self.dyadic_energy_range(rho, i32::MIN, i32::MAX)
    }

    /// Sum of `h(2^q rho)^2` over `q_min <= q <= q_max`.
    pub fn dyadic_energy_range(&self, rho: f64, q_min: i32, q_max: i32) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let (lo, hi) = self.support();
        // 2^q rho inside (lo, hi)  <=>  q in (log2(lo/rho), log2(hi/rho)).
        let first = ((lo / rho).log2().floor() as i32).max(q_min);
        let last = ((hi / rho).log2().ceil() as i32).min(q_max);
        let mut acc = 0.0;
        let mut q = first;
        while q <= last {
            let v = self.eval(rho * 2f64.powi(q));
            acc += v * v;
            q += 1;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_values() {
        assert_eq!(smooth_ramp(-1.0), 0.0);
        assert!((smooth_ramp(-1.0 + 1e-12)).abs() < 1e-10);
        assert!((smooth_ramp(1.0) - FRAC_PI_2).abs() < 1e-15);
        // 35pi/64 * 32/35 == pi/2 from the polynomial branch.
        assert!((smooth_ramp(1.0 - 1e-15) - FRAC_PI_2).abs() < 1e-12);
        assert!((smooth_ramp(0.0) - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn ramp_is_monotone_and_antisymmetric() {
        let mut prev = smooth_ramp(-1.5);
        for i in 0..=3000 {
            let g = -1.5 + 3.0 * i as f64 / 3000.0;
            let v = smooth_ramp(g);
            assert!(v >= prev - 1e-15);
            assert!((v + smooth_ramp(-g) - FRAC_PI_2).abs() < 1e-13);
            prev = v;
        }
    }

    #[test]
    fn window_vanishes_outside_support() {
        let p = MeyerProfile::default();
        let (lo, hi) = p.support();
        assert_eq!(p.eval(2.0 * PI), 0.0);
        assert_eq!(p.eval(lo), 0.0);
        assert_eq!(p.eval(hi), 0.0);
        assert_eq!(p.eval(0.0), 0.0);
        assert!(p.eval(lo * 0.999).abs() == 0.0);
        // Edge angle is exactly -pi/2 at the left end.
        assert!((p.angle(p.octave_coordinate(lo)) + FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn window_bounds_and_flat_top() {
        let p = MeyerProfile::new(0.2).unwrap();
        for i in 1..5000 {
            let rho = 4.0 * i as f64 / 5000.0;
            let v = p.eval(rho);
            assert!((0.0..=FRAC_1_SQRT_2 + 1e-15).contains(&v));
        }
        assert!((p.eval(PI / 2.0 / 2f64.powf(0.2)) - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn octave_sum_is_one() {
        let p = MeyerProfile::default();
        assert!((p.dyadic_energy(1.3) - 1.0).abs() < 1e-13);
        for i in 0..500 {
            let rho = 1e-3 * 2f64.powf(i as f64 * 12.0 / 500.0);
            assert!((p.dyadic_energy(rho) - 1.0).abs() < 1e-12, "rho={rho}");
        }
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(MeyerProfile::new(0.0).is_err());
        assert!(MeyerProfile::new(1.5).is_err());
        assert!(MeyerProfile::new(f64::NAN).is_err());
        assert!(MeyerProfile::new(1.0).is_ok());
    }
}
