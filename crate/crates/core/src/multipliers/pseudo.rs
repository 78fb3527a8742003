//! Pseudo-dilation: scaling the multiplier continuously while the primal
//! window jumps by whole octaves, and the correlation with true dilation.

use std::f64::consts::PI;

use super::spec::TrigMultiplierSpec;
use crate::error::{Error, Result};
use crate::frame::MeyerProfile;

/// Default margin placing the pseudo-scaling interval inside the window.
pub const DEFAULT_EPS_PRIME: f64 = 0.45;

/// Log-spaced quadrature nodes for radial inner products.
const QUADRATURE_NODES: usize = 8193;

#[derive(Debug, Clone)]
pub struct PseudoScaling {
    spec: TrigMultiplierSpec,
    profile: MeyerProfile,
    eps_prime: f64,
    channel: usize,
    peak: f64,
}

impl PseudoScaling {
    /// Picks the reference channel: the lowest-index channel whose windowed
    /// profile `m(log2(rho_n rho)) h(rho)` peaks inside `(c, 2c]`,
    /// `c = 4^(-1-eps) pi + eps'`.
    pub fn new(spec: &TrigMultiplierSpec, profile: MeyerProfile, eps_prime: f64) -> Result<Self> {
        let limit = 0.5 * PI * (1.0 - 2.0 / 4f64.powf(1.0 + profile.epsilon()));
        if !(eps_prime > 0.0 && eps_prime < limit) {
            return Err(Error::invalid(format!(
                "eps' must lie in (0, {limit:.4}) for epsilon {}, got {eps_prime}",
                profile.epsilon()
            )));
        }
        let (lo, hi) = Self::interval_for(&profile, eps_prime);
        for n in 0..spec.n_max() {
            let peak = windowed_peak(spec, &profile, n);
            if peak > lo && peak <= hi {
                return Ok(PseudoScaling {
                    spec: spec.clone(),
                    profile,
                    eps_prime,
                    channel: n,
                    peak,
                });
            }
        }
        Err(Error::NoChannelInInterval { lo, hi })
    }

    fn interval_for(profile: &MeyerProfile, eps_prime: f64) -> (f64, f64) {
        let c = profile.support().0 + eps_prime;
        (c, 2.0 * c)
    }

    /// The half-open interval `(c, 2c]`.
    pub fn interval(&self) -> (f64, f64) {
        Self::interval_for(&self.profile, self.eps_prime)
    }

    /// 0-based index of the reference channel.
    pub fn channel(&self) -> usize {
        self.channel
    }

    /// Peak location `p0` of the reference wavelet profile.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps_prime
    }

    /// Octave jump `q_a` of the window: the integer with
    /// `p0 / a` inside `2^(-q_a) (c, 2c]`.
    pub fn window_shift(&self, a: f64) -> i32 {
        let (_, hi) = self.interval();
        // c < 2^q p0/a <= 2c  <=>  q = floor(log2(2c a / p0)).
        let q = (hi * a / self.peak).log2().floor();
        let q = q as i32;
        // Guard the boundary against rounding in log2.
        let scaled = 2f64.powi(q) * self.peak / a;
        if scaled > hi {
            q - 1
        } else if scaled <= hi / 2.0 {
            q + 1
        } else {
            q
        }
    }

    fn multiplier(&self, a: f64, rho: f64) -> f64 {
        self.spec
            .profile((a * rho).log2() + self.spec.log_shift(self.channel))
    }

    /// Fourier profile of the pseudo-dilated wavelet:
    /// `m(log2(rho_0 a rho)) h(2^q_a rho)`.
    pub fn pseudo_profile(&self, a: f64, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let q = self.window_shift(a);
        self.multiplier(a, rho) * self.profile.eval(2f64.powi(q) * rho)
    }

    /// Fourier profile of the truly dilated wavelet, `psi_hat(a rho)`.
    pub fn true_profile(&self, a: f64, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        self.multiplier(a, rho) * self.profile.eval(a * rho)
    }

    /// Normalized correlation between pseudo- and true dilation, clamped
    /// to `[0, 1]`. Computed on radial profiles with the planar measure
    /// `rho d rho`.
    pub fn quality(&self, a: f64) -> f64 {
        let q = self.window_shift(a);
        let (lo, hi) = self.profile.support();
        let s_pseudo = 2f64.powi(-q);
        let s_true = 1.0 / a;
        let start = (lo * s_pseudo.min(s_true)).ln();
        let end = (hi * s_pseudo.max(s_true)).ln();
        let h = (end - start) / (QUADRATURE_NODES - 1) as f64;
        let (mut ip, mut np, mut nt) = (0.0, 0.0, 0.0);
        for i in 0..QUADRATURE_NODES {
            let rho = (start + h * i as f64).exp();
            let w = simpson_weight(i, QUADRATURE_NODES) * rho * rho;
            let p = self.pseudo_profile(a, rho);
            let t = self.true_profile(a, rho);
            ip += w * p * t;
            np += w * p * p;
            nt += w * t * t;
        }
        if np == 0.0 || nt == 0.0 {
            return 0.0;
        }
        (ip / (np * nt).sqrt()).clamp(0.0, 1.0)
    }

    /// Quality over a grid of dilations; returns `(a, quality)` pairs.
    pub fn sweep(&self, a_start: f64, a_end: f64, points: usize) -> Vec<(f64, f64)> {
        let points = points.max(2);
        crate::par::map_range(points, |i| {
            let a = a_start * (a_end / a_start).powf(i as f64 / (points - 1) as f64);
            (a, self.quality(a))
        })
    }

    /// Dilations in `[a_start, a_end]` where the window jumps an octave.
    pub fn jump_points(&self, a_start: f64, a_end: f64) -> Vec<f64> {
        let (_, hi) = self.interval();
        let base = self.peak / hi;
        let k0 = (a_start / base).log2().floor() as i32;
        let k1 = (a_end / base).log2().ceil() as i32;
        (k0..=k1)
            .map(|k| base * 2f64.powi(k))
            .filter(|&a| a >= a_start && a <= a_end)
            .collect()
    }

    /// Smallest quality over one period `[1, 2^sigma]` of dilations: a
    /// geometric grid of `points` dilations plus both one-sided limits at
    /// every window jump, where the infimum usually sits.
    pub fn min_quality(&self, points: usize) -> (f64, f64) {
        let end = 2f64.powf(self.spec.sigma());
        let mut probes: Vec<(f64, f64)> = self.sweep(1.0, end, points);
        for a in self.jump_points(1.0, end) {
            for side in [a * (1.0 - 1e-12), a * (1.0 + 1e-12)] {
                if (1.0..=end).contains(&side) {
                    probes.push((side, self.quality(side)));
                }
            }
        }
        probes.into_iter().fold(
            (1.0, f64::INFINITY),
            |best, (a, q)| if q < best.1 { (a, q) } else { best },
        )
    }
}

fn simpson_weight(i: usize, n: usize) -> f64 {
    debug_assert!(n % 2 == 1);
    if i == 0 || i == n - 1 {
        1.0 / 3.0
    } else if i % 2 == 1 {
        4.0 / 3.0
    } else {
        2.0 / 3.0
    }
}

/// Location of the maximum of `m(log2(rho_n rho)) h(rho)` over the window
/// support.
fn windowed_peak(spec: &TrigMultiplierSpec, profile: &MeyerProfile, channel: usize) -> f64 {
    let (lo, hi) = profile.support();
    let f = |rho: f64| spec.profile(rho.log2() + spec.log_shift(channel)) * profile.eval(rho);
    let n = 4096;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / n as f64;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for i in 1..n {
        let v = f((llo + step * i as f64).exp());
        if v > best.0 {
            best = (v, i);
        }
    }
    // Golden-section refinement in log-frequency.
    let (mut a, mut b) = (
        llo + step * (best.1 - 1) as f64,
        llo + step * (best.1 + 1) as f64,
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c.exp()) >= f(d.exp()) {
            b = d;
        } else {
            a = c;
        }
    }
    (0.5 * (a + b)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_scaling() -> PseudoScaling {
        PseudoScaling::new(
            &TrigMultiplierSpec::bspline_nine(),
            MeyerProfile::default(),
            DEFAULT_EPS_PRIME,
        )
        .unwrap()
    }

    #[test]
    fn unit_dilation_is_identity() {
        let p = default_scaling();
        assert_eq!(p.window_shift(1.0), 0);
        assert_eq!(p.quality(1.0), 1.0);
        for i in 1..50 {
            let rho = 0.06 * i as f64;
            assert_eq!(p.pseudo_profile(1.0, rho), p.true_profile(1.0, rho));
        }
    }

    #[test]
    fn reference_peak_in_interval() {
        let p = default_scaling();
        let (lo, hi) = p.interval();
        assert!(p.peak() > lo && p.peak() <= hi);
    }

    #[test]
    fn window_shift_steps_at_interval_boundaries() {
        let p = default_scaling();
        let (lo, hi) = p.interval();
        let mut prev = p.window_shift(1.0);
        for i in 1..=3000 {
            let a = 1.0 + 3.0 * i as f64 / 3000.0;
            let q = p.window_shift(a);
            let pa = p.peak() / a;
            let scaled = pa * 2f64.powi(q);
            assert!(scaled > lo && scaled <= hi, "a={a}");
            assert!(q == prev || q == prev + 1);
            prev = q;
        }
        // The first jump happens exactly where p0/a crosses c.
        let a_jump = p.peak() / lo;
        assert_eq!(p.window_shift(a_jump * (1.0 - 1e-12)), 0);
        assert_eq!(p.window_shift(a_jump * (1.0 + 1e-12)), 1);
    }

    #[test]
    fn full_period_shifts_window_by_sigma_octaves() {
        let p = default_scaling();
        let a = 4.0;
        assert_eq!(p.window_shift(a), 2);
        for i in 1..80 {
            let rho = 0.01 * i as f64;
            let lhs = p.pseudo_profile(a, rho);
            let rhs = p.pseudo_profile(1.0, a * rho);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn quality_periodic() {
        let p = default_scaling();
        for &a in &[1.1, 1.5, 2.3, 3.7] {
            assert!((p.quality(a) - p.quality(4.0 * a)).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_eps_prime_rejected() {
        let spec = TrigMultiplierSpec::bspline_nine();
        assert!(PseudoScaling::new(&spec, MeyerProfile::default(), 0.0).is_err());
        assert!(PseudoScaling::new(&spec, MeyerProfile::default(), 1.0).is_err());
    }
}
