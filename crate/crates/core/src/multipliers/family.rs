use std::f64::consts::PI;
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::spec::TrigMultiplierSpec;
use crate::error::{Error, Result};

/// A finite family of real radial Fourier multipliers `M_n(w) = m_n(|w|)`.
pub trait RadialMultipliers: Send + Sync {
    fn channels(&self) -> usize;

    /// Writes `m_n(rho)` for every channel into `out` (`rho > 0`).
    fn eval_into(&self, rho: f64, out: &mut [f64]);

    /// Stable identity of the family, used for provenance checks.
    fn id(&self) -> u64;

    fn eval(&self, rho: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.channels()];
        self.eval_into(rho, &mut out);
        out
    }
}

impl RadialMultipliers for TrigMultiplierSpec {
    fn channels(&self) -> usize {
        self.n_max()
    }

    fn eval_into(&self, rho: f64, out: &mut [f64]) {
        let x = rho.log2();
        for (n, o) in out.iter_mut().enumerate() {
            *o = self.profile(x + self.log_shift(n));
        }
    }

    fn id(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash_into(&mut h);
        h.finish()
    }
}

/// Unshifted quadrature family
/// `{alpha_0} U {alpha_l cos(2 pi l x / sigma), alpha_l sin(2 pi l x / sigma)}`
/// evaluated at `x = log2|w| + offset`.
///
/// A zero `alpha_0` drops the constant channel, so `alpha = [0, 1]` yields
/// the cosine/sine pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureFamily {
    alpha: Vec<f64>,
    sigma: f64,
    offset: f64,
}

impl QuadratureFamily {
    pub fn new(alpha: Vec<f64>, sigma: f64, offset: f64) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::invalid("alpha must have at least one coefficient"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let norm: f64 = alpha.iter().map(|a| a * a).sum();
        if (norm - 1.0).abs() > super::spec::NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(QuadratureFamily {
            alpha,
            sigma,
            offset,
        })
    }

    /// Cosine/sine pair with period `sigma` octaves.
    pub fn cos_sin(sigma: f64, offset: f64) -> Self {
        QuadratureFamily::new(vec![0.0, 1.0], sigma, offset).unwrap()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    fn has_constant(&self) -> bool {
        self.alpha[0] != 0.0
    }
}

impl RadialMultipliers for QuadratureFamily {
    fn channels(&self) -> usize {
        2 * (self.alpha.len() - 1) + usize::from(self.has_constant())
    }

    fn eval_into(&self, rho: f64, out: &mut [f64]) {
        let x = rho.log2() + self.offset;
        let w = 2.0 * PI / self.sigma;
        let mut i = 0;
        if self.has_constant() {
            out[0] = self.alpha[0];
            i = 1;
        }
        for (l, a) in self.alpha.iter().enumerate().skip(1) {
            let (s, c) = (w * l as f64 * x).sin_cos();
            out[i] = a * c;
            out[i + 1] = a * s;
            i += 2;
        }
    }

    fn id(&self) -> u64 {
        let mut h = DefaultHasher::new();
        "quadrature".hash(&mut h);
        for a in &self.alpha {
            a.to_bits().hash(&mut h);
        }
        self.sigma.to_bits().hash(&mut h);
        self.offset.to_bits().hash(&mut h);
        h.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cos_sin_pair_is_admissible() {
        let f = QuadratureFamily::cos_sin(2.0, 0.0);
        assert_eq!(f.channels(), 2);
        for i in 1..200 {
            let v = f.eval(i as f64 * 0.037);
            assert!((v[0] * v[0] + v[1] * v[1] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn trig_family_periodic_in_log_scale() {
        let spec = TrigMultiplierSpec::bspline_nine();
        let a = spec.eval(0.7);
        let b = spec.eval(0.7 * 4.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn ids_differ() {
        assert_ne!(
            QuadratureFamily::cos_sin(2.0, 0.0).id(),
            QuadratureFamily::cos_sin(2.0, 0.5).id()
        );
        assert_ne!(
            TrigMultiplierSpec::bspline_nine().id(),
            TrigMultiplierSpec::constant().id()
        );
    }
}
