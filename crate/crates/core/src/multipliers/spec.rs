use std::f64::consts::PI;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the coefficient normalization `sum alpha_l^2 == 1`.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Shifted trigonometric multiplier family.
///
/// Channel `n` (1-based) is `m(log2(rho_n |w|))` with
/// `m(x) = alpha_0 / sqrt(N) + sum_l sqrt(2/N) alpha_l cos(2 pi l x / sigma)`
/// and `rho_n = 2^(sigma n / N)`, `N = n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigMultiplierSpec {
    alpha: Vec<f64>,
    sigma: f64,
    n_max: usize,
}

impl TrigMultiplierSpec {
    pub fn new(alpha: Vec<f64>, sigma: f64, n_max: usize) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::invalid("alpha must have at least one coefficient"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let l_max = alpha.len() - 1;
        if n_max < 2 * l_max + 1 {
            return Err(Error::TooFewChannels { n_max, l_max });
        }
        let norm: f64 = alpha.iter().map(|a| a * a).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(TrigMultiplierSpec {
            alpha,
            sigma,
            n_max,
        })
    }

    /// Builds a spec without validating it. Only meant for exercising
    /// admissibility checks on deliberately broken families.
    #[doc(hidden)]
    pub fn new_unchecked(alpha: Vec<f64>, sigma: f64, n_max: usize) -> Self {
        TrigMultiplierSpec {
            alpha,
            sigma,
            n_max,
        }
    }

    /// Nine-channel family whose coefficients sample a cubic B-spline,
    /// with a two-octave period.
    pub fn bspline_nine() -> Self {
        let c = 4685f64.sqrt() / 14055.0;
        let r2 = 2f64.sqrt();
        let alpha = vec![
            125.0 * c,
            101.0 * r2 * c,
            53.0 * r2 * c,
            16.0 * r2 * c,
            2.0 * r2 * c,
        ];
        TrigMultiplierSpec::new(alpha, 2.0, 9).expect("built-in family is admissible")
    }

    /// Trivial single-channel family (`m == 1`).
    pub fn constant() -> Self {
        TrigMultiplierSpec::new(vec![1.0], 2.0, 1).unwrap()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn l_max(&self) -> usize {
        self.alpha.len() - 1
    }

    /// `log2(rho_n)` for the 0-based channel `channel` (1-based index `channel + 1`).
    pub fn log_shift(&self, channel: usize) -> f64 {
        self.sigma * (channel + 1) as f64 / self.n_max as f64
    }

    /// The generating trigonometric polynomial `m(x)`.
    pub fn profile(&self, x: f64) -> f64 {
        let n = self.n_max as f64;
        let w = 2.0 * PI / self.sigma;
        let mut acc = self.alpha[0] / n.sqrt();
        let k = (2.0 / n).sqrt();
        for (l, a) in self.alpha.iter().enumerate().skip(1) {
            acc += k * a * (w * l as f64 * x).cos();
        }
        acc
    }

    /// Derivative of [`profile`](Self::profile).
    pub fn profile_derivative(&self, x: f64) -> f64 {
        let n = self.n_max as f64;
        let w = 2.0 * PI / self.sigma;
        let k = (2.0 / n).sqrt();
        self.alpha
            .iter()
            .enumerate()
            .skip(1)
            .map(|(l, a)| -k * a * w * l as f64 * (w * l as f64 * x).sin())
            .sum()
    }

    pub(crate) fn hash_into<H: Hasher>(&self, h: &mut H) {
        "trig".hash(h);
        for a in &self.alpha {
            a.to_bits().hash(h);
        }
        self.sigma.to_bits().hash(h);
        self.n_max.hash(h);
    }
}

/// A multiplier family together with the window and pseudo-scaling
/// parameters it is used with. Serialized as `key=value` lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignFile {
    pub spec: TrigMultiplierSpec,
    pub epsilon: f64,
    pub eps_prime: f64,
}

impl Default for DesignFile {
    fn default() -> Self {
        DesignFile {
            spec: TrigMultiplierSpec::bspline_nine(),
            epsilon: crate::frame::DEFAULT_EPSILON,
            eps_prime: crate::multipliers::DEFAULT_EPS_PRIME,
        }
    }
}

impl DesignFile {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let alpha: Vec<String> = self.spec.alpha.iter().map(|a| format!("{a:?}")).collect();
        writeln!(out, "alpha={}", alpha.join(",")).unwrap();
        writeln!(out, "sigma={:?}", self.spec.sigma).unwrap();
        writeln!(out, "n_max={}", self.spec.n_max).unwrap();
        writeln!(out, "epsilon={:?}", self.epsilon).unwrap();
        writeln!(out, "eps_prime={:?}", self.eps_prime).unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let defaults = DesignFile::default();
        let mut alpha = defaults.spec.alpha.clone();
        let mut sigma = defaults.spec.sigma;
        let mut n_max = defaults.spec.n_max;
        let mut epsilon = defaults.epsilon;
        let mut eps_prime = defaults.eps_prime;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            let value = value.trim();
            let num = |v: &str| -> Result<f64> {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            match key.trim() {
                "alpha" => {
                    alpha = value.split(',').map(num).collect::<Result<Vec<_>>>()?;
                }
                "sigma" => sigma = num(value)?,
                "n_max" => {
                    n_max = value
                        .parse()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?
                }
                "epsilon" => epsilon = num(value)?,
                "eps_prime" => eps_prime = num(value)?,
                other => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(DesignFile {
            spec: TrigMultiplierSpec::new(alpha, sigma, n_max)?,
            epsilon,
            eps_prime,
        })
    }
}
