use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Norm used to turn a 2-D frequency into a radial argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum RadialNorm {
    #[default]
    Euclidean,
    Max,
}

impl RadialNorm {
    #[inline]
    pub fn apply(self, wy: f64, wx: f64) -> f64 {
        match self {
            RadialNorm::Euclidean => (wy * wy + wx * wx).sqrt(),
            RadialNorm::Max => wy.abs().max(wx.abs()),
        }
    }
}

impl std::str::FromStr for RadialNorm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "2" | "l2" | "euclidean" => Ok(RadialNorm::Euclidean),
            "inf" | "max" | "linf" => Ok(RadialNorm::Max),
            other => Err(format!("unknown radial norm '{other}' (use 2 or inf)")),
        }
    }
}

/// Angular frequency (radians per pixel) of DFT bin `k` out of `n`,
/// wrapped to `(-pi, pi]`.
#[inline]
pub fn bin_frequency(k: usize, n: usize) -> f64 {
    let signed = if 2 * k > n {
        k as f64 - n as f64
    } else {
        k as f64
    };
    2.0 * PI * signed / n as f64
}

/// Radial frequency of every DFT bin.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    norm: RadialNorm,
    radius: Array2<f64>,
}

impl FrequencyGrid {
    pub fn new(rows: usize, cols: usize, norm: RadialNorm) -> Self {
        let wy: Vec<f64> = (0..rows).map(|k| bin_frequency(k, rows)).collect();
        let wx: Vec<f64> = (0..cols).map(|k| bin_frequency(k, cols)).collect();
        let radius = Array2::from_shape_fn((rows, cols), |(r, c)| norm.apply(wy[r], wx[c]));
        FrequencyGrid { norm, radius }
    }

    pub fn norm(&self) -> RadialNorm {
        self.norm
    }

    pub fn shape(&self) -> (usize, usize) {
        self.radius.dim()
    }

    pub fn radius(&self) -> &Array2<f64> {
        &self.radius
    }

    /// Smallest nonzero frequency step along either axis.
    pub fn resolution(&self) -> f64 {
        let (r, c) = self.shape();
        2.0 * PI / r.min(c) as f64
    }
}
