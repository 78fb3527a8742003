use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{RadialNorm, DEFAULT_EPSILON};
use crate::multipliers::TrigMultiplierSpec;

/// Measure used to order the final detections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Ranking {
    /// Steered response `r(t*)`.
    #[default]
    Response,
    /// Mean intensity inside the disk minus the mean over the surrounding
    /// annulus of width `radius / 2`.
    Contrast,
    /// Contrast over the standard deviation of the annulus.
    Snr,
}

/// How the candidate threshold `tau` is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// `tau` times the maximum energy of each scale.
    #[default]
    PerScale,
    /// `tau` times the maximum energy over all searched scales.
    Global,
    /// `tau` in image intensity units.
    Absolute,
}

/// Which blobs count as spots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    #[default]
    Bright,
    Dark,
    Both,
}

macro_rules! text_enum {
    ($t:ty, $($v:path => $s:literal),+) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($v => $s),+ })
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($s => Ok($v),)+
                    other => Err(Error::Parse(format!(
                        "unknown {} {other:?}", stringify!($t)
                    ))),
                }
            }
        }
    };
}

text_enum!(Ranking, Ranking::Response => "response", Ranking::Contrast => "contrast", Ranking::Snr => "snr");
text_enum!(ThresholdMode, ThresholdMode::PerScale => "per-scale", ThresholdMode::Global => "global", ThresholdMode::Absolute => "absolute");
text_enum!(Polarity, Polarity::Bright => "bright", Polarity::Dark => "dark", Polarity::Both => "both");

/// Free parameters of the detection pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub spec: TrigMultiplierSpec,
    pub epsilon: f64,
    pub norm: RadialNorm,
    /// Inclusive range of scales searched for candidates; all by default.
    pub scale_range: Option<(usize, usize)>,
    pub threshold: f64,
    pub threshold_mode: ThresholdMode,
    /// Half-width of the square suppression window, in pixels.
    pub nms_radius: usize,
    pub max_detections: Option<usize>,
    pub ranking: Ranking,
    pub polarity: Polarity,
    /// Largest principal-curvature ratio of the energy at a candidate;
    /// ridges (edges, rims) exceed it.
    pub edge_ratio: f64,
    /// Two detections closer than `overlap * max(r_i, r_j)` are duplicates.
    pub overlap: f64,
    /// Keep only candidates whose energy also dominates the suppression
    /// window at the neighbouring scales.
    pub scale_maxima: bool,
    /// Drop detections whose radius falls outside the radii that peak at
    /// the candidate's scale (widened by the table coverage margin).
    pub band_check: bool,
    /// Move each refined detection uphill on its disk contrast before the
    /// cross-scale merge. Coarse scales misplace large spots in clusters.
    pub polish: bool,
    /// Drop detections whose central third is not brighter (darker, for
    /// dark spots) than their surrounding annulus; rejects rings of
    /// neighbouring spots read as one large spot.
    pub core_check: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            spec: TrigMultiplierSpec::bspline_nine(),
            epsilon: DEFAULT_EPSILON,
            norm: RadialNorm::Euclidean,
            scale_range: None,
            threshold: 0.25,
            threshold_mode: ThresholdMode::PerScale,
            nms_radius: 5,
            max_detections: None,
            ranking: Ranking::Response,
            polarity: Polarity::Bright,
            edge_ratio: 10.0,
            overlap: 0.5,
            scale_maxima: true,
            band_check: true,
            polish: true,
            core_check: true,
        }
    }
}

impl DetectorConfig {
    /// Checks the configuration against a bank with `scales` scales and
    /// returns the resolved inclusive scale range.
    pub fn validate(&self, scales: usize) -> Result<(usize, usize)> {
        let (lo, hi) = self.scale_range.unwrap_or((0, scales.saturating_sub(1)));
        if lo > hi || hi >= scales {
            return Err(Error::invalid(format!(
                "scale range [{lo}, {hi}] outside the bank's {scales} scales"
            )));
        }
        let relative = self.threshold_mode != ThresholdMode::Absolute;
        if !(self.threshold >= 0.0 && self.threshold.is_finite())
            || (relative && self.threshold >= 1.0)
        {
            return Err(Error::invalid(format!(
                "threshold {} must lie in [0, 1) for relative modes and be >= 0 otherwise",
                self.threshold
            )));
        }
        if self.nms_radius < 1 {
            return Err(Error::invalid("NMS radius must be at least 1"));
        }
        if !(self.edge_ratio > 1.0) {
            return Err(Error::invalid("edge ratio must exceed 1"));
        }
        if !(self.overlap >= 0.0) {
            return Err(Error::invalid("overlap factor must be >= 0"));
        }
        Ok((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enums_parse_and_print() {
        for r in [Ranking::Response, Ranking::Contrast, Ranking::Snr] {
            assert_eq!(r.to_string().parse::<Ranking>().unwrap(), r);
        }
        assert_eq!(
            "Per-Scale".parse::<ThresholdMode>().unwrap(),
            ThresholdMode::PerScale
        );
        assert!("loud".parse::<Polarity>().is_err());
    }

    #[test]
    fn validation() {
        let c = DetectorConfig::default();
        assert_eq!(c.validate(6).unwrap(), (0, 5));
        let bad = DetectorConfig {
            scale_range: Some((2, 7)),
            ..c.clone()
        };
        assert!(bad.validate(6).is_err());
        let bad = DetectorConfig {
            threshold: 1.0,
            ..c.clone()
        };
        assert!(bad.validate(6).is_err());
        let ok = DetectorConfig {
            threshold: 3.0,
            threshold_mode: ThresholdMode::Absolute,
            ..c.clone()
        };
        assert!(ok.validate(6).is_ok());
        let bad = DetectorConfig { nms_radius: 0, ..c };
        assert!(bad.validate(6).is_err());
    }
}
