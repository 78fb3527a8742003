//! Spot detection: multichannel analysis, thresholding with
//! non-maximum suppression, continuous scale refinement by steering, and
//! ranking.

mod calibration;
mod config;
mod pipeline;

pub use calibration::{
    calibrate_multichannel, calibration_radii, default_calibration, MultichannelProbe,
    CALIBRATION_SIZE,
};
pub use config::{DetectorConfig, Polarity, Ranking, ThresholdMode};
pub use pipeline::{
    candidates, detect, energy_map, finalize_detections, local_maxima, polarity_sign,
    polish_position, ranking_measure, window_max, Candidate, ChannelPyramid, Detection, Detector,
    CORE_FRACTION,
};
