//! Meyer-type primal tight frame on the periodic 2-D grid.

mod bank;
mod grid;
mod profile;
mod pyramid;

pub use bank::FilterBank;
pub use grid::{bin_frequency, FrequencyGrid, RadialNorm};
pub use profile::{smooth_ramp, MeyerProfile, DEFAULT_EPSILON};
pub use pyramid::{
    analyze, analyze_scale_real, decode_band, pixel_coefficients, synthesize, Band, Provenance,
    WaveletPyramid, DUMP_MAGIC,
};
