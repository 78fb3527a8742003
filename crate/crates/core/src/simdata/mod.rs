//! Synthetic corpora: disk scenes, isotropic fBm backgrounds and the
//! single-disk radius sweep.

mod fbm;
mod scene;

pub use fbm::{gen_fbm, FbmParams, DEFAULT_FBM_EXPONENT};
pub use scene::{
    derive_seed, gen_scene, overlap_violations, radius_sweep, render_disks, sweep_radii, Disk,
    GroundTruthScene, SceneParams, SUPERSAMPLING,
};
