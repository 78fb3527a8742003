use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fbm::{gen_fbm, FbmParams};
use crate::error::{Error, Result};

/// Subsamples per pixel along each axis when rendering disk edges.
pub const SUPERSAMPLING: usize = 4;

/// A flat disk. Pixel `(row, col)` has its center at `(x, y) = (col, row)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub amplitude: f64,
}

/// Layout constraints for random scenes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub rows: usize,
    pub cols: usize,
    pub disks: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    /// Largest admissible `r_i + r_j - d_ij` in pixels.
    pub max_overlap: f64,
    /// Rejection-sampling budget per disk.
    pub attempts: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            rows: 512,
            cols: 512,
            disks: 20,
            radius_min: 8.0,
            radius_max: 40.0,
            max_overlap: 10.0,
            attempts: 10_000,
        }
    }
}

/// Everything needed to regenerate and score a synthetic image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthScene {
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    pub params: SceneParams,
    pub background: FbmParams,
    pub disks: Vec<Disk>,
}

/// SplitMix64 finalizer of `base + index * golden`: the seed of item
/// `index` in a corpus generated from `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Renders the union of `disks`: each pixel takes the largest amplitude
/// covering each of its `4 x 4` subsamples, averaged.
pub fn render_disks(rows: usize, cols: usize, disks: &[Disk]) -> Array2<f64> {
    let ss = SUPERSAMPLING;
    let sub = ss * ss;
    let mut cover = vec![0.0f64; rows * cols * sub];
    let offset = |i: usize| (i as f64 + 0.5) / ss as f64 - 0.5;
    for d in disks {
        let r2 = d.radius * d.radius;
        let r0 = ((d.y - d.radius - 1.0).floor().max(0.0)) as usize;
        let r1 = ((d.y + d.radius + 1.0).ceil().min(rows as f64 - 1.0)).max(0.0) as usize;
        let c0 = ((d.x - d.radius - 1.0).floor().max(0.0)) as usize;
        let c1 = ((d.x + d.radius + 1.0).ceil().min(cols as f64 - 1.0)).max(0.0) as usize;
        for r in r0..=r1 {
            for c in c0..=c1 {
                let base = (r * cols + c) * sub;
                for i in 0..ss {
                    let dy = r as f64 + offset(i) - d.y;
                    for j in 0..ss {
                        let dx = c as f64 + offset(j) - d.x;
                        if dx * dx + dy * dy <= r2 {
                            let v = &mut cover[base + i * ss + j];
                            *v = v.max(d.amplitude);
                        }
                    }
                }
            }
        }
    }
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let base = (r * cols + c) * sub;
        cover[base..base + sub].iter().sum::<f64>() / sub as f64
    })
}

/// Pairs `(i, j)` whose overlap `r_i + r_j - d` exceeds `limit`.
pub fn overlap_violations(disks: &[Disk], limit: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..disks.len() {
        for j in i + 1..disks.len() {
            let (a, b) = (&disks[i], &disks[j]);
            let d = (a.x - b.x).hypot(a.y - b.y);
            if a.radius + b.radius - d > limit {
                out.push((i, j));
            }
        }
    }
    out
}

fn place_disks(seed: u64, p: &SceneParams) -> Result<Vec<Disk>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut disks: Vec<Disk> = Vec::with_capacity(p.disks);
    for index in 0..p.disks {
        let mut placed = false;
        for _ in 0..p.attempts {
            let radius = if p.radius_max > p.radius_min {
                rng.random_range(p.radius_min..=p.radius_max)
            } else {
                p.radius_min
            };
            let (xmax, ymax) = (p.cols as f64 - 1.0 - radius, p.rows as f64 - 1.0 - radius);
            if xmax < radius || ymax < radius {
                continue;
            }
            let x = rng.random_range(radius..=xmax);
            let y = rng.random_range(radius..=ymax);
            let ok = disks
                .iter()
                .all(|d| radius + d.radius - (x - d.x).hypot(y - d.y) <= p.max_overlap);
            if ok {
                disks.push(Disk {
                    x,
                    y,
                    radius,
                    amplitude: 1.0,
                });
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::PackingInfeasible {
                index,
                total: p.disks,
                limit: p.max_overlap,
                attempts: p.attempts,
            });
        }
    }
    Ok(disks)
}

fn validate(p: &SceneParams) -> Result<()> {
    if p.rows == 0 || p.cols == 0 {
        return Err(Error::invalid("scene must have at least one pixel"));
    }
    if !(p.radius_min > 0.0 && p.radius_max >= p.radius_min && p.radius_max.is_finite()) {
        return Err(Error::invalid(format!(
            "radius range [{}, {}] is not a positive interval",
            p.radius_min, p.radius_max
        )));
    }
    if !(p.max_overlap >= 0.0) {
        return Err(Error::invalid("overlap limit must be >= 0"));
    }
    Ok(())
}

/// Random disk scene over an fBm background. Disks are fully inside the
/// image, pairwise overlap is bounded by `max_overlap`, amplitude is 1
/// and the background is added. The background seed is always
/// `derive_seed(seed, 0)`; the one in `background` is ignored.
pub fn gen_scene(
    seed: u64,
    params: &SceneParams,
    background: &FbmParams,
) -> Result<(GroundTruthScene, Array2<f64>)> {
    validate(params)?;
    let disks = place_disks(seed, params)?;
    let mut image = render_disks(params.rows, params.cols, &disks);
    let bg = FbmParams {
        seed: derive_seed(seed, 0),
        ..*background
    };
    if bg.std > 0.0 {
        image += &gen_fbm(&bg, params.rows, params.cols)?;
    }
    let scene = GroundTruthScene {
        rows: params.rows,
        cols: params.cols,
        seed,
        params: *params,
        background: bg,
        disks,
    };
    Ok((scene, image))
}

/// Radii `8.0, 8.2, ..., 11.0`.
pub fn sweep_radii() -> Vec<f64> {
    (0..16).map(|i| 8.0 + 0.2 * i as f64).collect()
}

/// One noiseless disk per radius, centered on pixel `(size/2, size/2)`.
pub fn radius_sweep(seed: u64, radii: &[f64], size: usize) -> Vec<(GroundTruthScene, Array2<f64>)> {
    let c = (size / 2) as f64;
    radii
        .iter()
        .map(|&radius| {
            let disk = Disk {
                x: c,
                y: c,
                radius,
                amplitude: 1.0,
            };
            let scene = GroundTruthScene {
                rows: size,
                cols: size,
                seed,
                params: SceneParams {
                    rows: size,
                    cols: size,
                    disks: 1,
                    radius_min: radius,
                    radius_max: radius,
                    ..SceneParams::default()
                },
                background: FbmParams::default(),
                disks: vec![disk],
            };
            (scene, render_disks(size, size, &[disk]))
        })
        .collect()
}
