//! Multiscale Laplacian-of-Gaussian blob detector used as the reference
//! method.

use std::f64::consts::SQRT_2;

use ndarray::Array2;
use num_complex::Complex64;

use crate::detector::{
    finalize_detections, local_maxima, window_max, Detection, DetectorConfig, Polarity,
    ThresholdMode,
};
use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::frame::{FrequencyGrid, RadialNorm};
use crate::par;

/// Scales sampled per octave by [`default_log_sigmas`].
pub const LOG_STEPS_PER_OCTAVE: usize = 8;

/// Gaussian scales whose blob radii `sqrt(2) sigma` run geometrically from
/// 4 to 64 pixels, so radii in `[8, 40]` peak away from the ends.
pub fn default_log_sigmas() -> Vec<f64> {
    let n = 4 * LOG_STEPS_PER_OCTAVE;
    (0..=n)
        .map(|k| 4.0 * (k as f64 / LOG_STEPS_PER_OCTAVE as f64).exp2() / SQRT_2)
        .collect()
}

/// Scale-normalized negative LoG responses `-sigma^2 (lap G_sigma * f)`,
/// one raster per sigma. Bright blobs give positive peaks.
pub fn log_responses(image: &Array2<f64>, sigmas: &[f64]) -> Vec<Array2<f64>> {
    let (rows, cols) = image.dim();
    let fft = Fft2::new(rows, cols);
    let spectrum = fft.forward_real(image);
    let grid = FrequencyGrid::new(rows, cols, RadialNorm::Euclidean);
    let mask = |sigma: f64| {
        grid.radius().mapv(|rho| {
            let x = sigma * sigma * rho * rho;
            x * (-0.5 * x).exp()
        })
    };
    // Two real responses per inverse transform.
    let pairs: Vec<Vec<Array2<f64>>> = par::map_range(sigmas.len().div_ceil(2), |p| {
        let a = mask(sigmas[2 * p]);
        let b = sigmas.get(2 * p + 1).map(|&s| mask(s));
        let mut data = Array2::from_shape_fn((rows, cols), |ix| {
            let f = spectrum[ix];
            let mb = b.as_ref().map_or(0.0, |m| m[ix]);
            f * a[ix] + Complex64::i() * f * mb
        });
        fft.inverse(&mut data);
        let mut out = vec![data.mapv(|z| z.re)];
        if b.is_some() {
            out.push(data.mapv(|z| z.im));
        }
        out
    });
    pairs.into_iter().flatten().collect()
}

fn vertex(m: f64, z: f64, p: f64) -> f64 {
    let d = m - 2.0 * z + p;
    if d < 0.0 {
        (0.5 * (m - p) / d).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// Blob detection on `(x, y, sigma)` maxima of the scale-normalized LoG.
///
/// Thresholding, spatial suppression, cross-scale merging and ranking use
/// the same rules and parameters as the main detector. A maximum must also
/// dominate the same window at both neighbouring scales, so the first and
/// last sigma only serve as neighbours. Radius is `sqrt(2) sigma`, with
/// sigma refined by a parabola in `log sigma`; `scale` holds the sigma
/// index and `t_star` the refined `log2 sigma`.
pub fn log_baseline(
    image: &Array2<f64>,
    sigmas: &[f64],
    config: &DetectorConfig,
) -> Result<Vec<Detection>> {
    if sigmas.len() < 3 {
        return Err(Error::invalid("LoG baseline needs at least three scales"));
    }
    if sigmas.iter().any(|&s| !(s > 0.0)) || sigmas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("LoG scales must be positive and increasing"));
    }
    if image.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("image contains non-finite values"));
    }
    let (rows, cols) = image.dim();
    let responses: Vec<Array2<f64>> = log_responses(image, sigmas)
        .into_iter()
        .map(|r| match config.polarity {
            Polarity::Bright => r,
            Polarity::Dark => r.mapv(|v| -v),
            Polarity::Both => r.mapv(f64::abs),
        })
        .collect();
    let max_of = |e: &Array2<f64>| e.iter().cloned().fold(0.0, f64::max);
    let global = responses.iter().map(max_of).fold(0.0, f64::max);
    let logs: Vec<f64> = sigmas.iter().map(|s| s.log2()).collect();
    let per_scale: Vec<Vec<Detection>> = par::map_range(sigmas.len() - 2, |i| {
        let k = i + 1;
        let e = &responses[k];
        let thr = match config.threshold_mode {
            ThresholdMode::PerScale => config.threshold * max_of(e),
            ThresholdMode::Global => config.threshold * global,
            ThresholdMode::Absolute => config.threshold,
        };
        local_maxima(e, thr, config.nms_radius)
            .into_iter()
            .filter(|&(r, c)| {
                let v = e[[r, c]];
                v >= window_max(&responses[k - 1], r, c, config.nms_radius)
                    && v >= window_max(&responses[k + 1], r, c, config.nms_radius)
            })
            .map(|(r, c)| {
                let at = |dr: isize, dc: isize| {
                    let rr = (r as isize + dr).rem_euclid(rows as isize) as usize;
                    let cc = (c as isize + dc).rem_euclid(cols as isize) as usize;
                    e[[rr, cc]]
                };
                let v = at(0, 0);
                let dx = vertex(at(0, -1), v, at(0, 1));
                let dy = vertex(at(-1, 0), v, at(1, 0));
                let off = vertex(responses[k - 1][[r, c]], v, responses[k + 1][[r, c]]);
                let step = if off < 0.0 {
                    logs[k] - logs[k - 1]
                } else {
                    logs[k + 1] - logs[k]
                };
                let log_sigma = logs[k] + off * step;
                Detection {
                    x: (c as f64 + dx).rem_euclid(cols as f64),
                    y: (r as f64 + dy).rem_euclid(rows as f64),
                    radius: SQRT_2 * log_sigma.exp2(),
                    score: v,
                    scale: k,
                    t_star: log_sigma,
                }
            })
            .collect()
    });
    let dets = per_scale.into_iter().flatten().collect();
    Ok(finalize_detections(dets, image, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simdata::{render_disks, Disk};

    #[test]
    fn blank_image_is_empty() {
        let img = Array2::zeros((64, 64));
        let d = log_baseline(&img, &default_log_sigmas(), &DetectorConfig::default()).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn single_disk_radius_within_one_step() {
        let r = 12.0;
        let img = render_disks(
            128,
            128,
            &[Disk {
                x: 64.0,
                y: 64.0,
                radius: r,
                amplitude: 1.0,
            }],
        );
        let sigmas = default_log_sigmas();
        let d = log_baseline(&img, &sigmas, &DetectorConfig::default()).unwrap();
        let best = d[0];
        assert!((best.x - 64.0).abs() < 0.5 && (best.y - 64.0).abs() < 0.5);
        let step = 2f64.powf(1.0 / LOG_STEPS_PER_OCTAVE as f64);
        let sigma = best.radius / SQRT_2;
        let want = r / SQRT_2;
        assert!(
            sigma / want < step && want / sigma < step,
            "sigma {sigma} want {want}"
        );
    }

    #[test]
    fn responses_pair_packing_matches_single() {
        let img = render_disks(
            32,
            32,
            &[Disk {
                x: 15.3,
                y: 16.0,
                radius: 5.0,
                amplitude: 1.0,
            }],
        );
        let sigmas = [2.0, 3.0, 4.0];
        let all = log_responses(&img, &sigmas);
        for (k, &s) in sigmas.iter().enumerate() {
            let one = log_responses(&img, &[s]);
            let diff = (&all[k] - &one[0])
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_scales() {
        let img = Array2::zeros((16, 16));
        let cfg = DetectorConfig::default();
        assert!(log_baseline(&img, &[1.0, 2.0], &cfg).is_err());
        assert!(log_baseline(&img, &[1.0, 3.0, 2.0], &cfg).is_err());
    }
}
