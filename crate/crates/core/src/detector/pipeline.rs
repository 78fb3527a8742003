use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::calibration::default_calibration;
use super::config::{DetectorConfig, Polarity, Ranking, ThresholdMode};
use crate::complex::{PhaseRadiusTable, COVERAGE_MARGIN};
use crate::error::{Error, Result};
use crate::frame::{analyze_scale_real, FilterBank, MeyerProfile, WaveletPyramid};
use crate::multipliers::{
    MultiplierBank, ResponsePolynomial, SteeringOperator, TrigMultiplierSpec,
};
use crate::par;

/// A detected spot. Positions use pixel-center coordinates: pixel
/// `(row, col)` sits at `(x, y) = (col, row)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub score: f64,
    pub scale: usize,
    pub t_star: f64,
}

/// A pixel that survived thresholding and suppression at one scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub scale: usize,
    pub row: usize,
    pub col: usize,
    pub energy: f64,
}

/// `E(s, k) = sqrt(sum_n |w_n(s, k)|^2)` of a pyramid scale.
pub fn energy_map(pyramid: &WaveletPyramid, scale: usize) -> Array2<f64> {
    let mut acc = Array2::<f64>::zeros(pyramid.shape());
    for band in pyramid.scale_bands(scale) {
        acc.zip_mut_with(&band.data, |a, z| *a += z.norm_sqr());
    }
    acc.mapv_inplace(f64::sqrt);
    acc
}

fn channel_energy(channels: &[Array2<f64>], shape: (usize, usize)) -> Array2<f64> {
    let mut acc = Array2::<f64>::zeros(shape);
    for c in channels {
        acc.zip_mut_with(c, |a, v| *a += v * v);
    }
    acc.mapv_inplace(f64::sqrt);
    acc
}

/// Pixels of `e` at or above `threshold` (and positive) that dominate the
/// periodic square window of half-width `radius`. Equal values are
/// resolved in favour of the first pixel in row-major order.
pub fn local_maxima(e: &Array2<f64>, threshold: f64, radius: usize) -> Vec<(usize, usize)> {
    let (rows, cols) = e.dim();
    let rad = radius as isize;
    let mut out = Vec::new();
    for ((r, c), &v) in e.indexed_iter() {
        if !(v >= threshold && v > 0.0) {
            continue;
        }
        let here = r * cols + c;
        let mut keep = true;
        'win: for dr in -rad..=rad {
            let rr = (r as isize + dr).rem_euclid(rows as isize) as usize;
            for dc in -rad..=rad {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let cc = (c as isize + dc).rem_euclid(cols as isize) as usize;
                let w = e[[rr, cc]];
                if w > v || (w == v && rr * cols + cc < here) {
                    keep = false;
                    break 'win;
                }
            }
        }
        if keep {
            out.push((r, c));
        }
    }
    out
}

/// Largest value of `e` in the periodic square window of half-width
/// `radius` around `(row, col)`.
pub fn window_max(e: &Array2<f64>, row: usize, col: usize, radius: usize) -> f64 {
    let (rows, cols) = e.dim();
    let rad = radius as isize;
    let mut m = f64::NEG_INFINITY;
    for dr in -rad..=rad {
        let r = (row as isize + dr).rem_euclid(rows as isize) as usize;
        for dc in -rad..=rad {
            let c = (col as isize + dc).rem_euclid(cols as isize) as usize;
            m = m.max(e[[r, c]]);
        }
    }
    m
}

/// Thresholds and suppresses the energy maps of the scales in
/// `scales` (inclusive). With `scale_maxima` a survivor must also reach
/// the largest energy of the same window at the scales above and below,
/// which rejects rims seen by fine scales and clusters seen by coarse
/// ones. Output is sorted by descending energy, then scale, then
/// row-major position.
pub fn candidates(
    energy: &[Array2<f64>],
    scales: (usize, usize),
    config: &DetectorConfig,
) -> Vec<Candidate> {
    let max_of = |e: &Array2<f64>| e.iter().cloned().fold(0.0, f64::max);
    let global = (scales.0..=scales.1)
        .map(|s| max_of(&energy[s]))
        .fold(0.0, f64::max);
    let mut out: Vec<Candidate> = (scales.0..=scales.1)
        .flat_map(|s| {
            let e = &energy[s];
            let thr = match config.threshold_mode {
                ThresholdMode::PerScale => config.threshold * max_of(e),
                ThresholdMode::Global => config.threshold * global,
                ThresholdMode::Absolute => config.threshold,
            };
            local_maxima(e, thr, config.nms_radius)
                .into_iter()
                .filter(move |&(row, col)| {
                    let v = e[[row, col]];
                    !config.scale_maxima
                        || [s.checked_sub(1), Some(s + 1)]
                            .into_iter()
                            .flatten()
                            .filter(|&n| n < energy.len())
                            .all(|n| v >= window_max(&energy[n], row, col, config.nms_radius))
                })
                .map(move |(row, col)| Candidate {
                    scale: s,
                    row,
                    col,
                    energy: e[[row, col]],
                })
        })
        .collect();
    out.sort_by(|a, b| {
        b.energy
            .total_cmp(&a.energy)
            .then(a.scale.cmp(&b.scale))
            .then((a.row, a.col).cmp(&(b.row, b.col)))
    });
    out
}

/// Channel rasters and energies of every scale, from multipliers dilated
/// along with the window so each scale sees the same wavelet shape.
#[derive(Debug, Clone)]
pub struct ChannelPyramid {
    pub channels: Vec<Vec<Array2<f64>>>,
    pub energy: Vec<Array2<f64>>,
}

impl ChannelPyramid {
    pub fn scales(&self) -> usize {
        self.energy.len()
    }

    pub fn channel_vector(&self, scale: usize, row: usize, col: usize) -> Vec<f64> {
        self.channels[scale].iter().map(|c| c[[row, col]]).collect()
    }

    pub fn energy_profile(&self, row: usize, col: usize) -> Vec<f64> {
        self.energy.iter().map(|e| e[[row, col]]).collect()
    }
}

/// Multiplier banks for every scale, `M_n(2^s w)`. Banks repeat with
/// period `sigma` in `s`, so only distinct ones are evaluated.
pub(crate) fn scale_banks(
    spec: &TrigMultiplierSpec,
    bank: &FilterBank,
) -> (Vec<MultiplierBank>, Vec<usize>) {
    let mut keys: Vec<u64> = Vec::new();
    let mut index = Vec::with_capacity(bank.scales());
    for s in 0..bank.scales() {
        let key = (s as f64).rem_euclid(spec.sigma()).to_bits();
        let i = keys.iter().position(|&k| k == key).unwrap_or_else(|| {
            keys.push(key);
            keys.len() - 1
        });
        index.push(i);
    }
    let banks = keys
        .iter()
        .map(|&k| MultiplierBank::evaluate(spec, bank.grid(), f64::from_bits(k).exp2()))
        .collect();
    (banks, index)
}

/// A detection pipeline bound to one image shape.
pub struct Detector {
    config: DetectorConfig,
    bank: FilterBank,
    op: SteeringOperator,
    banks: Vec<MultiplierBank>,
    bank_of_scale: Vec<usize>,
    calibration: PhaseRadiusTable,
    scales: (usize, usize),
}

impl Detector {
    /// Builds the filter bank (all resolvable scales) and the dilated
    /// multipliers for `rows x cols` images. Without an explicit
    /// calibration the shipped table for the default frame is used.
    pub fn new(
        config: DetectorConfig,
        rows: usize,
        cols: usize,
        calibration: Option<PhaseRadiusTable>,
    ) -> Result<Self> {
        let profile = MeyerProfile::new(config.epsilon)?;
        let j = FilterBank::max_scales(rows, cols, &profile);
        let bank = FilterBank::with_shape(rows, cols, j, profile, config.norm)?;
        let scales = config.validate(j)?;
        let calibration = match calibration {
            Some(t) => t,
            None => {
                let defaults = DetectorConfig::default();
                if config.spec != defaults.spec || config.epsilon != defaults.epsilon {
                    return Err(Error::Calibration(
                        "no shipped calibration for this frame; run a calibration first".into(),
                    ));
                }
                default_calibration()
            }
        };
        let (banks, bank_of_scale) = scale_banks(&config.spec, &bank);
        Ok(Detector {
            op: SteeringOperator::new(&config.spec),
            config,
            bank,
            banks,
            bank_of_scale,
            calibration,
            scales,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn calibration(&self) -> &PhaseRadiusTable {
        &self.calibration
    }

    pub fn multipliers(&self, scale: usize) -> &MultiplierBank {
        &self.banks[self.bank_of_scale[scale]]
    }

    pub fn steering(&self) -> &SteeringOperator {
        &self.op
    }

    /// Inclusive range of scales searched for candidates.
    pub fn scale_range(&self) -> (usize, usize) {
        self.scales
    }

    fn check_shape(&self, image: &Array2<f64>) -> Result<()> {
        if image.dim() != self.bank.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.bank.shape(),
                got: image.dim(),
            });
        }
        if image.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite values"));
        }
        Ok(())
    }

    /// Step 1: multichannel analysis at every scale.
    pub fn analyze(&self, image: &Array2<f64>) -> Result<ChannelPyramid> {
        self.check_shape(image)?;
        let spectrum: Array2<Complex64> = self.bank.fft().forward_real(image);
        let channels: Vec<Vec<Array2<f64>>> = (0..self.bank.scales())
            .map(|s| analyze_scale_real(&spectrum, &self.bank, Some(self.multipliers(s)), s))
            .collect();
        let shape = self.bank.shape();
        let energy = par::map_slice(&channels, |c| channel_energy(c, shape));
        Ok(ChannelPyramid { channels, energy })
    }

    /// Step 2: thresholded, suppressed candidates.
    pub fn candidates(&self, pyramid: &ChannelPyramid) -> Vec<Candidate> {
        candidates(&pyramid.energy, self.scales, &self.config)
    }

    /// Step 3: continuous scale and radius of one candidate. `None` when
    /// the candidate has the wrong polarity, sits on a ridge, or carries
    /// no response.
    pub fn refine(&self, c: &Candidate, pyramid: &ChannelPyramid) -> Option<Detection> {
        self.refine_with(c, pyramid, None)
    }

    /// As [`Detector::refine`], for channels that were steered from the
    /// analysis multipliers by `T_{1, 2^log_dilation}` beforehand.
    pub fn refine_with(
        &self,
        c: &Candidate,
        pyramid: &ChannelPyramid,
        steered: Option<(&[f64], f64)>,
    ) -> Option<Detection> {
        let (rows, cols) = self.bank.shape();
        let e = &pyramid.energy[c.scale];
        let (channels, log_dilation) = match steered {
            Some((w, l)) => (w.to_vec(), l),
            None => (pyramid.channel_vector(c.scale, c.row, c.col), 0.0),
        };
        let w = self.oriented(pyramid.channel_vector(c.scale, c.row, c.col), channels)?;
        let poly = ResponsePolynomial::from_channels(&self.op, &w, log_dilation).ok()?;
        if poly.is_zero() {
            return None;
        }
        let (t_star, score) = poly.argmax();
        if !(score > 0.0) {
            return None;
        }
        let at = |dr: isize, dc: isize| {
            let r = (c.row as isize + dr).rem_euclid(rows as isize) as usize;
            let cc = (c.col as isize + dc).rem_euclid(cols as isize) as usize;
            e[[r, cc]]
        };
        let v = at(0, 0);
        let (dxx, dyy) = (
            at(0, 1) - 2.0 * v + at(0, -1),
            at(1, 0) - 2.0 * v + at(-1, 0),
        );
        let dxy = 0.25 * (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1));
        let (tr, det) = (dxx + dyy, dxx * dyy - dxy * dxy);
        let ratio = self.config.edge_ratio;
        if det <= 0.0 || tr * tr / det >= (ratio + 1.0).powi(2) / ratio {
            return None;
        }
        let profile = pyramid.energy_profile(c.row, c.col);
        let radius = self.readout_radius(c, pyramid, &profile, t_star)?;
        if self.config.band_check {
            let (lo, hi) = self.calibration.peak_band(c.scale)?;
            let l = radius.log2();
            if l < lo.log2() - COVERAGE_MARGIN || l > hi.log2() + COVERAGE_MARGIN {
                return None;
            }
        }
        let vertex = |m: f64, z: f64, p: f64| {
            let d = m - 2.0 * z + p;
            if d < 0.0 {
                (0.5 * (m - p) / d).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        };
        let dx = vertex(at(0, -1), v, at(0, 1));
        let dy = vertex(at(-1, 0), v, at(1, 0));
        Some(Detection {
            x: (c.col as f64 + dx).rem_euclid(cols as f64),
            y: (c.row as f64 + dy).rem_euclid(rows as f64),
            radius,
            score,
            scale: c.scale,
            t_star,
        })
    }

    /// Radius from the phase at the finest scale that carries at least
    /// half the peak energy and whose table covers the coarse estimate.
    /// Coarser scales mix in neighbouring spots, so they are not averaged
    /// in. Scales where the polarity rule fails are skipped.
    fn readout_radius(
        &self,
        c: &Candidate,
        pyramid: &ChannelPyramid,
        profile: &[f64],
        t_star: f64,
    ) -> Option<f64> {
        let phases: Vec<f64> = (0..profile.len())
            .map(|s| {
                if s == c.scale {
                    t_star
                } else {
                    self.unsteered_t_star(pyramid, s, c.row, c.col)
                }
            })
            .collect();
        let weights: Vec<f64> = profile
            .iter()
            .zip(&phases)
            .map(|(&e, p)| if p.is_nan() { 0.0 } else { e })
            .collect();
        self.calibration
            .readout_log_radius(&phases, &weights, profile)
            .map(f64::exp2)
    }

    /// `t*` of the plain channel vector at one pixel of scale `s`; NaN when
    /// the polarity rule rejects it.
    fn unsteered_t_star(&self, pyramid: &ChannelPyramid, s: usize, row: usize, col: usize) -> f64 {
        let raw = pyramid.channel_vector(s, row, col);
        self.oriented(raw.clone(), raw)
            .and_then(|w| ResponsePolynomial::from_channels(&self.op, &w, 0.0).ok())
            .map(|p| p.argmax())
            .filter(|&(_, v)| v > 0.0)
            .map_or(f64::NAN, |(t, _)| t)
    }

    /// Applies the polarity rule to `w` using the primal-frame sign of the
    /// unsteered vector `raw` (`sum_n w_n` is proportional to it).
    fn oriented(&self, raw: Vec<f64>, w: Vec<f64>) -> Option<Vec<f64>> {
        let alpha0 = self.config.spec.alpha()[0];
        let sign = raw.iter().sum::<f64>() * alpha0.signum();
        let flip = |v: Vec<f64>| v.into_iter().map(|x| -x).collect::<Vec<f64>>();
        if alpha0 == 0.0 {
            return match self.config.polarity {
                Polarity::Dark => Some(flip(w)),
                _ => Some(w),
            };
        }
        match self.config.polarity {
            Polarity::Bright if sign > 0.0 => Some(w),
            Polarity::Dark if sign < 0.0 => Some(flip(w)),
            Polarity::Both if sign > 0.0 => Some(w),
            Polarity::Both if sign < 0.0 => Some(flip(w)),
            _ => None,
        }
    }

    /// Step 4 plus cross-scale merging; see [`finalize_detections`].
    pub fn finalize(&self, dets: Vec<Detection>, image: &Array2<f64>) -> Vec<Detection> {
        finalize_detections(dets, image, &self.config)
    }

    /// The full pipeline.
    pub fn detect(&self, image: &Array2<f64>) -> Result<Vec<Detection>> {
        let pyramid = self.analyze(image)?;
        let cands = self.candidates(&pyramid);
        let refined: Vec<Detection> = par::map_slice(&cands, |c| self.refine(c, &pyramid))
            .into_iter()
            .flatten()
            .filter_map(|d| {
                let sign = polarity_sign(image, &d, self.config.polarity);
                let d = if self.config.polish {
                    polish_position(image, d, sign)
                } else {
                    d
                };
                let (core, _, _) = disk_statistics(image, &d, CORE_FRACTION);
                let (_, surround, _) = disk_statistics(image, &d, 1.0);
                (!self.config.core_check || sign * (core - surround) > 0.0).then_some(d)
            })
            .collect();
        Ok(self.finalize(refined, image))
    }
}

/// Cross-scale merging and ranking: keeps the strongest of detections
/// claiming the same spot (within the NMS window, or closer than
/// `overlap` times the larger radius), then orders by the ranking measure
/// and truncates.
pub fn finalize_detections(
    mut dets: Vec<Detection>,
    image: &Array2<f64>,
    config: &DetectorConfig,
) -> Vec<Detection> {
    let (rows, cols) = image.dim();
    let pdist = |a: &Detection, b: &Detection| {
        let wrap = |d: f64, n: f64| {
            let d = d.abs().rem_euclid(n);
            d.min(n - d)
        };
        (wrap(a.x - b.x, cols as f64), wrap(a.y - b.y, rows as f64))
    };
    dets.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.scale.cmp(&b.scale))
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
    });
    let window = config.nms_radius as f64;
    let mut kept: Vec<Detection> = Vec::new();
    for d in dets {
        let clash = kept.iter().any(|k| {
            let (dx, dy) = pdist(&d, k);
            dx.max(dy) <= window || dx.hypot(dy) < config.overlap * d.radius.max(k.radius)
        });
        if !clash {
            kept.push(d);
        }
    }
    if config.ranking != Ranking::Response {
        for d in &mut kept {
            d.score = polarity_sign(image, d, config.polarity)
                * ranking_measure(image, d, config.ranking);
        }
        kept.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.y.total_cmp(&b.y))
                .then(a.x.total_cmp(&b.x))
        });
    }
    if let Some(m) = config.max_detections {
        kept.truncate(m);
    }
    kept
}

/// Radius fraction of the central disk compared by the core check.
pub const CORE_FRACTION: f64 = 1.0 / 3.0;

/// Mean over the disk of radius `inner * radius`, and mean and standard
/// deviation over the annulus `radius < d <= 1.5 radius`, with periodic
/// indexing. Empty regions give zeros.
fn disk_statistics(image: &Array2<f64>, d: &Detection, inner: f64) -> (f64, f64, f64) {
    let (rows, cols) = image.dim();
    let outer = 1.5 * d.radius;
    let reach = outer.ceil() as isize + 1;
    let (cx, cy) = (d.x.round() as isize, d.y.round() as isize);
    let (mut si, mut ni) = (0.0, 0usize);
    let (mut so, mut so2, mut no) = (0.0, 0.0, 0usize);
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let (px, py) = (cx + dx, cy + dy);
            let dist = (px as f64 - d.x).hypot(py as f64 - d.y);
            let v = image[[
                py.rem_euclid(rows as isize) as usize,
                px.rem_euclid(cols as isize) as usize,
            ]];
            if dist <= inner * d.radius {
                si += v;
                ni += 1;
            } else if dist > d.radius && dist <= outer {
                so += v;
                so2 += v * v;
                no += 1;
            }
        }
    }
    if ni == 0 || no == 0 {
        return (0.0, 0.0, 0.0);
    }
    let m = so / no as f64;
    (si / ni as f64, m, (so2 / no as f64 - m * m).max(0.0).sqrt())
}

/// `+1` for bright spots, `-1` for dark ones. Under [`Polarity::Both`] the
/// sign of the disk contrast decides.
pub fn polarity_sign(image: &Array2<f64>, d: &Detection, polarity: Polarity) -> f64 {
    match polarity {
        Polarity::Bright => 1.0,
        Polarity::Dark => -1.0,
        Polarity::Both => {
            if ranking_measure(image, d, Ranking::Contrast) < 0.0 {
                -1.0
            } else {
                1.0
            }
        }
    }
}

/// Contrast (disk mean minus annulus mean) or SNR (contrast over the
/// annulus standard deviation) of a bright detection; negate for dark
/// ones.
pub fn ranking_measure(image: &Array2<f64>, d: &Detection, ranking: Ranking) -> f64 {
    let (inside, surround, sd) = match ranking {
        Ranking::Response => return d.score,
        _ => disk_statistics(image, d, 1.0),
    };
    let contrast = inside - surround;
    match ranking {
        Ranking::Contrast => contrast,
        _ => contrast / sd.max(1e-12),
    }
}

/// Moves a detection uphill on the disk-minus-annulus contrast at its
/// radius (times `sign`, see [`polarity_sign`]), one pixel at a time, for
/// at most `radius / 2` steps, then interpolates the contrast peak to
/// sub-pixel precision.
pub fn polish_position(image: &Array2<f64>, d: Detection, sign: f64) -> Detection {
    let contrast =
        |x: f64, y: f64| sign * ranking_measure(image, &Detection { x, y, ..d }, Ranking::Contrast);
    let (mut x, mut y) = (d.x.round(), d.y.round());
    let mut best = contrast(x, y);
    for _ in 0..(d.radius / 2.0).ceil() as usize {
        let mut next = None;
        for (dx, dy) in [
            (-1.0, -1.0),
            (0.0, -1.0),
            (1.0, -1.0),
            (-1.0, 0.0),
            (1.0, 0.0),
            (-1.0, 1.0),
            (0.0, 1.0),
            (1.0, 1.0),
        ] {
            let c = contrast(x + dx, y + dy);
            if c > best {
                best = c;
                next = Some((x + dx, y + dy));
            }
        }
        match next {
            Some((nx, ny)) => (x, y) = (nx, ny),
            None => break,
        }
    }
    let vertex = |m: f64, z: f64, p: f64| {
        let den = m - 2.0 * z + p;
        if den < 0.0 {
            (0.5 * (m - p) / den).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    };
    let sx = vertex(contrast(x - 1.0, y), best, contrast(x + 1.0, y));
    let sy = vertex(contrast(x, y - 1.0), best, contrast(x, y + 1.0));
    let (rows, cols) = image.dim();
    Detection {
        x: (x + sx).rem_euclid(cols as f64),
        y: (y + sy).rem_euclid(rows as f64),
        ..d
    }
}

/// Detects spots in `image` with a freshly built [`Detector`].
pub fn detect(image: &Array2<f64>, config: &DetectorConfig) -> Result<Vec<Detection>> {
    let (rows, cols) = image.dim();
    Detector::new(config.clone(), rows, cols, None)?.detect(image)
}
