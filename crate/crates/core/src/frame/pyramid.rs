use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use super::bank::FilterBank;
use crate::error::{Error, Result};
use crate::multipliers::MultiplierBank;
use crate::par;

/// Magic bytes of a dumped channel.
pub const DUMP_MAGIC: &[u8; 4] = b"WPYR";

/// One undecimated coefficient raster.
#[derive(Debug, Clone)]
pub struct Band {
    pub scale: usize,
    pub channel: usize,
    pub data: Array2<Complex64>,
}

/// Which bank and multiplier family produced a pyramid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub bank: u64,
    pub multipliers: Option<u64>,
}

/// Undecimated tight-frame coefficients: `scales x channels` bands plus
/// the two residuals, all at the source resolution.
#[derive(Debug, Clone)]
pub struct WaveletPyramid {
    shape: (usize, usize),
    scales: usize,
    channels: usize,
    bands: Vec<Band>,
    lowpass: Array2<f64>,
    highpass: Array2<f64>,
    provenance: Provenance,
}

impl WaveletPyramid {
    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn band(&self, scale: usize, channel: usize) -> &Band {
        &self.bands[scale * self.channels + channel]
    }

    /// All channel rasters of one scale, in channel order.
    pub fn scale_bands(&self, scale: usize) -> &[Band] {
        &self.bands[scale * self.channels..(scale + 1) * self.channels]
    }

    pub fn lowpass(&self) -> &Array2<f64> {
        &self.lowpass
    }

    pub fn highpass(&self) -> &Array2<f64> {
        &self.highpass
    }

    /// Sum over every raster of the mean squared modulus.
    pub fn energy(&self) -> f64 {
        let n = (self.shape.0 * self.shape.1) as f64;
        let bands: f64 = self
            .bands
            .iter()
            .map(|b| b.data.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum();
        let res: f64 = self
            .lowpass
            .iter()
            .chain(self.highpass.iter())
            .map(|v| v * v)
            .sum();
        (bands + res) / n
    }

    /// Replaces the channels of `scale` by `t` applied pixel-wise. The
    /// multiplier provenance is cleared since the bands no longer match the
    /// family they were analyzed with.
    pub fn steer_scale(&mut self, scale: usize, t: &Array2<Complex64>) -> Result<()> {
        let range = scale * self.channels..(scale + 1) * self.channels;
        let src: Vec<Array2<Complex64>> = self.bands[range.clone()]
            .iter()
            .map(|b| b.data.clone())
            .collect();
        let out = crate::multipliers::steer_complex_coefficients(t, &src)?;
        if out.len() != self.channels {
            return Err(Error::invalid("steering must preserve the channel count"));
        }
        for (band, data) in self.bands[range].iter_mut().zip(out) {
            band.data = data;
        }
        self.provenance.multipliers = None;
        Ok(())
    }

    /// Writes one file per band: `WPYR`, `u32 rows`, `u32 cols`,
    /// `u32 flags` (scale in the high 16 bits, channel in the low 16),
    /// followed by row-major little-endian `f32` real/imaginary pairs.
    pub fn dump(&self, dir: &Path, stem: &str) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for band in &self.bands {
            let path = dir.join(format!("{stem}_s{}_c{}.wpyr", band.scale, band.channel));
            let bytes = encode_band(band);
            let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            f.write_all(&bytes).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub(crate) fn encode_band(band: &Band) -> Vec<u8> {
    let (rows, cols) = band.data.dim();
    let mut bytes = Vec::with_capacity(16 + rows * cols * 8);
    bytes.extend_from_slice(DUMP_MAGIC);
    bytes.extend_from_slice(&(rows as u32).to_le_bytes());
    bytes.extend_from_slice(&(cols as u32).to_le_bytes());
    let flags = ((band.scale as u32) << 16) | (band.channel as u32 & 0xffff);
    bytes.extend_from_slice(&flags.to_le_bytes());
    for z in band.data.iter() {
        bytes.extend_from_slice(&(z.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    bytes
}

/// Parses a dumped band back into `(scale, channel, data)`.
pub fn decode_band(bytes: &[u8]) -> Result<Band> {
    if bytes.len() < 16 || &bytes[..4] != DUMP_MAGIC {
        return Err(Error::Parse("not a WPYR band dump".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (rows, cols, flags) = (word(4) as usize, word(8) as usize, word(12));
    if bytes.len() != 16 + rows * cols * 8 {
        return Err(Error::Parse(format!(
            "band payload has {} bytes, header promises {}",
            bytes.len() - 16,
            rows * cols * 8
        )));
    }
    let f = |i: usize| f32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as f64;
    let data = Array2::from_shape_fn((rows, cols), |(r, c)| {
        let off = 16 + (r * cols + c) * 8;
        Complex64::new(f(off), f(off + 4))
    });
    Ok(Band {
        scale: (flags >> 16) as usize,
        channel: (flags & 0xffff) as usize,
        data,
    })
}

fn check_inputs(
    shape: (usize, usize),
    bank: &FilterBank,
    multipliers: Option<&MultiplierBank>,
) -> Result<()> {
    if shape != bank.shape() {
        return Err(Error::DimensionMismatch {
            expected: bank.shape(),
            got: shape,
        });
    }
    if let Some(m) = multipliers {
        if m.shape() != bank.shape() {
            return Err(Error::DimensionMismatch {
                expected: bank.shape(),
                got: m.shape(),
            });
        }
    }
    Ok(())
}

/// Band spectrum `F mask conj(M)` for one (scale, channel) pair.
fn band_spectrum(
    spectrum: &Array2<Complex64>,
    mask: &Array2<f64>,
    multiplier: Option<&Array2<Complex64>>,
) -> Array2<Complex64> {
    let mut out = spectrum.clone();
    match multiplier {
        Some(m) => ndarray::Zip::from(&mut out)
            .and(mask)
            .and(m)
            .for_each(|o, &k, &mv| *o *= mv.conj() * k),
        None => out.zip_mut_with(mask, |o, &k| *o *= k),
    }
    out
}

/// Real-valued channel rasters of one scale for a real image and a real,
/// radially symmetric multiplier family. Channels are packed two per
/// inverse transform.
pub fn analyze_scale_real(
    spectrum: &Array2<Complex64>,
    bank: &FilterBank,
    multipliers: Option<&MultiplierBank>,
    scale: usize,
) -> Vec<Array2<f64>> {
    let mask = bank.mask(scale);
    let fft = bank.fft();
    let n = multipliers.map_or(1, |m| m.channels());
    let pairs = n.div_ceil(2);
    let packed: Vec<(Array2<f64>, Option<Array2<f64>>)> = par::map_range(pairs, |p| {
        let first = band_spectrum(spectrum, mask, multipliers.map(|m| m.channel(2 * p)));
        let mut data = first;
        let has_second = 2 * p + 1 < n;
        if has_second {
            let second = band_spectrum(spectrum, mask, multipliers.map(|m| m.channel(2 * p + 1)));
            let j = Complex64::new(0.0, 1.0);
            data.zip_mut_with(&second, |a, &b| *a += j * b);
        }
        fft.inverse(&mut data);
        let re = data.mapv(|z| z.re);
        let im = has_second.then(|| data.mapv(|z| z.im));
        (re, im)
    });
    let mut out = Vec::with_capacity(n);
    for (re, im) in packed {
        out.push(re);
        if let Some(im) = im {
            out.push(im);
        }
    }
    out
}

/// Tight-frame analysis. Band `(s, n)` is the inverse DFT of
/// `DFT(image) mask_s conj(M_n)`; without multipliers there is one channel
/// per scale.
pub fn analyze(
    image: &Array2<f64>,
    bank: &FilterBank,
    multipliers: Option<&MultiplierBank>,
) -> Result<WaveletPyramid> {
    check_inputs(image.dim(), bank, multipliers)?;
    let fft = bank.fft();
    let spectrum = fft.forward_real(image);
    let channels = multipliers.map_or(1, |m| m.channels());
    let scales = bank.scales();

    let bands: Vec<Band> = if multipliers.is_none_or(|m| m.is_real()) {
        let mut bands = Vec::with_capacity(scales * channels);
        for s in 0..scales {
            for (n, raster) in analyze_scale_real(&spectrum, bank, multipliers, s)
                .into_iter()
                .enumerate()
            {
                bands.push(Band {
                    scale: s,
                    channel: n,
                    data: raster.mapv(|v| Complex64::new(v, 0.0)),
                });
            }
        }
        bands
    } else {
        par::map_range(scales * channels, |i| {
            let (s, n) = (i / channels, i % channels);
            let mut data =
                band_spectrum(&spectrum, bank.mask(s), multipliers.map(|m| m.channel(n)));
            fft.inverse(&mut data);
            Band {
                scale: s,
                channel: n,
                data,
            }
        })
    };

    let residual = |mask: &Array2<f64>| {
        let mut data = band_spectrum(&spectrum, mask, None);
        fft.inverse(&mut data);
        data.mapv(|z| z.re)
    };
    Ok(WaveletPyramid {
        shape: image.dim(),
        scales,
        channels,
        bands,
        lowpass: residual(bank.lowpass()),
        highpass: residual(bank.highpass()),
        provenance: Provenance {
            bank: bank.id(),
            multipliers: multipliers.map(|m| m.id()),
        },
    })
}

/// Self-dual reconstruction. The real part is returned.
pub fn synthesize(
    pyramid: &WaveletPyramid,
    bank: &FilterBank,
    multipliers: Option<&MultiplierBank>,
) -> Result<Array2<f64>> {
    check_inputs(pyramid.shape(), bank, multipliers)?;
    let expected = Provenance {
        bank: bank.id(),
        multipliers: multipliers.map(|m| m.id()),
    };
    if pyramid.provenance() != expected {
        return Err(Error::ProvenanceMismatch);
    }
    let fft = bank.fft();
    let parts: Vec<Array2<Complex64>> = par::map_slice(pyramid.bands(), |band| {
        let mut spec = band.data.clone();
        fft.forward(&mut spec);
        let mask = bank.mask(band.scale);
        match multipliers {
            Some(m) => ndarray::Zip::from(&mut spec)
                .and(mask)
                .and(m.channel(band.channel))
                .for_each(|o, &k, &mv| *o *= mv * k),
            None => spec.zip_mut_with(mask, |o, &k| *o *= k),
        }
        spec
    });
    let mut total = Array2::<Complex64>::zeros(pyramid.shape());
    for p in &parts {
        total += p;
    }
    for (raster, mask) in [
        (pyramid.lowpass(), bank.lowpass()),
        (pyramid.highpass(), bank.highpass()),
    ] {
        let mut spec = fft.forward_real(raster);
        spec.zip_mut_with(mask, |o, &k| *o *= k);
        total += &spec;
    }
    fft.inverse(&mut total);
    Ok(total.mapv(|z| z.re))
}

/// Coefficients of every channel of one scale at a single pixel, computed
/// directly from the image spectrum as
/// `(1/RC) sum_w F(w) mask_s(w) conj(M_n(w)) e^{j w.k}`.
///
/// Cheaper than a full inverse transform when only a few pixels matter.
pub fn pixel_coefficients(
    spectrum: &Array2<Complex64>,
    bank: &FilterBank,
    multipliers: Option<&MultiplierBank>,
    scale: usize,
    pixel: (usize, usize),
) -> Vec<Complex64> {
    let (rows, cols) = spectrum.dim();
    let twiddle = |n: usize, k: usize| -> Vec<Complex64> {
        (0..n)
            .map(|u| {
                let ph = 2.0 * std::f64::consts::PI * ((u * k) % n) as f64 / n as f64;
                Complex64::from_polar(1.0, ph)
            })
            .collect()
    };
    let (ey, ex) = (twiddle(rows, pixel.0), twiddle(cols, pixel.1));
    let mask = bank.mask(scale);
    let weighted = Array2::from_shape_fn((rows, cols), |(u, v)| {
        spectrum[[u, v]] * mask[[u, v]] * ey[u] * ex[v]
    });
    let norm = 1.0 / (rows * cols) as f64;
    match multipliers {
        None => vec![weighted.sum() * norm],
        Some(m) => par::map_range(m.channels(), |n| {
            let acc: Complex64 = weighted
                .iter()
                .zip(m.channel(n).iter())
                .map(|(w, mv)| w * mv.conj())
                .sum();
            acc * norm
        }),
    }
}
