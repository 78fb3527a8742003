//! Raster and scene files.
//!
//! Images are read as raw sample counts: 0..=255 for 8-bit and
//! 0..=65535 for 16-bit data, RGB converted to luma. Rasters are written
//! as 16-bit grayscale through an affine [`IntensityScaling`]
//! (`stored = round((v - offset) * gain)`), which is recorded next to the
//! scene so the original intensities can be recovered. The detector is
//! insensitive to the offset and the gain only rescales scores.

use std::fs;
use std::path::Path;

use image::{ColorType, DynamicImage, ImageBuffer, ImageFormat, Luma};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::detector::Detection;
use crate::error::{Error, Result};
use crate::simdata::GroundTruthScene;

/// Affine map between real intensities and 16-bit samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityScaling {
    pub offset: f64,
    pub gain: f64,
}

impl Default for IntensityScaling {
    fn default() -> Self {
        IntensityScaling {
            offset: 0.0,
            gain: 1.0,
        }
    }
}

impl IntensityScaling {
    /// Maps the image minimum to 0 and its maximum to 65535. A constant
    /// image gets unit gain.
    pub fn fit(image: &Array2<f64>) -> Self {
        let lo = image.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = image.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(lo.is_finite() && hi > lo) {
            return IntensityScaling {
                offset: if lo.is_finite() { lo } else { 0.0 },
                gain: 1.0,
            };
        }
        IntensityScaling {
            offset: lo,
            gain: u16::MAX as f64 / (hi - lo),
        }
    }

    pub fn encode(&self, v: f64) -> u16 {
        ((v - self.offset) * self.gain)
            .round()
            .clamp(0.0, u16::MAX as f64) as u16
    }

    pub fn decode(&self, stored: f64) -> f64 {
        stored / self.gain + self.offset
    }
}

/// A scene as written beside its raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    #[serde(flatten)]
    pub scene: GroundTruthScene,
    /// Raster file name, relative to the record.
    pub image: String,
    pub scaling: IntensityScaling,
}

fn image_error(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

fn format_of(path: &Path) -> Result<ImageFormat> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm") | Some("pnm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::invalid(format!(
            "{}: unsupported image extension (use .png or .pgm)",
            path.display()
        ))),
    }
}

/// Reads a PNG or PGM (binary or ASCII) as raw sample counts.
pub fn read_image(path: &Path) -> Result<Array2<f64>> {
    let format = format_of(path)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img =
        image::load_from_memory_with_format(&bytes, format).map_err(|e| image_error(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::invalid(format!("{}: empty image", path.display())));
    }
    let deep = matches!(
        img.color(),
        ColorType::L16 | ColorType::La16 | ColorType::Rgb16 | ColorType::Rgba16
    );
    let data: Vec<f64> = if deep {
        img.into_luma16()
            .into_raw()
            .into_iter()
            .map(f64::from)
            .collect()
    } else {
        img.into_luma8()
            .into_raw()
            .into_iter()
            .map(f64::from)
            .collect()
    };
    Array2::from_shape_vec((h, w), data).map_err(|e| Error::invalid(e.to_string()))
}

/// Writes `image` as 16-bit grayscale PNG or binary PGM, chosen by the
/// extension.
pub fn write_image_u16(path: &Path, image: &Array2<f64>, scaling: &IntensityScaling) -> Result<()> {
    let format = format_of(path)?;
    let (rows, cols) = image.dim();
    let raw: Vec<u16> = image.iter().map(|&v| scaling.encode(v)).collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(cols as u32, rows as u32, raw)
            .ok_or_else(|| Error::invalid("raster size overflows"))?;
    DynamicImage::ImageLuma16(buf)
        .save_with_format(path, format)
        .map_err(|e| image_error(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Column order of detection tables.
pub const DETECTION_HEADER: [&str; 6] = ["x", "y", "radius", "score", "scale", "t_star"];

/// Detections as CSV. The header is written even for an empty list.
pub fn detections_to_csv(dets: &[Detection]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(format!("detections: {e}"));
    w.write_record(DETECTION_HEADER).map_err(csv_err)?;
    for d in dets {
        w.serialize(d).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn detections_from_csv(text: &str) -> Result<Vec<Detection>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<Detection>, _>>()
        .map_err(|e| Error::Parse(format!("detections: {e}")))
}

/// Reads detections from a `.csv` or `.json` file.
pub fn read_detections(path: &Path) -> Result<Vec<Detection>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        Ok(serde_json::from_str(&text)?)
    } else {
        detections_from_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simdata::{gen_scene, FbmParams, SceneParams};

    fn ramp() -> Array2<f64> {
        Array2::from_shape_fn((5, 7), |(r, c)| r as f64 * 0.5 - c as f64 * 0.25)
    }

    #[test]
    fn scaling_spans_full_range() {
        let img = ramp();
        let s = IntensityScaling::fit(&img);
        assert_eq!(s.encode(-1.5), 0);
        assert_eq!(s.encode(2.0), u16::MAX);
        assert!((s.decode(s.encode(0.5) as f64) - 0.5).abs() <= 0.5 / s.gain);
        let flat = IntensityScaling::fit(&Array2::from_elem((3, 3), 4.0));
        assert_eq!((flat.offset, flat.gain), (4.0, 1.0));
    }

    #[test]
    fn png_and_pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = ramp();
        let s = IntensityScaling::fit(&img);
        for name in ["a.png", "a.pgm"] {
            let p = dir.path().join(name);
            write_image_u16(&p, &img, &s).unwrap();
            let back = read_image(&p).unwrap();
            assert_eq!(back.dim(), img.dim());
            for (b, v) in back.iter().zip(img.iter()) {
                assert_eq!(*b, s.encode(*v) as f64, "{name}");
            }
        }
    }

    #[test]
    fn ascii_and_eight_bit_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pgm");
        fs::write(&p, "P2\n3 2\n255\n0 10 20\n30 40 255\n").unwrap();
        let img = read_image(&p).unwrap();
        assert_eq!(img.dim(), (2, 3));
        assert_eq!(img[[1, 2]], 255.0);
        assert_eq!(img[[0, 1]], 10.0);

        let p8 = dir.path().join("x.png");
        image::GrayImage::from_raw(2, 1, vec![7, 200])
            .unwrap()
            .save(&p8)
            .unwrap();
        let img = read_image(&p8).unwrap();
        assert_eq!(img.as_slice().unwrap(), &[7.0, 200.0]);
    }

    #[test]
    fn unknown_extension_and_missing_file() {
        assert!(read_image(Path::new("x.tiff")).is_err());
        assert!(matches!(
            read_image(Path::new("/nonexistent/x.png")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn detection_csv() {
        assert_eq!(
            detections_to_csv(&[]).unwrap(),
            "x,y,radius,score,scale,t_star\n"
        );
        let d = Detection {
            x: 1.25,
            y: 0.1 + 0.2,
            radius: 9.0,
            score: 0.5,
            scale: 3,
            t_star: 1.75,
        };
        let text = detections_to_csv(&[d, d]).unwrap();
        assert_eq!(detections_from_csv(&text).unwrap(), vec![d, d]);
        assert!(detections_from_csv("x,y\n1,2\n").is_err());
    }

    #[test]
    fn scene_record_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let params = SceneParams {
            rows: 64,
            cols: 64,
            disks: 2,
            radius_max: 12.0,
            ..SceneParams::default()
        };
        let (scene, img) = gen_scene(3, &params, &FbmParams::default()).unwrap();
        let rec = SceneRecord {
            scene,
            image: "a.png".into(),
            scaling: IntensityScaling::fit(&img),
        };
        let p = dir.path().join("a.json");
        write_json(&p, &rec).unwrap();
        let back: SceneRecord = read_json(&p).unwrap();
        assert_eq!(back, rec);
        // A bare scene parses as a record's scene.
        let bare: GroundTruthScene = read_json(&p).unwrap();
        assert_eq!(bare, rec.scene);
    }
}
