use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use scalesteer::complex::{
    calibrate_phase_radius, estimate_radius_complex, ComplexWaveletSpec, PhaseRadiusTable,
};
use scalesteer::detector::{
    calibrate_multichannel, calibration_radii, Detection, Detector, DetectorConfig,
    MultichannelProbe,
};
use scalesteer::evalkit::{
    default_log_sigmas, jaccard_plot, log_baseline, match_detections, rows_from_csv, rows_to_csv,
    summarize, EvalRow,
};
use scalesteer::frame::{pixel_coefficients, FilterBank, MeyerProfile};
use scalesteer::io::{
    detections_to_csv, read_detections, read_image, read_json, write_image_u16, write_json,
    IntensityScaling, SceneRecord,
};
use scalesteer::multipliers::{
    steer_real, DesignFile, MultiplierBank, PseudoScaling, ResponsePolynomial, SteeringOperator,
};
use scalesteer::par;
use scalesteer::simdata::{
    derive_seed, gen_scene, radius_sweep, render_disks, sweep_radii, Disk, FbmParams,
    GroundTruthScene, SceneParams,
};

use crate::args::{
    CalibrateArgs, DetectArgs, DetectorArgs, Estimator, EvalArgs, Method, QualityArgs, SteerArgs,
    SynthArgs, TableFormat,
};
use crate::error::{CliError, CliResult};

/// Where a command's outputs went and what it resolved its settings to.
pub struct Outcome {
    /// Manifest file; `None` prints the manifest to stderr.
    pub manifest: Option<PathBuf>,
    pub resolved: Value,
}

pub struct Ctx {
    pub quiet: bool,
}

impl Ctx {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// One image of a synthetic corpus; paths are relative to the listing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub image: String,
    pub truth: String,
    pub sigma: f64,
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn read_corpus(path: &Path) -> CliResult<(PathBuf, Vec<CorpusEntry>)> {
    let rows: Vec<CorpusEntry> = rows_from_csv(&read_text(path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((base, rows))
}

fn design(spec: Option<&Path>) -> CliResult<DesignFile> {
    match spec {
        Some(p) => Ok(DesignFile::from_text(&read_text(p)?)?),
        None => Ok(DesignFile::default()),
    }
}

pub fn synth(a: &SynthArgs, ctx: &Ctx) -> CliResult<Outcome> {
    if a.bg_std.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(CliError::input(
            "background std values must be finite and >= 0",
        ));
    }
    fs::create_dir_all(&a.out).map_err(|e| CliError::input(format!("{}: {e}", a.out.display())))?;
    let params = SceneParams {
        rows: a.size,
        cols: a.size,
        disks: a.disks,
        radius_min: a.radius_min,
        radius_max: a.radius_max,
        max_overlap: a.max_overlap,
        attempts: a.attempts,
    };
    let mut corpus = Vec::new();
    for &std in &a.bg_std {
        let bg = FbmParams {
            exponent: a.bg_exponent,
            std,
            seed: 0,
        };
        for i in 0..a.count {
            let (scene, image) = gen_scene(derive_seed(a.seed, i as u64), &params, &bg)?;
            let stem = format!("scene_s{std}_{i:04}");
            let image_name = format!("{stem}.{}", a.format.extension());
            let scaling = IntensityScaling::fit(&image);
            write_image_u16(&a.out.join(&image_name), &image, &scaling)?;
            let truth_name = format!("{stem}.json");
            let record = SceneRecord {
                scene,
                image: image_name.clone(),
                scaling,
            };
            write_json(&a.out.join(&truth_name), &record)?;
            corpus.push(CorpusEntry {
                image: image_name,
                truth: truth_name,
                sigma: std,
            });
        }
    }
    let listing = rows_to_csv(&corpus).map_err(|e| CliError::internal(e.to_string()))?;
    write_text(&a.out.join("corpus.csv"), &listing)?;
    ctx.info(format!(
        "wrote {} images to {}",
        corpus.len(),
        a.out.display()
    ));
    Ok(Outcome {
        manifest: Some(a.out.join("manifest.json")),
        resolved: json!({ "scene": params, "images": corpus.len() }),
    })
}

/// Library defaults, then the design file, then individual flags.
pub fn resolve_detector(a: &DetectorArgs) -> CliResult<(DetectorConfig, Option<PhaseRadiusTable>)> {
    let mut base = DetectorConfig::default();
    if let Some(p) = &a.spec {
        let d = design(Some(p))?;
        base.spec = d.spec;
        base.epsilon = d.epsilon;
    }
    let config = a.apply(base);
    let table = match &a.calibration {
        Some(p) => Some(PhaseRadiusTable::from_csv(&read_text(p)?)?),
        None => None,
    };
    Ok((config, table))
}

fn format_for(a: &DetectArgs, out: Option<&Path>) -> TableFormat {
    a.format
        .unwrap_or_else(|| match out.and_then(|p| p.extension()) {
            Some(e) if e.eq_ignore_ascii_case("json") => TableFormat::Json,
            _ => TableFormat::Csv,
        })
}

fn render_detections(dets: &[Detection], format: TableFormat) -> CliResult<String> {
    Ok(match format {
        TableFormat::Csv => detections_to_csv(dets)?,
        TableFormat::Json => {
            let mut s = serde_json::to_string_pretty(dets)
                .map_err(|e| CliError::internal(e.to_string()))?;
            s.push('\n');
            s
        }
    })
}

pub fn detect(a: &DetectArgs, ctx: &Ctx) -> CliResult<Outcome> {
    let (config, table) = resolve_detector(&a.detector)?;
    let mut inputs: Vec<PathBuf> = a.inputs.clone();
    if let Some(c) = &a.corpus {
        let (base, rows) = read_corpus(c)?;
        inputs.extend(rows.iter().map(|r| base.join(&r.image)));
    }
    if inputs.is_empty() {
        return Err(CliError::input("no input images (give paths or --corpus)"));
    }
    if inputs.len() > 1 && a.out_dir.is_none() {
        return Err(CliError::input("several inputs need --out-dir"));
    }
    if let Some(d) = &a.out_dir {
        fs::create_dir_all(d).map_err(|e| CliError::input(format!("{}: {e}", d.display())))?;
    }
    let sigmas = a.log_sigmas.clone().unwrap_or_else(default_log_sigmas);
    let mut detectors: HashMap<(usize, usize), Detector> = HashMap::new();
    let mut timings = Vec::new();
    for input in &inputs {
        let image = read_image(input)?;
        let shape = image.dim();
        let start = Instant::now();
        let dets = match a.method {
            Method::Multichannel => {
                let detector = match detectors.entry(shape) {
                    Entry::Occupied(e) => e.into_mut(),
                    Entry::Vacant(e) => e.insert(Detector::new(
                        config.clone(),
                        shape.0,
                        shape.1,
                        table.clone(),
                    )?),
                };
                detector.detect(&image)?
            }
            Method::Log => log_baseline(&image, &sigmas, &config)?,
        };
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let stem = stem_of(input);
        timings.push((stem.clone(), ms));
        ctx.info(format!(
            "{}: {} detections in {ms:.1} ms",
            input.display(),
            dets.len()
        ));
        let (out, format) = match &a.out_dir {
            Some(dir) => {
                let f = format_for(a, None);
                let ext = if f == TableFormat::Json {
                    "json"
                } else {
                    "csv"
                };
                (
                    Some(dir.join(format!("{stem}.{}.{ext}", a.method.name()))),
                    f,
                )
            }
            None => (a.out.clone(), format_for(a, a.out.as_deref())),
        };
        emit(out.as_deref(), &render_detections(&dets, format)?)?;
    }
    if let Some(t) = &a.timings {
        let fresh = !t.exists();
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(t)
            .map_err(|e| CliError::input(format!("{}: {e}", t.display())))?;
        if fresh {
            writeln!(f, "image,method,wall_ms")?;
        }
        for (stem, ms) in &timings {
            writeln!(f, "{stem},{},{ms}", a.method.name())?;
        }
    }
    let manifest = match (&a.out_dir, &a.out) {
        (Some(d), _) => Some(d.join(format!("manifest.{}.json", a.method.name()))),
        (None, Some(o)) => Some(sibling(o, ".manifest.json")),
        _ => None,
    };
    let mut resolved = json!({ "detector": config, "images": inputs.len() });
    if a.method == Method::Log {
        resolved["log_sigmas"] = json!(sigmas);
    }
    Ok(Outcome { manifest, resolved })
}

#[derive(Deserialize)]
struct TimingRow {
    image: String,
    method: String,
    wall_ms: f64,
}

fn detection_file(dir: &Path, stem: &str, method: Method) -> PathBuf {
    let json = dir.join(format!("{stem}.{}.json", method.name()));
    if json.exists() {
        json
    } else {
        dir.join(format!("{stem}.{}.csv", method.name()))
    }
}

pub fn eval(a: &EvalArgs, ctx: &Ctx) -> CliResult<Outcome> {
    let mut timing: HashMap<(String, String), f64> = HashMap::new();
    for t in &a.timings {
        let rows: Vec<TimingRow> = rows_from_csv(&read_text(t)?)
            .map_err(|e| CliError::input(format!("{}: {e}", t.display())))?;
        for r in rows {
            timing.insert((r.image, r.method), r.wall_ms);
        }
    }
    let methods = if a.methods.is_empty() {
        vec![Method::Multichannel]
    } else {
        a.methods.clone()
    };
    // (label, scene, detection path) per evaluated image.
    let mut jobs: Vec<(String, GroundTruthScene, PathBuf, Method)> = Vec::new();
    match (&a.truth, &a.corpus) {
        (Some(t), None) => {
            let scene: GroundTruthScene = read_json(t)?;
            jobs.push((stem_of(t), scene, a.detections.clone(), methods[0]));
        }
        (None, Some(c)) => {
            let (base, rows) = read_corpus(c)?;
            for r in &rows {
                let scene: GroundTruthScene = read_json(&base.join(&r.truth))?;
                let stem = stem_of(Path::new(&r.image));
                for &m in &methods {
                    jobs.push((
                        stem.clone(),
                        scene.clone(),
                        detection_file(&a.detections, &stem, m),
                        m,
                    ));
                }
            }
        }
        _ => return Err(CliError::input("give exactly one of --truth and --corpus")),
    }
    let mut rows = Vec::with_capacity(jobs.len());
    for (label, scene, path, method) in &jobs {
        let dets = read_detections(path)?;
        let m = match_detections(&dets, &scene.disks, a.gate);
        let mut row = EvalRow::new(
            label.clone(),
            method.name(),
            scene.background.std,
            &m,
            &dets,
            &scene.disks,
        );
        row.wall_ms = timing
            .get(&(label.clone(), method.name().to_string()))
            .copied();
        rows.push(row);
    }
    let csv = rows_to_csv(&rows).map_err(|e| CliError::internal(e.to_string()))?;
    emit(a.out.as_deref(), &csv)?;
    let summary = summarize(&rows);
    for s in &summary {
        ctx.info(format!(
            "{} sigma={}: jaccard {:.4} over {} images (tp {}, fp {}, fn {})",
            s.method, s.sigma, s.jaccard, s.images, s.n_tp, s.n_fp, s.n_fn
        ));
    }
    if let Some(p) = &a.summary {
        write_json(p, &summary)?;
    }
    if let Some(p) = &a.plot {
        write_text(p, &jaccard_plot(&summary))?;
    }
    Ok(Outcome {
        manifest: a.out.as_ref().map(|o| sibling(o, ".manifest.json")),
        resolved: json!({ "images": jobs.len(), "summary": summary }),
    })
}

pub fn quality(a: &QualityArgs, ctx: &Ctx) -> CliResult<Outcome> {
    let d = design(a.spec.as_deref())?;
    let profile = MeyerProfile::new(a.epsilon.unwrap_or(d.epsilon))?;
    let p = PseudoScaling::new(&d.spec, profile, a.eps_prime)?;
    let end = a.end.unwrap_or_else(|| d.spec.sigma().exp2());
    if !(a.start > 0.0 && end > a.start) {
        return Err(CliError::input(format!(
            "need 0 < start < end, got {} and {end}",
            a.start
        )));
    }
    let grid = p.sweep(a.start, end, a.points);
    let mut probes = grid.clone();
    for j in p.jump_points(a.start, end) {
        for side in [j * (1.0 - 1e-12), j * (1.0 + 1e-12)] {
            if (a.start..=end).contains(&side) {
                probes.push((side, p.quality(side)));
            }
        }
    }
    let (amin, qmin) =
        probes.iter().copied().fold(
            (a.start, f64::INFINITY),
            |b, (x, q)| if q < b.1 { (x, q) } else { b },
        );
    let mut csv = String::from("a,quality\n");
    for (x, q) in &grid {
        csv.push_str(&format!("{x},{q}\n"));
    }
    emit(a.out.as_deref(), &csv)?;
    ctx.info(format!(
        "minimum quality {qmin:.6} at a = {amin:.6} (reference channel {}, peak {:.4})",
        p.channel(),
        p.peak()
    ));
    Ok(Outcome {
        manifest: a.out.as_ref().map(|o| sibling(o, ".manifest.json")),
        resolved: json!({
            "end": end,
            "epsilon": profile.epsilon(),
            "spec": d.spec,
            "min_quality": qmin,
            "argmin": amin,
            "channel": p.channel(),
        }),
    })
}

pub fn calibrate(a: &CalibrateArgs, ctx: &Ctx) -> CliResult<Outcome> {
    let d = design(a.spec.as_deref())?;
    let config = DetectorConfig {
        spec: d.spec,
        epsilon: a.epsilon.unwrap_or(d.epsilon),
        ..DetectorConfig::default()
    };
    let radii = a.radii.clone().unwrap_or_else(calibration_radii);
    let check = a.check_radii.clone().unwrap_or_else(sweep_radii);
    if radii.len() < 2
        || radii
            .iter()
            .chain(&check)
            .any(|r| !(*r > 0.0) || 2.0 * r >= a.size as f64)
    {
        return Err(CliError::input(
            "radii must be positive and fit the calibration image",
        ));
    }
    let sweep = radius_sweep(0, &check, a.size);
    let (table, estimates): (PhaseRadiusTable, Vec<Option<f64>>) = match a.estimator {
        Estimator::Multichannel => {
            let table = calibrate_multichannel(&config, a.size, &radii)?;
            let probe = MultichannelProbe::new(&config, a.size, a.size)?;
            let est = par::map_slice(&sweep, |(s, img)| {
                probe.estimate(img, &table, (s.disks[0].x, s.disks[0].y))
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            (table, est)
        }
        Estimator::Complex => {
            let profile = MeyerProfile::new(config.epsilon)?;
            let j = FilterBank::max_scales(a.size, a.size, &profile);
            let bank = FilterBank::with_shape(a.size, a.size, j, profile, config.norm)?;
            let spec = ComplexWaveletSpec::default();
            let table = calibrate_phase_radius(&radius_sweep(0, &radii, a.size), &spec, &bank)?;
            let est = par::map_slice(&sweep, |(s, img)| {
                estimate_radius_complex(img, &bank, &spec, &table, (s.disks[0].x, s.disks[0].y))
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            (table, est)
        }
    };
    write_text(&a.out, &table.to_csv())?;
    let mut report = String::from("radius,estimate,error\n");
    let mut errors = Vec::new();
    for (r, e) in check.iter().zip(&estimates) {
        match e {
            Some(e) => {
                report.push_str(&format!("{r},{e},{}\n", e - r));
                errors.push((e - r).abs());
            }
            None => report.push_str(&format!("{r},,\n")),
        }
    }
    let check_path = sibling(&a.out, ".check.csv");
    write_text(&check_path, &report)?;
    let mean = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    let max = errors.iter().cloned().fold(0.0, f64::max);
    let missing = check.len() - errors.len();
    ctx.info(format!(
        "closed loop on {} radii: mean |error| {mean:.4} px, max {max:.4} px, {missing} without estimate",
        check.len()
    ));
    Ok(Outcome {
        manifest: Some(sibling(&a.out, ".manifest.json")),
        resolved: json!({
            "detector": config,
            "radii": radii,
            "check_radii": check,
            "mean_abs_error": mean,
            "max_abs_error": max,
            "missing": missing,
        }),
    })
}

pub fn steer(a: &SteerArgs, ctx: &Ctx) -> CliResult<Outcome> {
    let config = DetectorConfig::default();
    let profile = MeyerProfile::new(config.epsilon)?;
    let j = FilterBank::max_scales(a.size, a.size, &profile);
    let bank = FilterBank::with_shape(a.size, a.size, j, profile, config.norm)?;
    let c = (a.size / 2) as f64;
    let image = render_disks(
        a.size,
        a.size,
        &[Disk {
            x: c,
            y: c,
            radius: a.radius,
            amplitude: 1.0,
        }],
    );
    let spectrum = bank.fft().forward_real(&image);
    let px = (a.size / 2, a.size / 2);
    let channels_at = |dilation: f64, s: usize| -> Vec<f64> {
        let m = MultiplierBank::evaluate(&config.spec, bank.grid(), dilation);
        pixel_coefficients(&spectrum, &bank, Some(&m), s, px)
            .iter()
            .map(|z| z.re)
            .collect()
    };
    let scale = match a.scale {
        Some(s) if s < j => s,
        Some(s) => return Err(CliError::input(format!("scale {s} outside 0..{j}"))),
        None => {
            (0..j)
                .map(|s| {
                    (
                        s,
                        channels_at((s as f64).exp2(), s)
                            .iter()
                            .map(|v| v * v)
                            .sum::<f64>(),
                    )
                })
                .fold((0, -1.0), |b, x| if x.1 > b.1 { x } else { b })
                .0
        }
    };
    let base = (scale as f64).exp2();
    let w = channels_at(base, scale);
    let op = SteeringOperator::new(&config.spec);
    let t0 = ResponsePolynomial::from_channels(&op, &w, 0.0)?.argmax().0;
    let mut csv = String::from("a,channel,steered,direct,abs_diff\n");
    let mut worst: f64 = 0.0;
    for &dil in &a.dilations {
        if !(dil > 0.0) {
            return Err(CliError::input(format!(
                "dilation must be positive, got {dil}"
            )));
        }
        let steered = steer_real(&op.transform(base, base * dil)?, &w)?;
        let direct = channels_at(base * dil, scale);
        let norm = direct
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for (n, (s, d)) in steered.iter().zip(&direct).enumerate() {
            csv.push_str(&format!("{dil},{n},{s},{d},{}\n", (s - d).abs()));
            worst = worst.max((s - d).abs() / norm);
        }
        let t = ResponsePolynomial::from_channels(&op, &steered, dil.log2())?
            .argmax()
            .0;
        ctx.info(format!("a = {dil}: t* {t:.9} (unsteered {t0:.9})"));
    }
    emit(a.out.as_deref(), &csv)?;
    ctx.info(format!(
        "scale {scale}: largest steering error relative to re-analysis {worst:.3e}"
    ));
    Ok(Outcome {
        manifest: a.out.as_ref().map(|o| sibling(o, ".manifest.json")),
        resolved: json!({ "scale": scale, "t_star": t0, "max_relative_error": worst }),
    })
}
