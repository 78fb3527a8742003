use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use scalesteer::detector::{DetectorConfig, Polarity, Ranking, ThresholdMode};
use scalesteer::frame::RadialNorm;

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "SCALESTEER_THREADS";

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "scalesteer",
    version,
    about = "Scale-steerable wavelet frames: synthetic corpora, spot detection and evaluation",
    args_override_self = true
)]
pub struct Cli {
    /// Plain key=value file supplying defaults for any long flag of the
    /// subcommand; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: $SCALESTEER_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Only print errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Generate disk scenes over fBm backgrounds with ground truth.
    Synth(SynthArgs),
    /// Detect spots in images.
    Detect(DetectArgs),
    /// Match detections to ground truth and report Jaccard and RMSE.
    Eval(EvalArgs),
    /// Sweep the pseudo-dilation quality over a range of dilations.
    Quality(QualityArgs),
    /// Fit a (scale, phase) to radius table and check it in closed loop.
    Calibrate(CalibrateArgs),
    /// Steer the channels of a synthetic disk and compare with re-analysis.
    Steer(SteerArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Png,
    Pgm,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Pgm => "pgm",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Image side length in pixels.
    #[arg(long, default_value_t = 512)]
    pub size: usize,
    #[arg(long, default_value_t = 20)]
    pub disks: usize,
    #[arg(long, default_value_t = 8.0)]
    pub radius_min: f64,
    #[arg(long, default_value_t = 40.0)]
    pub radius_max: f64,
    /// Largest admissible r_i + r_j - d_ij in pixels.
    #[arg(long, default_value_t = 10.0)]
    pub max_overlap: f64,
    /// Background standard deviations; one image set per value.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub bg_std: Vec<f64>,
    /// Spectral exponent s of the |w|^-s background power density.
    #[arg(long, default_value_t = scalesteer::simdata::DEFAULT_FBM_EXPONENT)]
    pub bg_exponent: f64,
    /// Images per background level. Image i uses the same layout at every level.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ImageFormat::Png)]
    pub format: ImageFormat,
    /// Rejection-sampling attempts per disk.
    #[arg(long, default_value_t = 10_000)]
    pub attempts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Multichannel wavelet detector with steering refinement.
    Multichannel,
    /// Multiscale Laplacian-of-Gaussian baseline.
    Log,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Multichannel => "multichannel",
            Method::Log => "log",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
}

/// Detector settings; unset values keep the library defaults.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectorArgs {
    /// Candidate threshold tau (fraction of the maximum energy unless absolute).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub threshold_mode: Option<ThresholdMode>,
    /// Half-width of the suppression window in pixels.
    #[arg(long)]
    pub nms_radius: Option<usize>,
    #[arg(long)]
    pub max_detections: Option<usize>,
    #[arg(long)]
    pub ranking: Option<Ranking>,
    #[arg(long)]
    pub polarity: Option<Polarity>,
    #[arg(long)]
    pub edge_ratio: Option<f64>,
    #[arg(long)]
    pub overlap: Option<f64>,
    #[arg(long)]
    pub scale_min: Option<usize>,
    #[arg(long)]
    pub scale_max: Option<usize>,
    #[arg(long, action = ArgAction::Set)]
    pub scale_maxima: Option<bool>,
    #[arg(long, action = ArgAction::Set)]
    pub band_check: Option<bool>,
    #[arg(long, action = ArgAction::Set)]
    pub polish: Option<bool>,
    #[arg(long, action = ArgAction::Set)]
    pub core_check: Option<bool>,
    /// Window transition width epsilon of the Meyer profile.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Radial norm of the frequency grid: 2 or inf.
    #[arg(long)]
    pub norm: Option<RadialNorm>,
    /// Multiplier design file (alpha, sigma, n_max, epsilon, eps_prime).
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
    /// Calibration table from `calibrate`; required for non-default frames.
    #[arg(long, value_name = "FILE")]
    pub calibration: Option<PathBuf>,
}

impl DetectorArgs {
    /// Applies the set flags on top of `base`.
    pub fn apply(&self, mut c: DetectorConfig) -> DetectorConfig {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f.clone() { c.$f = v; })* };
        }
        set!(
            threshold,
            threshold_mode,
            nms_radius,
            ranking,
            polarity,
            edge_ratio,
            overlap
        );
        set!(scale_maxima, band_check, polish, core_check, epsilon, norm);
        if self.max_detections.is_some() {
            c.max_detections = self.max_detections;
        }
        if self.scale_min.is_some() || self.scale_max.is_some() {
            let (lo, hi) = c.scale_range.unwrap_or((0, usize::MAX));
            c.scale_range = Some((self.scale_min.unwrap_or(lo), self.scale_max.unwrap_or(hi)));
        }
        c
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    /// Images to process (PNG or PGM).
    pub inputs: Vec<PathBuf>,
    /// Corpus listing written by `synth`; processes every image in it.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Output file for a single image (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output directory for several images: <stem>.<method>.<format>.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Multichannel)]
    pub method: Method,
    /// Output format; inferred from --out when it ends in .json.
    #[arg(long, value_enum)]
    pub format: Option<TableFormat>,
    /// Gaussian scales of the LoG baseline (default: radii 4 to 64 px, 8 per octave).
    #[arg(long, value_delimiter = ',')]
    pub log_sigmas: Option<Vec<f64>>,
    /// Append per-image wall times (image,method,wall_ms) to this CSV.
    #[arg(long, value_name = "FILE")]
    pub timings: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Ground truth of a single image (scene JSON from `synth`).
    #[arg(long, value_name = "FILE")]
    pub truth: Option<PathBuf>,
    /// Corpus listing written by `synth`.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Detection file (with --truth) or directory (with --corpus).
    #[arg(long)]
    pub detections: PathBuf,
    /// Methods to evaluate from the detection directory.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "multichannel"
    )]
    pub methods: Vec<Method>,
    /// Matching gate in pixels.
    #[arg(long, default_value_t = scalesteer::evalkit::DEFAULT_GATE)]
    pub gate: f64,
    /// Per-image report CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-(method, sigma) means as JSON.
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
    /// SVG plot of mean Jaccard against background sigma.
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
    /// Timing CSVs written by `detect --timings`; fills the wall_ms column.
    #[arg(long, value_name = "FILE")]
    pub timings: Vec<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct QualityArgs {
    /// First dilation.
    #[arg(long, default_value_t = 1.0)]
    pub start: f64,
    /// Last dilation (default: one period, 2^sigma).
    #[arg(long)]
    pub end: Option<f64>,
    /// Geometric grid points.
    #[arg(long, default_value_t = 257)]
    pub points: usize,
    #[arg(long, default_value_t = scalesteer::multipliers::DEFAULT_EPS_PRIME)]
    pub eps_prime: f64,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Multiplier design file.
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
    /// CSV of (a, quality) (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// `t*` of the steered multichannel response.
    Multichannel,
    /// Phase of the complex two-channel wavelet.
    Complex,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    /// Table output (CSV).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Estimator::Multichannel)]
    pub estimator: Estimator,
    /// Side length of the single-disk calibration images.
    #[arg(long, default_value_t = scalesteer::detector::CALIBRATION_SIZE)]
    pub size: usize,
    /// Fit radii (default: 2 to 64 px, eight per octave).
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Closed-loop check radii (default: 8.0 to 11.0 in steps of 0.2).
    #[arg(long, value_delimiter = ',')]
    pub check_radii: Option<Vec<f64>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Multiplier design file (multichannel estimator).
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SteerArgs {
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    /// Radius of the centered test disk.
    #[arg(long, default_value_t = 12.0)]
    pub radius: f64,
    /// Scale to steer (default: the strongest at the disk center).
    #[arg(long)]
    pub scale: Option<usize>,
    /// Dilations a of T_{1,a}.
    #[arg(long, value_delimiter = ',', default_value = "1,1.25,1.5,2,2.5,3.5")]
    pub dilations: Vec<f64>,
    /// CSV of (a, channel, steered, direct, abs_diff) (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
