use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Measurements at the center of one calibration disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPoint {
    pub radius: f64,
    /// Wrapped phase per scale, in `[0, period)`.
    pub phases: Vec<f64>,
    /// Non-negative response strength per scale; decides which scales'
    /// tables the disk enters.
    pub energies: Vec<f64>,
    /// Response profile across scales used for the coarse estimate.
    pub profile: Vec<f64>,
}

/// One scale's monotone map from unwrapped phase to `log2` radius.
#[derive(Debug, Clone, PartialEq)]
struct Curve {
    phase: Vec<f64>,
    radius: Vec<f64>,
    log_radius: Vec<f64>,
}

impl Curve {
    fn new(phase: Vec<f64>, radius: Vec<f64>) -> Self {
        let log_radius = radius.iter().map(|r| r.log2()).collect();
        Curve {
            phase,
            radius,
            log_radius,
        }
    }

    fn eval(&self, p: f64) -> f64 {
        let (x, y) = (&self.phase, &self.log_radius);
        let n = x.len();
        let i = match x.partition_point(|&v| v <= p) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let t = (p - x[i]) / (x[i + 1] - x[i]);
        y[i] + t * (y[i + 1] - y[i])
    }

    fn span(&self) -> (f64, f64) {
        (self.phase[0], *self.phase.last().unwrap())
    }

    fn covers(&self, log_radius: f64, margin: f64) -> bool {
        let (lo, hi) = (self.log_radius[0], *self.log_radius.last().unwrap());
        log_radius >= lo - margin && log_radius <= hi + margin
    }
}

/// Per-scale phase-to-radius tables plus a coarse radius estimate from
/// the profile of responses across scales.
///
/// A phase is only known modulo `period`; the lift used is the one whose
/// radius is closest to the coarse estimate. Scales without a table
/// borrow the nearest one, shifted by whole octaves.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRadiusTable {
    label: String,
    period: f64,
    curves: BTreeMap<usize, Curve>,
    /// `(radius, unit-norm energy profile)` of every calibration disk.
    profiles: Vec<(f64, Vec<f64>)>,
}

/// Fraction of the strongest scale a scale must reach for a disk to enter
/// that scale's table.
pub const TABLE_COVERAGE: f64 = 0.5;

/// Octaves a radius may lie outside a scale's fitted range and still be
/// read from that scale's table.
pub const COVERAGE_MARGIN: f64 = 0.125;

fn argmax(v: &[f64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter().map(|x| x / n).collect()
    } else {
        vec![0.0; v.len()]
    }
}

impl PhaseRadiusTable {
    /// Builds the tables. `rate` is the nominal phase advance per octave
    /// of radius and only serves to reject sweeps too sparse to unwrap.
    pub fn fit(label: &str, period: f64, rate: f64, points: &[CalibrationPoint]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Calibration(
                "need at least two calibration disks".into(),
            ));
        }
        let mut pts: Vec<&CalibrationPoint> = points.iter().collect();
        pts.sort_by(|a, b| a.radius.total_cmp(&b.radius));
        let scales = pts[0].phases.len();
        if pts
            .iter()
            .any(|p| p.phases.len() != scales || p.energies.len() != scales || p.profile.is_empty())
        {
            return Err(Error::Calibration("inconsistent scale counts".into()));
        }
        for w in pts.windows(2) {
            let step = (w[1].radius / w[0].radius).log2() * rate.abs();
            if step >= period / 2.0 {
                return Err(Error::SweepTooSparse {
                    step,
                    half_period: period / 2.0,
                    r0: w[0].radius,
                    r1: w[1].radius,
                });
            }
        }

        let mut curves = BTreeMap::new();
        for s in 0..scales {
            let members: Vec<&CalibrationPoint> = pts
                .iter()
                .copied()
                .filter(|p| {
                    let top = p.energies.iter().cloned().fold(0.0, f64::max);
                    top > 0.0 && p.energies[s] >= TABLE_COVERAGE * top
                })
                .collect();
            if let Some(curve) = longest_monotone_run(&members, s, period) {
                curves.insert(s, curve);
            }
        }
        if curves.is_empty() {
            return Err(Error::Calibration(
                "no scale yields a monotone phase curve".into(),
            ));
        }
        let profiles = pts.iter().map(|p| (p.radius, unit(&p.profile))).collect();
        Ok(PhaseRadiusTable {
            label: label.to_string(),
            period,
            curves,
            profiles,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn scales(&self) -> Vec<usize> {
        self.curves.keys().copied().collect()
    }

    /// `log2` radius of the calibration disk whose response profile across
    /// scales is closest in direction to `profile`. Profiles of different
    /// lengths are compared on their common leading scales.
    pub fn coarse_log_radius(&self, profile: &[f64]) -> Option<f64> {
        self.nearest_profile(profile).map(|(l, _)| l)
    }

    /// `log2` radius of the nearest calibration profile (see
    /// [`PhaseRadiusTable::coarse_log_radius`]) and the Euclidean distance
    /// between the two unit-norm profiles, in `[0, 2]`.
    pub fn nearest_profile(&self, profile: &[f64]) -> Option<(f64, f64)> {
        if profile.iter().all(|&v| v == 0.0) {
            return None;
        }
        self.profiles
            .iter()
            .map(|(r, p)| {
                let k = p.len().min(profile.len());
                let (a, b) = (unit(&p[..k]), unit(&profile[..k]));
                let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
                (d, *r)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(d, r)| (r.log2(), d.sqrt()))
    }

    /// `log2` radius for a wrapped `phase` at `scale`, lifted to the cycle
    /// nearest `coarse` (a `log2` radius).
    pub fn log_radius(&self, scale: usize, phase: f64, coarse: f64) -> Option<f64> {
        let (&table_scale, curve) = self
            .curves
            .iter()
            .min_by_key(|(&s, _)| (s as i64 - scale as i64).unsigned_abs())?;
        let shift = scale as f64 - table_scale as f64;
        let target = coarse - shift;
        let (lo, hi) = curve.span();
        let base = phase.rem_euclid(self.period);
        let k0 = ((lo - self.period - base) / self.period).floor() as i64;
        let k1 = ((hi + self.period - base) / self.period).ceil() as i64;
        (k0..=k1)
            .map(|k| curve.eval(base + k as f64 * self.period))
            .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
            .map(|v| v + shift)
    }

    /// Radius in pixels; see [`PhaseRadiusTable::log_radius`]. `profile`
    /// feeds [`PhaseRadiusTable::coarse_log_radius`].
    pub fn radius(&self, scale: usize, phase: f64, profile: &[f64]) -> Option<f64> {
        let coarse = self.coarse_log_radius(profile)?;
        self.log_radius(scale, phase, coarse).map(f64::exp2)
    }

    /// Smallest and largest calibration radius whose response profile
    /// peaks at `scale`.
    pub fn peak_band(&self, scale: usize) -> Option<(f64, f64)> {
        let radii: Vec<f64> = self
            .profiles
            .iter()
            .filter(|(_, p)| argmax(p) == Some(scale))
            .map(|(r, _)| *r)
            .collect();
        Some((*radii.first()?, *radii.last()?))
    }

    /// Scale a radius is read at: the finest one that carries at least
    /// [`TABLE_COVERAGE`] of the strongest response and whose table covers
    /// `coarse` (within [`COVERAGE_MARGIN`] octaves). Finer scales see a
    /// smaller neighbourhood, so nearby structures disturb them least.
    pub fn readout_scale(&self, energies: &[f64], coarse: f64) -> Option<usize> {
        let top = energies.iter().cloned().fold(0.0, f64::max);
        if !(top > 0.0) {
            return None;
        }
        (0..energies.len()).find(|&s| {
            energies[s] >= TABLE_COVERAGE * top
                && self
                    .curves
                    .get(&s)
                    .is_some_and(|c| c.covers(coarse, COVERAGE_MARGIN))
        })
    }

    /// `log2` radius from the phase at the [`readout_scale`], lifted by
    /// the coarse estimate from `profile`. When no scale qualifies the
    /// coarse estimate is returned as is.
    ///
    /// [`readout_scale`]: PhaseRadiusTable::readout_scale
    pub fn readout_log_radius(
        &self,
        phases: &[f64],
        energies: &[f64],
        profile: &[f64],
    ) -> Option<f64> {
        let coarse = self.coarse_log_radius(profile)?;
        match self.readout_scale(energies, coarse) {
            Some(s) if s < phases.len() => self.log_radius(s, phases[s], coarse),
            _ => Some(coarse),
        }
    }

    /// Radii the table of `scale` was fitted on, if it has one.
    pub fn fitted_range(&self, scale: usize) -> Option<(f64, f64)> {
        self.curves
            .get(&scale)
            .map(|c| (c.radius[0], *c.radius.last().unwrap()))
    }

    /// Energy-weighted mean of the per-scale `log2` radii of every scale
    /// carrying at least [`TABLE_COVERAGE`] of the strongest response and
    /// whose table was fitted on radii near the coarse estimate (within
    /// [`COVERAGE_MARGIN`] octaves). Scales agree on the lift through the
    /// shared coarse estimate. With no such scale the coarse estimate is
    /// returned as is.
    pub fn fused_log_radius(
        &self,
        phases: &[f64],
        energies: &[f64],
        profile: &[f64],
    ) -> Option<f64> {
        let coarse = self.coarse_log_radius(profile)?;
        self.fused_log_radius_near(phases, energies, coarse)
    }

    /// As [`PhaseRadiusTable::fused_log_radius`] with the coarse `log2`
    /// radius given directly.
    pub fn fused_log_radius_near(
        &self,
        phases: &[f64],
        energies: &[f64],
        coarse: f64,
    ) -> Option<f64> {
        let top = energies.iter().cloned().fold(0.0, f64::max);
        if !(top > 0.0) {
            return None;
        }
        let (mut acc, mut wsum) = (0.0, 0.0);
        for (s, (&p, &e)) in phases.iter().zip(energies).enumerate() {
            let fitted = self
                .curves
                .get(&s)
                .is_some_and(|c| c.covers(coarse, COVERAGE_MARGIN));
            if e >= TABLE_COVERAGE * top && fitted {
                if let Some(l) = self.log_radius(s, p, coarse) {
                    acc += e * e * l;
                    wsum += e * e;
                }
            }
        }
        Some(if wsum > 0.0 { acc / wsum } else { coarse })
    }

    /// CSV with header `s,<label>,radius` holding the table knots;
    /// metadata and coarse profiles ride along as `#` lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# label={}", self.label).unwrap();
        writeln!(out, "# period={}", self.period).unwrap();
        for (r, p) in &self.profiles {
            let vals: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            writeln!(out, "# profile={},{}", r, vals.join(",")).unwrap();
        }
        writeln!(out, "s,{},radius", self.label).unwrap();
        for (s, c) in &self.curves {
            for (p, r) in c.phase.iter().zip(&c.radius) {
                writeln!(out, "{s},{p},{r}").unwrap();
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Parse(format!("calibration table: {m}"));
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("{s:?}: {e}")))
        };
        let (mut label, mut period) = (None, None);
        let mut profiles = Vec::new();
        let mut rows: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        let mut header_seen = false;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| bad(format!("malformed line {line:?}")))?;
                match k.trim() {
                    "label" => label = Some(v.trim().to_string()),
                    "period" => period = Some(num(v)?),
                    "profile" => {
                        let vals = v.split(',').map(num).collect::<Result<Vec<f64>>>()?;
                        if vals.len() < 2 {
                            return Err(bad("empty profile".into()));
                        }
                        profiles.push((vals[0], vals[1..].to_vec()));
                    }
                    other => return Err(bad(format!("unknown key {other:?}"))),
                }
                continue;
            }
            if !header_seen {
                header_seen = true;
                if line.starts_with("s,") {
                    continue;
                }
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad(format!("expected 3 fields in {line:?}")));
            }
            let s: usize = f[0]
                .trim()
                .parse()
                .map_err(|e| bad(format!("{:?}: {e}", f[0])))?;
            let (p, r) = rows.entry(s).or_default();
            p.push(num(f[1])?);
            r.push(num(f[2])?);
        }
        let mut curves = BTreeMap::new();
        for (s, (p, r)) in rows {
            if p.len() < 2 || p.windows(2).any(|w| w[1] <= w[0]) || r.iter().any(|&v| v <= 0.0) {
                return Err(bad(format!("scale {s} is not a strictly increasing curve")));
            }
            curves.insert(s, Curve::new(p, r));
        }
        let period = period.ok_or_else(|| bad("missing period".into()))?;
        if curves.is_empty() {
            return Err(bad("no table rows".into()));
        }
        Ok(PhaseRadiusTable {
            label: label.unwrap_or_else(|| "phase".into()),
            period,
            curves,
            profiles,
        })
    }
}

/// Unwraps the phases of `members` (sorted by radius) by nearest-cycle
/// continuation and keeps the longest strictly increasing stretch of
/// consecutive disks.
fn longest_monotone_run(members: &[&CalibrationPoint], s: usize, period: f64) -> Option<Curve> {
    if members.len() < 2 {
        return None;
    }
    let mut unwrapped = vec![members[0].phases[s]];
    for w in members.windows(2) {
        let d = (w[1].phases[s] - w[0].phases[s] + period / 2.0).rem_euclid(period) - period / 2.0;
        unwrapped.push(unwrapped.last().unwrap() + d);
    }
    let (mut best, mut start) = ((0, 0), 0);
    for i in 1..=members.len() {
        let breaks = i == members.len()
            || unwrapped[i] <= unwrapped[i - 1]
            || (members[i].radius / members[i - 1].radius).log2() > 0.5;
        if breaks {
            if i - start > best.1 - best.0 {
                best = (start, i);
            }
            start = i;
        }
    }
    if best.1 - best.0 < 2 {
        return None;
    }
    let range = best.0..best.1;
    Some(Curve::new(
        unwrapped[range.clone()].to_vec(),
        members[range].iter().map(|p| p.radius).collect(),
    ))
}
