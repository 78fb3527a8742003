use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::matching::{jaccard, rmse, MatchResult};
use crate::detector::Detection;
use crate::simdata::Disk;

/// One evaluated image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub image: String,
    pub method: String,
    /// Background standard deviation of the scene.
    pub sigma: f64,
    pub jaccard: f64,
    pub rmse_pos: Option<f64>,
    pub rmse_radius: Option<f64>,
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_fn: usize,
    /// Detection wall time, when it was recorded.
    pub wall_ms: Option<f64>,
}

impl EvalRow {
    pub fn new(
        image: impl Into<String>,
        method: impl Into<String>,
        sigma: f64,
        m: &MatchResult,
        detections: &[Detection],
        truths: &[Disk],
    ) -> Self {
        let e = rmse(m, detections, truths);
        EvalRow {
            image: image.into(),
            method: method.into(),
            sigma,
            jaccard: jaccard(m),
            rmse_pos: e.map(|e| e.position),
            rmse_radius: e.map(|e| e.radius),
            n_tp: m.true_positives(),
            n_fp: m.false_positives.len(),
            n_fn: m.false_negatives.len(),
            wall_ms: None,
        }
    }
}

/// Means over all images sharing a method and background level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub sigma: f64,
    pub images: usize,
    pub jaccard: f64,
    /// Mean over the images that had at least one match.
    pub rmse_pos: Option<f64>,
    pub rmse_radius: Option<f64>,
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_fn: usize,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Groups rows by `(method, sigma)`, ordered by method then sigma.
pub fn summarize(rows: &[EvalRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, u64), Vec<&EvalRow>> = BTreeMap::new();
    for r in rows {
        // Sigma keys sort correctly by bit pattern for non-negative values.
        groups
            .entry((r.method.clone(), r.sigma.to_bits()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((method, sigma), g)| SummaryRow {
            method,
            sigma: f64::from_bits(sigma),
            images: g.len(),
            jaccard: g.iter().map(|r| r.jaccard).sum::<f64>() / g.len() as f64,
            rmse_pos: mean_defined(g.iter().map(|r| r.rmse_pos)),
            rmse_radius: mean_defined(g.iter().map(|r| r.rmse_radius)),
            n_tp: g.iter().map(|r| r.n_tp).sum(),
            n_fp: g.iter().map(|r| r.n_fp).sum(),
            n_fn: g.iter().map(|r| r.n_fn).sum(),
        })
        .collect()
}

/// CSV with a header row; undefined values are empty fields.
pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn rows_from_csv<T: for<'de> Deserialize<'de>>(text: &str) -> csv::Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// A small SVG line chart, one polyline per named series.
pub fn svg_line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 60.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            top + ph + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );
    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        for &(x, y) in points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = top + 16.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            w - right + 12.0,
            w - right + 32.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            w - right + 38.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let t = format!("{v:.3}");
    t.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Jaccard against background level, one series per method.
pub fn jaccard_plot(summary: &[SummaryRow]) -> String {
    let mut by_method: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in summary {
        by_method
            .entry(&r.method)
            .or_default()
            .push((r.sigma, r.jaccard));
    }
    let series: Vec<(String, Vec<(f64, f64)>)> = by_method
        .into_iter()
        .map(|(m, mut p)| {
            p.sort_by(|a, b| a.0.total_cmp(&b.0));
            (m.to_string(), p)
        })
        .collect();
    svg_line_plot(
        "Detection accuracy",
        "background std",
        "Jaccard index",
        &series,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalkit::match_points;

    fn row(method: &str, sigma: f64, j: f64, rmse: Option<f64>) -> EvalRow {
        EvalRow {
            image: format!("{method}-{sigma}"),
            method: method.into(),
            sigma,
            jaccard: j,
            rmse_pos: rmse,
            rmse_radius: rmse,
            n_tp: 1,
            n_fp: 0,
            n_fn: 0,
            wall_ms: None,
        }
    }

    #[test]
    fn summary_one_row_per_sigma() {
        let rows = vec![
            row("ms", 0.0, 1.0, Some(0.2)),
            row("ms", 0.0, 0.5, None),
            row("ms", 2.0, 0.8, Some(0.4)),
            row("log", 0.0, 0.9, Some(0.3)),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].method.as_str(), s[0].sigma), ("log", 0.0));
        let ms0 = &s[1];
        assert_eq!(ms0.images, 2);
        assert_eq!(ms0.jaccard, 0.75);
        assert_eq!(ms0.rmse_pos, Some(0.2));
        assert_eq!(s[2].sigma, 2.0);
    }

    #[test]
    fn csv_round_trip_keeps_missing_values() {
        let rows = vec![row("ms", 0.0, 1.0, Some(0.25)), row("ms", 4.0, 0.0, None)];
        let text = rows_to_csv(&rows).unwrap();
        assert!(text.starts_with(
            "image,method,sigma,jaccard,rmse_pos,rmse_radius,n_tp,n_fp,n_fn,wall_ms\n"
        ));
        let back: Vec<EvalRow> = rows_from_csv(&text).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn row_from_match() {
        let m = match_points(&[(0.0, 0.0)], &[(0.0, 0.0)], 5.0);
        let d = Detection {
            x: 0.0,
            y: 0.0,
            radius: 9.0,
            score: 1.0,
            scale: 0,
            t_star: 0.0,
        };
        let t = Disk {
            x: 0.0,
            y: 0.0,
            radius: 9.0,
            amplitude: 1.0,
        };
        let r = EvalRow::new("a", "ms", 0.0, &m, &[d], &[t]);
        assert_eq!((r.jaccard, r.rmse_pos, r.n_tp), (1.0, Some(0.0), 1));
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = svg_line_plot(
            "t<",
            "x",
            "y",
            &[("a&b".into(), vec![(0.0, 1.0), (2.0, 0.5)])],
        );
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("t&lt;") && svg.contains("a&amp;b"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg_line_plot("e", "x", "y", &[]).contains("</svg>"));
    }
}
