//! CSV tables and SVG plots. Every artifact carries the seed, config hash and
//! tool version.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    pub const COLUMNS: [&'static str; 2] = ["config_hash", "tool_version"];

    fn values(&self) -> [String; 2] {
        [self.config_hash.clone(), TOOL_VERSION.to_string()]
    }
}

/// A table whose rows end with the provenance columns.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    provenance: Provenance,
}

impl Table {
    pub fn new(header: &[&str], provenance: Provenance) -> Self {
        let header = header
            .iter()
            .copied()
            .chain(Provenance::COLUMNS)
            .map(String::from)
            .collect();
        Self {
            header,
            rows: Vec::new(),
            provenance,
        }
    }

    pub fn push(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len() + Provenance::COLUMNS.len(), self.header.len());
        let mut row = cells;
        row.extend(self.provenance.values());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv flush: {e}"))?;
        Ok(String::from_utf8(bytes)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv()?)
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Round-trip float formatting, stable across runs and platforms.
pub fn num(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    /// Half-length of the error bar.
    pub err: f64,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
    /// Draw segments between consecutive points.
    pub connect: bool,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal reference lines `(y, label)`.
    pub hlines: Vec<(f64, String)>,
    /// Optional tick labels replacing numeric x ticks, at integer positions.
    pub x_tick_labels: Option<Vec<String>>,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1e-3) * 0.1;
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.08;
    (lo - pad, hi + pad)
}

impl Plot {
    pub fn to_svg(&self, provenance: &Provenance) -> String {
        let pts = self.series.iter().flat_map(|s| &s.points);
        let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in pts {
            x_lo = x_lo.min(p.x);
            x_hi = x_hi.max(p.x);
            y_lo = y_lo.min(p.y - p.err);
            y_hi = y_hi.max(p.y + p.err);
        }
        for (y, _) in &self.hlines {
            y_lo = y_lo.min(*y);
            y_hi = y_hi.max(*y);
        }
        let (x_lo, x_hi) = span(x_lo, x_hi);
        let (y_lo, y_hi) = span(y_lo, y_hi);
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
        let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            "<metadata>seed={} config_hash={} tool_version={}</metadata>",
            provenance.seed, provenance.config_hash, TOOL_VERSION
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );

        for i in 0..=4 {
            let y = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
            let py = sy(y);
            let _ = writeln!(
                s,
                r##"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{y:.4}</text>"##,
                LEFT,
                LEFT + pw,
                LEFT - 6.0,
                py + 4.0
            );
        }
        match &self.x_tick_labels {
            Some(labels) => {
                for (i, label) in labels.iter().enumerate() {
                    let px = sx(i as f64);
                    let _ = writeln!(
                        s,
                        r#"<text x="{px:.1}" y="{:.1}" text-anchor="end" transform="rotate(-35 {px:.1} {:.1})">{}</text>"#,
                        TOP + ph + 16.0,
                        TOP + ph + 16.0,
                        escape(label)
                    );
                }
            }
            None => {
                for i in 0..=4 {
                    let x = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
                    let _ = writeln!(
                        s,
                        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x:.3}</text>"#,
                        sx(x),
                        TOP + ph + 18.0
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (y, label) in &self.hlines {
            let py = sy(*y);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#555" stroke-dasharray="5,4"/><text x="{:.1}" y="{:.1}">{}</text>"##,
                LEFT + pw,
                LEFT + pw + 6.0,
                py + 4.0,
                escape(label)
            );
        }

        for (k, series) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            if series.connect && series.points.len() > 1 {
                let path: Vec<String> = series
                    .points
                    .iter()
                    .map(|p| format!("{:.1},{:.1}", sx(p.x), sy(p.y)))
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    path.join(" ")
                );
            }
            for p in &series.points {
                let (px, py) = (sx(p.x), sy(p.y));
                if p.err > 0.0 {
                    let (top, bot) = (sy(p.y + p.err), sy(p.y - p.err));
                    let _ = writeln!(
                        s,
                        r#"<path d="M{px:.1},{top:.1}V{bot:.1}M{:.1},{top:.1}H{:.1}M{:.1},{bot:.1}H{:.1}" stroke="{color}"/>"#,
                        px - 4.0,
                        px + 4.0,
                        px - 4.0,
                        px + 4.0
                    );
                }
                let _ = writeln!(s, r#"<circle cx="{px:.1}" cy="{py:.1}" r="3" fill="{color}"/>"#);
            }
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                LEFT + pw + 12.0,
                ly + 28.0,
                LEFT + pw + 20.0,
                ly + 32.0,
                escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
