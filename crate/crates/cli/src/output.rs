//! Result bundles and their CSV, JSON and SVG renderings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub name: String,
    pub meaning: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Num(x) if x.is_finite() => s.serialize_f64(*x),
            Cell::Num(_) => s.serialize_none(),
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

impl Cell {
    /// CSV text: floats with 17 significant digits.
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Num(x) => format!("{x}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(t) => t.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// `columns` as `(name, meaning)` pairs.
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|(n, m)| Column { name: (*n).into(), meaning: (*m).into() }).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Numeric column as `f64`.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = self.columns.iter().position(|c| c.name == name).expect("known column");
        self.rows
            .iter()
            .map(|r| match &r[i] {
                Cell::Num(x) => *x,
                Cell::Int(k) => *k as f64,
                Cell::Text(_) => f64::NAN,
            })
            .collect()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("columns", &self.columns)?;
        m.serialize_entry("rows", &self.rows)?;
        m.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Line,
    Scatter,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: &str, xs: &[f64], ys: &[f64]) -> Self {
        Series { label: label.into(), points: xs.iter().copied().zip(ys.iter().copied()).collect() }
    }
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub kind: PlotKind,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn line(name: &str, title: &str, xlabel: &str, ylabel: &str, series: Vec<Series>) -> Self {
        Plot {
            name: name.into(),
            title: title.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            kind: PlotKind::Line,
            series,
        }
    }
}

/// Everything a command produces.
#[derive(Debug, Clone, Default)]
pub struct ResultBundle {
    pub scalars: Map<String, Value>,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
}

impl ResultBundle {
    pub fn scalar(&mut self, key: &str, value: impl Into<Value>) {
        self.scalars.insert(key.into(), value.into());
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Finite floats as JSON numbers, everything else as null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn meta(cfg: &RunConfig) -> Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "config": cfg,
    })
}

pub fn bundle_json(cfg: &RunConfig, b: &ResultBundle) -> String {
    let tables: Map<String, Value> = b
        .tables
        .iter()
        .map(|t| (t.name.clone(), serde_json::to_value(t).expect("table serializes")))
        .collect();
    let doc = json!({
        "meta": meta(cfg),
        "data": { "results": b.scalars, "tables": tables },
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("bundle serializes");
    s.push('\n');
    s
}

pub fn error_json(cfg: &RunConfig, name: &str, message: &str) -> String {
    let doc = json!({
        "meta": meta(cfg),
        "error": { "name": name, "message": message },
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("error serializes");
    s.push('\n');
    s
}

fn table_csv(t: &Table) -> csv::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(t.columns.iter().map(|c| c.name.as_str()))?;
    for r in &t.rows {
        w.write_record(r.iter().map(Cell::csv))?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Write the requested formats into `cfg.out`; returns the paths in order.
pub fn write_bundle(cfg: &RunConfig, b: &ResultBundle) -> std::io::Result<Vec<PathBuf>> {
    let dir = Path::new(&cfg.out);
    fs::create_dir_all(dir)?;
    let stem = cfg.command.name();
    let mut written = Vec::new();
    for f in &cfg.formats {
        match f {
            Format::Csv => {
                for t in &b.tables {
                    let p = dir.join(format!("{stem}_{}.csv", t.name));
                    fs::write(&p, table_csv(t).map_err(std::io::Error::other)?)?;
                    written.push(p);
                }
            }
            Format::Json => {
                let p = dir.join(format!("{stem}.json"));
                fs::write(&p, bundle_json(cfg, b))?;
                written.push(p);
            }
            Format::Svg => {
                for plot in &b.plots {
                    let p = dir.join(format!("{stem}_{}.svg", plot.name));
                    fs::write(&p, render_svg(plot))?;
                    written.push(p);
                }
            }
        }
    }
    Ok(written)
}

const PALETTE: [&str; 6] = ["#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#555555"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(plot: &Plot) -> Option<(f64, f64, f64, f64)> {
    let pts = plot.series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return None;
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    Some((x0, x1, y0 - pad, y1 + pad))
}

/// Self-contained SVG: axes, tick labels, one polyline (or marker set) per
/// series. Points are drawn as given; non-finite values break the line.
pub fn render_svg(plot: &Plot) -> String {
    let (w, h) = (720.0, 440.0);
    let (ml, mr, mt, mb) = (70.0, 150.0, 36.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let _ = writeln!(s, "<!-- {} {} generated at unix time {stamp} -->", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        escape(&plot.title)
    );
    let Some((x0, x1, y0, y1)) = bounds(plot) else {
        s.push_str("</svg>\n");
        return s;
    };
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + (y1 - y) / (y1 - y0) * ph;
    let _ = writeln!(s, r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            sx(fx),
            mt + ph + 16.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            ml - 6.0,
            sy(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        h - 12.0,
        escape(&plot.xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0,
        escape(&plot.ylabel)
    );
    for (i, ser) in plot.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        match plot.kind {
            PlotKind::Line => {
                for run in ser.points.split(|p| !(p.0.is_finite() && p.1.is_finite())) {
                    if run.is_empty() {
                        continue;
                    }
                    let pts: Vec<String> = run.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                        pts.join(" ")
                    );
                }
            }
            PlotKind::Scatter => {
                for &(x, y) in ser.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.4" fill="{color}"/>"#, sx(x), sy(y));
                }
            }
        }
        let ly = mt + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            ml + pw + 10.0,
            ml + pw + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            ml + pw + 36.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}
