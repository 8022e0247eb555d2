//! Self-contained SVG plots drawn straight from result rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::results::write_atomic;
use crate::error::{Error, Result};
use crate::experiments::ResultRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Mean overlap against `log10 k`, one series per `N`.
    Overlap,
    /// `Var(lambda)` against `N` on log-log axes with a slope `-1/3` guide.
    Variance,
    /// Mean overlap against the multiplier `k / N^(5/3)`, one series per `N`.
    Collapse,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlap" => Ok(PlotKind::Overlap),
            "variance" => Ok(PlotKind::Variance),
            "collapse" => Ok(PlotKind::Collapse),
            _ => Err(Error::config("plot kind", format!("expected overlap, variance or collapse, got `{s}`"))),
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];

#[derive(Debug, Clone, Copy)]
struct Point {
    x: f64,
    y: f64,
    err: f64,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    /// Range covering `values` (already in plot space, i.e. `log10` for log
    /// axes), padded when degenerate.
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Axis { lo, hi, log }
    }

    fn fixed(lo: f64, hi: f64) -> Axis {
        Axis { lo, hi, log: false }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            return (a..=b).map(|d| (d as f64, format!("1e{d}"))).collect();
        }
        let raw = (self.hi - self.lo) / 5.0;
        let p = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * p).find(|s| *s >= raw).unwrap_or(10.0 * p);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step + 1e-9).floor() as i64;
        (first..=last)
            .map(|i| {
                let v = i as f64 * step;
                (v, trim_number(v, step))
            })
            .collect()
    }
}

fn trim_number(v: f64, step: f64) -> String {
    let digits = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.digits$}")
}

fn px_x(axis: &Axis, v: f64) -> f64 {
    LEFT + axis.frac(v) * (WIDTH - LEFT - RIGHT)
}

fn px_y(axis: &Axis, v: f64) -> f64 {
    HEIGHT - BOTTOM - axis.frac(v) * (HEIGHT - TOP - BOTTOM)
}

fn series_by_n(rows: &[ResultRow], statistic: &str, x: impl Fn(&ResultRow) -> f64) -> BTreeMap<usize, Vec<Point>> {
    let mut out: BTreeMap<usize, Vec<Point>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.statistic == statistic && r.n > 0) {
        let xv = x(r);
        if xv.is_finite() && r.mean.is_finite() {
            out.entry(r.n).or_default().push(Point {
                x: xv,
                y: r.mean,
                err: r.stderr,
            });
        }
    }
    for pts in out.values_mut() {
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    }
    out
}

/// The SVG document for `rows`.
pub fn render_plot(rows: &[ResultRow], kind: PlotKind) -> Result<String> {
    let (title, xlabel, ylabel, series, yaxis_log) = match kind {
        PlotKind::Overlap => (
            "Mean overlap after resampling k entries",
            "k (log scale)",
            "E|<v, v[k]>|",
            series_by_n(rows, "overlap", |r| if r.k > 0 { (r.k as f64).log10() } else { f64::NAN }),
            false,
        ),
        PlotKind::Collapse => (
            "Mean overlap against k / N^(5/3)",
            "k / N^(5/3) (log scale)",
            "E|<v, v[k]>|",
            series_by_n(rows, "overlap", |r| if r.multiplier > 0.0 { r.multiplier.log10() } else { f64::NAN }),
            false,
        ),
        PlotKind::Variance => {
            let mut pts: Vec<Point> = rows
                .iter()
                .filter(|r| r.statistic == "var_lambda" && r.n > 0 && r.mean > 0.0)
                .map(|r| Point {
                    x: (r.n as f64).log10(),
                    y: r.mean.log10(),
                    err: r.stderr / (r.mean * std::f64::consts::LN_10),
                })
                .collect();
            pts.sort_by(|a, b| a.x.total_cmp(&b.x));
            let mut m = BTreeMap::new();
            if !pts.is_empty() {
                m.insert(0, pts);
            }
            ("Variance of the top eigenvalue", "N (log scale)", "Var(lambda) (log scale)", m, true)
        }
    };

    let all = || series.values().flatten();
    let xaxis = Axis::fit(all().map(|p| p.x), true);
    let yaxis = if yaxis_log {
        Axis::fit(all().flat_map(|p| [p.y - p.err, p.y + p.err]), true)
    } else {
        Axis::fixed(0.0, 1.0)
    };

    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(w, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{title}</text>"#, WIDTH / 2.0);

    // Frame, ticks and labels.
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        w,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for (v, label) in xaxis.ticks() {
        let px = px_x(&xaxis, v);
        let _ = writeln!(w, r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(w, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, y0 + 18.0);
    }
    for (v, label) in yaxis.ticks() {
        let py = px_y(&yaxis, v);
        let _ = writeln!(w, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, x0 - 8.0, py + 4.0);
    }
    let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#, (x0 + x1) / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        w,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{ylabel}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    if kind == PlotKind::Variance {
        if let Some(pts) = series.get(&0) {
            // Reference slope -1/3 through the centroid of the points.
            let cx = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
            let cy = pts.iter().map(|p| p.y).sum::<f64>() / pts.len() as f64;
            let at = |x: f64| cy - (x - cx) / 3.0;
            let _ = writeln!(
                w,
                r#"<line class="guide" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
                px_x(&xaxis, xaxis.lo),
                px_y(&yaxis, at(xaxis.lo)),
                px_x(&xaxis, xaxis.hi),
                px_y(&yaxis, at(xaxis.hi))
            );
            let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" fill="gray">slope -1/3</text>"#, x1 + 8.0, TOP + 40.0);
        }
    }

    if series.is_empty() {
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">no data</text>"#, (x0 + x1) / 2.0, (y0 + y1) / 2.0);
    }
    for (c, (n, pts)) in series.iter().enumerate() {
        let color = COLORS[c % COLORS.len()];
        if pts.len() > 1 {
            let coords: Vec<String> = pts
                .iter()
                .map(|p| format!("{:.2},{:.2}", px_x(&xaxis, p.x), px_y(&yaxis, p.y)))
                .collect();
            let _ = writeln!(w, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, coords.join(" "));
        }
        for p in pts {
            let (px, py) = (px_x(&xaxis, p.x), px_y(&yaxis, p.y));
            if p.err > 0.0 {
                let _ = writeln!(
                    w,
                    r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{color}"/>"#,
                    px_y(&yaxis, p.y - p.err),
                    px_y(&yaxis, p.y + p.err)
                );
            }
            let _ = writeln!(w, r#"<circle class="marker" cx="{px:.2}" cy="{py:.2}" r="3" fill="{color}"/>"#);
        }
        if *n > 0 {
            let ly = TOP + 12.0 + 18.0 * c as f64;
            let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#, x1 + 14.0, ly - 4.0);
            let _ = writeln!(w, r#"<text x="{:.2}" y="{ly:.2}">N = {n}</text>"#, x1 + 24.0);
        }
    }
    let _ = writeln!(w, "</svg>");
    Ok(s)
}

pub fn emit_plot(rows: &[ResultRow], kind: PlotKind, out_path: &Path) -> Result<()> {
    write_atomic(out_path, render_plot(rows, kind)?.as_bytes())
}
