//! Grouped bar chart of nominal and extreme perturbed indices, as SVG.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const SERIES_COLORS: [&str; 3] = ["#1f4e9c", "#22c3d6", "#f2c80f"];

/// Pixels per unit of index value.
pub const SCALE: f64 = 300.0;

const PLOT_TOP: f64 = 40.0;
const LEFT: f64 = 60.0;
const BAR: f64 = 18.0;
const GROUP_GAP: f64 = 22.0;

/// Data for one chart: a label per group and one value per series and group.
#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub groups: Vec<String>,
    pub series: Vec<(String, Vec<f64>)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl BarChart {
    fn y_max(&self) -> f64 {
        let top = self
            .series
            .iter()
            .flat_map(|(_, v)| v.iter().copied())
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        ((top * 10.0).ceil() / 10.0).clamp(0.1, 1.0f64.max(top))
    }

    /// Renders the chart. Output depends only on the data.
    pub fn render(&self) -> String {
        let y_max = self.y_max();
        let plot_h = y_max * SCALE;
        let k = self.series.len().max(1) as f64;
        let group_w = k * BAR + GROUP_GAP;
        let width = LEFT + self.groups.len() as f64 * group_w + 20.0 + 150.0;
        let height = PLOT_TOP + plot_h + 50.0;
        let base = PLOT_TOP + plot_h;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
            width / 2.0,
            escape(&self.title)
        );

        let ticks = (y_max * 10.0).round() as usize;
        for t in 0..=ticks {
            let v = t as f64 / 10.0;
            let y = base - v * SCALE;
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT:.1}" y1="{y:.3}" x2="{:.1}" y2="{y:.3}" stroke="#dddddd"/>"##,
                LEFT + self.groups.len() as f64 * group_w
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.3}" text-anchor="end">{v:.1}</text>"#,
                LEFT - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<line x1="{LEFT:.1}" y1="{PLOT_TOP:.1}" x2="{LEFT:.1}" y2="{base:.3}" stroke="black"/>"#
        );

        for (g, name) in self.groups.iter().enumerate() {
            let x0 = LEFT + GROUP_GAP / 2.0 + g as f64 * group_w;
            let _ = writeln!(out, r#"<g class="group" data-label="{}">"#, escape(name));
            for (s, (series, values)) in self.series.iter().enumerate() {
                let v = values.get(g).copied().unwrap_or(0.0);
                let shown = if v.is_finite() { v.max(0.0) } else { 0.0 };
                let h = shown * SCALE;
                let x = x0 + s as f64 * BAR;
                let _ = writeln!(
                    out,
                    r#"<rect class="bar" x="{x:.3}" y="{:.3}" width="{BAR:.1}" height="{h:.3}" fill="{}" data-series="{}" data-value="{v}"/>"#,
                    base - h,
                    SERIES_COLORS[s % SERIES_COLORS.len()],
                    escape(series)
                );
                let _ = writeln!(
                    out,
                    r#"<text class="value" x="{:.3}" y="{:.3}" font-size="8" text-anchor="middle">{shown:.4}</text>"#,
                    x + BAR / 2.0,
                    base - h - 3.0
                );
            }
            let _ = writeln!(
                out,
                r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
                x0 + k * BAR / 2.0,
                base + 16.0,
                escape(name)
            );
            let _ = writeln!(out, "</g>");
        }
        let _ = writeln!(
            out,
            r#"<line x1="{LEFT:.1}" y1="{base:.3}" x2="{:.1}" y2="{base:.3}" stroke="black"/>"#,
            LEFT + self.groups.len() as f64 * group_w
        );

        let lx = LEFT + self.groups.len() as f64 * group_w + 20.0;
        for (s, (series, _)) in self.series.iter().enumerate() {
            let y = PLOT_TOP + 18.0 * s as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{lx:.1}" y="{y:.1}" width="12" height="12" fill="{}"/>"#,
                SERIES_COLORS[s % SERIES_COLORS.len()]
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
                lx + 18.0,
                y + 10.0,
                escape(series)
            );
        }
        out.push_str("</svg>\n");
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}
