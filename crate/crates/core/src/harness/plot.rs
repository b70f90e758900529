//! Self-contained SVG line chart of mean learning curves.

use std::fmt::Write as _;
use std::path::Path;

use super::AggregateRow;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 24.0;
const MARGIN_B: f64 = 52.0;
const COLORS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub label: String,
    pub rows: Vec<AggregateRow>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// x: observations, y: `1 - varpi` on [0, 1].
pub fn render_svg(series: &[PlotSeries]) -> String {
    let x_max = series
        .iter()
        .flat_map(|s| s.rows.iter().map(|r| r.stage))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + pw * x / x_max;
    let sy = |y: f64| MARGIN_T + ph * (1.0 - y.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let y = k as f64 / 5.0;
        let py = sy(y);
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN_L}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{y:.1}</text>"##,
            MARGIN_L + pw,
            MARGIN_L - 6.0,
            py + 4.0
        );
        let xv = x_max * k as f64 / 5.0;
        let px = sx(xv);
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_T + ph + 18.0,
            xv.round()
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">observations</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">1 - varpi</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0
    );

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", sx(r.stage as f64), sy(r.mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_T + 16.0 + 20.0 * i as f64;
        let lx = MARGIN_L + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(series: &[PlotSeries], path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(series)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_balanced_xml() {
        let series = vec![
            PlotSeries {
                label: "A & <B>".into(),
                rows: vec![
                    AggregateRow { stage: 100, mean: 0.3, std: 0.1 },
                    AggregateRow { stage: 200, mean: 0.6, std: 0.1 },
                ],
            },
            PlotSeries { label: "C".into(), rows: vec![] },
        ];
        let svg = render_svg(&series);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("A &amp; &lt;B&gt;"));
        // every opened element is self-closed or closed
        let opens = svg.matches("<svg").count();
        assert_eq!(opens, svg.matches("</svg>").count());
        assert_eq!(svg.matches("<text").count(), svg.matches("</text>").count());
    }
}
