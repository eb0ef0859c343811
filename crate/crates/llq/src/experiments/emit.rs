//! Deterministic CSV and SVG emission. CSV is the data contract (fixed
//! column schemas, missing values as empty fields, `{:.12e}` formatting so
//! identical runs are byte-identical); the SVG plots are conveniences.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Write one CSV file: a header row and `{:.12e}`-formatted cells, with
/// `None` emitted as an empty field.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<Option<f64>>>,
) -> io::Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let mut first = true;
        for cell in row {
            if !first {
                text.push(',');
            }
            first = false;
            if let Some(v) = cell {
                if v.is_finite() {
                    write!(text, "{v:.12e}").expect("writing to String cannot fail");
                }
            }
        }
        text.push('\n');
    }
    std::fs::write(path, text)
}

pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// One polyline on a plot.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub dashed: bool,
}

pub const PALETTE: [&str; 6] = ["#1b6ca8", "#c0392b", "#2e8b57", "#8e44ad", "#d4820a", "#34495e"];

/// A minimal deterministic line chart.
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const ML: f64 = 78.0;
const MR: f64 = 24.0;
const MT: f64 = 40.0;
const MB: f64 = 56.0;

impl LinePlot {
    pub fn render(&self) -> String {
        let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                if x.is_finite() && y.is_finite() {
                    x_lo = x_lo.min(x);
                    x_hi = x_hi.max(x);
                    y_lo = y_lo.min(y);
                    y_hi = y_hi.max(y);
                }
            }
        }
        if !x_lo.is_finite() || !y_lo.is_finite() {
            x_lo = 0.0;
            x_hi = 1.0;
            y_lo = 0.0;
            y_hi = 1.0;
        }
        if x_hi - x_lo < 1e-300 {
            x_hi = x_lo + 1.0;
        }
        if y_hi - y_lo < 1e-300 {
            y_hi = y_lo + 1.0;
        }
        let pad = 0.04 * (y_hi - y_lo);
        y_lo -= pad;
        y_hi += pad;
        let sx = |x: f64| ML + (x - x_lo) / (x_hi - x_lo) * (W - ML - MR);
        let sy = |y: f64| H - MB - (y - y_lo) / (y_hi - y_lo) * (H - MT - MB);

        let mut svg = String::new();
        let _ = write!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
             viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"13\">\n\
             <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
        );
        let _ = write!(
            svg,
            "<text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
            (ML + W - MR) / 2.0,
            escape(&self.title)
        );
        // Axes box and ticks.
        let _ = write!(
            svg,
            "<rect x=\"{ML}\" y=\"{MT}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#444\"/>\n",
            W - ML - MR,
            H - MT - MB
        );
        for k in 0..=5 {
            let fx = x_lo + (x_hi - x_lo) * k as f64 / 5.0;
            let fy = y_lo + (y_hi - y_lo) * k as f64 / 5.0;
            let _ = write!(
                svg,
                "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"#444\"/>\n\
                 <text x=\"{0:.1}\" y=\"{3:.1}\" text-anchor=\"middle\">{4}</text>\n",
                sx(fx),
                H - MB,
                H - MB + 5.0,
                H - MB + 20.0,
                tick(fx)
            );
            let _ = write!(
                svg,
                "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{2:.1}\" y2=\"{1:.1}\" stroke=\"#444\"/>\n\
                 <text x=\"{3:.1}\" y=\"{4:.1}\" text-anchor=\"end\">{5}</text>\n",
                ML - 5.0,
                sy(fy),
                ML,
                ML - 9.0,
                sy(fy) + 4.0,
                tick(fy)
            );
        }
        let _ = write!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            (ML + W - MR) / 2.0,
            H - 14.0,
            escape(&self.x_label)
        );
        let _ = write!(
            svg,
            "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
            (MT + H - MB) / 2.0,
            (MT + H - MB) / 2.0,
            escape(&self.y_label)
        );
        // Series.
        for s in &self.series {
            let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            let mut path = String::new();
            let mut pen_down = false;
            for &(x, y) in &s.points {
                if !x.is_finite() || !y.is_finite() {
                    pen_down = false;
                    continue;
                }
                let cmd = if pen_down { 'L' } else { 'M' };
                let _ = write!(path, "{}{:.2} {:.2} ", cmd, sx(x), sy(y));
                pen_down = true;
            }
            let _ = write!(
                svg,
                "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{}/>\n",
                path.trim_end(),
                s.color,
                dash
            );
        }
        // Legend.
        for (k, s) in self.series.iter().enumerate() {
            let y = MT + 16.0 + 18.0 * k as f64;
            let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            let _ = write!(
                svg,
                "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{2:.1}\" y2=\"{1:.1}\" stroke=\"{3}\" stroke-width=\"1.6\"{4}/>\n\
                 <text x=\"{5:.1}\" y=\"{6:.1}\">{7}</text>\n",
                ML + 10.0,
                y,
                ML + 36.0,
                s.color,
                dash,
                ML + 42.0,
                y + 4.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.render())
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_formats_missing_values_as_empty_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(
            &path,
            &["a", "b"],
            vec![vec![Some(1.0), None], vec![Some(0.5), Some(f64::NAN)]],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "a,b");
        assert!(lines[1].starts_with("1.0000000000"));
        assert!(lines[1].ends_with(','));
        assert!(lines[2].ends_with(','));
    }

    #[test]
    fn svg_render_is_deterministic() {
        let plot = LinePlot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                label: "s".into(),
                points: vec![(0.0, 0.0), (1.0, 1.0), (f64::NAN, 2.0), (2.0, 0.5)],
                color: PALETTE[0],
                dashed: false,
            }],
        };
        let a = plot.render();
        let b = plot.render();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("</svg>"));
    }
}
