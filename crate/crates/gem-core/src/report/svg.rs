//! Minimal static SVG plotting: scatter and line plots with axes, ticks,
//! legends, reference lines and origin-centered circles. Fixed 800 x 600
//! viewbox, no external dependencies, byte-deterministic output.

use crate::util::fmt_sig;
use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;

/// Fixed palette; index wraps.
pub const PALETTE: [&str; 7] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub const GRAY: &str = "#9e9e9e";
pub const BLACK: &str = "#000000";

enum SeriesKind {
    Scatter { filled: bool },
    Line { dashed: bool },
}

struct Series {
    label: Option<String>,
    color: String,
    points: Vec<(f64, f64)>,
    kind: SeriesKind,
}

struct RefLine {
    y: f64,
    label: Option<String>,
    color: String,
}

/// A ray through the data origin with direction (dx, dy), drawn across the
/// visible range (used to overlay component axes).
struct Ray {
    dx: f64,
    dy: f64,
    label: String,
    color: String,
}

pub struct SvgPlot {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
    hlines: Vec<RefLine>,
    rays: Vec<Ray>,
    origin_circles: Vec<f64>,
    range: Option<(f64, f64, f64, f64)>,
}

impl SvgPlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> SvgPlot {
        SvgPlot {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series: Vec::new(),
            hlines: Vec::new(),
            rays: Vec::new(),
            origin_circles: Vec::new(),
            range: None,
        }
    }

    pub fn scatter(
        &mut self,
        label: Option<&str>,
        points: &[(f64, f64)],
        color: &str,
        filled: bool,
    ) -> &mut Self {
        self.series.push(Series {
            label: label.map(str::to_string),
            color: color.to_string(),
            points: points.to_vec(),
            kind: SeriesKind::Scatter { filled },
        });
        self
    }

    pub fn line(
        &mut self,
        label: Option<&str>,
        points: &[(f64, f64)],
        color: &str,
        dashed: bool,
    ) -> &mut Self {
        self.series.push(Series {
            label: label.map(str::to_string),
            color: color.to_string(),
            points: points.to_vec(),
            kind: SeriesKind::Line { dashed },
        });
        self
    }

    pub fn hline(&mut self, y: f64, label: Option<&str>, color: &str) -> &mut Self {
        self.hlines.push(RefLine {
            y,
            label: label.map(str::to_string),
            color: color.to_string(),
        });
        self
    }

    pub fn ray(&mut self, dx: f64, dy: f64, label: &str, color: &str) -> &mut Self {
        self.rays.push(Ray {
            dx,
            dy,
            label: label.to_string(),
            color: color.to_string(),
        });
        self
    }

    /// Circle of data-radius `r` centered on (0, 0).
    pub fn origin_circle(&mut self, r: f64) -> &mut Self {
        self.origin_circles.push(r);
        self
    }

    pub fn fixed_range(&mut self, x0: f64, x1: f64, y0: f64, y1: f64) -> &mut Self {
        self.range = Some((x0, x1, y0, y1));
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        if let Some(r) = self.range {
            return r;
        }
        let mut x0 = f64::INFINITY;
        let mut x1 = f64::NEG_INFINITY;
        let mut y0 = f64::INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for s in &self.series {
            for &(x, y) in &s.points {
                if x.is_finite() && y.is_finite() {
                    x0 = x0.min(x);
                    x1 = x1.max(x);
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
            }
        }
        for h in &self.hlines {
            y0 = y0.min(h.y);
            y1 = y1.max(h.y);
        }
        for &r in &self.origin_circles {
            x0 = x0.min(-r);
            x1 = x1.max(r);
            y0 = y0.min(-r);
            y1 = y1.max(r);
        }
        if !x0.is_finite() || !x1.is_finite() {
            x0 = 0.0;
            x1 = 1.0;
        }
        if !y0.is_finite() || !y1.is_finite() {
            y0 = 0.0;
            y1 = 1.0;
        }
        if x1 == x0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 == y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let padx = 0.05 * (x1 - x0);
        let pady = 0.05 * (y1 - y0);
        (x0 - padx, x1 + padx, y0 - pady, y1 + pady)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let fx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
        let fy = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;
        let c = |v: f64| fmt_sig(v, 8);

        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">"
        );
        let _ = writeln!(
            out,
            "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"28\" font-size=\"18\" text-anchor=\"middle\">{}</text>",
            c(MARGIN_LEFT + pw / 2.0),
            escape(&self.title)
        );
        // frame
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            c(MARGIN_LEFT),
            c(MARGIN_TOP),
            c(pw),
            c(ph)
        );
        // ticks
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let xv = x0 + t * (x1 - x0);
            let yv = y0 + t * (y1 - y0);
            let px = fx(xv);
            let py = fy(yv);
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
                c(px),
                c(MARGIN_TOP + ph),
                c(px),
                c(MARGIN_TOP + ph + 6.0)
            );
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
                c(px),
                c(MARGIN_TOP + ph + 20.0),
                fmt_sig(xv, 4)
            );
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
                c(MARGIN_LEFT - 6.0),
                c(py),
                c(MARGIN_LEFT),
                c(py)
            );
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>",
                c(MARGIN_LEFT - 9.0),
                c(py + 4.0),
                fmt_sig(yv, 4)
            );
        }
        // axis labels
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
            c(MARGIN_LEFT + pw / 2.0),
            c(HEIGHT - 18.0),
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            "<text x=\"20\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>",
            c(MARGIN_TOP + ph / 2.0),
            c(MARGIN_TOP + ph / 2.0),
            escape(&self.y_label)
        );
        // origin circles (correlation-loading guides)
        for &r in &self.origin_circles {
            let _ = writeln!(
                out,
                "<ellipse cx=\"{}\" cy=\"{}\" rx=\"{}\" ry=\"{}\" fill=\"none\" stroke=\"{GRAY}\" stroke-dasharray=\"4 3\"/>",
                c(fx(0.0)),
                c(fy(0.0)),
                c(r / (x1 - x0) * pw),
                c(r / (y1 - y0) * ph)
            );
        }
        // zero axes if the origin is visible
        if x0 < 0.0 && x1 > 0.0 {
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{GRAY}\"/>",
                c(fx(0.0)),
                c(MARGIN_TOP),
                c(fx(0.0)),
                c(MARGIN_TOP + ph)
            );
        }
        if y0 < 0.0 && y1 > 0.0 {
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{GRAY}\"/>",
                c(MARGIN_LEFT),
                c(fy(0.0)),
                c(MARGIN_LEFT + pw),
                c(fy(0.0))
            );
        }
        // rays through the origin
        for ray in &self.rays {
            // scale the direction to reach the frame
            let sx = if ray.dx != 0.0 {
                (if ray.dx > 0.0 { x1 } else { x0 }) / ray.dx
            } else {
                f64::INFINITY
            };
            let sy = if ray.dy != 0.0 {
                (if ray.dy > 0.0 { y1 } else { y0 }) / ray.dy
            } else {
                f64::INFINITY
            };
            let s = sx.min(sy).abs();
            let (ex, ey) = (ray.dx * s, ray.dy * s);
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>",
                c(fx(-ex)),
                c(fy(-ey)),
                c(fx(ex)),
                c(fy(ey)),
                ray.color
            );
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{}\">{}</text>",
                c(fx(ex * 0.92)),
                c(fy(ey * 0.92) - 6.0),
                ray.color,
                escape(&ray.label)
            );
        }
        // reference lines
        for h in &self.hlines {
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-dasharray=\"6 4\"/>",
                c(MARGIN_LEFT),
                c(fy(h.y)),
                c(MARGIN_LEFT + pw),
                c(fy(h.y)),
                h.color
            );
        }
        // series
        for s in &self.series {
            match s.kind {
                SeriesKind::Line { dashed } => {
                    let pts: Vec<String> = s
                        .points
                        .iter()
                        .filter(|(x, y)| x.is_finite() && y.is_finite())
                        .map(|&(x, y)| format!("{},{}", c(fx(x)), c(fy(y))))
                        .collect();
                    let dash = if dashed { " stroke-dasharray=\"6 4\"" } else { "" };
                    let _ = writeln!(
                        out,
                        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"{}/>",
                        pts.join(" "),
                        s.color,
                        dash
                    );
                }
                SeriesKind::Scatter { filled } => {
                    for &(x, y) in &s.points {
                        if !(x.is_finite() && y.is_finite()) {
                            continue;
                        }
                        let (fill, stroke) = if filled {
                            (s.color.as_str(), "none")
                        } else {
                            ("none", s.color.as_str())
                        };
                        let _ = writeln!(
                            out,
                            "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\" stroke=\"{}\"/>",
                            c(fx(x)),
                            c(fy(y)),
                            fill,
                            stroke
                        );
                    }
                }
            }
        }
        // legend
        let mut entries: Vec<(String, String, bool)> = Vec::new();
        for s in &self.series {
            if let Some(l) = &s.label {
                let is_line = matches!(s.kind, SeriesKind::Line { .. });
                entries.push((l.clone(), s.color.clone(), is_line));
            }
        }
        for h in &self.hlines {
            if let Some(l) = &h.label {
                entries.push((l.clone(), h.color.clone(), true));
            }
        }
        let lx = WIDTH - MARGIN_RIGHT + 16.0;
        for (i, (label, color, is_line)) in entries.iter().enumerate() {
            let ly = MARGIN_TOP + 14.0 + i as f64 * 22.0;
            if *is_line {
                let _ = writeln!(
                    out,
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>",
                    c(lx),
                    c(ly - 4.0),
                    c(lx + 18.0),
                    c(ly - 4.0),
                    color
                );
            } else {
                let _ = writeln!(
                    out,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/>",
                    c(lx + 9.0),
                    c(ly - 4.0),
                    color
                );
            }
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>",
                c(lx + 24.0),
                c(ly),
                escape(label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_deterministic_svg() {
        let mut plot = SvgPlot::new("demo", "x", "y");
        plot.scatter(Some("a"), &[(0.0, 0.0), (1.0, 2.0)], PALETTE[0], true);
        plot.line(Some("trend"), &[(0.0, 0.1), (1.0, 1.9)], PALETTE[1], false);
        plot.hline(1.0, Some("ref"), BLACK);
        let a = plot.render();
        let b = plot.render();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("</svg>"));
        assert!(a.contains("demo"));
        assert!(a.contains("polyline"));
    }

    #[test]
    fn escapes_labels() {
        let mut plot = SvgPlot::new("a < b & c", "x", "y");
        plot.scatter(None, &[(0.0, 0.0)], BLACK, true);
        let svg = plot.render();
        assert!(svg.contains("a &lt; b &amp; c"));
    }
}
