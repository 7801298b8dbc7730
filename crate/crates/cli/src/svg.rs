//! Minimal SVG line plots by direct text templating: polylines, axis ticks
//! and point markers, no plotting dependency.

use std::fmt::Write;

pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
}

pub struct Markers {
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub shape: MarkerShape,
}

pub enum MarkerShape {
    Circle,
    Cross,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub markers: Vec<Markers>,
}

const W: f64 = 900.0;
const H: f64 = 540.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 55.0;

impl Plot {
    pub fn render(&self) -> String {
        let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let all = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .chain(self.markers.iter().flat_map(|m| m.points.iter()));
        for &(x, y) in all {
            if x.is_finite() && y.is_finite() {
                x_lo = x_lo.min(x);
                x_hi = x_hi.max(x);
                y_lo = y_lo.min(y);
                y_hi = y_hi.max(y);
            }
        }
        if !x_lo.is_finite() {
            x_lo = 0.0;
            x_hi = 1.0;
            y_lo = 0.0;
            y_hi = 1.0;
        }
        if x_hi <= x_lo {
            x_hi = x_lo + 1.0;
        }
        if y_hi <= y_lo {
            y_hi = y_lo + 1.0;
        }
        let pad = 0.04 * (y_hi - y_lo);
        y_lo -= pad;
        y_hi += pad;

        let px = |x: f64| ML + (x - x_lo) / (x_hi - x_lo) * (W - ML - MR);
        let py = |y: f64| H - MB - (y - y_lo) / (y_hi - y_lo) * (H - MT - MB);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="24" font-size="16" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            W / 2.0,
            xml_escape(&self.title)
        );

        // Frame.
        let _ = writeln!(
            s,
            r#"<rect x="{ML}" y="{MT}" width="{:.1}" height="{:.1}" fill="none" stroke="dimgray"/>"#,
            W - ML - MR,
            H - MT - MB
        );

        // Ticks.
        for i in 0..=5 {
            let fx = x_lo + (x_hi - x_lo) * i as f64 / 5.0;
            let x = px(fx);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="dimgray"/>"#,
                H - MB,
                H - MB + 6.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle" font-family="sans-serif">{}</text>"#,
                H - MB + 20.0,
                tick_label(fx)
            );
            let fy = y_lo + (y_hi - y_lo) * i as f64 / 5.0;
            let y = py(fy);
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{ML}" y2="{y:.1}" stroke="dimgray"/>"#,
                ML - 6.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end" font-family="sans-serif">{}</text>"#,
                ML - 10.0,
                y + 4.0,
                tick_label(fy)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            ML + (W - ML - MR) / 2.0,
            H - 12.0,
            xml_escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" font-size="13" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 16 {:.1})">{}</text>"#,
            MT + (H - MT - MB) / 2.0,
            MT + (H - MT - MB) / 2.0,
            xml_escape(&self.y_label)
        );

        for series in &self.series {
            let mut path = String::new();
            for &(x, y) in &series.points {
                if x.is_finite() && y.is_finite() {
                    let _ = write!(path, "{:.2},{:.2} ", px(x), py(y));
                }
            }
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.2"/>"#,
                path.trim_end(),
                series.color
            );
        }
        for markers in &self.markers {
            for &(x, y) in &markers.points {
                if !(x.is_finite() && y.is_finite()) {
                    continue;
                }
                let (cx, cy) = (px(x), py(y));
                match markers.shape {
                    MarkerShape::Circle => {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3.2" fill="none" stroke="{}" stroke-width="1.4"/>"#,
                            markers.color
                        );
                    }
                    MarkerShape::Cross => {
                        let _ = writeln!(
                            s,
                            r#"<path d="M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}" stroke="{}" stroke-width="1.2"/>"#,
                            cx - 3.5, cy - 3.5, cx + 3.5, cy + 3.5,
                            cx - 3.5, cy + 3.5, cx + 3.5, cy - 3.5,
                            markers.color
                        );
                    }
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1e4 || a < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
