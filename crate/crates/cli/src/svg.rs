//! Minimal hand-written SVG plots (scatter and polyline).

use std::fmt::Write;

use crate::output::fmt9;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 56.0;

pub struct Series {
    pub label: String,
    pub color: &'static str,
    /// Points; a `None` y breaks a line.
    pub points: Vec<(f64, Option<f64>)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub series: Vec<Series>,
    /// Draw markers instead of connected lines.
    pub scatter: bool,
    /// Optional reference lines as `(x0, y0, x1, y1)` in data units.
    pub guides: Vec<(f64, f64, f64, f64)>,
}

fn px(v: f64, range: (f64, f64), lo: f64, hi: f64) -> f64 {
    let span = if range.1 > range.0 { range.1 - range.0 } else { 1.0 };
    lo + (v.clamp(range.0, range.1) - range.0) / span * (hi - lo)
}

impl Plot {
    fn x(&self, v: f64) -> f64 {
        px(v, self.x_range, PAD, W - PAD)
    }

    fn y(&self, v: f64) -> f64 {
        px(v, self.y_range, H - PAD, PAD)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(&self.title));
        let (x0, x1, y0, y1) = (PAD, W - PAD, H - PAD, PAD);
        let _ = writeln!(s, r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#);
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let xv = self.x_range.0 + t * (self.x_range.1 - self.x_range.0);
            let yv = self.y_range.0 + t * (self.y_range.1 - self.y_range.0);
            let (xp, yp) = (self.x(xv), self.y(yv));
            let _ = writeln!(s, r#"<text x="{xp:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, y0 + 16.0, fmt_tick(xv));
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 6.0, yp + 4.0, fmt_tick(yv));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 14.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(&self.y_label)
        );
        for &(a, b, c, d) in &self.guides {
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
                self.x(a),
                self.y(b),
                self.x(c),
                self.y(d)
            );
        }
        for (k, ser) in self.series.iter().enumerate() {
            if self.scatter {
                for &(xv, yv) in &ser.points {
                    if let Some(yv) = yv {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" fill-opacity="0.7"/>"#,
                            self.x(xv),
                            self.y(yv),
                            ser.color
                        );
                    }
                }
            } else {
                let mut d = String::new();
                let mut pen_down = false;
                for &(xv, yv) in &ser.points {
                    match yv {
                        Some(yv) => {
                            let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, self.x(xv), self.y(yv));
                            pen_down = true;
                        }
                        None => pen_down = false,
                    }
                }
                let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, d.trim_end(), ser.color);
            }
            let ly = PAD + 16.0 * k as f64;
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/>"#, W - PAD - 150.0, ly - 9.0, ser.color);
            let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, W - PAD - 135.0, esc(&ser.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        fmt9((v * 100.0).round() / 100.0)
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
