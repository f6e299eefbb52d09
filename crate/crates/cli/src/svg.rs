//! Minimal SVG chart primitives.

use std::fmt::Write;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;

pub struct Svg {
    body: String,
    width: f64,
    height: f64,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self { body: String::new(), width, height }
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, w: f64) {
        writeln!(self.body, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{w}"/>"#).ok();
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, w: f64, opacity: f64) {
        if pts.is_empty() {
            return;
        }
        let p: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{w}" stroke-opacity="{opacity}"/>"#,
            p.join(" ")
        )
        .ok();
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        writeln!(self.body, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#).ok();
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str, size: f64, anchor: &str) {
        writeln!(self.body, r#"<text x="{x:.2}" y="{y:.2}" font-size="{size}" font-family="sans-serif" text-anchor="{anchor}">{}</text>"#, esc(s)).ok();
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Data-to-pixel mapping of a chart with axes.
pub struct Frame {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Frame {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Self { x: widen(x), y: widen(y) }
    }

    pub fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    pub fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    /// Axes, five ticks per axis, labels and title.
    pub fn draw_axes(&self, svg: &mut Svg, title: &str, xlabel: &str, ylabel: &str) {
        let (x0, x1) = (self.px(self.x.0), self.px(self.x.1));
        let (y0, y1) = (self.py(self.y.0), self.py(self.y.1));
        svg.line(x0, y0, x1, y0, "black", 1.0);
        svg.line(x0, y0, x0, y1, "black", 1.0);
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            svg.line(self.px(xv), y0, self.px(xv), y0 + 4.0, "black", 1.0);
            svg.text(self.px(xv), y0 + 17.0, &tick(xv), 11.0, "middle");
            svg.line(x0 - 4.0, self.py(yv), x0, self.py(yv), "black", 1.0);
            svg.text(x0 - 7.0, self.py(yv) + 4.0, &tick(yv), 11.0, "end");
        }
        if self.y.0 < 0.0 && self.y.1 > 0.0 {
            svg.line(x0, self.py(0.0), x1, self.py(0.0), "#bbbbbb", 0.8);
        }
        svg.text(WIDTH / 2.0, 22.0, title, 14.0, "middle");
        svg.text(WIDTH / 2.0, HEIGHT - 12.0, xlabel, 12.0, "middle");
        svg.text(14.0, HEIGHT / 2.0, ylabel, 12.0, "middle");
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 10_000.0 {
        format!("{:.0}k", v / 1000.0)
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Diverging blue-white-red colour for `v` in `[-1, 1]`.
pub fn heat(v: f64) -> String {
    let v = if v.is_finite() { v.clamp(-1.0, 1.0) } else { 0.0 };
    let (r, g, b) = if v >= 0.0 {
        (255.0, 255.0 * (1.0 - v), 255.0 * (1.0 - v))
    } else {
        (255.0 * (1.0 + v), 255.0 * (1.0 + v), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_maps_corners() {
        let f = Frame::new((0.0, 10.0), (0.0, 1.0));
        assert_eq!(f.px(0.0), LEFT);
        assert_eq!(f.px(10.0), WIDTH - RIGHT);
        assert_eq!(f.py(0.0), HEIGHT - BOTTOM);
        assert_eq!(f.py(1.0), TOP);
    }

    #[test]
    fn heat_endpoints() {
        assert_eq!(heat(0.0), "#ffffff");
        assert_eq!(heat(1.0), "#ff0000");
        assert_eq!(heat(-1.0), "#0000ff");
        assert_eq!(heat(f64::NAN), "#ffffff");
    }

    #[test]
    fn text_is_escaped() {
        let mut s = Svg::new(10.0, 10.0);
        s.text(0.0, 0.0, "a<b & \"c\"", 10.0, "start");
        assert!(s.finish().contains("a&lt;b &amp; &quot;c&quot;"));
    }
}
