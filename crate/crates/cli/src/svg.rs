//! Minimal SVG writer with fixed number formatting, so output is byte-stable.

use std::fmt::Write as _;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;

pub fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub struct Svg {
    body: String,
}

impl Svg {
    pub fn new(title: Option<&str>) -> Self {
        let mut svg = Svg {
            body: String::new(),
        };
        svg.raw(&format!(
            "<rect class=\"background\" x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>",
            num(WIDTH),
            num(HEIGHT)
        ));
        if let Some(t) = title {
            svg.text(WIDTH / 2.0, 24.0, t, "middle", 16.0);
        }
        svg
    }

    fn raw(&mut self, element: &str) {
        self.body.push_str("  ");
        self.body.push_str(element);
        self.body.push('\n');
    }

    pub fn text(&mut self, x: f64, y: f64, text: &str, anchor: &str, size: f64) {
        self.raw(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"{}\">{}</text>",
            num(x),
            num(y),
            num(size),
            escape(text)
        ));
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        self.raw(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\"/>",
            num(x1),
            num(y1),
            num(x2),
            num(y2)
        ));
    }

    pub fn rect(&mut self, class: &str, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        self.raw(&format!(
            "<rect class=\"{class}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"/>",
            num(x),
            num(y),
            num(w),
            num(h)
        ));
    }

    pub fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        self.raw(&format!(
            "<circle class=\"point\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\" fill-opacity=\"0.7\"/>",
            num(x),
            num(y),
            num(r)
        ));
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let mut pts = String::new();
        for (i, (x, y)) in points.iter().enumerate() {
            if i > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{},{}", num(*x), num(*y));
        }
        self.raw(&format!(
            "<polyline class=\"series\" points=\"{pts}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>"
        ));
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             {}</svg>\n",
            self.body,
            w = num(WIDTH),
            h = num(HEIGHT)
        )
    }
}

/// Maps data coordinates into the plot area inside the margins.
pub struct Frame {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Frame {
    /// Bounds of the points, padded so that degenerate ranges stay drawable.
    pub fn fit(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Frame {
        let (x0, x1) = bounds(xs);
        let (y0, y1) = bounds(ys);
        Frame { x0, x1, y0, y1 }
    }

    pub fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    pub fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }

    pub fn axes(&self, svg: &mut Svg, xlabel: &str, ylabel: &str) {
        let (left, right) = (MARGIN, WIDTH - MARGIN);
        let (top, bottom) = (MARGIN, HEIGHT - MARGIN);
        svg.line(left, bottom, right, bottom, "black");
        svg.line(left, top, left, bottom, "black");
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x0 + f * (self.x1 - self.x0);
            let yv = self.y0 + f * (self.y1 - self.y0);
            let (px, py) = (self.px(xv), self.py(yv));
            svg.line(px, bottom, px, bottom + 4.0, "black");
            svg.text(px, bottom + 16.0, &tick(xv), "middle", 10.0);
            svg.line(left - 4.0, py, left, py, "black");
            svg.text(left - 6.0, py + 3.0, &tick(yv), "end", 10.0);
        }
        svg.text((left + right) / 2.0, HEIGHT - 12.0, xlabel, "middle", 12.0);
        svg.text(14.0, (top + bottom) / 2.0, ylabel, "middle", 12.0);
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        num(v)
    }
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}
