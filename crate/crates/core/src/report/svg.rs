//! Minimal SVG writer. Coordinates are printed with two decimals so output is
//! byte-stable across platforms.

use std::fmt::Write as _;

pub const WIDTH: f64 = 720.0;
pub const HEIGHT: f64 = 440.0;

/// Plot area inside the canvas.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

impl Default for Frame {
    fn default() -> Self {
        Frame {
            left: 70.0,
            right: WIDTH - 70.0,
            top: 50.0,
            bottom: HEIGHT - 60.0,
        }
    }
}

/// Linear map from a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy)]
pub struct Scale {
    pub lo: f64,
    pub hi: f64,
    pub px_lo: f64,
    pub px_hi: f64,
}

impl Scale {
    pub fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let hi = if hi > lo { hi } else { lo + 1.0 };
        Scale { lo, hi, px_lo, px_hi }
    }

    pub fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn palette(i: usize) -> &'static str {
    const COLORS: [&str; 10] = [
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
        "#bcbd22", "#17becf",
    ];
    COLORS[i % COLORS.len()]
}

pub struct Svg {
    buf: String,
}

impl Svg {
    pub fn new(kind: &str, title: &str) -> Self {
        let mut buf = String::new();
        let _ = writeln!(
            buf,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" data-kind="{kind}" font-family="sans-serif" font-size="12">"#,
            w = WIDTH,
            h = HEIGHT,
        );
        let _ = writeln!(buf, r##"<rect x="0" y="0" width="{WIDTH:.0}" height="{HEIGHT:.0}" fill="#ffffff"/>"##);
        let _ = writeln!(
            buf,
            r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        Svg { buf }
    }

    pub fn raw(&mut self, s: &str) {
        self.buf.push_str(s);
        self.buf.push('\n');
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, extra: &str) {
        let _ = writeln!(
            self.buf,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"{extra}/>"#
        );
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &str) {
        let _ = writeln!(
            self.buf,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"{extra}/>"#
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str, extra: &str) {
        let _ = writeln!(
            self.buf,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}"{extra}/>"#
        );
    }

    pub fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str, extra: &str) {
        let _ = writeln!(
            self.buf,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}"{extra}>{}</text>"#,
            escape(s)
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, extra: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.buf,
            r#"<polyline points="{}" fill="none" stroke="{stroke}"{extra}/>"#,
            pts.join(" ")
        );
    }

    pub fn polygon(&mut self, points: &[(f64, f64)], fill: &str, extra: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.buf,
            r#"<polygon points="{}" fill="{fill}"{extra}/>"#,
            pts.join(" ")
        );
    }

    /// Axis line with evenly spaced ticks. `vertical` axes sit at `at` on x.
    pub fn axis(&mut self, scale: &Scale, at: f64, vertical: bool, ticks: &[(f64, String)], label: &str, label_side: f64) {
        if vertical {
            self.line(at, scale.px_lo, at, scale.px_hi, "#333333", "");
            for (v, t) in ticks {
                let y = scale.map(*v);
                let dir = label_side.signum();
                self.line(at, y, at + 5.0 * dir, y, "#333333", "");
                let anchor = if dir < 0.0 { "end" } else { "start" };
                self.text(at + 8.0 * dir, y + 4.0, anchor, t, "");
            }
            let x = at + label_side;
            let y = (scale.px_lo + scale.px_hi) / 2.0;
            self.text(x, y, "middle", label, &format!(r#" transform="rotate(-90 {x:.2} {y:.2})""#));
        } else {
            self.line(scale.px_lo, at, scale.px_hi, at, "#333333", "");
            for (v, t) in ticks {
                let x = scale.map(*v);
                self.line(x, at, x, at + 5.0, "#333333", "");
                self.text(x, at + 18.0, "middle", t, "");
            }
            self.text((scale.px_lo + scale.px_hi) / 2.0, at + label_side, "middle", label, "");
        }
    }

    /// Legend box in the top right corner of the frame.
    pub fn legend(&mut self, frame: &Frame, entries: &[(String, String)]) {
        let x = frame.right - 200.0;
        for (i, (color, label)) in entries.iter().enumerate() {
            let y = frame.top + 8.0 + 18.0 * i as f64;
            self.rect(x, y - 9.0, 12.0, 12.0, color, r#" class="legend-swatch""#);
            self.text(x + 18.0, y + 1.0, "start", label, r#" class="legend""#);
        }
    }

    pub fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
}

pub fn linear_ticks(lo: f64, hi: f64, step: f64, decimals: usize) -> Vec<(f64, String)> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|i| {
            let v = lo + step * i as f64;
            (v, format!("{v:.decimals$}"))
        })
        .collect()
}
