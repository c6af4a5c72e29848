//! Minimal standalone SVG line charts.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 110.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub label: String,
}

impl Axis {
    fn ticks(&self) -> Vec<f64> {
        let first = (self.lo / self.step).ceil() as i64;
        let last = (self.hi / self.step + 1e-9).floor() as i64;
        (first..=last).map(|k| k as f64 * self.step).collect()
    }
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    /// Symmetric error bars, one per point.
    pub errors: Option<Vec<f64>>,
}

pub struct Rule {
    pub y: f64,
    pub label: String,
}

pub struct Chart {
    pub title: String,
    pub x: Axis,
    pub y: Axis,
    pub series: Vec<Series>,
    pub rules: Vec<Rule>,
}

fn escape(s: &str) -> String {
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

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10()).ceil() as usize
    };
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

impl Chart {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT
            + (x - self.x.lo) / (self.x.hi - self.x.lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (y - self.y.lo) / (self.y.hi - self.y.lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
        let _ = writeln!(
            s,
            r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>"#
        );
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, "<title>{}</title>", escape(&self.title));
        let _ = writeln!(
            s,
            r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
        );

        let _ = writeln!(s, r##"<g class="grid" stroke="#dddddd" stroke-width="1">"##);
        for t in self.x.ticks() {
            let x = self.px(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{bottom:.2}"/>"#
            );
        }
        for t in self.y.ticks() {
            let y = self.py(t);
            let _ = writeln!(
                s,
                r#"<line x1="{left:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}"/>"#
            );
        }
        s.push_str("</g>\n");

        let _ = writeln!(
            s,
            r##"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000000"/>"##,
            right - left,
            bottom - top
        );
        s.push_str("<g class=\"ticks\">\n");
        for t in self.x.ticks() {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                self.px(t),
                bottom + 18.0,
                fmt_tick(t, self.x.step)
            );
        }
        for t in self.y.ticks() {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                left - 6.0,
                self.py(t) + 4.0,
                fmt_tick(t, self.y.step)
            );
        }
        s.push_str("</g>\n");
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (left + right) / 2.0,
            HEIGHT - 15.0,
            escape(&self.x.label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            (top + bottom) / 2.0,
            escape(&self.y.label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            (left + right) / 2.0,
            escape(&self.title)
        );

        for rule in &self.rules {
            let y = self.py(rule.y);
            let _ = writeln!(
                s,
                r##"<line class="rule" x1="{left:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}" stroke="#cc0000" stroke-dasharray="6 4"/>"##
            );
            let _ = writeln!(
                s,
                r##"<text x="{:.2}" y="{:.2}" fill="#cc0000">{}</text>"##,
                right + 6.0,
                y + 4.0,
                escape(&rule.label)
            );
        }

        for (i, series) in self.series.iter().enumerate() {
            let mut points = String::new();
            for (j, &(x, y)) in series.points.iter().enumerate() {
                if j > 0 {
                    points.push(' ');
                }
                let _ = write!(points, "{:.2},{:.2}", self.px(x), self.py(y));
            }
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{points}"><title>{}</title></polyline>"#,
                series.color,
                escape(&series.label)
            );
            if let Some(errors) = &series.errors {
                let _ = writeln!(s, r#"<g class="errors" stroke="{}">"#, series.color);
                for (&(x, y), e) in series.points.iter().zip(errors) {
                    let xp = self.px(x);
                    let _ = writeln!(
                        s,
                        r#"<line x1="{xp:.2}" y1="{:.2}" x2="{xp:.2}" y2="{:.2}"/>"#,
                        self.py(y - e),
                        self.py(y + e)
                    );
                }
                s.push_str("</g>\n");
            }
            if self.series.len() <= 25 {
                let ly = top + 10.0 + i as f64 * 14.0;
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{ly:.2}" fill="{}" font-size="10">{}</text>"#,
                    right + 6.0,
                    series.color,
                    escape(&series.label)
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Blue to red ramp for `i` of `n` series.
pub fn ramp_color(i: usize, n: usize) -> String {
    let t = if n > 1 {
        i as f64 / (n - 1) as f64
    } else {
        0.0
    };
    let r = (40.0 + 200.0 * t).round() as u8;
    let b = (240.0 - 200.0 * t).round() as u8;
    format!("#{r:02x}40{b:02x}")
}
